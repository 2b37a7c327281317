#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gocdf/linalg.hpp"
#include "gocdf/tensor.hpp"

namespace gocdf {

enum class ManifoldKind {
  Stiefel,
  GeneralizedStiefel,
  SymplecticStiefel,
  IndefiniteStiefel,
  Hyperbolic,
  TensorStiefel,
};

inline std::string to_string(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::Stiefel: return "stiefel";
    case ManifoldKind::GeneralizedStiefel: return "generalized-stiefel";
    case ManifoldKind::SymplecticStiefel: return "symplectic-stiefel";
    case ManifoldKind::IndefiniteStiefel: return "indefinite-stiefel";
    case ManifoldKind::Hyperbolic: return "hyperbolic";
    case ManifoldKind::TensorStiefel: return "tensor-stiefel";
  }
  return "unknown";
}

inline ManifoldKind parse_manifold_kind(const std::string& s) {
  for (auto k : {ManifoldKind::Stiefel, ManifoldKind::GeneralizedStiefel, ManifoldKind::SymplecticStiefel,
                 ManifoldKind::IndefiniteStiefel, ManifoldKind::Hyperbolic, ManifoldKind::TensorStiefel}) {
    if (to_string(k) == s) return k;
  }
  throw ConstructionError("unknown manifold '" + s + "'");
}

/// One generalized-orthogonality manifold M = {X in F : X^T phi(X) = I}.
///
/// Every supported phi factors as phi(X) = K X L with K (n x n) and L (p x p)
/// both symmetric or both skew, so psi(T) = L^{-1} T L satisfies
/// phi(X T) = phi(X) psi(T). F is all of R^{n x p} except for the tensor
/// Stiefel manifold, where F is the set of block-diagonal Diag(X x_3 M).
class ManifoldSpec {
 public:
  static ManifoldSpec stiefel(Index n, Index p) {
    check_np(n, p, "stiefel");
    ManifoldSpec s(ManifoldKind::Stiefel, n, p);
    s.finish();
    return s;
  }

  /// X^T B X = I with B symmetric positive definite.
  static ManifoldSpec generalized_stiefel(Matrix b, Index p) {
    check_np(b.rows(), p, "generalized-stiefel");
    check_symmetric(b, "generalized-stiefel: B");
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success) throw ConstructionError("generalized-stiefel: B is not positive definite");
    ManifoldSpec s(ManifoldKind::GeneralizedStiefel, b.rows(), p);
    s.left_ = LeftKind::Dense;
    s.k_ = std::move(b);
    s.finish();
    return s;
  }

  /// X^T J_{2n} X = J_{2p}; ambient dimensions are the even numbers 2n x 2p.
  static ManifoldSpec symplectic_stiefel(Index n2, Index p2) {
    if (n2 % 2 != 0 || p2 % 2 != 0) throw ConstructionError("symplectic-stiefel: dimensions must be even");
    check_np(n2, p2, "symplectic-stiefel");
    ManifoldSpec s(ManifoldKind::SymplecticStiefel, n2, p2);
    s.left_ = LeftKind::NegSymplectic;
    s.right_ = RightKind::Symplectic;
    s.finish();
    return s;
  }

  /// X^T A X J = I with A symmetric nonsingular and J = diag(signs), signs in {+1,-1}.
  static ManifoldSpec indefinite_stiefel(Matrix a, Vector signs) {
    check_np(a.rows(), signs.size(), "indefinite-stiefel");
    check_symmetric(a, "indefinite-stiefel: A");
    for (Index i = 0; i < signs.size(); ++i) {
      if (signs(i) != 1.0 && signs(i) != -1.0) throw ConstructionError("indefinite-stiefel: J must square to I");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    const Vector ev = es.eigenvalues();
    const Index pos = (ev.array() > 0).count();
    const Index neg = (ev.array() < 0).count();
    if (pos + neg != a.rows() || ev.cwiseAbs().minCoeff() < 1e-12 * ev.cwiseAbs().maxCoeff()) {
      throw ConstructionError("indefinite-stiefel: A is singular");
    }
    const Index pk = (signs.array() > 0).count();
    const Index pm = signs.size() - pk;
    if (pk > pos || pm > neg) {
      throw ConstructionError("indefinite-stiefel: J needs " + std::to_string(pk) + " positive and " +
                              std::to_string(pm) + " negative directions, A has " + std::to_string(pos) +
                              " and " + std::to_string(neg));
    }
    ManifoldSpec s(ManifoldKind::IndefiniteStiefel, a.rows(), signs.size());
    if (a.isDiagonal(0.0)) {
      s.left_ = LeftKind::Diagonal;
      s.kdiag_ = a.diagonal();
    } else {
      s.left_ = LeftKind::Dense;
    }
    s.k_ = std::move(a);
    s.right_ = RightKind::Signs;
    s.signs_ = std::move(signs);
    s.finish();
    return s;
  }

  /// X^T H X = I with H symmetric and eigenvalues +-1.
  static ManifoldSpec hyperbolic(Matrix h, Index p) {
    check_np(h.rows(), p, "hyperbolic");
    check_symmetric(h, "hyperbolic: H");
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if ((es.eigenvalues().cwiseAbs().array() - 1.0).abs().maxCoeff() > 1e-10) {
      throw ConstructionError("hyperbolic: eigenvalues of H must be +-1");
    }
    if ((es.eigenvalues().array() > 0).count() < p) {
      throw ConstructionError("hyperbolic: H has fewer than p positive eigenvalues");
    }
    ManifoldSpec s(ManifoldKind::Hyperbolic, h.rows(), p);
    s.left_ = LeftKind::Dense;
    s.k_ = std::move(h);
    s.finish();
    return s;
  }

  /// Third-order tensor Stiefel manifold, represented through Diag(X x_3 M).
  static ManifoldSpec tensor_stiefel(Index n, Index p, Index l, TransformMatrix tm) {
    check_np(n, p, "tensor-stiefel");
    if (l < 1 || tm.size() != l) throw ConstructionError("tensor-stiefel: transform size must equal l");
    ManifoldSpec s(ManifoldKind::TensorStiefel, l * n, l * p);
    s.tn_ = n;
    s.tp_ = p;
    s.tl_ = l;
    s.transform_ = std::move(tm);
    s.finish();
    return s;
  }

  /// Random SPD B with spectrum in [0.5, 2].
  static ManifoldSpec generalized_stiefel_random(Index n, Index p, std::uint64_t seed) {
    Rng rng(seed);
    const Matrix q = random_orthonormal(rng, n, n);
    Vector lam(n);
    for (Index i = 0; i < n; ++i) lam(i) = rng.uniform(0.5, 2.0);
    Matrix b = q * lam.asDiagonal() * q.transpose();
    return generalized_stiefel(sym(b), p);
  }

  /// Random H = Q diag(+-1) Q^T with n - n/3 positive eigenvalues.
  static ManifoldSpec hyperbolic_random(Index n, Index p, std::uint64_t seed) {
    Rng rng(seed);
    const Matrix q = random_orthonormal(rng, n, n);
    Vector s = Vector::Ones(n);
    for (Index i = n - n / 3; i < n; ++i) s(i) = -1.0;
    Matrix h = q * s.asDiagonal() * q.transpose();
    return hyperbolic(sym(h), p);
  }

  /// A = diag(1, ..., k, -m, ..., -1), J = diag(I_pk, -I_pm).
  static ManifoldSpec indefinite_diagonal(Index k, Index m, Index pk, Index pm) {
    if (k < 0 || m < 0 || pk < 0 || pm < 0 || pk > k || pm > m || pk + pm < 1) {
      throw ConstructionError("indefinite-stiefel: need pk <= k, pm <= m and p >= 1");
    }
    Vector d(k + m);
    for (Index i = 0; i < k; ++i) d(i) = static_cast<double>(i + 1);
    for (Index i = 0; i < m; ++i) d(k + i) = -static_cast<double>(m - i);
    Vector signs(pk + pm);
    signs.head(pk).setOnes();
    signs.tail(pm).setConstant(-1.0);
    Matrix a = d.asDiagonal();
    return indefinite_stiefel(std::move(a), std::move(signs));
  }

  ManifoldKind kind() const { return kind_; }
  std::string name() const { return to_string(kind_); }
  /// Ambient row / column counts of points (ln x lp for tensors).
  Index rows() const { return n_; }
  Index cols() const { return p_; }

  Index tensor_n() const { return tn_; }
  Index tensor_p() const { return tp_; }
  Index tensor_l() const { return tl_; }
  const TransformMatrix& transform() const {
    if (!transform_) throw Unsupported("transform(): not a tensor manifold");
    return *transform_;
  }

  Matrix phi(const Matrix& x) const {
    Matrix y = apply_left(x);
    apply_right_inplace(y);
    return y;
  }

  /// psi(T) = L^{-1} T L.
  Matrix psi(const Matrix& t) const {
    switch (right_) {
      case RightKind::Identity: return t;
      case RightKind::Signs: return signs_.asDiagonal() * t * signs_.asDiagonal();
      case RightKind::Symplectic: return jmul_left_t(jmul_right(t));
    }
    return t;
  }

  /// Generalized symmetrization Phi(T) = T^T + psi(T).
  Matrix gen_sym(const Matrix& t) const { return t.transpose() + psi(t); }

  Matrix subspace_project(const Matrix& x) const {
    if (x.rows() != n_ || x.cols() != p_) {
      throw DimensionMismatch(name() + ": expected " + std::to_string(n_) + "x" + std::to_string(p_) +
                              ", got " + dims(x));
    }
    if (kind_ != ManifoldKind::TensorStiefel) return x;
    Matrix out = Matrix::Zero(n_, p_);
    for (Index k = 0; k < tl_; ++k) out.block(k * tn_, k * tp_, tn_, tp_) = x.block(k * tn_, k * tp_, tn_, tp_);
    return out;
  }

  double subspace_residual(const Matrix& x) const { return (x - subspace_project(x)).norm(); }

  /// Throws SubspaceViolation when x is farther than 1e-10 (relative) from F.
  void require_in_subspace(const Matrix& x, const char* where) const {
    const double r = subspace_residual(x);
    if (r > 1e-10 * std::max(1.0, x.norm())) {
      throw SubspaceViolation(std::string(where) + ": point is " + std::to_string(r) + " away from F");
    }
  }

  /// Canonical basis of G = span{X1^T X2 : X1, X2 in F}.
  std::vector<Matrix> group_basis() const {
    std::vector<Matrix> out;
    if (kind_ == ManifoldKind::TensorStiefel) {
      for (Index k = 0; k < tl_; ++k)
        for (Index j = 0; j < tp_; ++j)
          for (Index i = 0; i < tp_; ++i) {
            Matrix e = Matrix::Zero(p_, p_);
            e(k * tp_ + i, k * tp_ + j) = 1.0;
            out.push_back(std::move(e));
          }
      return out;
    }
    for (Index j = 0; j < p_; ++j)
      for (Index i = 0; i < p_; ++i) {
        Matrix e = Matrix::Zero(p_, p_);
        e(i, j) = 1.0;
        out.push_back(std::move(e));
      }
    return out;
  }

  /// Canonical basis of F.
  std::vector<Matrix> ambient_basis() const {
    std::vector<Matrix> out;
    for (Index j = 0; j < p_; ++j)
      for (Index i = 0; i < n_; ++i) {
        if (kind_ == ManifoldKind::TensorStiefel && i / tn_ != j / tp_) continue;
        Matrix e = Matrix::Zero(n_, p_);
        e(i, j) = 1.0;
        out.push_back(std::move(e));
      }
    return out;
  }

  /// Frobenius-orthonormal basis of S1 = {Phi(T) : T in G}.
  const std::vector<Matrix>& s1_basis() const { return s1_basis_; }

  Index group_dimension() const {
    return kind_ == ManifoldKind::TensorStiefel ? tl_ * tp_ * tp_ : p_ * p_;
  }

  /// Dense K of phi(X) = K X L.
  Matrix left_factor() const {
    switch (left_) {
      case LeftKind::Identity: return Matrix::Identity(n_, n_);
      case LeftKind::Diagonal: return kdiag_.asDiagonal();
      case LeftKind::Dense: return k_;
      case LeftKind::NegSymplectic: return -jmul_left(Matrix::Identity(n_, n_));
    }
    return k_;
  }

  /// K^{-1} Y.
  Matrix left_solve(const Matrix& y) const {
    switch (left_) {
      case LeftKind::Identity: return y;
      case LeftKind::Diagonal: return kdiag_.cwiseInverse().asDiagonal() * y;
      case LeftKind::Dense: return k_.partialPivLu().solve(y);
      // (-J)^{-1} = J
      case LeftKind::NegSymplectic: return jmul_left(y);
    }
    return y;
  }

  /// True when K (and L) are symmetric; false for the skew symplectic pair.
  bool symmetric_factors() const { return left_ != LeftKind::NegSymplectic; }

  /// Theta admits the Lyapunov closed form when L is I or a sign matrix.
  bool lyapunov_theta_available() const { return right_ != RightKind::Symplectic; }

  /// L as a dense matrix (identity, J, or J_{2p}).
  Matrix right_factor() const {
    switch (right_) {
      case RightKind::Identity: return Matrix::Identity(p_, p_);
      case RightKind::Signs: return signs_.asDiagonal();
      case RightKind::Symplectic: return jmul_right(Matrix::Identity(p_, p_));
    }
    return Matrix::Identity(p_, p_);
  }

  const Vector& signs() const { return signs_; }

 private:
  enum class LeftKind { Identity, Diagonal, Dense, NegSymplectic };
  enum class RightKind { Identity, Signs, Symplectic };

  ManifoldSpec(ManifoldKind kind, Index n, Index p) : kind_(kind), n_(n), p_(p) {}

  static void check_np(Index n, Index p, const char* what) {
    if (n < 1 || p < 1 || p > n) {
      throw ConstructionError(std::string(what) + ": need 1 <= p <= n, got n=" + std::to_string(n) +
                              " p=" + std::to_string(p));
    }
  }

  static void check_symmetric(const Matrix& a, const std::string& what) {
    if (a.rows() != a.cols()) throw ConstructionError(what + " must be square");
    if ((a - a.transpose()).norm() > 1e-12 * std::max(1.0, a.norm())) {
      throw ConstructionError(what + " must be symmetric");
    }
  }

  Matrix apply_left(const Matrix& x) const {
    switch (left_) {
      case LeftKind::Identity: return x;
      case LeftKind::Diagonal: return kdiag_.asDiagonal() * x;
      case LeftKind::Dense: return k_ * x;
      case LeftKind::NegSymplectic: return -jmul_left(x);
    }
    return x;
  }

  void apply_right_inplace(Matrix& y) const {
    switch (right_) {
      case RightKind::Identity: return;
      case RightKind::Signs: y = y * signs_.asDiagonal(); return;
      case RightKind::Symplectic: y = jmul_right(y); return;
    }
  }

  // J Y with J = [[0, I], [-I, 0]] acting on the rows of Y.
  static Matrix jmul_left(const Matrix& y) {
    const Index h = y.rows() / 2;
    Matrix out(y.rows(), y.cols());
    out.topRows(h) = y.bottomRows(h);
    out.bottomRows(h) = -y.topRows(h);
    return out;
  }
  // J^T Y.
  static Matrix jmul_left_t(const Matrix& y) { return -jmul_left(y); }
  // Y J.
  static Matrix jmul_right(const Matrix& y) {
    const Index h = y.cols() / 2;
    Matrix out(y.rows(), y.cols());
    out.leftCols(h) = -y.rightCols(h);
    out.rightCols(h) = y.leftCols(h);
    return out;
  }

  // s1_basis: apply Phi to the canonical basis of G, orthonormalize, drop
  // vectors below 1e-10 (modified Gram-Schmidt, two passes).
  void finish() {
    s1_basis_.clear();
    for (const Matrix& e : group_basis()) {
      Matrix v = gen_sym(e);
      for (int pass = 0; pass < 2; ++pass)
        for (const Matrix& b : s1_basis_) v -= inner(b, v) * b;
      const double nv = v.norm();
      if (nv > 1e-10) s1_basis_.push_back(v / nv);
    }
  }

  ManifoldKind kind_;
  Index n_ = 0, p_ = 0;
  LeftKind left_ = LeftKind::Identity;
  RightKind right_ = RightKind::Identity;
  Matrix k_;
  Vector kdiag_;
  Vector signs_;
  Index tn_ = 0, tp_ = 0, tl_ = 0;
  std::optional<TransformMatrix> transform_;
  std::vector<Matrix> s1_basis_;
};

/// Plain-text description of a manifold (name, dimensions, parameter seed).
struct ManifoldRecord {
  std::string name = "stiefel";
  Index n = 0;  // ambient rows (2n for symplectic); tensor: n of n x p x l
  Index p = 0;
  Index l = 1;  // tensor depth
  Index k = -1;   // indefinite: positive part of A (default ceil(0.6 n))
  Index pk = -1;  // indefinite: +1 entries of J (default ceil(p / 2))
  std::uint64_t seed = 0;
};

inline ManifoldSpec build_manifold(const ManifoldRecord& r) {
  switch (parse_manifold_kind(r.name)) {
    case ManifoldKind::Stiefel: return ManifoldSpec::stiefel(r.n, r.p);
    case ManifoldKind::GeneralizedStiefel: return ManifoldSpec::generalized_stiefel_random(r.n, r.p, r.seed);
    case ManifoldKind::SymplecticStiefel: return ManifoldSpec::symplectic_stiefel(r.n, r.p);
    case ManifoldKind::IndefiniteStiefel: {
      const Index k = r.k >= 0 ? r.k : (6 * r.n + 9) / 10;
      const Index pk = r.pk >= 0 ? r.pk : (r.p + 1) / 2;
      return ManifoldSpec::indefinite_diagonal(k, r.n - k, pk, r.p - pk);
    }
    case ManifoldKind::Hyperbolic: return ManifoldSpec::hyperbolic_random(r.n, r.p, r.seed);
    case ManifoldKind::TensorStiefel: return ManifoldSpec::tensor_stiefel(r.n, r.p, r.l, TransformMatrix::dct(r.l));
  }
  throw ConstructionError("unknown manifold");
}

/// A point of M with phi(X) and the Gram matrix X^T phi(X) cached at construction.
class FeasiblePoint {
 public:
  FeasiblePoint(const ManifoldSpec& spec, Matrix x, double tol = 1e-8) : x_(std::move(x)), tol_(tol) {
    spec.require_in_subspace(x_, "FeasiblePoint");
    phi_x_ = spec.phi(x_);
    gram_ = x_.transpose() * phi_x_;
    feas_ = (gram_ - Matrix::Identity(gram_.rows(), gram_.cols())).norm();
    if (!(feas_ <= tol_)) {
      throw InfeasiblePoint("FeasiblePoint: ||X^T phi(X) - I|| = " + std::to_string(feas_) + " exceeds " +
                            std::to_string(tol_));
    }
  }

  const Matrix& x() const { return x_; }
  const Matrix& phi_x() const { return phi_x_; }
  const Matrix& gram() const { return gram_; }
  double feasibility() const { return feas_; }
  double tolerance() const { return tol_; }

 private:
  Matrix x_, phi_x_, gram_;
  double feas_ = 0.0;
  double tol_;
};

/// C(X) = X^T phi(X) - I.
inline Matrix constraint(const ManifoldSpec& spec, const Matrix& x) {
  spec.require_in_subspace(x, "constraint");
  Matrix c = x.transpose() * spec.phi(x);
  c.diagonal().array() -= 1.0;
  return c;
}

inline Matrix gen_sym(const ManifoldSpec& spec, const Matrix& t) { return spec.gen_sym(t); }

struct TangentCheck {
  bool tangent;
  double residual;
};

inline TangentCheck tangent_test(const ManifoldSpec& spec, const FeasiblePoint& x, const Matrix& z,
                                 double tol = 1e-9) {
  const Matrix xz = x.x().transpose() * spec.phi(z);
  const double r = (xz + z.transpose() * x.phi_x()).norm();
  return {r <= tol * std::max(1.0, z.norm()), r};
}

enum class ThetaMethod {
  Auto,            // cheapest exact route for the manifold
  Generic,         // normal equations over s1_basis
  Symmetrization,  // Stiefel closed form sym(X^T D)
  Lyapunov,        // G W + W G = E L + L E^T, Theta = W L
};

namespace detail {

inline Matrix theta_generic(const ManifoldSpec& spec, const Matrix& phix, const Matrix& d) {
  const auto& basis = spec.s1_basis();
  const Index m = static_cast<Index>(basis.size());
  const Matrix g = phix.transpose() * phix;
  const Matrix e = phix.transpose() * d;
  std::vector<Matrix> gb;
  gb.reserve(basis.size());
  for (const Matrix& b : basis) gb.push_back(g * b);
  Matrix h(m, m);
  Vector rhs(m);
  for (Index i = 0; i < m; ++i) {
    rhs(i) = inner(basis[i], e);
    for (Index j = 0; j <= i; ++j) h(i, j) = h(j, i) = inner(basis[i], gb[j]);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Vector lam = es.eigenvalues();
  const double top = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  const double cut = 1e-12 * top;
  Vector coeff = Vector::Zero(m);
  bool degenerate = false;
  const Vector proj = es.eigenvectors().transpose() * rhs;
  for (Index i = 0; i < m; ++i) {
    if (lam(i) > cut) {
      coeff += es.eigenvectors().col(i) * (proj(i) / lam(i));
    } else {
      degenerate = true;
    }
  }
  Matrix s = Matrix::Zero(g.rows(), g.cols());
  for (Index i = 0; i < m; ++i) s += coeff(i) * basis[i];
  if (degenerate) {
    throw LeastSquaresDegenerate("theta_lstsq: phi(X) S design is rank deficient", s);
  }
  return s;
}

inline Matrix theta_lyapunov(const ManifoldSpec& spec, const Matrix& phix, const Matrix& d) {
  if (!spec.lyapunov_theta_available()) {
    throw Unsupported("theta_lstsq: Lyapunov form needs L = I or a sign matrix");
  }
  const Matrix g = phix.transpose() * phix;
  const Matrix e = phix.transpose() * d;
  const Matrix l = spec.right_factor();
  const Matrix rhs = e * l + l * e.transpose();
  const Matrix w = lyapunov_solve(g, g, rhs);
  return sym(w) * l;
}

}  // namespace detail

/// Theta_X(D) = argmin_{S in S1} ||phi(X) S - D||.
inline Matrix theta_lstsq(const ManifoldSpec& spec, const FeasiblePoint& x, const Matrix& d,
                          ThetaMethod method = ThetaMethod::Auto) {
  require_same_shape(d, x.x(), "theta_lstsq");
  if (method == ThetaMethod::Auto) {
    if (spec.kind() == ManifoldKind::Stiefel) {
      method = ThetaMethod::Symmetrization;
    } else if (spec.lyapunov_theta_available()) {
      method = ThetaMethod::Lyapunov;
    } else {
      method = ThetaMethod::Generic;
    }
  }
  switch (method) {
    case ThetaMethod::Symmetrization:
      if (spec.kind() != ManifoldKind::Stiefel) throw Unsupported("theta_lstsq: symmetrization is Stiefel-only");
      return sym(x.x().transpose() * d);
    case ThetaMethod::Lyapunov: return detail::theta_lyapunov(spec, x.phi_x(), d);
    case ThetaMethod::Generic:
    case ThetaMethod::Auto: break;
  }
  return detail::theta_generic(spec, x.phi_x(), d);
}

/// P_{T_X M}(D) = D - phi(X) Theta_X(D).
inline Matrix project_tangent(const ManifoldSpec& spec, const FeasiblePoint& x, const Matrix& d) {
  return d - x.phi_x() * theta_lstsq(spec, x, d);
}

inline Matrix riemannian_gradient(const ManifoldSpec& spec, const FeasiblePoint& x, const Matrix& egrad) {
  return project_tangent(spec, x, egrad);
}

/// hess f(X)[Z] = P(grad^2 f(X)[Z] - phi(Z) Theta_X(grad f(X))).
inline Matrix riemannian_hessvec(const ManifoldSpec& spec, const FeasiblePoint& x, const Matrix& z,
                                 const Matrix& egrad, const Matrix& ehessvec) {
  const Matrix theta = theta_lstsq(spec, x, egrad);
  return project_tangent(spec, x, ehessvec - spec.phi(z) * theta);
}

inline Matrix vector_transport(const ManifoldSpec& spec, const FeasiblePoint& x_new, const Matrix& z) {
  return project_tangent(spec, x_new, z);
}

namespace detail {

// X (G)^{-T} with G = L L^T = Y^T phi(Y); valid when psi = id.
inline Matrix gram_normalize(const ManifoldSpec& spec, const Matrix& y) {
  const Matrix g = sym(y.transpose() * spec.phi(y));
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw StepTooLarge("retract: Gram matrix lost definiteness");
  // Y L^{-T}: solve L Z^T = Y^T
  Matrix zt = llt.matrixL().solve(y.transpose());
  return zt.transpose();
}

// (I - W/2)^{-1} (I + W/2) X with K W skew (K symmetric) or symmetric (K skew)
// and W X = Z.
inline Matrix cayley(const ManifoldSpec& spec, const Matrix& x, const Matrix& z) {
  const Matrix u = spec.left_factor() * z;
  const Matrix y = x * (x.transpose() * x).llt().solve(Matrix::Identity(x.cols(), x.cols()));
  const Matrix ux = u.transpose() * x;
  Matrix omega;
  if (spec.symmetric_factors()) {
    const Matrix ut = u + 0.5 * y * ux;
    omega = ut * y.transpose() - y * ut.transpose();
  } else {
    const Matrix ut = u - 0.5 * y * ux;
    omega = ut * y.transpose() + y * ut.transpose();
  }
  const Matrix w = spec.left_solve(omega);
  Matrix lhs = -0.5 * w;
  lhs.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Matrix> lu(lhs);
  if (!(lu.rcond() > 1e-12)) throw StepTooLarge("retract: Cayley system is singular");
  Matrix out = lu.solve(x + 0.5 * (w * x));
  if (!out.allFinite()) throw StepTooLarge("retract: Cayley step produced non-finite values");
  return out;
}

}  // namespace detail

/// Retraction: QR (Stiefel), Cholesky normalization (generalized Stiefel,
/// hyperbolic), Cayley transform (symplectic, indefinite), t-QR (tensor).
inline FeasiblePoint retract(const ManifoldSpec& spec, const FeasiblePoint& x, const Matrix& z,
                             double tol = 1e-8) {
  require_same_shape(z, x.x(), "retract");
  if ((z.array() == 0.0).all()) return x;
  Matrix out;
  switch (spec.kind()) {
    case ManifoldKind::Stiefel:
      try {
        out = qr_positive(x.x() + z).q;
      } catch (const SingularDecomposition& e) {
        throw StepTooLarge(e.what());
      }
      break;
    case ManifoldKind::GeneralizedStiefel:
    case ManifoldKind::Hyperbolic: out = detail::gram_normalize(spec, x.x() + z); break;
    case ManifoldKind::SymplecticStiefel:
    case ManifoldKind::IndefiniteStiefel: out = detail::cayley(spec, x.x(), z); break;
    case ManifoldKind::TensorStiefel: {
      const TransformMatrix& tm = spec.transform();
      const Tensor3 hat = diag_fold(spec.subspace_project(x.x() + z), spec.tensor_n(), spec.tensor_p(),
                                    spec.tensor_l());
      try {
        const TensorQr f = tqr(mode3_product(hat, tm.inverse()), tm);
        out = diag_unfold(mode3_product(f.q, tm.matrix()));
      } catch (const SingularDecomposition& e) {
        throw StepTooLarge(e.what());
      }
      break;
    }
  }
  try {
    return FeasiblePoint(spec, std::move(out), tol);
  } catch (const InfeasiblePoint& e) {
    throw StepTooLarge(e.what());
  }
}

/// Seeded random point of M (feasibility <= 1e-10).
inline FeasiblePoint random_feasible(const ManifoldSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  const Index n = spec.rows();
  const Index p = spec.cols();
  Matrix x;
  switch (spec.kind()) {
    case ManifoldKind::Stiefel: x = random_orthonormal(rng, n, p); break;
    case ManifoldKind::GeneralizedStiefel: x = detail::gram_normalize(spec, rng.gaussian(n, p)); break;
    case ManifoldKind::Hyperbolic: {
      Eigen::SelfAdjointEigenSolver<Matrix> es(spec.left_factor());
      std::vector<Index> pos, neg;
      for (Index i = 0; i < n; ++i) (es.eigenvalues()(i) > 0 ? pos : neg).push_back(i);
      Matrix qp(n, pos.size()), qn(n, neg.size());
      for (std::size_t i = 0; i < pos.size(); ++i) qp.col(i) = es.eigenvectors().col(pos[i]);
      for (std::size_t i = 0; i < neg.size(); ++i) qn.col(i) = es.eigenvectors().col(neg[i]);
      const Matrix a = random_orthonormal(rng, qp.cols(), p);
      Matrix y = qp * a;
      if (qn.cols() > 0) y += 0.3 / std::sqrt(static_cast<double>(qn.cols())) * qn * rng.gaussian(qn.cols(), p);
      x = detail::gram_normalize(spec, y);
      break;
    }
    case ManifoldKind::SymplecticStiefel: {
      const Index h = n / 2, q = p / 2;
      const Matrix u = random_orthonormal(rng, h, q);
      Matrix x0 = Matrix::Zero(n, p);
      x0.block(0, 0, h, q) = u;
      x0.block(h, q, h, q) = u;
      // shears [[I, B], [0, I]] and [[I, 0], [C, I]] with B, C symmetric are symplectic
      const double scale = 0.5 / std::sqrt(static_cast<double>(h));
      const Matrix b = scale * sym(rng.gaussian(h, h));
      const Matrix c = scale * sym(rng.gaussian(h, h));
      x0.topRows(h) += b * x0.bottomRows(h);
      x0.bottomRows(h) += c * x0.topRows(h);
      // right factor [[I, D], [0, I]] in Sp(2p)
      const Matrix dq = 0.5 / std::sqrt(static_cast<double>(q)) * sym(rng.gaussian(q, q));
      x0.rightCols(q) += x0.leftCols(q) * dq;
      x = std::move(x0);
      break;
    }
    case ManifoldKind::IndefiniteStiefel: {
      Eigen::SelfAdjointEigenSolver<Matrix> es(spec.left_factor());
      std::vector<Index> pos, neg;
      for (Index i = 0; i < n; ++i) (es.eigenvalues()(i) > 0 ? pos : neg).push_back(i);
      const Vector& s = spec.signs();
      const Index pk = (s.array() > 0).count();
      const Index pm = p - pk;
      auto frame = [&](const std::vector<Index>& idx, Index cols) {
        Matrix f(n, idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
          f.col(i) = es.eigenvectors().col(idx[i]) / std::sqrt(std::abs(es.eigenvalues()(idx[i])));
        }
        return Matrix(f * random_orthonormal(rng, static_cast<Index>(idx.size()), cols));
      };
      const Matrix fp = pk > 0 ? frame(pos, pk) : Matrix(n, 0);
      const Matrix fm = pm > 0 ? frame(neg, pm) : Matrix(n, 0);
      x.resize(n, p);
      Index ip = 0, im = 0;
      for (Index j = 0; j < p; ++j) x.col(j) = s(j) > 0 ? fp.col(ip++) : fm.col(im++);
      break;
    }
    case ManifoldKind::TensorStiefel: {
      const TransformMatrix& tm = spec.transform();
      const Tensor3 g = Tensor3::random(rng, spec.tensor_n(), spec.tensor_p(), spec.tensor_l());
      x = diag_unfold(mode3_product(tqr(g, tm).q, tm.matrix()));
      break;
    }
  }
  return FeasiblePoint(spec, std::move(x), 1e-10);
}

/// Seeded unit-norm tangent vector at x.
inline Matrix random_tangent(const ManifoldSpec& spec, const FeasiblePoint& x, std::uint64_t seed) {
  Rng rng(seed);
  Matrix z = project_tangent(spec, x, spec.subspace_project(rng.gaussian(spec.rows(), spec.cols())));
  return z / z.norm();
}

}  // namespace gocdf
