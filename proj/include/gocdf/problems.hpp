#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "gocdf/manifold.hpp"
#include "gocdf/problem.hpp"
#include "gocdf/tensor.hpp"

namespace gocdf {

namespace detail {

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

/// f = tr(X^T A X N) on the symplectic Stiefel manifold Sp(2p, 2n).
///
/// A = U diag(lambda) U^T with lambda_i = a^{1-i} + b, a in (1, 2), b in (0, 2);
/// N = diag(mu) with mu_j = 0.1 exp(-j / p).
inline Problem build_lsm(Index n2, Index p2, std::uint64_t seed, bool run_self_test = true) {
  if (n2 % 2 != 0 || p2 % 2 != 0) throw ConstructionError("lsm: dimensions must be even");
  ManifoldSpec spec = ManifoldSpec::symplectic_stiefel(n2, p2);
  Rng rng(seed);
  const double a = rng.uniform(1.0, 2.0);
  const double b = rng.uniform(0.0, 2.0);
  Vector lam(n2);
  for (Index i = 1; i <= n2; ++i) lam(i - 1) = std::pow(a, static_cast<double>(1 - i)) + b;
  const Matrix u = random_orthonormal(rng, n2, n2);
  const Matrix amat = sym(u * lam.asDiagonal() * u.transpose());
  const double p = static_cast<double>(p2 / 2);
  Vector mu(p2);
  for (Index j = 1; j <= p2; ++j) mu(j - 1) = 0.1 * std::exp(-static_cast<double>(j) / p);

  Problem pr{"lsm", std::move(spec), {}, {}, {}, 0.012, seed, {}, {}, {}};
  pr.f = [amat, mu](const Matrix& x) { return inner(x, amat * x * mu.asDiagonal()); };
  pr.grad = [amat, mu](const Matrix& x) -> Matrix { return 2.0 * amat * x * mu.asDiagonal(); };
  pr.hessvec = [amat, mu](const Matrix&, const Matrix& d) -> Matrix { return 2.0 * amat * d * mu.asDiagonal(); };
  pr.metadata = {{"n2", std::to_string(n2)}, {"p2", std::to_string(p2)}, {"a", detail::num(a)},
                 {"b", detail::num(b)}};
  if (run_self_test) self_test(pr);
  return pr;
}

/// min ||X - A||^2 on the indefinite Stiefel manifold with B = diag(1..k, -m..-1)
/// and J = diag(I_pk, -I_pm); A is the mean of samples Y0 diag(W1, W2).
///
/// W1, W2 are orthogonal factors of I + spread * G, so samples cluster around Y0.
inline Problem build_extrinsic_mean(Index n, Index p, Index k, Index pk, Index n_samples, std::uint64_t seed,
                                    double spread = 0.5, bool run_self_test = true) {
  if (k < 0 || k > n || pk < 0 || pk > p || n_samples < 1) {
    throw ConstructionError("extrinsic-mean: need 0 <= k <= n, 0 <= pk <= p, N >= 1");
  }
  const Index m = n - k;
  const Index pm = p - pk;
  ManifoldSpec spec = ManifoldSpec::indefinite_diagonal(k, m, pk, pm);
  Rng rng(seed);
  const Matrix y0 = random_feasible(spec, rng.next_seed()).x();
  auto orth = [&](Index q) -> Matrix {
    if (q == 0) return Matrix(0, 0);
    Matrix g = spread * rng.gaussian(q, q);
    g.diagonal().array() += 1.0;
    return qr_positive(g).q;
  };
  std::vector<Matrix> samples;
  Matrix mean = Matrix::Zero(n, p);
  for (Index i = 0; i < n_samples; ++i) {
    Matrix w = Matrix::Zero(p, p);
    w.topLeftCorner(pk, pk) = orth(pk);
    w.bottomRightCorner(pm, pm) = orth(pm);
    samples.push_back(y0 * w);
    mean += samples.back();
  }
  mean /= static_cast<double>(n_samples);

  Problem pr{"extrinsic-mean", std::move(spec), {}, {}, {}, 0.5, seed, {}, {}, {}};
  pr.f = [mean](const Matrix& x) { return (x - mean).squaredNorm(); };
  pr.grad = [mean](const Matrix& x) -> Matrix { return 2.0 * (x - mean); };
  pr.hessvec = [](const Matrix&, const Matrix& d) -> Matrix { return 2.0 * d; };
  pr.metadata = {{"n", std::to_string(n)}, {"p", std::to_string(p)}, {"k", std::to_string(k)},
                 {"pk", std::to_string(pk)}, {"samples", std::to_string(n_samples)},
                 {"spread", detail::num(spread)}};
  pr.samples = std::move(samples);
  pr.known_solution = y0;  // one sample centre; not the minimizer in general
  if (run_self_test) self_test(pr);
  return pr;
}

namespace detail {

// Transform-domain data shared by the tensor JFD oracles.
struct JfdData {
  Index n, p, l;
  std::vector<Tensor3> a_hat;  // A_i x_3 M
  Matrix minv_t;               // M^{-T}
  Matrix minv;                 // M^{-1}

  // T_hat_i slice k = X_k^T A_ik X_k
  Tensor3 t_hat(const Tensor3& xh, const Tensor3& ah) const {
    Tensor3 t(p, p, l);
    for (Index k = 0; k < l; ++k) t.slice(k) = xh.slice(k).transpose() * ah.slice(k) * xh.slice(k);
    return t;
  }

  static Tensor3 off_mask(Tensor3 t) {
    for (Index k = 0; k < t.depth(); ++k) t.slice(k).diagonal().setZero();
    return t;
  }

  double value(const Matrix& x) const {
    const Tensor3 xh = diag_fold(x, n, p, l);
    double s = 0.0;
    for (const Tensor3& ah : a_hat) {
      const Tensor3 t = off_mask(mode3_product(t_hat(xh, ah), minv));
      s += t.norm() * t.norm();
    }
    return s;
  }

  Matrix gradient(const Matrix& x) const {
    const Tensor3 xh = diag_fold(x, n, p, l);
    Tensor3 g(n, p, l);
    for (const Tensor3& ah : a_hat) {
      Tensor3 gt = off_mask(mode3_product(t_hat(xh, ah), minv));
      gt *= 2.0;
      const Tensor3 gh = mode3_product(gt, minv_t);
      for (Index k = 0; k < l; ++k) {
        g.slice(k) += ah.slice(k) * xh.slice(k) * gh.slice(k).transpose() +
                      ah.slice(k).transpose() * xh.slice(k) * gh.slice(k);
      }
    }
    return diag_unfold(g);
  }

  Matrix hessvec(const Matrix& x, const Matrix& d) const {
    const Tensor3 xh = diag_fold(x, n, p, l);
    const Tensor3 dh = diag_fold(d, n, p, l);
    Tensor3 h(n, p, l);
    for (const Tensor3& ah : a_hat) {
      Tensor3 gt = off_mask(mode3_product(t_hat(xh, ah), minv));
      gt *= 2.0;
      const Tensor3 gh = mode3_product(gt, minv_t);
      Tensor3 dt(p, p, l);
      for (Index k = 0; k < l; ++k) {
        dt.slice(k) = dh.slice(k).transpose() * ah.slice(k) * xh.slice(k) +
                      xh.slice(k).transpose() * ah.slice(k) * dh.slice(k);
      }
      Tensor3 dgt = off_mask(mode3_product(dt, minv));
      dgt *= 2.0;
      const Tensor3 dgh = mode3_product(dgt, minv_t);
      for (Index k = 0; k < l; ++k) {
        const auto a = ah.slice(k);
        h.slice(k) += a * dh.slice(k) * gh.slice(k).transpose() + a.transpose() * dh.slice(k) * gh.slice(k) +
                      a * xh.slice(k) * dgh.slice(k).transpose() + a.transpose() * xh.slice(k) * dgh.slice(k);
      }
    }
    return diag_unfold(h);
  }
};

}  // namespace detail

/// Joint f-diagonalization: f(X) = sum_i off(X^T * A_i * X) on the tensor
/// Stiefel manifold under the cosine transform product.
///
/// A_i = U * S_i * U^T + gamma E_i / ||E_i|| with U n x p x l orthogonal,
/// S_i p x p x l f-diagonal and E_i slice-wise symmetric Gaussian noise.
/// off() is evaluated in the original domain, so M only needs to be
/// invertible.
inline Problem build_tensor_jfd_with(Index n, Index p, Index l, Index n_samples, double gamma, std::uint64_t seed,
                                     const TransformMatrix& tm, bool run_self_test = true) {
  if (n < 1 || p < 1 || p > n || l < 1 || n_samples < 1 || !(gamma >= 0.0)) {
    throw ConstructionError("tensor-jfd: need n >= p >= 1, l >= 1, N >= 1, gamma >= 0");
  }
  ManifoldSpec spec = ManifoldSpec::tensor_stiefel(n, p, l, tm);
  Rng rng(seed);
  const Tensor3 u = tqr(Tensor3::random(rng, n, p, l), tm).q;
  const Tensor3 ut = u.transpose();
  auto data = std::make_shared<detail::JfdData>();
  data->n = n;
  data->p = p;
  data->l = l;
  data->minv = tm.inverse();
  data->minv_t = tm.inverse().transpose();
  for (Index i = 0; i < n_samples; ++i) {
    Tensor3 s(p, p, l);
    for (Index k = 0; k < l; ++k)
      for (Index j = 0; j < p; ++j) s(j, j, k) = rng.normal();
    Tensor3 a = lproduct(lproduct(u, s, tm), ut, tm);
    if (gamma > 0.0) {
      Tensor3 e(n, n, l);
      for (Index k = 0; k < l; ++k) e.slice(k) = sym(rng.gaussian(n, n));
      e *= gamma / e.norm();
      a += e;
    }
    data->a_hat.push_back(mode3_product(a, tm.matrix()));
  }

  Problem pr{"tensor-jfd", std::move(spec), {}, {}, {}, 0.8, seed, {}, {}, {}};
  pr.f = [data](const Matrix& x) { return data->value(x); };
  pr.grad = [data](const Matrix& x) { return data->gradient(x); };
  pr.hessvec = [data](const Matrix& x, const Matrix& d) { return data->hessvec(x, d); };
  pr.metadata = {{"n", std::to_string(n)}, {"p", std::to_string(p)}, {"l", std::to_string(l)},
                 {"samples", std::to_string(n_samples)}, {"gamma", detail::num(gamma)}, {"transform", "dct-ii"}};
  // U itself diagonalizes every noise-free A_i
  pr.known_solution = diag_unfold(mode3_product(u, tm.matrix()));
  if (run_self_test) self_test(pr);
  return pr;
}

inline Problem build_tensor_jfd(Index n, Index p, Index l, Index n_samples, double gamma, std::uint64_t seed,
                                bool run_self_test = true) {
  return build_tensor_jfd_with(n, p, l, n_samples, gamma, seed, TransformMatrix::dct(l), run_self_test);
}

/// f = 0.5 tr(X^T A X N) + <C, X> with the gradient restricted to F.
inline Problem build_quadratic(ManifoldSpec spec, Matrix a, Matrix nmat, Matrix c, std::string id = "quadratic",
                               std::uint64_t seed = 0, bool run_self_test = true) {
  if (a.rows() != spec.rows() || a.cols() != spec.rows() || nmat.rows() != spec.cols() ||
      nmat.cols() != spec.cols() || c.rows() != spec.rows() || c.cols() != spec.cols()) {
    throw ConstructionError("quadratic: data dimensions do not match the manifold");
  }
  a = sym(a);
  nmat = sym(nmat);
  c = spec.subspace_project(c);
  Problem pr{std::move(id), std::move(spec), {}, {}, {}, 1.0, seed, {}, {}, {}};
  const ManifoldSpec& s = pr.spec;
  pr.f = [a, nmat, c](const Matrix& x) { return 0.5 * inner(x, a * x * nmat) + inner(c, x); };
  pr.grad = [a, nmat, c, s](const Matrix& x) -> Matrix { return s.subspace_project(a * x * nmat) + c; };
  pr.hessvec = [a, nmat, s](const Matrix&, const Matrix& d) -> Matrix { return s.subspace_project(a * d * nmat); };
  if (run_self_test) self_test(pr);
  return pr;
}

/// Random symmetric A, N = diag(1 + j / p), small linear term.
inline Problem build_random_quadratic(ManifoldSpec spec, std::uint64_t seed, double linear = 0.1) {
  Rng rng(seed);
  const Index n = spec.rows(), p = spec.cols();
  Matrix a = sym(rng.gaussian(n, n)) / std::sqrt(static_cast<double>(n));
  Matrix nm = Matrix::Zero(p, p);
  for (Index j = 0; j < p; ++j) nm(j, j) = 1.0 + static_cast<double>(j) / p;
  Matrix c = linear * rng.gaussian(n, p);
  return build_quadratic(std::move(spec), std::move(a), std::move(nm), std::move(c), "quadratic", seed);
}

/// f = 0 on any manifold.
inline Problem build_zero(ManifoldSpec spec) {
  Problem pr{"zero", std::move(spec), {}, {}, {}, 1.0, 0, {}, {}, {}};
  pr.f = [](const Matrix&) { return 0.0; };
  pr.grad = [](const Matrix& x) -> Matrix { return Matrix::Zero(x.rows(), x.cols()); };
  pr.hessvec = [](const Matrix&, const Matrix& d) -> Matrix { return Matrix::Zero(d.rows(), d.cols()); };
  return pr;
}

}  // namespace gocdf
