#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "gocdf/manifold.hpp"
#include "gocdf/problem.hpp"

namespace gocdf {

/// A(X) = 1.5 X - 0.5 X phi(X)^T X.
inline Matrix dissolve(const ManifoldSpec& spec, const Matrix& x) {
  const Matrix g = x.transpose() * spec.phi(x);
  return 1.5 * x - 0.5 * x * g.transpose();
}

/// DC(X)[Z] = X^T phi(Z) + Z^T phi(X).
inline Matrix dC(const ManifoldSpec& spec, const Matrix& x, const Matrix& z) {
  return x.transpose() * spec.phi(z) + z.transpose() * spec.phi(x);
}

/// DC(X)^*[T] = phi(X) Phi(T).
inline Matrix dC_adjoint(const ManifoldSpec& spec, const Matrix& x, const Matrix& t) {
  return spec.phi(x) * spec.gen_sym(t);
}

/// DA(X)[Z] = 1.5 Z - 0.5 (Z phi(X)^T X + X phi(Z)^T X + X phi(X)^T Z).
inline Matrix dA(const ManifoldSpec& spec, const Matrix& x, const Matrix& z) {
  const Matrix px = spec.phi(x);
  const Matrix pz = spec.phi(z);
  return 1.5 * z - 0.5 * (z * (px.transpose() * x) + x * (pz.transpose() * x) + x * (px.transpose() * z));
}

/// DA(X)^*[T] = T (1.5 I - 0.5 X^T phi(X)) - 0.5 phi(X) Phi(T^T X).
inline Matrix dA_adjoint(const ManifoldSpec& spec, const Matrix& x, const Matrix& t) {
  const Matrix px = spec.phi(x);
  Matrix m = -0.5 * (x.transpose() * px);
  m.diagonal().array() += 1.5;
  return t * m - 0.5 * px * spec.gen_sym(t.transpose() * x);
}

/// D(C o A)(X)[Z] with G = X^T phi(X), D = DC(X)[Z]:
/// 9/4 D - 3/2 (DG + GD) + 1/4 (DGG + GDG + GGD).
inline Matrix dCA(const ManifoldSpec& spec, const Matrix& x, const Matrix& z) {
  const Matrix g = x.transpose() * spec.phi(x);
  const Matrix d = dC(spec, x, z);
  const Matrix dg = d * g;
  const Matrix gd = g * d;
  return 2.25 * d - 1.5 * (dg + gd) + 0.25 * (dg * g + g * dg + g * gd);
}

/// Counts the n x p / p x p shaped products of Table-style cost accounting.
struct OpCounter {
  long products = 0;
  long phi_calls = 0;
  long grad_calls = 0;
  long value_calls = 0;
  long hessvec_calls = 0;
  void reset() { *this = OpCounter{}; }
};

/// Per-worker cache of quantities shared by value, gradient and hessvec at one X.
class EvalCache {
 public:
  OpCounter counter;

  void invalidate() { valid_ = false; }

 private:
  friend class PenaltyFunction;
  bool valid_ = false;
  Matrix x_, phix_, gram_, c_, ax_;
  bool have_f_ = false, have_gf_ = false;
  double fa_ = 0.0;
  Matrix gf_;
};

/// h(X) = f(A(X)) + (beta / 2) ||X^T phi(X) - I||^2.
class PenaltyFunction {
 public:
  PenaltyFunction(Problem problem, double beta) : problem_(std::move(problem)), beta_(beta) {
    if (!(beta_ > 0.0)) throw ConstructionError("PenaltyFunction: beta must be positive");
  }

  const Problem& problem() const { return problem_; }
  const ManifoldSpec& spec() const { return problem_.spec; }
  double beta() const { return beta_; }

  double value(const Matrix& x, EvalCache& cache) const {
    prepare(x, cache);
    if (!cache.have_f_) {
      cache.fa_ = problem_.f(cache.ax_);
      cache.have_f_ = true;
      ++cache.counter.value_calls;
    }
    return cache.fa_ + 0.5 * beta_ * cache.c_.squaredNorm();
  }

  /// grad h = grad f(A X)(1.5 I - 0.5 G) - 0.5 phi(X) Phi(grad f^T X) + beta phi(X) Phi(C).
  ///
  /// phi(X) Phi(T) is expanded as phi(X) T^T + phi(X T), so a fresh evaluation
  /// costs 8 counted products, 3 phi applications and 1 gradient call.
  Matrix gradient(const Matrix& x, EvalCache& cache) const {
    prepare(x, cache);
    const Matrix& gf = grad_f(cache);
    OpCounter& oc = cache.counter;
    Matrix m = -0.5 * cache.gram_;
    m.diagonal().array() += 1.5;
    Matrix out = mul(gf, m, oc);                          // grad f (1.5 I - 0.5 G)
    const Matrix t1 = mul(gf.transpose(), x, oc);         // grad f^T X
    out -= 0.5 * mul(cache.phix_, t1.transpose(), oc);    // phi(X) X^T grad f
    out -= 0.5 * phi(mul(x, t1, oc), oc);                 // phi(X (grad f^T X))
    out += beta_ * mul(cache.phix_, cache.c_.transpose(), oc);  // phi(X) C^T
    out += beta_ * phi(mul(x, cache.c_, oc), oc);         // phi(X C)
    return out;
  }

  /// ||C(X)||, reusing the cache.
  double feasibility(const Matrix& x, EvalCache& cache) const {
    prepare(x, cache);
    return cache.c_.norm();
  }

  double value_and_gradient(const Matrix& x, EvalCache& cache, Matrix& grad) const {
    const double v = value(x, cache);
    grad = gradient(x, cache);
    return v;
  }

  /// Hessian-vector product of h. Throws Unsupported without a Hessian oracle.
  Matrix hessvec(const Matrix& x, const Matrix& dx, EvalCache& cache) const {
    if (!problem_.has_hessian()) throw Unsupported(problem_.id + ": no Hessian oracle");
    prepare(x, cache);
    const ManifoldSpec& s = spec();
    const Matrix& gf = grad_f(cache);
    ++cache.counter.hessvec_calls;
    const Matrix& px = cache.phix_;
    const Matrix pd = s.phi(dx);
    const Matrix dcd = x.transpose() * pd + dx.transpose() * px;
    // DA(X)[dx]
    const Matrix da = 1.5 * dx - 0.5 * (dx * cache.gram_.transpose() + x * (pd.transpose() * x) +
                                        x * (px.transpose() * dx));
    const Matrix hf = problem_.hessvec(cache.ax_, da);
    Matrix m = -0.5 * cache.gram_;
    m.diagonal().array() += 1.5;
    Matrix out = hf * m - 0.5 * px * s.gen_sym(hf.transpose() * x);
    out -= 0.5 * gf * dcd;
    out -= 0.5 * pd * s.gen_sym(gf.transpose() * x);
    out -= 0.5 * px * s.gen_sym(gf.transpose() * dx);
    out += beta_ * (px * s.gen_sym(dcd) + pd * s.gen_sym(cache.c_));
    return out;
  }

  double value(const Matrix& x) const {
    EvalCache c;
    return value(x, c);
  }
  Matrix gradient(const Matrix& x) const {
    EvalCache c;
    return gradient(x, c);
  }
  Matrix hessvec(const Matrix& x, const Matrix& dx) const {
    EvalCache c;
    return hessvec(x, dx, c);
  }

 private:
  static Matrix mul(const Matrix& a, const Matrix& b, OpCounter& oc) {
    ++oc.products;
    return a * b;
  }

  Matrix phi(const Matrix& a, OpCounter& oc) const {
    ++oc.phi_calls;
    return spec().phi(a);
  }

  void prepare(const Matrix& x, EvalCache& cache) const {
    if (cache.valid_ && cache.x_.rows() == x.rows() && cache.x_.cols() == x.cols() && cache.x_ == x) return;
    spec().require_in_subspace(x, "penalty");
    cache.x_ = x;
    cache.phix_ = phi(x, cache.counter);
    cache.gram_ = mul(x.transpose(), cache.phix_, cache.counter);   // (1)
    cache.c_ = cache.gram_;
    cache.c_.diagonal().array() -= 1.0;
    cache.ax_ = 1.5 * x - 0.5 * mul(x, cache.gram_.transpose(), cache.counter);  // (2)
    cache.have_f_ = false;
    cache.have_gf_ = false;
    cache.valid_ = true;
  }

  const Matrix& grad_f(EvalCache& cache) const {
    if (!cache.have_gf_) {
      cache.gf_ = problem_.grad(cache.ax_);
      cache.have_gf_ = true;
      ++cache.counter.grad_calls;
    }
    return cache.gf_;
  }

  Problem problem_;
  double beta_;
};

struct PostprocessResult {
  FeasiblePoint point;
  int rounds;
  std::vector<double> trace;  // ||C|| before each round and at the end
};

/// Repeats X <- A(X) until ||C(X)|| < eps_f.
inline PostprocessResult postprocess(const ManifoldSpec& spec, const Matrix& x0, double eps_f = 1e-12,
                                     int max_rounds = 50) {
  Matrix x = x0;
  std::vector<double> trace;
  double c = constraint(spec, x).norm();
  trace.push_back(c);
  int rounds = 0;
  while (!(c < eps_f)) {
    if (rounds >= max_rounds || !std::isfinite(c)) {
      throw Divergence("postprocess: ||C|| = " + std::to_string(c) + " after " + std::to_string(rounds) +
                           " rounds",
                       trace);
    }
    x = dissolve(spec, x);
    ++rounds;
    c = constraint(spec, x).norm();
    trace.push_back(c);
  }
  return {FeasiblePoint(spec, std::move(x), eps_f), rounds, std::move(trace)};
}

struct StationarityReport {
  double grad_h_norm;
  double feas_norm;
  double riemannian_grad_norm;  // at the post-processed point; NaN if post-processing failed
};

inline StationarityReport stationarity_report(const PenaltyFunction& pf, const Matrix& x, double eps_f = 1e-12) {
  StationarityReport r{};
  r.grad_h_norm = pf.gradient(x).norm();
  r.feas_norm = constraint(pf.spec(), x).norm();
  try {
    const PostprocessResult pp = postprocess(pf.spec(), x, eps_f);
    r.riemannian_grad_norm =
        riemannian_gradient(pf.spec(), pp.point, pf.problem().grad(pp.point.x())).norm();
  } catch (const Divergence&) {
    r.riemannian_grad_norm = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace gocdf
