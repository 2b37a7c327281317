#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gocdf/manifold.hpp"

namespace gocdf {

/// Objective f over the ambient subspace F of a manifold.
struct Problem {
  std::string id;
  ManifoldSpec spec;
  std::function<double(const Matrix&)> f;
  std::function<Matrix(const Matrix&)> grad;
  // Empty when the problem has no Hessian oracle.
  std::function<Matrix(const Matrix&, const Matrix&)> hessvec;
  double default_beta = 1.0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> metadata;
  // Problem-specific reference data (samples, known minimizers).
  std::vector<Matrix> samples;
  std::optional<Matrix> known_solution;

  bool has_hessian() const { return static_cast<bool>(hessvec); }
};

struct GradientCheck {
  double max_rel_error = 0.0;
  bool passed = true;
};

/// Central-difference check of grad along random unit directions in F.
///
/// Compares (f(X+tD) - f(X-tD)) / 2t with <grad f(X), D>, relative to
/// max(1, |f|, |<grad, D>|).
inline GradientCheck check_gradient(const Problem& pr, const std::vector<Matrix>& points, std::uint64_t seed,
                                    double tol = 1e-6, double step = 1e-5) {
  GradientCheck out;
  Rng rng(seed);
  for (const Matrix& x : points) {
    Matrix d = pr.spec.subspace_project(rng.gaussian(x.rows(), x.cols()));
    d /= d.norm();
    const double fd = (pr.f(x + step * d) - pr.f(x - step * d)) / (2.0 * step);
    const double an = inner(pr.grad(x), d);
    const double scale = std::max({1.0, std::abs(pr.f(x)), std::abs(an)});
    const double err = std::abs(fd - an) / scale;
    out.max_rel_error = std::max(out.max_rel_error, err);
  }
  out.passed = out.max_rel_error <= tol;
  return out;
}

/// Construction-time self-test: gradient check at 5 random feasible points.
inline void self_test(const Problem& pr) {
  std::vector<Matrix> pts;
  for (std::uint64_t s = 0; s < 5; ++s) pts.push_back(random_feasible(pr.spec, pr.seed * 7919 + 101 + s).x());
  const GradientCheck gc = check_gradient(pr, pts, pr.seed + 17);
  if (!gc.passed) {
    throw ConstructionError(pr.id + ": gradient self-test failed (relative error " +
                            std::to_string(gc.max_rel_error) + ")");
  }
}

}  // namespace gocdf
