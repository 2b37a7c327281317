#pragma once

#include <string>
#include <vector>

#include "gocdf/manifold.hpp"
#include "gocdf/penalty.hpp"
#include "gocdf/problems.hpp"

namespace gocdf {

/// One small instance of every manifold kind.
inline std::vector<ManifoldSpec> sample_specs(std::uint64_t seed = 11) {
  return {
      ManifoldSpec::stiefel(7, 3),
      ManifoldSpec::generalized_stiefel_random(7, 3, seed),
      ManifoldSpec::symplectic_stiefel(8, 4),
      ManifoldSpec::indefinite_diagonal(5, 3, 2, 1),
      ManifoldSpec::hyperbolic_random(7, 3, seed + 1),
      ManifoldSpec::tensor_stiefel(4, 2, 3, TransformMatrix::dct(3)),
  };
}

struct SelfTestResult {
  std::string name;
  double value;
  double limit;
  bool pass() const { return value <= limit; }
};

/// Quick invariant sweep used by `gocdf selftest`.
inline std::vector<SelfTestResult> run_selftest(std::uint64_t seed = 5) {
  std::vector<SelfTestResult> out;
  for (const ManifoldSpec& spec : sample_specs()) {
    Rng rng(seed);
    double a1 = 0.0, a2 = 0.0, a3 = 0.0, dis = 0.0, fix = 0.0, idem = 0.0;
    const auto gb = spec.group_basis();
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix x = spec.subspace_project(rng.gaussian(spec.rows(), spec.cols()));
      const Matrix y = spec.subspace_project(rng.gaussian(spec.rows(), spec.cols()));
      Matrix t = Matrix::Zero(spec.cols(), spec.cols());
      for (const Matrix& e : gb) t += rng.normal() * e;
      a1 = std::max(a1, std::abs(inner(spec.phi(x), y) - inner(x, spec.phi(y))));
      a2 = std::max(a2, (spec.phi(x * t) - spec.phi(x) * spec.psi(t)).norm());
      a3 = std::max(a3, (spec.psi(spec.phi(x).transpose() * x) - x.transpose() * spec.phi(x)).norm());
      const FeasiblePoint xf = random_feasible(spec, seed + 100 + trial);
      const Matrix z = spec.subspace_project(rng.gaussian(spec.rows(), spec.cols()));
      dis = std::max(dis, dCA(spec, xf.x(), z).norm() / z.norm());
      fix = std::max(fix, (dissolve(spec, xf.x()) - xf.x()).norm() / xf.x().norm());
      const Matrix da = dA(spec, xf.x(), z);
      idem = std::max(idem, (dA(spec, xf.x(), da) - da).norm() / z.norm());
    }
    const std::string n = spec.name();
    out.push_back({n + " self-adjoint phi", a1, 1e-12});
    out.push_back({n + " phi(XT) = phi(X) psi(T)", a2, 1e-12});
    out.push_back({n + " psi(phi(X)^T X) = X^T phi(X)", a3, 1e-12});
    out.push_back({n + " dissolving D(C o A) = 0", dis, 1e-11});
    out.push_back({n + " A(X) = X on M", fix, 1e-12});
    out.push_back({n + " DA idempotent on M", idem, 1e-11});

    const PenaltyFunction pf(build_random_quadratic(spec, seed), 1.0);
    const Matrix x = random_feasible(spec, seed + 7).x() + 0.1 * spec.subspace_project(rng.gaussian(spec.rows(), spec.cols()));
    Matrix d = spec.subspace_project(rng.gaussian(spec.rows(), spec.cols()));
    d /= d.norm();
    const double h = 1e-5;
    const double fd = (pf.value(x + h * d) - pf.value(x - h * d)) / (2 * h);
    const double an = inner(pf.gradient(x), d);
    out.push_back({n + " penalty gradient vs central differences",
                   std::abs(fd - an) / std::max({1.0, std::abs(an), std::abs(pf.value(x))}), 1e-6});
  }
  return out;
}

}  // namespace gocdf
