#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gocdf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A factorization met a (numerically) rank-deficient input.
class SingularDecomposition : public Error {
 public:
  using Error::Error;
};

/// The Sylvester/Lyapunov system has no unique solution.
class NoUniqueSolution : public Error {
 public:
  using Error::Error;
};

/// A matrix that should live in the subspace F does not.
class SubspaceViolation : public Error {
 public:
  using Error::Error;
};

class InfeasiblePoint : public Error {
 public:
  using Error::Error;
};

/// Degenerate least-squares design. Carries the minimum-norm solution.
class LeastSquaresDegenerate : public Error {
 public:
  LeastSquaresDegenerate(const std::string& what, Eigen::MatrixXd min_norm)
      : Error(what), min_norm_solution(std::move(min_norm)) {}
  Eigen::MatrixXd min_norm_solution;
};

/// Retraction could not be evaluated for this step; callers shrink the step.
class StepTooLarge : public Error {
 public:
  using Error::Error;
};

/// Post-processing did not reach the feasibility target.
class Divergence : public Error {
 public:
  Divergence(const std::string& what, std::vector<double> trace)
      : Error(what), feasibility_trace(std::move(trace)) {}
  std::vector<double> feasibility_trace;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters for a manifold or problem generator.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gocdf
