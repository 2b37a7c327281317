#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "gocdf/error.hpp"

namespace gocdf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Frobenius inner product <A, B> = tr(A^T B).
inline double inner(const Matrix& a, const Matrix& b) {
  return (a.array() * b.array()).sum();
}

inline Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline std::string dims(const Matrix& a) {
  std::ostringstream os;
  os << a.rows() << "x" << a.cols();
  return os.str();
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch(std::string(where) + ": shape " + dims(a) + " vs " + dims(b));
  }
}

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

/// Seeded generator used by every random construction in the library.
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the standard);
/// uniforms and Gaussians are derived by hand rather than through the
/// implementation-defined std distributions so draws match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Matrix gaussian(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  std::uint64_t next_seed() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct QrFactors {
  Matrix q;  // rows x cols, orthonormal columns
  Matrix r;  // cols x cols, upper triangular with positive diagonal
};

/// Thin Householder QR with the sign convention diag(R) > 0.
inline QrFactors qr_positive(const Matrix& x) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (p > n) throw DimensionMismatch("qr_positive: more columns than rows (" + dims(x) + ")");
  Eigen::HouseholderQR<Matrix> qr(x);
  QrFactors out;
  out.q = qr.householderQ() * Matrix::Identity(n, p);
  out.r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const double scale = std::max(1.0, x.norm());
  for (Index j = 0; j < p; ++j) {
    const double d = out.r(j, j);
    if (!(std::abs(d) > 1e-14 * scale)) {
      throw SingularDecomposition("qr_positive: column " + std::to_string(j) +
                                  " is numerically dependent");
    }
    if (d < 0) {
      out.r.row(j) *= -1.0;
      out.q.col(j) *= -1.0;
    }
  }
  return out;
}

inline Matrix random_orthonormal(Rng& rng, Index n, Index p) {
  return qr_positive(rng.gaussian(n, p)).q;
}

/// Solves A S + S B = Q by dense Kronecker vectorization.
///
/// (I (x) A + B^T (x) I) vec(S) = vec(Q). Sized for p <= 64.
inline Matrix lyapunov_solve(const Matrix& a, const Matrix& b, const Matrix& q) {
  const Index p = a.rows();
  if (a.cols() != p || b.rows() != b.cols() || q.rows() != p || q.cols() != b.rows()) {
    throw DimensionMismatch("lyapunov_solve: A " + dims(a) + ", B " + dims(b) + ", Q " + dims(q));
  }
  const Index m = b.rows();
  const Index dim = p * m;
  Matrix k = Matrix::Zero(dim, dim);
  for (Index j = 0; j < m; ++j) {
    k.block(j * p, j * p, p, p) += a;
    for (Index i = 0; i < m; ++i) {
      if (b(j, i) != 0.0) k.block(i * p, j * p, p, p).diagonal().array() += b(j, i);
    }
  }
  Eigen::PartialPivLU<Matrix> lu(k);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    throw NoUniqueSolution("lyapunov_solve: singular Kronecker system (rcond " +
                           std::to_string(rc) + ")");
  }
  const Vector rhs = Eigen::Map<const Vector>(q.data(), dim);
  const Vector s = lu.solve(rhs);
  return Eigen::Map<const Matrix>(s.data(), p, m);
}

}  // namespace gocdf
