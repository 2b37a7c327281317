#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gocdf/linalg.hpp"

namespace gocdf {

/// Dense third-order tensor, n x p x l, stored slice-major: frontal slice k
/// is a contiguous column-major n x p block.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(Index n, Index p, Index l) : n_(n), p_(p), l_(l), data_(n * p * l, 0.0) {
    if (n <= 0 || p <= 0 || l <= 0) throw DimensionMismatch("Tensor3: dimensions must be positive");
  }

  static Tensor3 from_slices(const std::vector<Matrix>& slices) {
    if (slices.empty()) throw DimensionMismatch("Tensor3::from_slices: no slices");
    Tensor3 t(slices[0].rows(), slices[0].cols(), static_cast<Index>(slices.size()));
    for (Index k = 0; k < t.l_; ++k) {
      require_same_shape(slices[k], slices[0], "Tensor3::from_slices");
      t.slice(k) = slices[k];
    }
    return t;
  }

  static Tensor3 random(Rng& rng, Index n, Index p, Index l) {
    Tensor3 t(n, p, l);
    for (Index k = 0; k < l; ++k) t.slice(k) = rng.gaussian(n, p);
    return t;
  }

  Index rows() const { return n_; }
  Index cols() const { return p_; }
  Index depth() const { return l_; }

  Eigen::Map<Matrix> slice(Index k) { return Eigen::Map<Matrix>(data_.data() + k * n_ * p_, n_, p_); }
  Eigen::Map<const Matrix> slice(Index k) const {
    return Eigen::Map<const Matrix>(data_.data() + k * n_ * p_, n_, p_);
  }

  double& operator()(Index i, Index j, Index k) { return data_[k * n_ * p_ + j * n_ + i]; }
  double operator()(Index i, Index j, Index k) const { return data_[k * n_ * p_ + j * n_ + i]; }

  /// Slice-wise transpose; matches the transpose of the l-product algebra.
  Tensor3 transpose() const {
    Tensor3 t(p_, n_, l_);
    for (Index k = 0; k < l_; ++k) t.slice(k) = slice(k).transpose();
    return t;
  }

  double norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  Tensor3& operator+=(const Tensor3& o) {
    check_same(o, "Tensor3::operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor3& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) {
    a.check_same(b, "Tensor3::operator-");
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] -= b.data_[i];
    return a;
  }

  const std::vector<double>& data() const { return data_; }

 private:
  void check_same(const Tensor3& o, const char* where) const {
    if (n_ != o.n_ || p_ != o.p_ || l_ != o.l_) throw DimensionMismatch(where);
  }

  Index n_ = 0, p_ = 0, l_ = 0;
  std::vector<double> data_;
};

/// Invertible mode-3 transform together with its precomputed inverse.
class TransformMatrix {
 public:
  explicit TransformMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1) {
      throw DimensionMismatch("TransformMatrix: must be square, got " + dims(m_));
    }
    Eigen::FullPivLU<Matrix> lu(m_);
    if (!lu.isInvertible()) throw SingularDecomposition("TransformMatrix: matrix is singular");
    minv_ = lu.inverse();
    const Index l = m_.rows();
    const double err = (m_ * minv_ - Matrix::Identity(l, l)).norm();
    if (err > 1e-12 * static_cast<double>(l)) {
      throw SingularDecomposition("TransformMatrix: inverse residual " + std::to_string(err) +
                                  " too large");
    }
  }

  static TransformMatrix identity(Index l) { return TransformMatrix(Matrix::Identity(l, l)); }

  /// Orthonormal DCT-II matrix (M^T M = I), the transform of the cosine product.
  static TransformMatrix dct(Index l) {
    Matrix m(l, l);
    for (Index j = 0; j < l; ++j) {
      const double c = j == 0 ? std::sqrt(1.0 / l) : std::sqrt(2.0 / l);
      for (Index i = 0; i < l; ++i) m(j, i) = c * std::cos(M_PI * (2.0 * i + 1.0) * j / (2.0 * l));
    }
    return TransformMatrix(std::move(m));
  }

  Index size() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  const Matrix& inverse() const { return minv_; }

 private:
  Matrix m_;
  Matrix minv_;
};

/// (X x_3 M)_{i1 i2 j} = sum_{i3} X_{i1 i2 i3} M_{j i3}.
inline Tensor3 mode3_product(const Tensor3& x, const Matrix& m) {
  const Index l = x.depth();
  if (m.rows() != l || m.cols() != l) {
    throw DimensionMismatch("mode3_product: transform " + dims(m) + " vs depth " + std::to_string(l));
  }
  Tensor3 out(x.rows(), x.cols(), l);
  for (Index j = 0; j < l; ++j) {
    auto dst = out.slice(j);
    for (Index k = 0; k < l; ++k) {
      if (m(j, k) != 0.0) dst += m(j, k) * x.slice(k);
    }
  }
  return out;
}

inline Tensor3 facewise_product(const Tensor3& x, const Tensor3& y) {
  if (x.depth() != y.depth() || x.cols() != y.rows()) {
    throw DimensionMismatch("facewise_product: inner dimensions or depth differ");
  }
  Tensor3 out(x.rows(), y.cols(), x.depth());
  for (Index k = 0; k < x.depth(); ++k) out.slice(k).noalias() = x.slice(k) * y.slice(k);
  return out;
}

/// X * Y = ((X x_3 M) face-wise (Y x_3 M)) x_3 M^{-1}.
inline Tensor3 lproduct(const Tensor3& x, const Tensor3& y, const TransformMatrix& tm) {
  return mode3_product(facewise_product(mode3_product(x, tm.matrix()), mode3_product(y, tm.matrix())),
                       tm.inverse());
}

/// Identity of the l-product: identity slices in the transform domain.
inline Tensor3 identity_tensor(Index p, const TransformMatrix& tm) {
  Tensor3 hat(p, p, tm.size());
  for (Index k = 0; k < tm.size(); ++k) hat.slice(k).setIdentity();
  return mode3_product(hat, tm.inverse());
}

/// Block-diagonal unfolding Diag(X) of size (l n) x (l p).
inline Matrix diag_unfold(const Tensor3& x) {
  const Index n = x.rows(), p = x.cols(), l = x.depth();
  Matrix out = Matrix::Zero(l * n, l * p);
  for (Index k = 0; k < l; ++k) out.block(k * n, k * p, n, p) = x.slice(k);
  return out;
}

/// Inverse of diag_unfold; rejects matrices with off-diagonal blocks above 1e-12.
inline Tensor3 diag_fold(const Matrix& y, Index n, Index p, Index l) {
  if (y.rows() != l * n || y.cols() != l * p) {
    throw DimensionMismatch("diag_fold: " + dims(y) + " is not a " + std::to_string(l) + "-block of " +
                            std::to_string(n) + "x" + std::to_string(p));
  }
  Tensor3 out(n, p, l);
  double off = 0.0;
  for (Index k = 0; k < l; ++k) {
    for (Index b = 0; b < l; ++b) {
      if (b == k) continue;
      off = std::max(off, y.block(k * n, b * p, n, p).cwiseAbs().maxCoeff());
    }
    out.slice(k) = y.block(k * n, k * p, n, p);
  }
  if (off > 1e-12) {
    throw SubspaceViolation("diag_fold: off-diagonal block entry " + std::to_string(off));
  }
  return out;
}

struct TensorQr {
  Tensor3 q;  // n x p x l
  Tensor3 r;  // p x p x l
};

/// Slice-wise reduced QR in the transform domain, mapped back by M^{-1}.
inline TensorQr tqr(const Tensor3& x, const TransformMatrix& tm) {
  if (x.depth() != tm.size()) throw DimensionMismatch("tqr: depth does not match transform");
  const Tensor3 hat = mode3_product(x, tm.matrix());
  Tensor3 qhat(x.rows(), x.cols(), x.depth());
  Tensor3 rhat(x.cols(), x.cols(), x.depth());
  for (Index k = 0; k < x.depth(); ++k) {
    QrFactors f = qr_positive(hat.slice(k));
    qhat.slice(k) = f.q;
    rhat.slice(k) = f.r;
  }
  return {mode3_product(qhat, tm.inverse()), mode3_product(rhat, tm.inverse())};
}

}  // namespace gocdf
