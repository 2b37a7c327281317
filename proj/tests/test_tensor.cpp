#include <gtest/gtest.h>

#include "gocdf/tensor.hpp"

using namespace gocdf;

namespace {

// Direct mode-3 oracle: Y(:,:,k) = sum_j M(k,j) X(:,:,j).
Tensor3 mode3_loop(const Tensor3& x, const Matrix& m) {
  Tensor3 y(x.rows(), x.cols(), m.rows());
  for (Index k = 0; k < m.rows(); ++k)
    for (Index j = 0; j < x.depth(); ++j)
      for (Index c = 0; c < x.cols(); ++c)
        for (Index r = 0; r < x.rows(); ++r) y(r, c, k) += m(k, j) * x(r, c, j);
  return y;
}

}  // namespace

TEST(Mode3, IdentityTransformOfDepthOne) {
  Rng r(1);
  const Tensor3 x = Tensor3::random(r, 3, 2, 1);
  EXPECT_EQ(mode3_product(x, Matrix::Ones(1, 1)).data(), x.data());
}

TEST(Mode3, HandEvaluatedTwoSlice) {
  Tensor3 x(1, 1, 2);
  x(0, 0, 0) = 1.0;
  x(0, 0, 1) = 1.0;
  Matrix m(2, 2);
  m << 1, 1, 1, -1;
  const Tensor3 y = mode3_product(x, m);
  EXPECT_DOUBLE_EQ(y(0, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(y(0, 0, 1), 0.0);
}

TEST(Mode3, MatchesLoopOracleAndRoundTrips) {
  Rng r(2);
  const Tensor3 x = Tensor3::random(r, 4, 3, 5);
  const TransformMatrix tm = TransformMatrix::dct(5);
  EXPECT_LT((mode3_product(x, tm.matrix()) - mode3_loop(x, tm.matrix())).norm(), 1e-13);
  EXPECT_LT((mode3_product(mode3_product(x, tm.matrix()), tm.inverse()) - x).norm(), 1e-12);
}

TEST(Transform, DctIsOrthonormal) {
  for (Index l : {1, 2, 4, 7}) {
    const Matrix m = TransformMatrix::dct(l).matrix();
    EXPECT_LT((m.transpose() * m - Matrix::Identity(l, l)).norm(), 1e-14);
  }
}

TEST(Transform, SingularRejected) {
  EXPECT_THROW(TransformMatrix(Matrix::Ones(2, 2)), SingularDecomposition);
  EXPECT_THROW(TransformMatrix(Matrix::Ones(2, 3)), DimensionMismatch);
}

TEST(Facewise, ScalarSlices) {
  Tensor3 x(1, 1, 2), y(1, 1, 2);
  x(0, 0, 0) = 2;
  x(0, 0, 1) = 3;
  y(0, 0, 0) = 5;
  y(0, 0, 1) = 7;
  const Tensor3 z = facewise_product(x, y);
  EXPECT_DOUBLE_EQ(z(0, 0, 0), 10.0);
  EXPECT_DOUBLE_EQ(z(0, 0, 1), 21.0);
}

TEST(Facewise, PerSliceMatmul) {
  Rng r(3);
  const Tensor3 x = Tensor3::random(r, 3, 2, 2);
  const Tensor3 y = Tensor3::random(r, 2, 2, 2);
  const Tensor3 z = facewise_product(x, y);
  for (Index k = 0; k < 2; ++k) EXPECT_LT((z.slice(k) - x.slice(k) * y.slice(k)).norm(), 1e-14);
  Tensor3 eye(2, 2, 2);
  eye.slice(0).setIdentity();
  eye.slice(1).setIdentity();
  EXPECT_EQ(facewise_product(x, eye).data(), x.data());
  EXPECT_THROW(facewise_product(x, x), DimensionMismatch);
}

TEST(LProduct, IdentityTensorIsNeutral) {
  Rng r(4);
  const TransformMatrix tm = TransformMatrix::dct(3);
  const Tensor3 x = Tensor3::random(r, 4, 2, 3);
  EXPECT_LT((lproduct(x, identity_tensor(2, tm), tm) - x).norm(), 1e-13);
}

TEST(LProduct, DepthOneIsMatrixProduct) {
  Rng r(5);
  const TransformMatrix tm = TransformMatrix::identity(1);
  const Tensor3 x = Tensor3::random(r, 3, 4, 1);
  const Tensor3 y = Tensor3::random(r, 4, 2, 1);
  EXPECT_LT((lproduct(x, y, tm).slice(0) - x.slice(0) * y.slice(0)).norm(), 1e-14);
}

TEST(LProduct, BlockDiagonalHomomorphism) {
  Rng r(6);
  const TransformMatrix tm = TransformMatrix::dct(4);
  const Tensor3 x = Tensor3::random(r, 3, 2, 4);
  const Tensor3 y = Tensor3::random(r, 2, 3, 4);
  const Matrix lhs = diag_unfold(mode3_product(lproduct(x, y, tm), tm.matrix()));
  const Matrix rhs = diag_unfold(mode3_product(x, tm.matrix())) * diag_unfold(mode3_product(y, tm.matrix()));
  EXPECT_LT((lhs - rhs).norm(), 1e-12);
}

TEST(DiagUnfold, DepthOneAndTwo) {
  Rng r(7);
  const Tensor3 x = Tensor3::random(r, 3, 2, 1);
  EXPECT_EQ(diag_unfold(x), Matrix(x.slice(0)));
  Tensor3 s(1, 1, 2);
  s(0, 0, 0) = 4;
  s(0, 0, 1) = -1;
  Matrix expect = Matrix::Zero(2, 2);
  expect(0, 0) = 4;
  expect(1, 1) = -1;
  EXPECT_EQ(diag_unfold(s), expect);
}

TEST(DiagUnfold, FoldRoundTripAndOffBlockRejection) {
  Rng r(8);
  const Tensor3 x = Tensor3::random(r, 3, 2, 4);
  Matrix u = diag_unfold(x);
  EXPECT_EQ(diag_fold(u, 3, 2, 4).data(), x.data());
  u(0, 3) = 1e-6;
  EXPECT_THROW(diag_fold(u, 3, 2, 4), SubspaceViolation);
  EXPECT_THROW(diag_fold(u, 2, 2, 4), DimensionMismatch);
}

TEST(TQr, ReconstructionAndOrthogonality) {
  Rng r(9);
  const TransformMatrix tm = TransformMatrix::dct(4);
  const Tensor3 x = Tensor3::random(r, 6, 3, 4);
  const TensorQr f = tqr(x, tm);
  EXPECT_LT((lproduct(f.q, f.r, tm) - x).norm(), 1e-10 * x.norm());
  EXPECT_LT((lproduct(f.q.transpose(), f.q, tm) - identity_tensor(3, tm)).norm(), 1e-12);
}

TEST(TQr, OrthogonalInputGivesIdentityR) {
  Rng r(10);
  const TransformMatrix tm = TransformMatrix::dct(3);
  const Tensor3 q = tqr(Tensor3::random(r, 5, 2, 3), tm).q;
  const TensorQr f = tqr(q, tm);
  EXPECT_LT((f.q - q).norm(), 1e-12);
  EXPECT_LT((f.r - identity_tensor(2, tm)).norm(), 1e-12);
}

TEST(TQr, DepthOneIsReducedQr) {
  Rng r(11);
  const Tensor3 x = Tensor3::random(r, 5, 3, 1);
  const TensorQr f = tqr(x, TransformMatrix::identity(1));
  const QrFactors g = qr_positive(x.slice(0));
  EXPECT_LT((f.q.slice(0) - g.q).norm(), 1e-14);
  EXPECT_LT((f.r.slice(0) - g.r).norm(), 1e-14);
}
