#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "gocdf/problems.hpp"

using namespace gocdf;

namespace {

double hess_fd_error(const Problem& pr, const Matrix& x, const Matrix& d) {
  const double t = 1e-5;
  const Matrix fd = (pr.grad(x + t * d) - pr.grad(x - t * d)) / (2 * t);
  const Matrix an = pr.hessvec(x, d);
  return (fd - an).norm() / std::max(1.0, an.norm());
}

void check_oracles(const Problem& pr, std::uint64_t seed) {
  std::vector<Matrix> pts;
  for (std::uint64_t s = 0; s < 4; ++s) pts.push_back(random_feasible(pr.spec, seed + s).x());
  const GradientCheck gc = check_gradient(pr, pts, seed);
  EXPECT_TRUE(gc.passed) << gc.max_rel_error;
  Rng r(seed);
  for (const Matrix& x : pts) {
    Matrix d = pr.spec.subspace_project(r.gaussian(x.rows(), x.cols()));
    d /= d.norm();
    EXPECT_LT(hess_fd_error(pr, x, d), 1e-6);
  }
}

}  // namespace

TEST(Quadratic, ZeroAtOriginAndIdentityData) {
  const ManifoldSpec s = ManifoldSpec::stiefel(5, 2);
  const Problem pr = build_quadratic(s, 2.0 * Matrix::Identity(5, 5), Matrix::Identity(2, 2), Matrix::Zero(5, 2));
  EXPECT_EQ(pr.f(Matrix::Zero(5, 2)), 0.0);
  Rng r(1);
  const Matrix x = r.gaussian(5, 2);
  EXPECT_NEAR(pr.f(x), x.squaredNorm(), 1e-13);
  EXPECT_LT((pr.grad(x) - 2.0 * x).norm(), 1e-14);
}

TEST(Quadratic, DimensionMismatchRejected) {
  EXPECT_THROW(build_quadratic(ManifoldSpec::stiefel(5, 2), Matrix::Identity(4, 4), Matrix::Identity(2, 2),
                               Matrix::Zero(5, 2)),
               ConstructionError);
}

TEST(Lsm, ZeroAtOriginAndOracles) {
  const Problem pr = build_lsm(20, 4, 3);
  EXPECT_EQ(pr.f(Matrix::Zero(20, 4)), 0.0);
  EXPECT_EQ(pr.id, "lsm");
  EXPECT_DOUBLE_EQ(pr.default_beta, 0.012);
  check_oracles(pr, 5);
}

TEST(Lsm, SpectrumFollowsMetadata) {
  const Index n2 = 12, p2 = 4;
  const Problem pr = build_lsm(n2, p2, 7);
  const double a = std::stod(pr.metadata.at("a"));
  const double b = std::stod(pr.metadata.at("b"));
  EXPECT_GT(a, 1.0);
  EXPECT_GT(b, 0.0);
  EXPECT_LT(b, 2.0);
  // hessvec(X, e_i e_1^T) = 2 A e_i mu_1 recovers A column by column
  const double mu1 = 0.1 * std::exp(-1.0 / (p2 / 2));
  Matrix amat(n2, n2);
  for (Index i = 0; i < n2; ++i) {
    Matrix d = Matrix::Zero(n2, p2);
    d(i, 0) = 1.0;
    amat.col(i) = pr.hessvec(Matrix::Zero(n2, p2), d).col(0) / (2.0 * mu1);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(amat);
  std::vector<double> expect;
  for (Index i = 1; i <= n2; ++i) expect.push_back(std::pow(a, 1.0 - i) + b);
  std::sort(expect.begin(), expect.end());
  for (Index i = 0; i < n2; ++i) EXPECT_NEAR(es.eigenvalues()(i), expect[i], 1e-12);
}

TEST(Lsm, OddDimensionsRejected) {
  EXPECT_THROW(build_lsm(11, 4, 1), ConstructionError);
  EXPECT_THROW(build_lsm(12, 3, 1), ConstructionError);
}

TEST(Lsm, SeedDeterminism) {
  const Problem a = build_lsm(10, 2, 4), b = build_lsm(10, 2, 4), c = build_lsm(10, 2, 5);
  const Matrix x = random_feasible(a.spec, 1).x();
  EXPECT_EQ(a.f(x), b.f(x));
  EXPECT_NE(a.f(x), c.f(x));
}

TEST(ExtrinsicMean, SingleUnperturbedSample) {
  const Problem pr = build_extrinsic_mean(10, 3, 6, 2, 1, 3, 0.0);
  ASSERT_EQ(pr.samples.size(), 1u);
  EXPECT_LT((pr.samples[0] - *pr.known_solution).norm(), 1e-15);
  EXPECT_LT(pr.f(pr.samples[0]), 1e-28);
  EXPECT_LT(constraint(pr.spec, pr.samples[0]).norm(), 1e-10);
}

TEST(ExtrinsicMean, ZeroAtMeanAndSamplesFeasible) {
  const Problem pr = build_extrinsic_mean(20, 4, 12, 2, 100, 8);
  ASSERT_EQ(pr.samples.size(), 100u);
  Matrix mean = Matrix::Zero(20, 4);
  for (const Matrix& s : pr.samples) {
    EXPECT_LT(constraint(pr.spec, s).norm(), 1e-10);
    mean += s;
  }
  mean /= 100.0;
  EXPECT_LT(pr.f(mean), 1e-26);
  check_oracles(pr, 9);
}

TEST(ExtrinsicMean, BadSignaturesRejected) {
  EXPECT_THROW(build_extrinsic_mean(10, 3, 11, 2, 5, 1), ConstructionError);
  EXPECT_THROW(build_extrinsic_mean(10, 3, 6, 4, 5, 1), ConstructionError);
}

TEST(TensorJfd, NoiselessDiagonalizerIsExact) {
  const Problem pr = build_tensor_jfd(8, 3, 4, 5, 0.0, 2);
  ASSERT_TRUE(pr.known_solution.has_value());
  EXPECT_LT(constraint(pr.spec, *pr.known_solution).norm(), 1e-10);
  EXPECT_LT(pr.f(*pr.known_solution), 1e-24);
  const Matrix x = random_feasible(pr.spec, 3).x();
  EXPECT_GT(pr.f(x), 1e-3);
}

TEST(TensorJfd, LateralPermutationsAndSignsStayExact) {
  const Index n = 6, p = 3, l = 2;
  const Problem pr = build_tensor_jfd(n, p, l, 4, 0.0, 4);
  Tensor3 xh = diag_fold(*pr.known_solution, n, p, l);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(p);
  perm.indices() << 2, 0, 1;
  for (Index k = 0; k < l; ++k) {
    Matrix s = xh.slice(k) * perm;
    s.col(1) *= -1.0;
    xh.slice(k) = s;
  }
  EXPECT_LT(pr.f(diag_unfold(xh)), 1e-24);
}

TEST(TensorJfd, MatrixCaseSingleSample) {
  // l = 1, N = 1: the spectral frame of the single sample diagonalizes it
  const Problem pr = build_tensor_jfd(5, 5, 1, 1, 0.0, 6);
  const Matrix& u = *pr.known_solution;
  EXPECT_LT((u.transpose() * u - Matrix::Identity(5, 5)).norm(), 1e-12);
  EXPECT_LT(pr.f(u), 1e-24);
  // swapping two columns keeps the sample diagonal
  Matrix v = u;
  v.col(0).swap(v.col(3));
  EXPECT_LT(pr.f(v), 1e-24);
}

TEST(TensorJfd, NoisyOracles) {
  const Problem pr = build_tensor_jfd(7, 2, 3, 3, 0.5, 5);
  EXPECT_GT(pr.f(*pr.known_solution), 0.0);
  check_oracles(pr, 11);
}

TEST(TensorJfd, IdentityTransformVariant) {
  const Problem pr = build_tensor_jfd_with(6, 2, 3, 3, 0.0, 12, TransformMatrix::identity(3));
  EXPECT_LT(pr.f(*pr.known_solution), 1e-24);
  check_oracles(pr, 13);
}

TEST(TensorJfd, BadArgumentsRejected) {
  EXPECT_THROW(build_tensor_jfd(3, 4, 2, 1, 0.0, 1), ConstructionError);
  EXPECT_THROW(build_tensor_jfd(4, 2, 2, 1, -1.0, 1), ConstructionError);
}

TEST(SelfTest, WrongGradientIsCaught) {
  Problem pr = build_random_quadratic(ManifoldSpec::stiefel(6, 2), 1);
  const auto g = pr.grad;
  pr.grad = [g](const Matrix& x) -> Matrix { return 1.01 * g(x); };
  EXPECT_THROW(self_test(pr), ConstructionError);
}

TEST(Zero, AllOraclesVanish) {
  const Problem pr = build_zero(ManifoldSpec::hyperbolic_random(5, 2, 1));
  const Matrix x = random_feasible(pr.spec, 2).x();
  EXPECT_EQ(pr.f(x), 0.0);
  EXPECT_EQ(pr.grad(x).norm(), 0.0);
  EXPECT_EQ(pr.hessvec(x, x).norm(), 0.0);
}
