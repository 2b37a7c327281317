#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "gocdf/manifold.hpp"
#include "gocdf/problems.hpp"
#include "gocdf/selftest.hpp"

using namespace gocdf;

namespace {

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

// Brute-force Theta: least squares over T in G of ||phi(X) Phi(T) - D||, with the
// design matrix built column by column from the canonical group basis.
Matrix theta_oracle(const ManifoldSpec& spec, const FeasiblePoint& x, const Matrix& d) {
  const auto basis = spec.group_basis();
  Matrix design(d.size(), static_cast<Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) design.col(j) = vec(x.phi_x() * spec.gen_sym(basis[j]));
  const Vector t = design.completeOrthogonalDecomposition().solve(vec(d));
  Matrix tm = Matrix::Zero(spec.cols(), spec.cols());
  for (std::size_t j = 0; j < basis.size(); ++j) tm += t(j) * basis[j];
  return spec.gen_sym(tm);
}

class EachSpec : public ::testing::TestWithParam<int> {
 protected:
  ManifoldSpec spec() const { return sample_specs()[GetParam()]; }
};

std::string spec_name(const ::testing::TestParamInfo<int>& info) {
  std::string n = sample_specs()[info.param].name();
  for (char& c : n)
    if (c == '-') c = '_';
  return n;
}

}  // namespace

TEST(Constraint, StiefelCanonicalPointIsFeasible) {
  const ManifoldSpec s = ManifoldSpec::stiefel(5, 2);
  EXPECT_EQ(constraint(s, Matrix::Identity(5, 2)).norm(), 0.0);
}

TEST(Constraint, SymplecticEmbeddedPoint) {
  // columns e_1 and e_{n+1} satisfy X^T J_{2n} X = J_{2p}
  const ManifoldSpec s = ManifoldSpec::symplectic_stiefel(6, 2);
  Matrix x = Matrix::Zero(6, 2);
  x(0, 0) = 1.0;
  x(3, 1) = 1.0;
  EXPECT_LT(constraint(s, x).norm(), 1e-15);
}

TEST(Constraint, StiefelScalarCase) {
  const ManifoldSpec s = ManifoldSpec::stiefel(2, 1);
  Matrix x = Matrix::Zero(2, 1);
  x(0, 0) = 2.0;
  EXPECT_DOUBLE_EQ(constraint(s, x)(0, 0), 3.0);
}

TEST(GenSym, StiefelDoublesSymmetric) {
  const ManifoldSpec s = ManifoldSpec::stiefel(4, 3);
  Rng r(1);
  const Matrix t = sym(r.gaussian(3, 3));
  EXPECT_LT((gen_sym(s, t) - 2.0 * t).norm(), 1e-15);
}

TEST(GenSym, IndefiniteSignMatrix) {
  const ManifoldSpec s = ManifoldSpec::indefinite_diagonal(4, 3, 2, 1);
  Matrix j = Matrix::Zero(3, 3);
  j.diagonal() = s.signs();
  EXPECT_LT((gen_sym(s, j) - 2.0 * j).norm(), 1e-15);
}

TEST(ManifoldSpec, RejectsBadDimensions) {
  EXPECT_THROW(ManifoldSpec::stiefel(2, 3), ConstructionError);
  EXPECT_THROW(ManifoldSpec::symplectic_stiefel(5, 2), ConstructionError);
  EXPECT_THROW(parse_manifold_kind("grassmann"), ConstructionError);
}

TEST(ManifoldSpec, NamesRoundTrip) {
  for (const ManifoldSpec& s : sample_specs()) EXPECT_EQ(parse_manifold_kind(s.name()), s.kind());
}

TEST(ManifoldSpec, TensorSubspaceEnforced) {
  const ManifoldSpec s = ManifoldSpec::tensor_stiefel(3, 2, 2, TransformMatrix::dct(2));
  Matrix x = Matrix::Zero(6, 4);
  x(0, 3) = 1.0;
  EXPECT_THROW(s.require_in_subspace(x, "test"), SubspaceViolation);
  EXPECT_THROW(constraint(s, Matrix::Zero(5, 4)), DimensionMismatch);
}

TEST(FeasiblePoint, RejectsInfeasible) {
  const ManifoldSpec s = ManifoldSpec::stiefel(4, 2);
  EXPECT_THROW(FeasiblePoint(s, 2.0 * Matrix::Identity(4, 2)), InfeasiblePoint);
}

TEST(TangentTest, HandCases) {
  const ManifoldSpec s = ManifoldSpec::stiefel(2, 1);
  Matrix e1 = Matrix::Zero(2, 1), e2 = Matrix::Zero(2, 1);
  e1(0, 0) = 1.0;
  e2(1, 0) = 1.0;
  const FeasiblePoint x(s, e1);
  EXPECT_TRUE(tangent_test(s, x, Matrix::Zero(2, 1)).tangent);
  EXPECT_EQ(tangent_test(s, x, Matrix::Zero(2, 1)).residual, 0.0);
  EXPECT_TRUE(tangent_test(s, x, e2).tangent);
  const ManifoldSpec s3 = ManifoldSpec::stiefel(5, 3);
  const FeasiblePoint x3(s3, Matrix::Identity(5, 3));
  const TangentCheck tc = tangent_test(s3, x3, x3.x());
  EXPECT_FALSE(tc.tangent);
  EXPECT_NEAR(tc.residual, 2.0 * std::sqrt(3.0), 1e-14);
}

TEST(Theta, StiefelClosedFormMatchesGeneric) {
  const ManifoldSpec s = ManifoldSpec::stiefel(5, 2);
  const FeasiblePoint x = random_feasible(s, 4);
  Rng r(5);
  const Matrix d = r.gaussian(5, 2);
  const Matrix expect = 0.5 * (x.x().transpose() * d + d.transpose() * x.x());
  EXPECT_LT((theta_lstsq(s, x, d, ThetaMethod::Generic) - expect).norm(), 1e-12);
  EXPECT_LT((theta_lstsq(s, x, d) - expect).norm(), 1e-14);
}

TEST(Theta, SymmetrizationRestrictedToStiefel) {
  const ManifoldSpec s = ManifoldSpec::symplectic_stiefel(6, 2);
  const FeasiblePoint x = random_feasible(s, 1);
  EXPECT_THROW(theta_lstsq(s, x, x.x(), ThetaMethod::Symmetrization), Unsupported);
  EXPECT_THROW(theta_lstsq(s, x, x.x(), ThetaMethod::Lyapunov), Unsupported);
}

TEST_P(EachSpec, S1BasisRoundTrip) {
  const ManifoldSpec s = spec();
  Rng r(6);
  Matrix t = Matrix::Zero(s.cols(), s.cols());
  for (const Matrix& e : s.group_basis()) t += r.normal() * e;
  const Matrix phi_t = s.gen_sym(t);
  Matrix back = Matrix::Zero(s.cols(), s.cols());
  for (const Matrix& b : s.s1_basis()) back += inner(b, phi_t) * b;
  EXPECT_LT((back - phi_t).norm(), 1e-12 * std::max(1.0, phi_t.norm()));
}

TEST_P(EachSpec, ThetaExactRecovery) {
  const ManifoldSpec s = spec();
  const FeasiblePoint x = random_feasible(s, 8);
  Rng r(9);
  Matrix t = Matrix::Zero(s.cols(), s.cols());
  for (const Matrix& e : s.group_basis()) t += r.normal() * e;
  const Matrix s0 = s.gen_sym(t);
  const Matrix got = theta_lstsq(s, x, x.phi_x() * s0);
  EXPECT_LT((got - s0).norm(), 1e-10 * s0.norm());
}

TEST_P(EachSpec, ThetaMatchesKroneckerOracle) {
  const ManifoldSpec s = spec();
  Rng r(10);
  for (int k = 0; k < 3; ++k) {
    const FeasiblePoint x = random_feasible(s, 20 + k);
    const Matrix d = s.subspace_project(r.gaussian(s.rows(), s.cols()));
    const Matrix expect = theta_oracle(s, x, d);
    EXPECT_LT((theta_lstsq(s, x, d, ThetaMethod::Generic) - expect).norm(), 1e-10 * expect.norm());
    EXPECT_LT((theta_lstsq(s, x, d) - expect).norm(), 1e-10 * expect.norm());
  }
}

TEST_P(EachSpec, ProjectionFixesTangentAndKillsNormal) {
  const ManifoldSpec s = spec();
  const FeasiblePoint x = random_feasible(s, 30);
  const Matrix z = random_tangent(s, x, 31);
  EXPECT_TRUE(tangent_test(s, x, z).tangent);
  EXPECT_LT((project_tangent(s, x, z) - z).norm(), 1e-10);
  Rng r(32);
  Matrix t = Matrix::Zero(s.cols(), s.cols());
  for (const Matrix& e : s.group_basis()) t += r.normal() * e;
  const Matrix normal = x.phi_x() * s.gen_sym(t);
  EXPECT_LT(project_tangent(s, x, normal).norm(), 1e-10 * normal.norm());
  EXPECT_LT(riemannian_gradient(s, x, normal).norm(), 1e-10 * normal.norm());
}

TEST(Projection, StiefelClosedForm) {
  const ManifoldSpec s = ManifoldSpec::stiefel(5, 2);
  const FeasiblePoint x = random_feasible(s, 3);
  Rng r(4);
  const Matrix d = r.gaussian(5, 2);
  EXPECT_LT((project_tangent(s, x, d) - (d - x.x() * sym(x.x().transpose() * d))).norm(), 1e-13);
}

TEST(RiemannianGradient, IndefiniteDistance) {
  const ManifoldSpec s = ManifoldSpec::indefinite_diagonal(5, 3, 2, 1);
  const FeasiblePoint x = random_feasible(s, 12);
  Rng r(13);
  const Matrix a = r.gaussian(8, 3);
  const Problem pr = build_quadratic(s, 2.0 * Matrix::Identity(8, 8), Matrix::Identity(3, 3), -2.0 * a,
                                     "distance", 0, false);
  EXPECT_LT((pr.grad(x.x()) - 2.0 * x.x() + 2.0 * a).norm(), 1e-12);
  EXPECT_LT((riemannian_gradient(s, x, pr.grad(x.x())) - project_tangent(s, x, 2.0 * (x.x() - a))).norm(), 1e-12);
}

TEST_P(EachSpec, HessianMatchesRetractedDifferences) {
  const ManifoldSpec s = spec();
  const Problem pr = build_random_quadratic(s, 40, 0.3);
  const FeasiblePoint x = random_feasible(s, 41);
  const Matrix z = random_tangent(s, x, 42);
  auto rgrad = [&](const FeasiblePoint& y) { return riemannian_gradient(s, y, pr.grad(y.x())); };
  const double t = 1e-4;
  const FeasiblePoint yp = retract(s, x, t * z, 1e-8);
  const FeasiblePoint ym = retract(s, x, -t * z, 1e-8);
  const Matrix fd = project_tangent(s, x, (rgrad(yp) - rgrad(ym)) / (2 * t));
  const Matrix h = riemannian_hessvec(s, x, z, pr.grad(x.x()), pr.hessvec(x.x(), z));
  EXPECT_LT((fd - h).norm(), 1e-5 * std::max(1.0, h.norm()));
}

TEST_P(EachSpec, HessianIsSymmetricOnTangentSpace) {
  const ManifoldSpec s = spec();
  const Problem pr = build_random_quadratic(s, 50, 0.3);
  const FeasiblePoint x = random_feasible(s, 51);
  const Matrix g = pr.grad(x.x());
  for (int k = 0; k < 10; ++k) {
    const Matrix z1 = random_tangent(s, x, 60 + 2 * k);
    const Matrix z2 = random_tangent(s, x, 61 + 2 * k);
    const double a = inner(z1, riemannian_hessvec(s, x, z2, g, pr.hessvec(x.x(), z2)));
    const double b = inner(z2, riemannian_hessvec(s, x, z1, g, pr.hessvec(x.x(), z1)));
    EXPECT_NEAR(a, b, 1e-10 * std::max(1.0, std::abs(a)));
  }
}

TEST(RiemannianHessian, ZeroObjective) {
  const ManifoldSpec s = ManifoldSpec::stiefel(5, 2);
  const FeasiblePoint x = random_feasible(s, 1);
  const Matrix z = random_tangent(s, x, 2);
  EXPECT_EQ(riemannian_hessvec(s, x, z, Matrix::Zero(5, 2), Matrix::Zero(5, 2)).norm(), 0.0);
}

TEST_P(EachSpec, RetractionIsFeasibleAndFirstOrder) {
  const ManifoldSpec s = spec();
  const FeasiblePoint x = random_feasible(s, 70);
  const Matrix z = random_tangent(s, x, 71);
  EXPECT_EQ(retract(s, x, Matrix::Zero(s.rows(), s.cols())).x(), x.x());
  double prev = 0.0;
  for (double t : {1e-2, 1e-3}) {
    const FeasiblePoint y = retract(s, x, t * z);
    EXPECT_LT(y.feasibility(), 1e-10);
    const double err = (y.x() - x.x() - t * z).norm();
    if (prev > 0.0) EXPECT_LT(err, 0.02 * prev);  // O(t^2)
    prev = err;
  }
}

TEST(Retraction, StiefelColumnsOrthonormal) {
  const ManifoldSpec s = ManifoldSpec::stiefel(8, 3);
  const FeasiblePoint x = random_feasible(s, 5);
  const FeasiblePoint y = retract(s, x, 0.7 * random_tangent(s, x, 6));
  EXPECT_LT((y.x().transpose() * y.x() - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(Retraction, TensorGramThroughLProduct) {
  const TransformMatrix tm = TransformMatrix::dct(3);
  const ManifoldSpec s = ManifoldSpec::tensor_stiefel(5, 2, 3, tm);
  const FeasiblePoint x = random_feasible(s, 7);
  const FeasiblePoint y = retract(s, x, 0.5 * random_tangent(s, x, 8));
  const Tensor3 q = mode3_product(diag_fold(y.x(), 5, 2, 3), tm.inverse());
  EXPECT_LT((lproduct(q.transpose(), q, tm) - identity_tensor(2, tm)).norm(), 1e-10);
}

TEST_P(EachSpec, RandomPointsAndTransport) {
  const ManifoldSpec s = spec();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FeasiblePoint x = random_feasible(s, seed);
    EXPECT_LT(constraint(s, x.x()).norm(), 1e-10);
    const Matrix z = random_tangent(s, x, seed + 100);
    EXPECT_TRUE(tangent_test(s, x, z).tangent);
    EXPECT_NEAR(z.norm(), 1.0, 1e-12);
    const FeasiblePoint y = retract(s, x, 0.1 * z);
    EXPECT_TRUE(tangent_test(s, y, vector_transport(s, y, z)).tangent);
  }
  EXPECT_EQ(random_feasible(s, 3).x(), random_feasible(s, 3).x());
}

INSTANTIATE_TEST_SUITE_P(Manifolds, EachSpec, ::testing::Range(0, 6), spec_name);
