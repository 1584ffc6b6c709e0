#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oadp/linalg.hpp"
#include "oadp/random.hpp"
#include "oadp/riccati.hpp"

namespace oadp {
namespace {

using testing::eye;

Matrix random_symmetric(Rng& rng, Index n) {
  const Matrix g = rng.gaussian(n, n);
  return 0.5 * (g + g.transpose());
}

// Shifted so every eigenvalue has real part <= -0.5.
Matrix random_stable(Rng& rng, Index n) {
  Matrix f = rng.gaussian(n, n);
  f -= (spectral_abscissa(f) + 0.5) * eye(n);
  return f;
}

TEST(Vecv, TwoVector) {
  Vector b(2);
  b << 1, 2;
  Vector want(3);
  want << 1, 2, 4;
  EXPECT_EQ(vecv(b), want);
}

TEST(Vecv, ZeroVector) {
  EXPECT_TRUE(vecv(Vector::Zero(5)).isZero(0.0));
  EXPECT_EQ(vecv(Vector::Zero(5)).size(), 15);
}

TEST(Vecv, MatchesOuterProductUpperTriangle) {
  Rng rng(11);
  const Vector b = rng.gaussian(4);
  const Matrix outer = b * b.transpose();
  const Vector v = vecv(b);
  Index k = 0;
  for (Index i = 0; i < 4; ++i)
    for (Index j = i; j < 4; ++j) EXPECT_DOUBLE_EQ(v(k++), outer(i, j));
}

TEST(Vecv, RejectsEmpty) { EXPECT_THROW(vecv(Vector()), Error); }

TEST(Vecs, Identity) {
  Vector want(3);
  want << 1, 0, 1;
  EXPECT_EQ(vecs(eye(2)), want);
}

TEST(Vecs, DoublesOffDiagonal) {
  Matrix p(2, 2);
  p << 3, -1.5, -1.5, 7;
  Vector want(3);
  want << 3, -3, 7;
  EXPECT_EQ(vecs(p), want);
}

TEST(Vecs, RoundTripsForDimensionsOneToTwelve) {
  Rng rng(12);
  for (Index n = 1; n <= 12; ++n) {
    const Matrix p = random_symmetric(rng, n);
    EXPECT_EQ(unvecs(vecs(p)), p) << "n = " << n;
    const Vector v = rng.gaussian(packed_size(n));
    EXPECT_TRUE(vecs(unvecs(v)).isApprox(v, 1e-15)) << "n = " << n;
  }
}

TEST(Vecs, RejectsNonSquare) { EXPECT_THROW(vecs(Matrix::Zero(2, 3)), Error); }

TEST(Vecs, RejectsVisibleAsymmetry) {
  Matrix p = eye(3);
  p(0, 2) = 1e-3;
  EXPECT_THROW(vecs(p), Error);
}

TEST(Vecs, AveragesRoundoffAsymmetry) {
  Matrix p = eye(2);
  p(0, 1) = 1e-12;
  EXPECT_DOUBLE_EQ(vecs(p)(1), 1e-12);
}

TEST(Unvecs, RejectsNonTriangularLength) { EXPECT_THROW(unvecs(Vector::Zero(4)), Error); }

TEST(QuadraticForm, PackingsReproduceXtPx) {
  Rng rng(13);
  for (Index n = 1; n <= 12; ++n) {
    const Matrix p = random_symmetric(rng, n);
    const Vector x = rng.gaussian(n);
    const double direct = x.dot(p * x);
    EXPECT_NEAR(vecv(x).dot(vecs(p)), direct, 1e-12 * (1.0 + std::abs(direct))) << "n = " << n;
  }
}

TEST(Duplication, ScalarCase) { EXPECT_EQ(duplication_matrix(1), Matrix::Ones(1, 1)); }

TEST(Duplication, TwoByTwo) {
  Matrix want(4, 3);
  want << 1, 0, 0, 0, 0.5, 0, 0, 0.5, 0, 0, 0, 1;
  EXPECT_EQ(duplication_matrix(2), want);
}

TEST(Duplication, MapsVecsToVec) {
  Rng rng(14);
  for (Index n = 1; n <= 12; ++n) {
    const Matrix p = random_symmetric(rng, n);
    EXPECT_LT((duplication_matrix(n) * vecs(p) - vec(p)).norm(), 1e-12) << "n = " << n;
  }
}

TEST(Kron, IdentityTimesSelector) {
  Vector b(2);
  b << 0, 1;
  Matrix want = Matrix::Zero(4, 2);
  want(1, 0) = 1;
  want(3, 1) = 1;
  EXPECT_EQ(kron(eye(2), Matrix(b)), want);
}

TEST(Kron, MixedProduct) {
  Rng rng(15);
  const Matrix a = rng.gaussian(2, 3), b = rng.gaussian(3, 2);
  const Matrix c = rng.gaussian(3, 2), d = rng.gaussian(2, 4);
  EXPECT_TRUE((kron(a, b) * kron(c, d)).isApprox(kron(Matrix(a * c), Matrix(b * d)), 1e-12));
}

TEST(Kron, ScalarFactor) {
  Rng rng(16);
  const Matrix m = rng.gaussian(3, 2);
  EXPECT_TRUE(kron(Matrix::Constant(1, 1, 2.5), m).isApprox(2.5 * m));
}

TEST(Kron, VectorIndexing) {
  Vector a(2), b(3);
  a << 2, 5;
  b << 1, 10, 100;
  const Vector k = kron(a, b);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j) EXPECT_EQ(k(i * 3 + j), a(i) * b(j));
}

TEST(Kron, QuadraticIntegrandWithVec) {
  // (x (x) x)' vec(W) = x'Wx for any W
  Rng rng(17);
  const Vector x = rng.gaussian(4);
  const Matrix w = rng.gaussian(4, 4);
  EXPECT_NEAR(kron(x, x).dot(vec(w)), x.dot(w * x), 1e-12);
}

TEST(Lyapunov, DiagonalCase) {
  EXPECT_TRUE(solve_lyapunov(-eye(3), 2.0 * eye(3)).isApprox(eye(3), 1e-14));
}

TEST(Lyapunov, MatchesFirstKleinmanIterate) {
  const auto pl = testing::power_plant();
  const AreProblem prob = testing::output_problem(pl, eye(1), eye(1));
  const Matrix x = solve_lyapunov(pl.A, prob.Q);
  const IterateHistory h = kleinman_pi(prob, Matrix::Zero(1, 4), 1e-9, 1);
  EXPECT_TRUE(x.isApprox(h.records.front().P, 1e-12));
  EXPECT_LT(norm2(pl.A.transpose() * x + x * pl.A + prob.Q), 1e-9);
}

TEST(Lyapunov, ResidualOnRandomStableMatrices) {
  Rng rng(18);
  for (Index n = 1; n <= 12; ++n) {
    const Matrix f = random_stable(rng, n);
    const Matrix g = rng.gaussian(n, n);
    const Matrix w = g * g.transpose();
    const Matrix x = solve_lyapunov(f, w);
    EXPECT_LE(norm2(f.transpose() * x + x * f + w), 1e-9 * (1.0 + norm2(w))) << "n = " << n;
    EXPECT_EQ(x, x.transpose());
  }
}

TEST(Lyapunov, SpectrumConflict) {
  Matrix f = Matrix::Zero(2, 2);
  f(0, 1) = 1.0;
  try {
    solve_lyapunov(f, eye(2));
    FAIL() << "expected a spectrum conflict";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("spectrum conflict"), std::string::npos);
  }
}

TEST(LeastSquares, IdentityDesign) {
  Rng rng(19);
  const Vector b = rng.gaussian(6);
  const auto r = least_squares(eye(6), b);
  EXPECT_TRUE(r.solution.isApprox(b, 1e-15));
  EXPECT_EQ(r.rank, 6);
}

TEST(LeastSquares, RecoversGeneratorOfConsistentSystem) {
  Rng rng(20);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = rng.gaussian(40, 12);
    const Vector x0 = rng.gaussian(12);
    for (bool eq : {true, false}) {
      const auto r = least_squares(a, a * x0, {1e-9, eq});
      EXPECT_LE((r.solution - x0).norm(), 1e-10 * x0.norm());
      EXPECT_EQ(r.rank, 12);
    }
  }
}

TEST(LeastSquares, ReportsRankDeficiency) {
  Rng rng(21);
  const Matrix u = rng.gaussian(30, 3), v = rng.gaussian(3, 8);
  const Matrix a = u * v;  // rank 3
  const Vector b = rng.gaussian(30);
  const auto r = least_squares(a, b, {1e-9, false});
  EXPECT_EQ(r.rank, 3);
  // normal equations hold for the minimum-norm solution
  EXPECT_LE((a.transpose() * (a * r.solution - b)).norm(), 1e-9 * (1.0 + a.norm() * b.norm()));
  // and it has no component in the null space
  const Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  EXPECT_LE((svd.matrixV().rightCols(5).transpose() * r.solution).norm(), 1e-9);
}

TEST(LeastSquares, EquilibrationHandlesBadlyScaledColumns) {
  Rng rng(22);
  Matrix a = rng.gaussian(50, 6);
  a.col(0) *= 1e-6;
  a.col(3) *= 1e4;
  const Vector x0 = rng.gaussian(6);
  const auto r = least_squares(a, a * x0);
  EXPECT_EQ(r.rank, 6);
  EXPECT_LE((r.solution - x0).norm(), 1e-4 * x0.norm());
  // the raw spread of column norms alone would cost a rank
  EXPECT_EQ(least_squares(a, a * x0, {1e-9, false}).rank, 5);
}

TEST(NumericalRank, Identity) { EXPECT_EQ(numerical_rank(eye(5)), 5); }

TEST(NumericalRank, OuterProduct) {
  Rng rng(23);
  EXPECT_EQ(numerical_rank(rng.gaussian(6) * rng.gaussian(4).transpose()), 1);
}

TEST(NumericalRank, ZeroMatrix) { EXPECT_EQ(numerical_rank(Matrix::Zero(3, 3)), 0); }

TEST(Norm2, IsLargestSingularValue) {
  Matrix a(2, 2);
  a << 3, 0, 0, -4;
  EXPECT_DOUBLE_EQ(norm2(a), 4.0);
}

}  // namespace
}  // namespace oadp
