#include "condconf/errors.hpp"
#include "condconf/qr_solver.hpp"
#include "condconf/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace condconf;

namespace {

QRSolution solve(const Matrix& x, const Vector& s, const Vector& a) {
  return solve_pinball_qr(FeatureMatrix(x), s, LevelVector(a));
}

void expect_dual_invariants(const Matrix& x, const Vector& s, const Vector& a, const QRSolution& sol) {
  const Index n = x.rows();
  ASSERT_EQ(static_cast<Index>(sol.basis.size()), x.cols());
  const Vector r = s - x * sol.beta;
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  for (Index i = 0; i < n; ++i) {
    EXPECT_GE(sol.duals[i], -a[i] - 1e-9);
    EXPECT_LE(sol.duals[i], 1 - a[i] + 1e-9);
    if (r[i] > 1e-9 * scale) EXPECT_NEAR(sol.duals[i], 1 - a[i], 1e-9);
    if (r[i] < -1e-9 * scale) EXPECT_NEAR(sol.duals[i], -a[i], 1e-9);
  }
  for (Index b : sol.basis) EXPECT_NEAR(r[b], 0.0, 1e-9 * scale);
  const Vector stat = x.transpose() * sol.duals;
  EXPECT_LE(stat.cwiseAbs().maxCoeff(), 1e-7 * static_cast<double>(n));
}

}  // namespace

TEST(PinballQR, MedianOfThree) {
  Vector s(3);
  s << 1, 2, 3;
  const auto sol = solve(Matrix::Ones(3, 1), s, Vector::Constant(3, 0.5));
  EXPECT_NEAR(oracle::grid_minimize_constant(s, 0.5), 2.0, 1e-3);
  EXPECT_DOUBLE_EQ(sol.beta[0], 2.0);
}

TEST(PinballQR, ConstantScoresFitExactly) {
  Rng rng = make_rng(3);
  Vector a(5);
  for (Index i = 0; i < 5; ++i) a[i] = uniform(rng, 0.05, 0.95);
  const auto sol = solve(Matrix::Ones(5, 1), Vector::Constant(5, 4.25), a);
  EXPECT_DOUBLE_EQ(sol.beta[0], 4.25);
}

TEST(PinballQR, UpperQuantileOfNine) {
  Vector s(9);
  for (int i = 0; i < 9; ++i) s[i] = i + 1;
  const auto sol = solve(Matrix::Ones(9, 1), s, Vector::Constant(9, 0.1));
  EXPECT_NEAR(oracle::grid_minimize_constant(s, 0.1), 9.0, 1e-3);
  EXPECT_DOUBLE_EQ(sol.beta[0], 9.0);
}

TEST(PinballQR, MatchesVertexEnumeration) {
  Rng rng = make_rng(11);
  for (int t = 0; t < 200; ++t) {
    const Index d = 1 + t % 3;
    const Index n = d + 3 + static_cast<Index>(rng() % 8);
    const Matrix x = oracle::random_design(rng, n, d);
    Vector s(n), a(n);
    for (Index i = 0; i < n; ++i) {
      s[i] = standard_normal(rng);
      a[i] = uniform(rng, 0.05, 0.95);
    }
    const auto sol = solve(x, s, a);
    const auto ref = oracle::brute_force_qr(x, s, a);
    EXPECT_NEAR(oracle::pinball_objective(x, s, a, sol.beta), ref.objective, 1e-9 * (1 + ref.objective))
        << "instance " << t;
    EXPECT_NEAR(sol.objective, ref.objective, 1e-9 * (1 + ref.objective));
  }
}

TEST(PinballQR, DualInvariantsOnRandomInstances) {
  Rng rng = make_rng(12);
  for (int t = 0; t < 100; ++t) {
    const Index d = 1 + t % 4;
    const Index n = 20 + static_cast<Index>(rng() % 100);
    const Matrix x = oracle::random_design(rng, n, d);
    Vector s(n), a(n);
    for (Index i = 0; i < n; ++i) {
      s[i] = x.row(i).sum() + standard_normal(rng);
      a[i] = uniform(rng, 0.05, 0.95);
    }
    expect_dual_invariants(x, s, a, solve(x, s, a));
  }
}

TEST(PinballQR, AffineEquivariance) {
  Rng rng = make_rng(13);
  for (int t = 0; t < 30; ++t) {
    const Index n = 40, d = 3;
    const Matrix x = oracle::random_design(rng, n, d);
    Vector s(n);
    for (Index i = 0; i < n; ++i) s[i] = standard_normal(rng);
    const Vector a = Vector::Constant(n, 0.2);
    const double scale = uniform(rng, 0.5, 3.0), shift = uniform(rng, -2.0, 2.0);
    const auto base = solve_pinball_qr(FeatureMatrix(x, 0), s, LevelVector(a));
    const Vector moved = (scale * s).array() + shift;
    const auto sol = solve_pinball_qr(FeatureMatrix(x, 0), moved, LevelVector(a));
    EXPECT_EQ(sol.basis, base.basis);
    const Vector expect = ((x * base.beta) * scale).array() + shift;
    EXPECT_LE(((x * sol.beta) - expect).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(PinballQR, WarmStartReachesSameOptimum) {
  Rng rng = make_rng(14);
  const Index n = 80, d = 3;
  const Matrix x = oracle::random_design(rng, n, d);
  Vector s(n);
  for (Index i = 0; i < n; ++i) s[i] = standard_normal(rng);
  const Vector a = Vector::Constant(n, 0.1);
  const auto cold = solve(x, s, a);
  SolveOptions opts;
  opts.warm_basis = {0, 1, 2};
  const auto warm = solve_pinball_qr(FeatureMatrix(x), s, LevelVector(a), opts);
  EXPECT_NEAR(warm.objective, cold.objective, 1e-10);
}

TEST(PinballQR, RejectsNonFiniteInput) {
  Vector s(3);
  s << 1, std::nan(""), 3;
  EXPECT_THROW(solve(Matrix::Ones(3, 1), s, Vector::Constant(3, 0.5)), ValidationError);
  s[1] = 2;
  Matrix x = Matrix::Ones(3, 1);
  x(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(solve(x, s, Vector::Constant(3, 0.5)), ValidationError);
}

TEST(PinballQR, RejectsLevelsOutsideUnitInterval) {
  EXPECT_THROW(LevelVector::constant(3, 1.0), ValidationError);
  EXPECT_THROW(LevelVector::constant(3, 0.0), ValidationError);
}

TEST(PinballQR, RankDeficientDesignIsDegenerate) {
  Matrix x(6, 2);
  x.col(0).setOnes();
  x.col(1).setOnes();
  Vector s(6);
  s << 1, 2, 3, 4, 5, 6;
  EXPECT_THROW(solve(x, s, Vector::Constant(6, 0.5)), DegenerateDesignError);
}

TEST(Dither, ZeroMagnitudeRejected) {
  EXPECT_THROW(dither(Vector::Ones(3), 0.0, 1), ValidationError);
}

TEST(Dither, DeterministicPerSeed) {
  const Vector s = Vector::Ones(4);
  EXPECT_EQ(dither(s, 1e-9, 42), dither(s, 1e-9, 42));
  EXPECT_NE(dither(s, 1e-9, 42), dither(s, 1e-9, 43));
}

TEST(Dither, BreaksTiesOverManySeeds) {
  const Vector s = Vector::Ones(3);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Vector d = dither(s, 1e-9, seed);
    std::set<double> distinct(d.data(), d.data() + d.size());
    ASSERT_EQ(distinct.size(), 3u) << "seed " << seed;
    EXPECT_LE((d - s).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(BasisInterpolator, Identity) {
  Vector s(2);
  s << 1.5, -2.0;
  EXPECT_EQ(basis_interpolator(Matrix::Identity(2, 2), s), s);
}

TEST(BasisInterpolator, Scalar) {
  EXPECT_DOUBLE_EQ(basis_interpolator(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 6.0))[0], 3.0);
}

TEST(BasisInterpolator, RandomWellConditioned) {
  Rng rng = make_rng(21);
  Matrix m(4, 4);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) m(i, j) = standard_normal(rng) + (i == j ? 4.0 : 0.0);
  Vector s(4);
  for (Index i = 0; i < 4; ++i) s[i] = standard_normal(rng);
  const Vector beta = basis_interpolator(m, s);
  EXPECT_LE((m * beta - s).norm(), 1e-10);
}

TEST(BasisInterpolator, SingularThrows) {
  EXPECT_THROW(basis_interpolator(Matrix::Ones(2, 2), Vector::Ones(2)), SingularBasisError);
}
