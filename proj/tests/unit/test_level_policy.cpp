#include "condconf/errors.hpp"
#include "condconf/level_policy.hpp"
#include "condconf/rng.hpp"

#include <gtest/gtest.h>

using namespace condconf;

namespace {

// smallest grid level from which every larger level passes
double scan_oracle(const std::vector<double>& grid, const std::vector<int>& q) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    bool all = true;
    for (std::size_t j = k; j < grid.size(); ++j) all = all && q[j] == 1;
    if (all) return grid[k];
  }
  return 1.0;
}

LevelEstimationData constant_measure_data(Index n, double value, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  LevelEstimationData d;
  d.features = FeatureMatrix::intercept_only(n);
  d.scores.resize(n);
  for (Index i = 0; i < n; ++i) d.scores[i] = standard_normal(rng);
  d.measure = [value](Index, double) { return value; };
  return d;
}

}  // namespace

TEST(AlphaStar, AlwaysMetGivesGridMinimum) {
  const auto grid = default_alpha_grid();
  EXPECT_DOUBLE_EQ(alpha_star(grid, std::vector<int>(grid.size(), 1)), 0.01);
}

TEST(AlphaStar, ScanFromTheTop) {
  const std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const std::vector<int> q = {0, 0, 1, 0, 1, 1};
  EXPECT_DOUBLE_EQ(scan_oracle(grid, q), 0.5);
  EXPECT_DOUBLE_EQ(alpha_star(grid, q), 0.5);
}

TEST(AlphaStar, NeverMetGivesOne) {
  const auto grid = default_alpha_grid();
  EXPECT_EQ(alpha_star(grid, std::vector<int>(grid.size(), 0)), 1.0);
}

TEST(AlphaStar, RejectsEmptyGrid) {
  EXPECT_THROW(alpha_star({}, {}), ValidationError);
}

TEST(AlphaStar, RaisingAnEntryNeverRaisesTheLevel) {
  Rng rng = make_rng(41);
  const auto grid = even_alpha_grid(12);
  for (int t = 0; t < 500; ++t) {
    std::vector<int> q(grid.size());
    for (auto& v : q) v = uniform01(rng) < 0.6;
    const double before = alpha_star(grid, q);
    EXPECT_EQ(before, scan_oracle(grid, q));
    const std::size_t k = rng() % q.size();
    q[k] = 1;
    EXPECT_LE(alpha_star(grid, q), before);
  }
}

TEST(AlphaGrid, DefaultAndEven) {
  const auto g = default_alpha_grid();
  ASSERT_EQ(g.size(), 99u);
  EXPECT_DOUBLE_EQ(g.front(), 0.01);
  EXPECT_DOUBLE_EQ(g.back(), 0.99);
  const auto e = even_alpha_grid(50);
  ASSERT_EQ(e.size(), 50u);
  EXPECT_DOUBLE_EQ(e.front(), 1.0 / 51);
  EXPECT_LT(e.back(), 1.0);
}

TEST(LevelFunction, OutputsAreClamped) {
  LevelFunction f;
  f.coefficients = Vector(2);
  f.coefficients << 0.3, 1.0;
  f.lo = 0.1;
  f.hi = 0.5;
  Rng rng = make_rng(42);
  Matrix x(200, 2);
  for (Index i = 0; i < 200; ++i) {
    x(i, 0) = 1;
    x(i, 1) = 3 * standard_normal(rng);
  }
  const Vector a = f.evaluate(FeatureMatrix(x, 0));
  EXPECT_GE(a.minCoeff(), 0.1);
  EXPECT_LE(a.maxCoeff(), 0.5);
  EXPECT_EQ(a.minCoeff(), 0.1);
  EXPECT_EQ(a.maxCoeff(), 0.5);
}

TEST(EstimateLevel, ConstantTargetGivesConstantFunction) {
  LevelEstimateOptions opts;
  opts.lo = 0.001;
  opts.hi = 0.9;
  // criterion met everywhere: alpha* is the grid minimum at every point
  auto est = estimate_level_function(constant_measure_data(40, 1.0, 1), opts);
  EXPECT_EQ(est.alpha_star.size(), static_cast<Index>(est.fold2.size()));
  for (Index i = 0; i < est.alpha_star.size(); ++i) EXPECT_EQ(est.alpha_star[i], 0.01);
  EXPECT_NEAR(est.function.evaluate(Vector::Ones(1)), 0.01, 1e-12);

  // never met: alpha* = 1, clamped to hi
  est = estimate_level_function(constant_measure_data(40, 0.0, 2), opts);
  EXPECT_EQ(est.function.evaluate(Vector::Ones(1)), 0.9);
}

TEST(EstimateLevel, FoldsAreDisjointAndCoverTheData) {
  const auto est = estimate_level_function(constant_measure_data(41, 1.0, 3), LevelEstimateOptions{});
  std::vector<int> seen(41, 0);
  for (Index i : est.fold1) ++seen[static_cast<std::size_t>(i)];
  for (Index i : est.fold2) ++seen[static_cast<std::size_t>(i)];
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(EstimateLevel, SmallFoldIsInsufficient) {
  EXPECT_THROW(estimate_level_function(constant_measure_data(9, 1.0, 4), LevelEstimateOptions{}),
               InsufficientDataError);
}

TEST(EstimateLevel, OverlappingIdsRejected) {
  auto d = constant_measure_data(40, 1.0, 5);
  for (int i = 0; i < 40; ++i) d.ids.push_back("r" + std::to_string(i));
  d.reserved_ids = {"x", "r7"};
  EXPECT_THROW(estimate_level_function(d, LevelEstimateOptions{}), ValidationError);
}

TEST(EstimateLevel, SameSeedSameFunction) {
  Rng rng = make_rng(43);
  LevelEstimationData d;
  Matrix x(200, 2);
  d.scores.resize(200);
  for (Index i = 0; i < 200; ++i) {
    x(i, 0) = 1;
    x(i, 1) = uniform01(rng);
    d.scores[i] = x(i, 1) * standard_normal(rng);
  }
  d.features = FeatureMatrix(x, 0);
  d.measure = [](Index, double tau) { return tau; };
  LevelEstimateOptions opts;
  opts.criterion = QualityCriterion::length_at_most(0.5);
  opts.seed = 9;
  const auto a = estimate_level_function(d, opts);
  const auto b = estimate_level_function(d, opts);
  EXPECT_EQ(a.function.coefficients, b.function.coefficients);
  EXPECT_EQ(a.fold1, b.fold1);
}

TEST(AugmentFeatures, TwoBinsTwoRows) {
  Vector alpha(2);
  alpha << 0.2, 0.7;
  // an all-zero base column adds no rank and goes, leaving only the indicators
  std::vector<std::string> warnings;
  const auto out = augment_features(FeatureMatrix(Matrix::Zero(2, 1)), alpha, {0.0, 0.5, 1.0}, nullptr, &warnings);
  ASSERT_EQ(out.cols(), 2);
  EXPECT_EQ(out.values(), Matrix::Identity(2, 2));
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(AugmentFeatures, EmptyBinIsDroppedWithWarning) {
  Rng rng = make_rng(44);
  Vector alpha(30);
  Matrix x(30, 2);
  for (Index i = 0; i < 30; ++i) {
    alpha[i] = i % 2 ? uniform(rng, 0.0, 0.3) : uniform(rng, 0.7, 1.0);
    x(i, 0) = 1;
    x(i, 1) = standard_normal(rng);
  }
  std::vector<std::string> warnings;
  const auto out = augment_features(FeatureMatrix(x, 0), alpha, {0.0, 0.3, 0.7, 1.0}, nullptr, &warnings);
  // middle bin empty; the two occupied indicators sum to the intercept, so one more goes
  EXPECT_EQ(out.cols(), 3);
  EXPECT_EQ(warnings.size(), 2u);
  Eigen::ColPivHouseholderQR<Matrix> qr(out.values());
  EXPECT_EQ(qr.rank(), out.cols());
}

TEST(AugmentFeatures, BinOfUsesHalfOpenBinsWithClosedLast) {
  const std::vector<double> e = {0.0, 0.5, 1.0};
  EXPECT_EQ(bin_of(e, 0.0), 0);
  EXPECT_EQ(bin_of(e, 0.5), 1);
  EXPECT_EQ(bin_of(e, 1.0), 1);
  EXPECT_EQ(bin_of(e, 1.5), -1);
}

TEST(AlphaFeatureMap, TestRowsMatchFittedRows) {
  Rng rng = make_rng(45);
  Matrix x(50, 2);
  Vector alpha(50);
  for (Index i = 0; i < 50; ++i) {
    x(i, 0) = 1;
    x(i, 1) = standard_normal(rng);
    alpha[i] = uniform(rng, 0.05, 0.6);
  }
  Matrix groups(50, 1);
  for (Index i = 0; i < 50; ++i) groups(i, 0) = i % 3 == 0;
  AlphaFeatureMap map({0.0, 0.2, 0.4, 0.6}, true, 0.1);
  const auto fitted = map.fit(FeatureMatrix(x, 0), alpha, &groups);
  EXPECT_EQ(fitted.cols(), map.width());
  EXPECT_EQ(map.column_names().size(), static_cast<std::size_t>(map.width()));
  for (Index i = 0; i < 50; ++i) {
    const Vector g = groups.row(i).transpose();
    const Vector r = map.row(x.row(i).transpose(), alpha[i], &g);
    EXPECT_EQ(r.transpose(), fitted.values().row(i));
  }
}
