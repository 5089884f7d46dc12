#pragma once

// End-to-end synthetic experiments shared by the acceptance suite and the CLI.

#include "condconf/boosting.hpp"
#include "condconf/evaluation.hpp"
#include "condconf/level_policy.hpp"

#include <cstdint>
#include <vector>

namespace condconf {

// Marginal exactness of the randomized cutoff on the Gaussian instance with
// features (1, x) and a fixed level.
struct MarginalCoverageConfig {
  int trials = 2000;
  Index calib_size = 200;
  double alpha = 0.1;
  std::uint64_t seed = 1;
};
struct MarginalCoverageResult {
  std::vector<double> outcomes;  ///< 1{Y <= tau} per trial
  double frequency = 0.0;
};
MarginalCoverageResult run_marginal_coverage(const MarginalCoverageConfig& config);

// Two groups with different noise scales; group indicators as the class.
struct GroupCoverageConfig {
  int trials = 2000;
  Index calib_size = 200;
  double alpha = 0.1;
  double group1_rate = 0.35;
  double sigma0 = 1.0;
  double sigma1 = 4.0;
  std::uint64_t seed = 2;
};
struct GroupCoverageResult {
  std::vector<double> outcomes;
  std::vector<std::string> labels;
  CoverageReport report;
};
GroupCoverageResult run_group_coverage(const GroupCoverageConfig& config);

// Conditional boosting vs the marginal baseline on the heteroskedastic instance.
struct BoostingComparisonConfig {
  Index train_size = 1000;
  Index eval_size = 2000;
  Index calib_size = 1000;
  int calib_reps = 10;     ///< fresh calibration sets averaged for the coverage curves
  double alpha = 0.1;
  BoostConfig boost;
  std::uint64_t seed = 3;
};
struct DecileCurve {
  std::vector<double> coverage;  ///< oracle P(Y in C(X) | decile), averaged
  double mean_length = 0.0;
};
struct BoostingComparisonResult {
  std::vector<double> decile_edges;  ///< 11 population deciles of X1
  Vector theta_init;
  Vector theta_conditional;
  Vector theta_marginal;
  DecileCurve initial;      ///< theta_init, conditional calibration
  DecileCurve conditional;  ///< boosted conditionally, conditional calibration
  DecileCurve marginal;     ///< boosted marginally, split-conformal calibration
  BoostResult conditional_trace;
  BoostResult marginal_trace;
};
BoostingComparisonResult run_boosting_comparison(const BoostingComparisonConfig& config);

/// Decile-of-X1 indicator rows for the heteroskedastic instance.
FeatureMatrix decile_features(const Matrix& x, const std::vector<double>& edges);

// Level-adaptive length control with the |Y| score.
struct LengthControlConfig {
  Index estimate_size = 2000;
  Index calib_size = 1000;
  int trials = 200;
  double max_length = 500.0;
  double fit_quantile = 0.85;
  double lo = 0.05;
  double hi = 0.95;
  int estimate_degree = 3;  ///< alpha(.) is fit over (1, x2, x1/10, ..., (x1/10)^degree)
  std::vector<double> grid = default_alpha_grid();
  std::vector<double> bin_edges = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  /// Edges of alpha-bin indicators appended to (1, x1, x2, alpha) for the final
  /// calibration; empty keeps the four-column class.
  std::vector<double> alpha_bins = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::uint64_t seed = 4;
};
struct LengthControlResult {
  LevelFunction level;
  std::vector<double> lengths;
  std::vector<double> nominal;   ///< 1 - alpha(X_test)
  std::vector<double> coverage;  ///< oracle coverage per trial
  double exceed_fraction = 0.0;
  CoverageReport curve;
};
LengthControlResult run_length_control(const LengthControlConfig& config);

// Calibration of issued levels alpha(X) = sigmoid(X) on the Gaussian instance.
struct LevelCalibrationConfig {
  int trials = 500;
  Index calib_size = 1000;
  bool include_alpha_feature = true;  ///< false: intercept only
  std::vector<double> bin_edges = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::uint64_t seed = 5;
};
struct LevelCalibrationResult {
  std::vector<double> nominal;
  std::vector<double> coverage;  ///< oracle Phi(tau)
  CoverageReport curve;
};
LevelCalibrationResult run_level_calibration(const LevelCalibrationConfig& config);

// Boosted vs uniform claim-score ensembles on synthetic claim mixtures.
struct ClaimBoostConfig {
  int trials = 50;
  Index boost_size = 300;
  Index calib_size = 300;
  Index test_size = 300;
  double alpha = 0.1;
  double loss_budget = 0.0;  ///< count of false claims allowed
  BoostConfig boost{0.01, 150, 0.1, 0.5, 0, false};
  ClaimMixtureOptions mixture;
  std::uint64_t seed = 6;
};
struct ClaimBoostTrial {
  double uniform_retention = 0.0;
  double boosted_retention = 0.0;
  Vector theta;
};
struct ClaimBoostResult {
  std::vector<ClaimBoostTrial> trials;
  double win_fraction = 0.0;  ///< trials with boosted >= uniform
};
ClaimBoostResult run_claim_boost(const ClaimBoostConfig& config);

/// Mean test retention of a claim ensemble calibrated on `calib` and applied to
/// `test` with the conditional (non-randomized) cutoff.
double ensemble_retention(const ClaimMixture& calib, const ClaimMixture& test, const Vector& theta,
                          const MonotoneLoss& loss, double alpha);

}  // namespace condconf
