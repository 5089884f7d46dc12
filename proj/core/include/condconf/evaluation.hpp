#pragma once

#include "condconf/boosting.hpp"
#include "condconf/conformal.hpp"
#include "condconf/qr_solver.hpp"
#include "condconf/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace condconf {

double normal_cdf(double z);
double sigmoid(double z);

// Heteroskedastic regression: X1 ~ U(1, 10), X2 ~ U(5, 10), Y ~ N(0, X1^6).
struct HeteroDataset {
  Matrix x;  ///< n x 2, columns X1, X2
  Vector y;

  /// P(|Y| <= m | X1) for the generating law.
  static double coverage_prob(double x1, double half_width);
};
HeteroDataset synth_hetero(Index n, std::uint64_t seed);

// X, Y iid N(0, 1) with alpha(X) = sigmoid(X).
struct GaussianAlphaDataset {
  Vector x;
  Vector y;
  Vector alpha;
};
GaussianAlphaDataset synth_gaussian_alpha(Index n, std::uint64_t seed);

// Prompts with a binary group, k in [min_claims, max_claims] claims and four
// base claim scores of decreasing informativeness.
struct ClaimMixtureOptions {
  int min_claims = 4;
  int max_claims = 12;
  std::vector<double> signal = {2.5, 1.0, 0.4, 0.0};  ///< per base score
  double noise = 1.0;
  double truth_rate_group0 = 0.85;
  double truth_rate_group1 = 0.65;
};
struct ClaimMixture {
  std::vector<EnsemblePrompt> prompts;
  std::vector<int> groups;
  FeatureMatrix features;  ///< intercept and group indicator
};
ClaimMixture synth_claim_mixture(Index n, std::uint64_t seed, const ClaimMixtureOptions& options = {});

struct CoverageRow {
  std::string group;  ///< group label, or empty for calibration bins
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  double nominal_mean = 0.0;
  double realized = 0.0;
  std::size_t count = 0;
  double stderr_ = 0.0;  ///< binomial: sqrt(realized (1 - realized) / count)
};

struct CoverageReport {
  std::vector<CoverageRow> rows;
  std::size_t total = 0;

  /// Count-weighted mean |realized - nominal| over rows.
  double calibration_error() const;
};

/// Bins by nominal level: [e_k, e_{k+1}) with the last bin closed. Outcomes are
/// 0/1 control indicators or oracle control probabilities. Empty bins omitted.
CoverageReport calibration_curve(const std::vector<double>& nominal, const std::vector<double>& outcomes,
                                 const std::vector<double>& bin_edges);

/// One row per entry of `groups`, in that order. An unknown label throws.
CoverageReport coverage_by_group(const std::vector<double>& outcomes, const std::vector<std::string>& labels,
                                 const std::vector<std::string>& groups,
                                 const std::vector<double>& nominal);

struct RetentionSummary {
  std::vector<double> fractions;  ///< one per non-empty claim set
  std::size_t empty_sets = 0;
  std::size_t retained = 0;
  std::size_t claims = 0;
  double mean = 0.0;              ///< mean of `fractions`
};
RetentionSummary retention_stats(const std::vector<ScoredClaimSet>& claims,
                                 const std::vector<std::vector<std::size_t>>& retained);

struct WeightedCoverage {
  double realized = 0.0;
  double nominal = 0.0;
};
/// (sum f 1{control} / sum f, sum f (1 - alpha) / sum f).
WeightedCoverage shift_weighted_coverage(const std::vector<double>& outcomes, const std::vector<double>& alphas,
                                         const std::vector<double>& weights);

struct TrialPlan {
  int n_trials = 100;
  Index calib_size = 1000;
  Index test_size = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> methods;
  int threads = 1;

  void validate() const;
};

/// Runs job(t) for t in [0, count) on up to `threads` workers.
void run_indexed(int count, int threads, const std::function<void(int)>& job);

/// Runs trial(t, seed_t) for t in [0, n_trials) with seed_t derived from the
/// plan seed and t; results come back in trial order regardless of threading.
template <class Result>
std::vector<Result> run_trials(const TrialPlan& plan,
                               const std::function<Result(int, std::uint64_t)>& trial) {
  plan.validate();
  std::vector<Result> out(static_cast<std::size_t>(plan.n_trials));
  run_indexed(plan.n_trials, plan.threads, [&](int t) {
    out[static_cast<std::size_t>(t)] = trial(t, derive_seed(plan.seed, static_cast<std::uint64_t>(t)));
  });
  return out;
}

}  // namespace condconf
