#include "condconf/evaluation.hpp"

#include "condconf/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace condconf {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double HeteroDataset::coverage_prob(double x1, double half_width) {
  if (half_width <= 0.0) return 0.0;
  if (std::isinf(half_width)) return 1.0;
  return 2.0 * normal_cdf(half_width / (x1 * x1 * x1)) - 1.0;
}

HeteroDataset synth_hetero(Index n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("synth_hetero needs n >= 1");
  Rng rng = make_rng(seed);
  HeteroDataset out;
  out.x.resize(n, 2);
  out.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double x1 = uniform(rng, 1.0, 10.0);
    const double x2 = uniform(rng, 5.0, 10.0);
    out.x(i, 0) = x1;
    out.x(i, 1) = x2;
    out.y[i] = x1 * x1 * x1 * standard_normal(rng);
  }
  return out;
}

GaussianAlphaDataset synth_gaussian_alpha(Index n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("synth_gaussian_alpha needs n >= 1");
  Rng rng = make_rng(seed);
  GaussianAlphaDataset out;
  out.x.resize(n);
  out.y.resize(n);
  out.alpha.resize(n);
  for (Index i = 0; i < n; ++i) {
    out.x[i] = standard_normal(rng);
    out.y[i] = standard_normal(rng);
    out.alpha[i] = sigmoid(out.x[i]);
  }
  return out;
}

ClaimMixture synth_claim_mixture(Index n, std::uint64_t seed, const ClaimMixtureOptions& options) {
  if (n < 1) throw ValidationError("synth_claim_mixture needs n >= 1");
  if (options.min_claims < 0 || options.max_claims < options.min_claims) {
    throw ValidationError("claim count range is invalid");
  }
  if (options.signal.empty()) throw ValidationError("need at least one base score");
  Rng rng = make_rng(seed);
  const auto m = static_cast<Index>(options.signal.size());
  ClaimMixture out;
  Matrix feats(n, 2);
  for (Index i = 0; i < n; ++i) {
    const int g = uniform01(rng) < 0.5 ? 0 : 1;
    const int span = options.max_claims - options.min_claims + 1;
    const int k = options.min_claims + static_cast<int>(uniform01(rng) * span);
    const double rate = g == 0 ? options.truth_rate_group0 : options.truth_rate_group1;
    EnsemblePrompt p;
    p.base_scores.resize(k, m);
    p.annotations.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      const int w = uniform01(rng) < rate ? 1 : 0;
      p.annotations[static_cast<std::size_t>(j)] = w;
      for (Index c = 0; c < m; ++c) {
        const double z = options.signal[static_cast<std::size_t>(c)] * (2.0 * w - 1.0) +
                         options.noise * standard_normal(rng);
        p.base_scores(j, c) = sigmoid(z);
      }
    }
    out.prompts.push_back(std::move(p));
    out.groups.push_back(g);
    feats(i, 0) = 1.0;
    feats(i, 1) = g;
  }
  out.features = FeatureMatrix(std::move(feats), 0);
  return out;
}

double CoverageReport::calibration_error() const {
  double num = 0.0;
  double den = 0.0;
  for (const auto& r : rows) {
    num += static_cast<double>(r.count) * std::abs(r.realized - r.nominal_mean);
    den += static_cast<double>(r.count);
  }
  return den > 0.0 ? num / den : 0.0;
}

namespace {

void check_outcome(double o) {
  if (!(o >= 0.0 && o <= 1.0)) throw ValidationError("outcomes must lie in [0, 1]");
}

void finish_row(CoverageRow& row, double nominal_sum, double outcome_sum) {
  const auto c = static_cast<double>(row.count);
  row.nominal_mean = nominal_sum / c;
  row.realized = outcome_sum / c;
  row.stderr_ = std::sqrt(row.realized * (1.0 - row.realized) / c);
}

}  // namespace

CoverageReport calibration_curve(const std::vector<double>& nominal, const std::vector<double>& outcomes,
                                 const std::vector<double>& bin_edges) {
  if (nominal.size() != outcomes.size()) throw ValidationError("nominal and outcomes differ in length");
  if (bin_edges.size() < 2) throw ValidationError("need at least two bin edges");
  for (std::size_t k = 1; k < bin_edges.size(); ++k) {
    if (!(bin_edges[k] > bin_edges[k - 1])) throw ValidationError("bin edges must be strictly ascending");
  }
  const std::size_t bins = bin_edges.size() - 1;
  std::vector<double> nsum(bins, 0.0), osum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  CoverageReport out;
  for (std::size_t i = 0; i < nominal.size(); ++i) {
    check_outcome(outcomes[i]);
    const double v = nominal[i];
    if (v < bin_edges.front() || v > bin_edges.back()) continue;
    std::size_t b = bins - 1;
    if (v < bin_edges.back()) {
      b = static_cast<std::size_t>(std::upper_bound(bin_edges.begin(), bin_edges.end(), v) - bin_edges.begin()) - 1;
    }
    nsum[b] += v;
    osum[b] += outcomes[i];
    ++count[b];
    ++out.total;
  }
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    CoverageRow row;
    row.bin_lo = bin_edges[b];
    row.bin_hi = bin_edges[b + 1];
    row.count = count[b];
    finish_row(row, nsum[b], osum[b]);
    out.rows.push_back(row);
  }
  return out;
}

CoverageReport coverage_by_group(const std::vector<double>& outcomes, const std::vector<std::string>& labels,
                                 const std::vector<std::string>& groups, const std::vector<double>& nominal) {
  if (labels.size() != outcomes.size() || nominal.size() != outcomes.size()) {
    throw ValidationError("outcomes, labels and nominal levels differ in length");
  }
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t g = 0; g < groups.size(); ++g) slot.emplace(groups[g], g);
  std::vector<double> nsum(groups.size(), 0.0), osum(groups.size(), 0.0);
  std::vector<std::size_t> count(groups.size(), 0);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    check_outcome(outcomes[i]);
    const auto it = slot.find(labels[i]);
    if (it == slot.end()) throw ValidationError("unknown group label '" + labels[i] + "'");
    nsum[it->second] += nominal[i];
    osum[it->second] += outcomes[i];
    ++count[it->second];
  }
  CoverageReport out;
  out.total = outcomes.size();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    CoverageRow row;
    row.group = groups[g];
    row.count = count[g];
    if (row.count > 0) finish_row(row, nsum[g], osum[g]);
    out.rows.push_back(row);
  }
  return out;
}

RetentionSummary retention_stats(const std::vector<ScoredClaimSet>& claims,
                                 const std::vector<std::vector<std::size_t>>& retained) {
  if (claims.size() != retained.size()) throw ValidationError("claims and retained sets differ in length");
  RetentionSummary out;
  double sum = 0.0;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    const std::size_t k = claims[i].size();
    if (retained[i].size() > k) throw ValidationError("retained set larger than its claim set");
    if (k == 0) {
      ++out.empty_sets;
      continue;
    }
    const double f = static_cast<double>(retained[i].size()) / static_cast<double>(k);
    out.fractions.push_back(f);
    sum += f;
    out.retained += retained[i].size();
    out.claims += k;
  }
  if (!out.fractions.empty()) out.mean = sum / static_cast<double>(out.fractions.size());
  return out;
}

WeightedCoverage shift_weighted_coverage(const std::vector<double>& outcomes, const std::vector<double>& alphas,
                                         const std::vector<double>& weights) {
  if (outcomes.size() != alphas.size() || weights.size() != outcomes.size()) {
    throw ValidationError("outcomes, levels and weights differ in length");
  }
  double total = 0.0, hit = 0.0, nominal = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw ValidationError("weights must be finite and non-negative");
    total += weights[i];
    hit += weights[i] * outcomes[i];
    nominal += weights[i] * (1.0 - alphas[i]);
  }
  if (total <= 0.0) throw ValidationError("weights are all zero");
  return {hit / total, nominal / total};
}

void TrialPlan::validate() const {
  if (n_trials < 1 || calib_size < 1 || test_size < 1) throw ValidationError("trial plan sizes must be positive");
  if (threads < 1) throw ValidationError("threads must be positive");
}

void run_indexed(int count, int threads, const std::function<void(int)>& job) {
  const int workers = std::min(threads, count);
  if (workers <= 1) {
    for (int t = 0; t < count; ++t) job(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int t = next++; t < count; t = next++) {
        try {
          job(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace condconf
