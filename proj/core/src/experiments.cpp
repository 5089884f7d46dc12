#include "condconf/experiments.hpp"

#include "condconf/errors.hpp"
#include "condconf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace condconf {

namespace {

std::uint64_t trial_seed(std::uint64_t master, std::string_view label, int t) {
  return derive_seed(derive_seed(master, label), static_cast<std::uint64_t>(t));
}

double oracle_gaussian(double tau) {
  if (tau == kInf) return 1.0;
  if (tau == -kInf) return 0.0;
  return normal_cdf(tau);
}

int decile_of(const std::vector<double>& edges, double x1) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), x1);
  const int k = static_cast<int>(it - edges.begin()) - 1;
  return std::clamp(k, 0, static_cast<int>(edges.size()) - 2);
}

Vector scaled_scores(const Matrix& x, const Vector& y, const Vector& theta) {
  ScaledResidualModel model(x, y);
  Vector s(x.rows());
  for (Index i = 0; i < x.rows(); ++i) s[i] = model.score(i, theta, nullptr);
  return s;
}

}  // namespace

MarginalCoverageResult run_marginal_coverage(const MarginalCoverageConfig& config) {
  const Index n = config.calib_size;
  MarginalCoverageResult out;
  out.outcomes.resize(static_cast<std::size_t>(config.trials));
  double hits = 0.0;
  for (int t = 0; t < config.trials; ++t) {
    const GaussianAlphaDataset ds = synth_gaussian_alpha(n + 1, trial_seed(config.seed, "data", t));
    Matrix x(n, 2);
    x.col(0).setOnes();
    x.col(1) = ds.x.head(n);
    Vector test(2);
    test << 1.0, ds.x[n];
    const Cutoff c = cutoff_randomized(FeatureMatrix(std::move(x), 0), ds.y.head(n),
                                       LevelVector::constant(n, config.alpha), test, config.alpha,
                                       trial_seed(config.seed, "u", t));
    const double hit = ds.y[n] <= c.tau ? 1.0 : 0.0;
    out.outcomes[static_cast<std::size_t>(t)] = hit;
    hits += hit;
  }
  out.frequency = hits / config.trials;
  return out;
}

GroupCoverageResult run_group_coverage(const GroupCoverageConfig& config) {
  const Index n = config.calib_size;
  GroupCoverageResult out;
  for (int t = 0; t < config.trials; ++t) {
    Rng rng = make_rng(trial_seed(config.seed, "data", t));
    Matrix x = Matrix::Zero(n + 1, 2);
    Vector s(n + 1);
    for (Index i = 0; i <= n; ++i) {
      const int g = uniform01(rng) < config.group1_rate ? 1 : 0;
      x(i, g) = 1.0;
      s[i] = (g == 0 ? config.sigma0 : config.sigma1) * standard_normal(rng);
    }
    const Vector test = x.row(n).transpose();
    const Cutoff c = cutoff_randomized(FeatureMatrix(x.topRows(n)), s.head(n),
                                       LevelVector::constant(n, config.alpha), test, config.alpha,
                                       trial_seed(config.seed, "u", t));
    out.outcomes.push_back(s[n] <= c.tau ? 1.0 : 0.0);
    out.labels.push_back(test[1] == 1.0 ? "group1" : "group0");
  }
  const std::vector<double> nominal(out.outcomes.size(), 1.0 - config.alpha);
  out.report = coverage_by_group(out.outcomes, out.labels, {"group0", "group1"}, nominal);
  return out;
}

FeatureMatrix decile_features(const Matrix& x, const std::vector<double>& edges) {
  const int bins = static_cast<int>(edges.size()) - 1;
  Matrix phi = Matrix::Zero(x.rows(), bins);
  for (Index i = 0; i < x.rows(); ++i) phi(i, decile_of(edges, x(i, 0))) = 1.0;
  return FeatureMatrix(std::move(phi));
}

BoostingComparisonResult run_boosting_comparison(const BoostingComparisonConfig& config) {
  BoostingComparisonResult out;
  for (int k = 0; k <= 10; ++k) out.decile_edges.push_back(1.0 + 0.9 * k);

  const HeteroDataset train = synth_hetero(config.train_size, derive_seed(config.seed, "train"));
  ScaledResidualModel model(train.x, train.y);
  const FeatureMatrix phi = decile_features(train.x, out.decile_edges);
  const LevelVector levels = LevelVector::constant(config.train_size, config.alpha);
  out.theta_init = Vector::Ones(2);

  BoostConfig boost = config.boost;
  boost.seed = derive_seed(config.seed, "boost");
  out.conditional_trace = conditional_boost(model, phi, levels, out.theta_init, boost);
  out.marginal_trace = marginal_boost_baseline(model, config.alpha, out.theta_init, boost);
  out.theta_conditional = out.conditional_trace.theta;
  out.theta_marginal = out.marginal_trace.theta;

  const int bins = 10;
  struct Acc {
    std::vector<double> cov = std::vector<double>(10, 0.0);
    std::vector<double> cnt = std::vector<double>(10, 0.0);
    double len = 0.0;
    double points = 0.0;
  } acc_init, acc_cond, acc_marg;

  auto accumulate = [&](Acc& acc, const HeteroDataset& test, const Vector& theta,
                        const std::vector<double>& tau_by_decile) {
    for (Index i = 0; i < test.x.rows(); ++i) {
      const int g = decile_of(out.decile_edges, test.x(i, 0));
      const double tau = tau_by_decile[static_cast<std::size_t>(g)];
      const double half = tau < 0.0 ? 0.0 : tau * std::abs(test.x.row(i).dot(theta));
      acc.cov[static_cast<std::size_t>(g)] += HeteroDataset::coverage_prob(test.x(i, 0), half);
      acc.cnt[static_cast<std::size_t>(g)] += 1.0;
      acc.len += 2.0 * half;
      acc.points += 1.0;
    }
  };

  for (int r = 0; r < config.calib_reps; ++r) {
    const HeteroDataset calib = synth_hetero(config.calib_size, trial_seed(config.seed, "calib", r));
    const HeteroDataset test = synth_hetero(config.eval_size, trial_seed(config.seed, "test", r));
    const FeatureMatrix cphi = decile_features(calib.x, out.decile_edges);

    for (auto [theta, acc] : {std::pair{&out.theta_init, &acc_init}, std::pair{&out.theta_conditional, &acc_cond}}) {
      ConditionalCalibrator cal(cphi, scaled_scores(calib.x, calib.y, *theta),
                                LevelVector::constant(config.calib_size, config.alpha));
      std::vector<double> taus(bins);
      for (int g = 0; g < bins; ++g) taus[g] = cal.nonrandomized(Vector::Unit(bins, g), config.alpha).tau;
      accumulate(*acc, test, *theta, taus);
    }
    const Vector ms = scaled_scores(calib.x, calib.y, out.theta_marginal);
    const double q = split_conformal_quantile(std::span<const double>(ms.data(), ms.size()), config.alpha);
    accumulate(acc_marg, test, out.theta_marginal, std::vector<double>(bins, q));
  }

  auto finish = [&](const Acc& acc) {
    DecileCurve curve;
    for (int g = 0; g < bins; ++g) curve.coverage.push_back(acc.cnt[g] > 0 ? acc.cov[g] / acc.cnt[g] : 0.0);
    curve.mean_length = acc.len / acc.points;
    return curve;
  };
  out.initial = finish(acc_init);
  out.conditional = finish(acc_cond);
  out.marginal = finish(acc_marg);
  return out;
}

LengthControlResult run_length_control(const LengthControlConfig& config) {
  auto base_row = [](double x1, double x2) {
    Vector r(3);
    r << 1.0, x1, x2;
    return r;
  };

  if (config.estimate_degree < 1) throw ValidationError("estimate_degree must be at least 1");
  auto level_row = [&](double x1, double x2) {
    Vector r(2 + config.estimate_degree);
    r[0] = 1.0;
    r[1] = x2;
    for (int k = 1; k <= config.estimate_degree; ++k) r[1 + k] = std::pow(x1 / 10.0, k);
    return r;
  };

  const HeteroDataset est = synth_hetero(config.estimate_size, derive_seed(config.seed, "estimate"));
  Matrix lrows(config.estimate_size, 2 + config.estimate_degree);
  for (Index i = 0; i < est.x.rows(); ++i) lrows.row(i) = level_row(est.x(i, 0), est.x(i, 1)).transpose();

  LevelEstimationData data;
  data.features = FeatureMatrix(lrows, 0);
  data.scores = est.y.cwiseAbs();
  data.measure = [](Index, double tau) { return tau < 0.0 ? 0.0 : 2.0 * tau; };
  LevelEstimateOptions opts;
  opts.grid = config.grid;
  opts.criterion = QualityCriterion::length_at_most(config.max_length);
  opts.fit_quantile = config.fit_quantile;
  opts.lo = config.lo;
  opts.hi = config.hi;
  opts.seed = derive_seed(config.seed, "level-split");

  LengthControlResult out;
  out.level = estimate_level_function(data, opts).function;

  const Index n = config.calib_size;
  std::size_t exceed = 0;
  for (int t = 0; t < config.trials; ++t) {
    const HeteroDataset ds = synth_hetero(n + 1, trial_seed(config.seed, "trial", t));
    Matrix base_rows(n, 3);
    Vector alphas(n + 1);
    for (Index i = 0; i <= n; ++i) {
      const Vector b = base_row(ds.x(i, 0), ds.x(i, 1));
      alphas[i] = out.level.evaluate(level_row(ds.x(i, 0), ds.x(i, 1)));
      if (i < n) base_rows.row(i) = b.transpose();
    }
    AlphaFeatureMap map(config.alpha_bins, true, std::nullopt);
    const FeatureMatrix phi = map.fit(FeatureMatrix(base_rows, 0), alphas.head(n));
    const Vector test = map.row(base_row(ds.x(n, 0), ds.x(n, 1)), alphas[n]);
    const Cutoff c = cutoff_randomized(phi, ds.y.head(n).cwiseAbs(), LevelVector(alphas.head(n)), test,
                                       alphas[n], trial_seed(config.seed, "u", t));
    const double len = c.tau < 0.0 ? 0.0 : 2.0 * c.tau;
    out.lengths.push_back(len);
    out.nominal.push_back(1.0 - alphas[n]);
    out.coverage.push_back(HeteroDataset::coverage_prob(ds.x(n, 0), c.tau));
    if (len > config.max_length) ++exceed;
  }
  out.exceed_fraction = static_cast<double>(exceed) / config.trials;
  out.curve = calibration_curve(out.nominal, out.coverage, config.bin_edges);
  return out;
}

LevelCalibrationResult run_level_calibration(const LevelCalibrationConfig& config) {
  const Index n = config.calib_size;
  const Index d = config.include_alpha_feature ? 2 : 1;
  LevelCalibrationResult out;
  for (int t = 0; t < config.trials; ++t) {
    const GaussianAlphaDataset ds = synth_gaussian_alpha(n + 1, trial_seed(config.seed, "data", t));
    Matrix phi(n + 1, d);
    phi.col(0).setOnes();
    if (config.include_alpha_feature) phi.col(1) = ds.alpha;
    const Vector test = phi.row(n).transpose();
    const Cutoff c = cutoff_randomized(FeatureMatrix(phi.topRows(n), 0), ds.y.head(n),
                                       LevelVector(ds.alpha.head(n)), test, ds.alpha[n],
                                       trial_seed(config.seed, "u", t));
    out.nominal.push_back(1.0 - ds.alpha[n]);
    out.coverage.push_back(oracle_gaussian(c.tau));
  }
  out.curve = calibration_curve(out.nominal, out.coverage, config.bin_edges);
  return out;
}

double ensemble_retention(const ClaimMixture& calib, const ClaimMixture& test, const Vector& theta,
                          const MonotoneLoss& loss, double alpha) {
  ClaimEnsembleModel cmodel(calib.prompts, loss);
  ClaimEnsembleModel tmodel(test.prompts, loss);

  std::vector<double> raw;
  double lowest = kInf;
  for (Index i = 0; i < cmodel.size(); ++i) {
    const ScoredClaimSet set = cmodel.claims(i, theta);
    for (double p : set.claim_scores) lowest = std::min(lowest, p);
    raw.push_back(score_from_loss(set, loss));
  }
  const Vector scores = finite_conformity_scores(raw, std::isfinite(lowest) ? lowest - 1.0 : -1.0);
  ConditionalCalibrator cal(calib.features, scores,
                            LevelVector::constant(calib.features.rows(), alpha));

  std::map<std::vector<double>, double> cache;
  std::vector<ScoredClaimSet> sets;
  std::vector<std::vector<std::size_t>> kept;
  for (Index i = 0; i < tmodel.size(); ++i) {
    const Vector x = test.features.row(i).transpose();
    const std::vector<double> key(x.data(), x.data() + x.size());
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, cal.nonrandomized(x, alpha).tau).first;
    ScoredClaimSet set = tmodel.claims(i, theta);
    kept.push_back(filter(set, it->second));
    sets.push_back(std::move(set));
  }
  return retention_stats(sets, kept).mean;
}

ClaimBoostResult run_claim_boost(const ClaimBoostConfig& config) {
  const MonotoneLoss loss = MonotoneLoss::count_false(config.loss_budget);
  ClaimBoostResult out;
  int wins = 0;
  for (int t = 0; t < config.trials; ++t) {
    const ClaimMixture boost_set = synth_claim_mixture(config.boost_size, trial_seed(config.seed, "boost", t), config.mixture);
    const ClaimMixture calib = synth_claim_mixture(config.calib_size, trial_seed(config.seed, "calib", t), config.mixture);
    const ClaimMixture test = synth_claim_mixture(config.test_size, trial_seed(config.seed, "test", t), config.mixture);

    ClaimEnsembleModel model(boost_set.prompts, loss, config.boost.sigmoid_temperature);
    const Index m = model.param_dim();
    const Vector theta0 = Vector::Constant(m, 1.0 / static_cast<double>(m));
    BoostConfig bc = config.boost;
    bc.seed = trial_seed(config.seed, "steps", t);
    const BoostResult res = conditional_boost(model, boost_set.features,
                                              LevelVector::constant(config.boost_size, config.alpha), theta0, bc);

    ClaimBoostTrial trial;
    trial.uniform_retention = ensemble_retention(calib, test, theta0, loss, config.alpha);
    trial.boosted_retention = ensemble_retention(calib, test, res.theta, loss, config.alpha);
    trial.theta = res.theta;
    if (trial.boosted_retention >= trial.uniform_retention) ++wins;
    out.trials.push_back(std::move(trial));
  }
  out.win_fraction = static_cast<double>(wins) / config.trials;
  return out;
}

}  // namespace condconf
