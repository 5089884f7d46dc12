#include "cli/commands.hpp"

#include "cli/reports.hpp"

#include "condconf/errors.hpp"
#include "condconf/evaluation.hpp"
#include "condconf/experiments.hpp"
#include "condconf/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace condconf::cli {

using nlohmann::json;

namespace {

struct Context {
  const RunConfig& cfg;
  CommandResult result;
  json seeds = json::object();
  SplitRegistry splits;

  std::uint64_t seed(const std::string& label) {
    const std::uint64_t s = derive_seed(cfg.seed, label);
    seeds[label] = s;
    return s;
  }

  void write(const std::string& name, const std::string& contents) {
    write_file_atomic((std::filesystem::path(cfg.output_dir) / name).string(), contents);
    result.outputs.push_back(name);
  }

  void warn(const std::vector<std::string>& w) {
    result.warnings.insert(result.warnings.end(), w.begin(), w.end());
  }
};

ClaimDataset load_role(Context& ctx, const std::string& role, const std::string& path) {
  if (path.empty()) throw ValidationError("config data." + role + " is required for this command");
  ClaimDataset d = load_claims(path);
  ctx.warn(d.warnings);
  ctx.splits.add(role, d);
  return d;
}

std::string fmt(double v) { return format_number(v); }

double lowest_claim_score(const std::vector<const ClaimDataset*>& sets, const std::vector<std::string>& methods,
                          const Vector& w) {
  double lo = kInf;
  for (const auto* d : sets) {
    for (const auto& r : d->records) {
      const ScoredClaimSet s = weighted_claims(r, methods, w);
      for (double p : s.claim_scores) lo = std::min(lo, p);
    }
  }
  return std::isfinite(lo) ? lo - 1.0 : -1.0;
}

std::vector<std::string> shared_methods(const ClaimDataset& a, const ClaimDataset& b) {
  if (a.records.empty()) return b.methods;
  if (b.records.empty()) return a.methods;
  std::vector<std::string> out;
  std::set_intersection(a.methods.begin(), a.methods.end(), b.methods.begin(), b.methods.end(),
                        std::back_inserter(out));
  if (out.empty()) throw SchemaError("calibration and test data share no score method");
  return out;
}

struct LoadedLevelFunction {
  LevelFunction fn;
  std::vector<std::string> columns;
};

LoadedLevelFunction load_level_function(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open level function '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(0, "level function is not valid JSON: " + std::string(e.what()));
  }
  try {
    LoadedLevelFunction out;
    out.columns = j.at("columns").get<std::vector<std::string>>();
    const auto coef = j.at("coefficients").get<std::vector<double>>();
    if (coef.size() != out.columns.size()) throw SchemaError("level function columns and coefficients differ");
    out.fn.coefficients = Eigen::Map<const Vector>(coef.data(), static_cast<Index>(coef.size()));
    out.fn.fit_quantile = j.at("fit_quantile").get<double>();
    out.fn.lo = j.at("lo").get<double>();
    out.fn.hi = j.at("hi").get<double>();
    return out;
  } catch (const json::exception& e) {
    throw SchemaError("level function '" + path + "': " + e.what());
  }
}

// Cutoffs for every test record, calibrated on `calib`.
struct CutoffRun {
  std::vector<Cutoff> cutoffs;
  std::vector<double> alphas;
  std::vector<std::string> methods;
  Vector weights;
};

CutoffRun compute_cutoffs(Context& ctx, const ClaimDataset& calib, const ClaimDataset& test) {
  const RunConfig& cfg = ctx.cfg;
  CutoffRun run;
  if (test.records.empty()) return run;
  if (calib.records.empty()) throw InsufficientDataError("calibration data is empty");

  run.methods = shared_methods(calib, test);
  run.weights = ensemble_weights(cfg, run.methods);
  const MonotoneLoss loss = MonotoneLoss::count_false(cfg.loss_budget);

  std::vector<double> raw;
  for (const auto& r : calib.records) raw.push_back(score_from_loss(weighted_claims(r, run.methods, run.weights), loss));
  const Vector scores = finite_conformity_scores(raw, lowest_claim_score({&calib, &test}, run.methods, run.weights));

  std::vector<std::string> names;
  const FeatureMatrix base_calib = class_features(calib, cfg.function_class, &names);
  const FeatureMatrix base_test = class_features(test, cfg.function_class);

  FeatureMatrix calib_phi = base_calib;
  std::vector<Vector> test_rows;
  Vector calib_alpha(base_calib.rows());
  run.alphas.assign(test.records.size(), cfg.level.alpha);

  if (cfg.level.adaptive) {
    if (cfg.level.level_function.empty()) throw ValidationError("adaptive level needs level.level_function");
    const LoadedLevelFunction lf = load_level_function(cfg.level.level_function);
    if (lf.columns != names) throw SchemaError("level function columns do not match the configured function class");
    calib_alpha = lf.fn.evaluate(base_calib);
    AlphaFeatureMap map(cfg.function_class.alpha_bins, cfg.function_class.alpha_linear,
                        cfg.function_class.alpha_square_center);
    calib_phi = map.fit(base_calib, calib_alpha);
    ctx.warn(map.warnings());
    for (Index i = 0; i < base_test.rows(); ++i) {
      const Vector b = base_test.row(i).transpose();
      run.alphas[static_cast<std::size_t>(i)] = lf.fn.evaluate(b);
      test_rows.push_back(map.row(b, run.alphas[static_cast<std::size_t>(i)]));
    }
  } else {
    calib_alpha.setConstant(cfg.level.alpha);
    for (Index i = 0; i < base_test.rows(); ++i) test_rows.push_back(base_test.row(i).transpose());
  }

  ConditionalCalibrator cal(calib_phi, scores, LevelVector(calib_alpha));
  const std::uint64_t useed = ctx.seed("randomization");
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    const double a = run.alphas[i];
    if (cfg.level.randomized) {
      const double u = draw_randomization(a, derive_seed(useed, static_cast<std::uint64_t>(i)));
      run.cutoffs.push_back(cal.randomized(test_rows[i], a, u));
    } else {
      run.cutoffs.push_back(cal.nonrandomized(test_rows[i], a));
    }
  }
  return run;
}

json weights_json(const std::vector<std::string>& methods, const Vector& w) {
  json j = json::object();
  for (std::size_t m = 0; m < methods.size(); ++m) j[methods[m]] = w[static_cast<Index>(m)];
  return j;
}

void cmd_synth(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const std::uint64_t s = ctx.seed("synth");
  if (cfg.synth.kind == "hetero") {
    const HeteroDataset d = synth_hetero(cfg.synth.n, s);
    CsvBuilder csv({"x1", "x2", "y"});
    for (Index i = 0; i < d.x.rows(); ++i) csv.row({fmt(d.x(i, 0)), fmt(d.x(i, 1)), fmt(d.y[i])});
    ctx.write("data.csv", csv.str());
    return;
  }
  if (cfg.synth.kind == "gaussian_alpha") {
    const GaussianAlphaDataset d = synth_gaussian_alpha(cfg.synth.n, s);
    CsvBuilder csv({"x", "y", "alpha"});
    for (Index i = 0; i < d.x.size(); ++i) csv.row({fmt(d.x[i]), fmt(d.y[i]), fmt(d.alpha[i])});
    ctx.write("data.csv", csv.str());
    return;
  }
  std::vector<std::pair<std::string, Index>> splits = cfg.synth.splits;
  if (splits.empty()) splits.emplace_back("claims", cfg.synth.n);
  Index total = 0;
  for (const auto& [name, size] : splits) total += size;
  const ClaimMixture mix = synth_claim_mixture(std::max<Index>(total, 1), s);
  const std::vector<std::string> methods = {"m0", "m1", "m2", "m3"};
  Index next = 0;
  for (const auto& [name, size] : splits) {
    ClaimDataset out;
    for (Index i = 0; i < size; ++i, ++next) {
      const EnsemblePrompt& p = mix.prompts[static_cast<std::size_t>(next)];
      ClaimRecord rec;
      rec.id = "p" + std::to_string(next);
      rec.group = "g" + std::to_string(mix.groups[static_cast<std::size_t>(next)]);
      rec.features["group"] = mix.groups[static_cast<std::size_t>(next)];
      for (Index j = 0; j < p.base_scores.rows(); ++j) {
        ClaimEntry e;
        for (Index m = 0; m < p.base_scores.cols(); ++m) e.scores[methods[static_cast<std::size_t>(m)]] = p.base_scores(j, m);
        e.annotation = p.annotations[static_cast<std::size_t>(j)];
        rec.claims.push_back(std::move(e));
      }
      out.records.push_back(std::move(rec));
    }
    ctx.write(name + ".jsonl", dump_claims(out));
  }
}

void cmd_boost(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ClaimDataset data = load_role(ctx, "boost", cfg.data.boost);
  if (data.records.empty()) throw InsufficientDataError("boosting data is empty");
  const Vector theta0 = ensemble_weights(cfg, data.methods);
  std::vector<EnsemblePrompt> prompts;
  for (const auto& r : data.records) {
    EnsemblePrompt p;
    p.base_scores.resize(static_cast<Index>(r.claims.size()), static_cast<Index>(data.methods.size()));
    for (std::size_t j = 0; j < r.claims.size(); ++j) {
      for (std::size_t m = 0; m < data.methods.size(); ++m) {
        p.base_scores(static_cast<Index>(j), static_cast<Index>(m)) = r.claims[j].scores.at(data.methods[m]);
      }
      p.annotations.push_back(r.claims[j].annotation);
    }
    prompts.push_back(std::move(p));
  }
  ClaimEnsembleModel model(std::move(prompts), MonotoneLoss::count_false(cfg.loss_budget),
                           cfg.boosting.sigmoid_temperature);
  BoostConfig bc = cfg.boosting;
  bc.seed = cfg.boosting.seed != 0 ? cfg.boosting.seed : ctx.seed("boost");
  ctx.seeds["boost_steps"] = bc.seed;
  const FeatureMatrix phi = class_features(data, cfg.function_class);
  const BoostResult res = conditional_boost(model, phi, LevelVector::constant(phi.rows(), cfg.level.alpha), theta0, bc);

  json art = json::object();
  art["methods"] = data.methods;
  art["weights"] = weights_json(data.methods, res.theta);
  art["initial_weights"] = weights_json(data.methods, theta0);
  art["steps"] = bc.steps;
  art["config_hash"] = config_hash(cfg);
  ctx.write("theta.json", art.dump(2) + "\n");

  CsvBuilder traj({"step", "objective"});
  for (std::size_t t = 0; t < res.objective.size(); ++t) traj.row({std::to_string(t), fmt(res.objective[t])});
  ctx.write("trajectory.csv", traj.str());
}

void cmd_estimate_alpha(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& ae = cfg.alpha_estimation;
  if (ae.criterion.kind != QualityCriterion::Kind::retention_at_least) {
    throw ValidationError("claim data supports the retention_at_least criterion only");
  }
  const ClaimDataset data = load_role(ctx, "boost", cfg.data.boost);
  if (!cfg.data.calibration.empty()) load_role(ctx, "calibration", cfg.data.calibration);
  if (data.records.empty()) throw InsufficientDataError("alpha-estimation data is empty");

  const Vector w = ensemble_weights(cfg, data.methods);
  const MonotoneLoss loss = MonotoneLoss::count_false(cfg.loss_budget);
  std::vector<ScoredClaimSet> sets;
  std::vector<double> raw;
  for (const auto& r : data.records) {
    sets.push_back(weighted_claims(r, data.methods, w));
    raw.push_back(score_from_loss(sets.back(), loss));
  }
  LevelEstimationData est;
  std::vector<std::string> names;
  est.features = class_features(data, cfg.function_class, &names);
  est.scores = finite_conformity_scores(raw, lowest_claim_score({&data}, data.methods, w));
  // nothing can be lost from an empty claim set
  est.measure = [&sets](Index i, double tau) {
    const ScoredClaimSet& s = sets[static_cast<std::size_t>(i)];
    if (s.size() == 0) return 1.0;
    return static_cast<double>(filter(s, tau).size()) / static_cast<double>(s.size());
  };
  LevelEstimateOptions opts;
  opts.grid = ae.grid;
  opts.criterion = ae.criterion;
  opts.fit_quantile = ae.fit_quantile;
  opts.lo = ae.lo;
  opts.hi = ae.hi;
  opts.seed = ctx.seed("level-folds");
  const LevelEstimate res = estimate_level_function(est, opts);

  json art = json::object();
  art["columns"] = names;
  art["coefficients"] = std::vector<double>(res.function.coefficients.data(),
                                            res.function.coefficients.data() + res.function.coefficients.size());
  art["fit_quantile"] = res.function.fit_quantile;
  art["lo"] = res.function.lo;
  art["hi"] = res.function.hi;
  art["config_hash"] = config_hash(cfg);
  ctx.write("level_function.json", art.dump(2) + "\n");

  CsvBuilder csv({"id", "alpha_star"});
  for (std::size_t j = 0; j < res.fold2.size(); ++j) {
    csv.row({data.records[static_cast<std::size_t>(res.fold2[j])].id, fmt(res.alpha_star[static_cast<Index>(j)])});
  }
  ctx.write("alpha_star.csv", csv.str());
}

void cmd_calibrate(Context& ctx) {
  const ClaimDataset calib = load_role(ctx, "calibration", ctx.cfg.data.calibration);
  const ClaimDataset test = load_role(ctx, "test", ctx.cfg.data.test);
  const CutoffRun run = compute_cutoffs(ctx, calib, test);
  CsvBuilder csv({"id", "tau", "alpha", "nominal", "randomized", "u", "eta_test"});
  for (std::size_t i = 0; i < run.cutoffs.size(); ++i) {
    const Cutoff& c = run.cutoffs[i];
    csv.row({test.records[i].id, fmt(c.tau), fmt(run.alphas[i]), fmt(1.0 - run.alphas[i]), c.randomized ? "1" : "0",
             c.u ? fmt(*c.u) : "", fmt(c.eta_test)});
  }
  ctx.write("cutoffs.csv", csv.str());
}

void cmd_filter(Context& ctx) {
  const ClaimDataset test = load_role(ctx, "test", ctx.cfg.data.test);
  std::string out;
  if (!test.records.empty()) {
    const ClaimDataset calib = load_role(ctx, "calibration", ctx.cfg.data.calibration);
    const CutoffRun run = compute_cutoffs(ctx, calib, test);
    for (std::size_t i = 0; i < test.records.size(); ++i) {
      const ScoredClaimSet s = weighted_claims(test.records[i], run.methods, run.weights);
      json j = json::object();
      j["id"] = test.records[i].id;
      j["tau"] = std::isfinite(run.cutoffs[i].tau) ? json(run.cutoffs[i].tau) : json(fmt(run.cutoffs[i].tau));
      j["retained"] = filter(s, run.cutoffs[i].tau);
      out += j.dump() + "\n";
    }
  }
  ctx.write("retained.jsonl", out);
}

void evaluate_experiment(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const std::string& name = cfg.experiment;
  if (name == "boosting_comparison") {
    BoostingComparisonConfig c;
    c.boost = cfg.boosting;
    c.seed = ctx.seed("experiment");
    const BoostingComparisonResult r = run_boosting_comparison(c);
    CsvBuilder csv({"decile_lo", "decile_hi", "initial", "conditional", "marginal"});
    for (std::size_t k = 0; k + 1 < r.decile_edges.size(); ++k) {
      csv.row({fmt(r.decile_edges[k]), fmt(r.decile_edges[k + 1]), fmt(r.initial.coverage[k]),
               fmt(r.conditional.coverage[k]), fmt(r.marginal.coverage[k])});
    }
    ctx.write("decile_coverage.csv", csv.str());
    CsvBuilder len({"method", "mean_length", "theta1", "theta2"});
    len.row({"initial", fmt(r.initial.mean_length), fmt(r.theta_init[0]), fmt(r.theta_init[1])});
    len.row({"conditional", fmt(r.conditional.mean_length), fmt(r.theta_conditional[0]), fmt(r.theta_conditional[1])});
    len.row({"marginal", fmt(r.marginal.mean_length), fmt(r.theta_marginal[0]), fmt(r.theta_marginal[1])});
    ctx.write("interval_length.csv", len.str());
  } else if (name == "length_control") {
    LengthControlConfig c;
    c.seed = ctx.seed("experiment");
    const LengthControlResult r = run_length_control(c);
    ctx.write("calibration.csv", bin_report_csv(r.curve));
    CsvBuilder csv({"trial", "length", "nominal", "oracle_coverage"});
    for (std::size_t t = 0; t < r.lengths.size(); ++t) {
      csv.row({std::to_string(t), fmt(r.lengths[t]), fmt(r.nominal[t]), fmt(r.coverage[t])});
    }
    ctx.write("lengths.csv", csv.str());
  } else if (name == "level_calibration") {
    for (bool with_alpha : {true, false}) {
      LevelCalibrationConfig c;
      c.include_alpha_feature = with_alpha;
      c.seed = ctx.seed("experiment");
      const LevelCalibrationResult r = run_level_calibration(c);
      ctx.write(with_alpha ? "calibration_alpha_class.csv" : "calibration_intercept_only.csv", bin_report_csv(r.curve));
    }
  } else if (name == "group_coverage") {
    GroupCoverageConfig c;
    c.seed = ctx.seed("experiment");
    ctx.write("coverage_groups.csv", group_report_csv(run_group_coverage(c).report));
  } else if (name == "marginal_coverage") {
    MarginalCoverageConfig c;
    c.seed = ctx.seed("experiment");
    const MarginalCoverageResult r = run_marginal_coverage(c);
    std::vector<std::string> labels(r.outcomes.size(), "all");
    ctx.write("coverage_groups.csv",
              group_report_csv(coverage_by_group(r.outcomes, labels, {"all"},
                                                 std::vector<double>(r.outcomes.size(), 1.0 - c.alpha))));
  } else {
    throw ValidationError("unknown experiment '" + name + "'");
  }
}

void cmd_evaluate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  if (!cfg.experiment.empty()) {
    evaluate_experiment(ctx);
    return;
  }
  const ClaimDataset calib = load_role(ctx, "calibration", cfg.data.calibration);
  const ClaimDataset test = load_role(ctx, "test", cfg.data.test);
  const CutoffRun run = compute_cutoffs(ctx, calib, test);
  const MonotoneLoss loss = MonotoneLoss::count_false(cfg.loss_budget);

  std::vector<double> outcomes, nominal;
  std::vector<std::string> labels;
  std::vector<ScoredClaimSet> sets;
  std::vector<std::vector<std::size_t>> kept;
  std::set<std::string> groups;
  for (std::size_t i = 0; i < test.records.size(); ++i) {
    ScoredClaimSet s = weighted_claims(test.records[i], run.methods, run.weights);
    std::vector<std::size_t> k = filter(s, run.cutoffs[i].tau);
    outcomes.push_back(loss.evaluate(k, s.annotations) <= loss.budget ? 1.0 : 0.0);
    nominal.push_back(1.0 - run.alphas[i]);
    labels.push_back(test.records[i].group);
    groups.insert(test.records[i].group);
    sets.push_back(std::move(s));
    kept.push_back(std::move(k));
  }
  ctx.write("calibration.csv", bin_report_csv(calibration_curve(nominal, outcomes, cfg.report_bins)));
  ctx.write("coverage_groups.csv",
            group_report_csv(coverage_by_group(outcomes, labels, {groups.begin(), groups.end()}, nominal)));

  CsvBuilder csv({"id", "claims", "retained", "fraction"});
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::size_t k = sets[i].size();
    csv.row({test.records[i].id, std::to_string(k), std::to_string(kept[i].size()),
             k == 0 ? "" : fmt(static_cast<double>(kept[i].size()) / static_cast<double>(k))});
  }
  ctx.write("retention.csv", csv.str());
  const RetentionSummary rs = retention_stats(sets, kept);
  if (rs.empty_sets > 0) {
    ctx.result.warnings.push_back(std::to_string(rs.empty_sets) + " test outputs have no claims (controlled, retention 0)");
  }
}

}  // namespace

Vector ensemble_weights(const RunConfig& config, const std::vector<std::string>& methods) {
  if (methods.empty()) throw SchemaError("no claim score methods available");
  std::map<std::string, double> w = config.scoring.weights;
  if (!config.scoring.theta_file.empty()) {
    std::ifstream in(config.scoring.theta_file);
    if (!in) throw IoError("cannot open theta file '" + config.scoring.theta_file + "'");
    try {
      json j;
      in >> j;
      w = j.at("weights").get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
      throw SchemaError("theta file '" + config.scoring.theta_file + "': " + e.what());
    }
  }
  Vector out = Vector::Zero(static_cast<Index>(methods.size()));
  if (w.empty()) {
    out.setConstant(1.0 / static_cast<double>(methods.size()));
    return out;
  }
  for (const auto& [name, value] : w) {
    const auto it = std::find(methods.begin(), methods.end(), name);
    if (it == methods.end()) throw SchemaError("score method '" + name + "' is not present on every claim");
    out[it - methods.begin()] = value;
  }
  return out;
}

FeatureMatrix class_features(const ClaimDataset& data, const FunctionClassSpec& fc,
                             std::vector<std::string>* names) {
  for (const auto& f : fc.features) {
    if (!data.records.empty() &&
        std::find(data.feature_names.begin(), data.feature_names.end(), f) == data.feature_names.end()) {
      throw SchemaError("function class feature '" + f + "' is not in the data");
    }
  }
  const Index cols = (fc.intercept ? 1 : 0) + static_cast<Index>(fc.features.size()) +
                     static_cast<Index>(fc.groups.size());
  if (cols == 0) throw ValidationError("function class has no columns");
  std::vector<std::string> labels;
  if (fc.intercept) labels.push_back("intercept");
  for (const auto& f : fc.features) labels.push_back(f);
  for (const auto& g : fc.groups) labels.push_back("group=" + g);
  if (names) *names = labels;

  Matrix m = Matrix::Zero(static_cast<Index>(data.records.size()), cols);
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const ClaimRecord& r = data.records[i];
    Index c = 0;
    if (fc.intercept) m(static_cast<Index>(i), c++) = 1.0;
    for (const auto& f : fc.features) m(static_cast<Index>(i), c++) = r.features.at(f);
    for (const auto& g : fc.groups) m(static_cast<Index>(i), c++) = r.group == g ? 1.0 : 0.0;
  }
  return FeatureMatrix(std::move(m), fc.intercept ? std::optional<Index>(0) : std::nullopt);
}

ScoredClaimSet weighted_claims(const ClaimRecord& record, const std::vector<std::string>& methods,
                               const Vector& weights) {
  ScoredClaimSet s;
  for (const auto& c : record.claims) {
    double p = 0.0;
    for (std::size_t m = 0; m < methods.size(); ++m) p += weights[static_cast<Index>(m)] * c.scores.at(methods[m]);
    s.claim_scores.push_back(p);
    s.annotations.push_back(c.annotation);
    s.texts.push_back(c.text);
  }
  return s;
}

void SplitRegistry::add(const std::string& role, const ClaimDataset& data) {
  auto& ids = roles_[role];
  for (const auto& r : data.records) {
    const auto [it, inserted] = owner_.emplace(r.id, role);
    if (!inserted && it->second != role) {
      throw ValidationError("id '" + r.id + "' appears in both '" + it->second + "' and '" + role + "' data");
    }
    ids.push_back(r.id);
  }
}

CommandResult run_command(const std::string& command, const RunConfig& config) {
  Context ctx{config, {}, json::object(), {}};
  if (command == "synth") cmd_synth(ctx);
  else if (command == "calibrate") cmd_calibrate(ctx);
  else if (command == "filter") cmd_filter(ctx);
  else if (command == "boost") cmd_boost(ctx);
  else if (command == "estimate-alpha") cmd_estimate_alpha(ctx);
  else if (command == "evaluate") cmd_evaluate(ctx);
  else throw ValidationError("unknown command '" + command + "'");

  json manifest = json::object();
  manifest["command"] = command;
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.seed;
  manifest["seeds"] = ctx.seeds;
  manifest["outputs"] = ctx.result.outputs;
  manifest["splits"] = ctx.splits.roles();
  manifest["warnings"] = ctx.result.warnings;
  ctx.write("manifest_" + command + ".json", manifest.dump(2) + "\n");
  return ctx.result;
}

}  // namespace condconf::cli
