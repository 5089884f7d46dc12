#include "cli/run_config.hpp"

#include "condconf/errors.hpp"
#include "condconf/rng.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace condconf::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw SchemaError("config: " + what); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad("'" + where + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) bad("unknown key '" + where + "." + it.key() + "'");
  }
}

template <class T>
T get(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("key '") + key + "' has the wrong type");
  }
}

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) bad("'" + where + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) bad("'" + where + "' must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (!v.is_array()) bad("'" + where + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) bad("'" + where + "' must be an array of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(root, "config", {"data", "function_class", "loss", "level", "scoring", "boosting",
                             "alpha_estimation", "synth", "experiment", "report_bins", "output_dir", "seed"});
  RunConfig cfg;

  if (root.contains("data")) {
    const json& d = root["data"];
    only_keys(d, "data", {"boost", "calibration", "test"});
    cfg.data.boost = get<std::string>(d, "boost", "");
    cfg.data.calibration = get<std::string>(d, "calibration", "");
    cfg.data.test = get<std::string>(d, "test", "");
  }
  if (root.contains("function_class")) {
    const json& f = root["function_class"];
    only_keys(f, "function_class", {"intercept", "features", "groups", "alpha_bins", "alpha_linear", "alpha_square_center"});
    auto& fc = cfg.function_class;
    fc.intercept = get<bool>(f, "intercept", true);
    if (f.contains("features")) fc.features = string_list(f["features"], "function_class.features");
    if (f.contains("groups")) fc.groups = string_list(f["groups"], "function_class.groups");
    if (f.contains("alpha_bins")) fc.alpha_bins = number_list(f["alpha_bins"], "function_class.alpha_bins");
    fc.alpha_linear = get<bool>(f, "alpha_linear", true);
    if (f.contains("alpha_square_center")) fc.alpha_square_center = get<double>(f, "alpha_square_center", 0.0);
  }
  if (root.contains("loss")) {
    const json& l = root["loss"];
    only_keys(l, "loss", {"kind", "budget"});
    if (get<std::string>(l, "kind", "count_false") != "count_false") {
      bad("loss.kind must be 'count_false' (custom losses are library-only)");
    }
    cfg.loss_budget = get<double>(l, "budget", 0.0);
    if (!(cfg.loss_budget >= 0.0)) bad("loss.budget must be non-negative");
  }
  if (root.contains("level")) {
    const json& l = root["level"];
    only_keys(l, "level", {"mode", "alpha", "randomized", "level_function"});
    const std::string mode = get<std::string>(l, "mode", "fixed");
    if (mode != "fixed" && mode != "adaptive") bad("level.mode must be 'fixed' or 'adaptive'");
    cfg.level.adaptive = mode == "adaptive";
    cfg.level.alpha = get<double>(l, "alpha", 0.1);
    cfg.level.randomized = get<bool>(l, "randomized", true);
    cfg.level.level_function = get<std::string>(l, "level_function", "");
  }
  if (!(cfg.level.alpha > 0.0 && cfg.level.alpha < 1.0)) bad("level.alpha must lie in (0, 1)");
  if (root.contains("scoring")) {
    const json& s = root["scoring"];
    only_keys(s, "scoring", {"weights", "theta_file"});
    if (s.contains("weights")) {
      if (!s["weights"].is_object()) bad("scoring.weights must be an object");
      for (auto it = s["weights"].begin(); it != s["weights"].end(); ++it) {
        if (!it.value().is_number()) bad("scoring.weights values must be numbers");
        cfg.scoring.weights[it.key()] = it.value().get<double>();
      }
    }
    cfg.scoring.theta_file = get<std::string>(s, "theta_file", "");
  }
  if (root.contains("boosting")) {
    const json& b = root["boosting"];
    only_keys(b, "boosting", {"learning_rate", "steps", "temperature", "split_fraction", "seed", "full_basis"});
    cfg.boosting.learning_rate = get<double>(b, "learning_rate", cfg.boosting.learning_rate);
    cfg.boosting.steps = get<int>(b, "steps", cfg.boosting.steps);
    cfg.boosting.sigmoid_temperature = get<double>(b, "temperature", cfg.boosting.sigmoid_temperature);
    cfg.boosting.split_fraction = get<double>(b, "split_fraction", cfg.boosting.split_fraction);
    cfg.boosting.seed = get<std::uint64_t>(b, "seed", 0);
    cfg.boosting.use_full_basis = get<bool>(b, "full_basis", false);
  }
  cfg.boosting.validate();
  if (root.contains("alpha_estimation")) {
    const json& a = root["alpha_estimation"];
    only_keys(a, "alpha_estimation", {"grid", "criterion", "fit_quantile", "truncation"});
    auto& ae = cfg.alpha_estimation;
    if (a.contains("grid")) {
      const json& g = a["grid"];
      if (g.is_string()) {
        const std::string name = g.get<std::string>();
        if (name == "default") ae.grid = default_alpha_grid();
        else if (name == "even50") ae.grid = even_alpha_grid(50);
        else bad("alpha_estimation.grid must be 'default', 'even50' or a list");
      } else {
        ae.grid = number_list(g, "alpha_estimation.grid");
      }
    }
    if (a.contains("criterion")) {
      const json& c = a["criterion"];
      only_keys(c, "alpha_estimation.criterion", {"kind", "threshold"});
      const std::string kind = get<std::string>(c, "kind", "retention_at_least");
      const double thr = get<double>(c, "threshold", 0.7);
      if (kind == "retention_at_least") ae.criterion = QualityCriterion::retention_at_least(thr);
      else if (kind == "interval_length_at_most") ae.criterion = QualityCriterion::length_at_most(thr);
      else bad("unknown criterion kind '" + kind + "'");
    }
    ae.fit_quantile = get<double>(a, "fit_quantile", ae.fit_quantile);
    if (a.contains("truncation")) {
      const auto t = number_list(a["truncation"], "alpha_estimation.truncation");
      if (t.size() != 2) bad("alpha_estimation.truncation must be [lo, hi]");
      ae.lo = t[0];
      ae.hi = t[1];
    }
  }
  if (root.contains("synth")) {
    const json& s = root["synth"];
    only_keys(s, "synth", {"kind", "n", "splits"});
    cfg.synth.kind = get<std::string>(s, "kind", "claims");
    if (cfg.synth.kind != "claims" && cfg.synth.kind != "hetero" && cfg.synth.kind != "gaussian_alpha") {
      bad("synth.kind must be claims, hetero or gaussian_alpha");
    }
    cfg.synth.n = get<Index>(s, "n", cfg.synth.n);
    if (cfg.synth.n < 1) bad("synth.n must be positive");
    if (s.contains("splits")) {
      if (!s["splits"].is_object()) bad("synth.splits must be an object of sizes");
      for (auto it = s["splits"].begin(); it != s["splits"].end(); ++it) {
        if (!it.value().is_number_integer() || it.value().get<Index>() < 0) bad("synth.splits sizes must be integers >= 0");
        cfg.synth.splits.emplace_back(it.key(), it.value().get<Index>());
      }
    }
  }
  cfg.experiment = get<std::string>(root, "experiment", "");
  if (root.contains("report_bins")) cfg.report_bins = number_list(root["report_bins"], "report_bins");
  cfg.output_dir = get<std::string>(root, "output_dir", cfg.output_dir);
  cfg.seed = get<std::uint64_t>(root, "seed", 0);
  cfg.canonical_text = root.dump();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_hash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.canonical_text)));
  return buf;
}

}  // namespace condconf::cli
