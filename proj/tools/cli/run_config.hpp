#pragma once

#include "condconf/boosting.hpp"
#include "condconf/level_policy.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace condconf::cli {

struct DataPaths {
  std::string boost;        ///< boosting / alpha-estimation split
  std::string calibration;
  std::string test;
};

struct FunctionClassSpec {
  bool intercept = true;
  std::vector<std::string> features;  ///< record feature names used as columns
  std::vector<std::string> groups;    ///< one indicator column per listed group label
  std::vector<double> alpha_bins;     ///< adaptive level only: alpha-bin indicators
  bool alpha_linear = true;           ///< adaptive level only: alpha as a column
  std::optional<double> alpha_square_center;
};

struct LevelSpec {
  bool adaptive = false;
  double alpha = 0.1;
  bool randomized = true;
  std::string level_function;  ///< path of an estimate-alpha artifact (adaptive)
};

struct ScoringSpec {
  std::map<std::string, double> weights;  ///< empty: uniform over shared methods
  std::string theta_file;                 ///< boost artifact overriding `weights`
};

struct SynthSpec {
  std::string kind = "claims";  ///< claims | hetero | gaussian_alpha
  Index n = 1000;
  std::vector<std::pair<std::string, Index>> splits;  ///< claims: named split sizes
};

struct AlphaEstimationSpec {
  std::vector<double> grid = default_alpha_grid();
  QualityCriterion criterion = QualityCriterion::retention_at_least(0.7);
  double fit_quantile = 0.85;
  double lo = 0.1;
  double hi = 0.5;
};

struct RunConfig {
  DataPaths data;
  FunctionClassSpec function_class;
  double loss_budget = 0.0;  ///< count_false lambda
  LevelSpec level;
  ScoringSpec scoring;
  BoostConfig boosting{1e-3, 500, 1.0, 0.5, 0, false};
  AlphaEstimationSpec alpha_estimation;
  SynthSpec synth;
  std::string experiment;  ///< evaluate: named synthetic experiment instead of claim data
  std::vector<double> report_bins = {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0};
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  std::string canonical_text;  ///< normalized JSON text the config hash is taken over
};

/// Parses and validates a JSON config file. Unknown top-level keys are a
/// schema error so typos do not silently fall back to defaults.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

std::string config_hash(const RunConfig& config);

}  // namespace condconf::cli
