#pragma once

#include "cli/claims_io.hpp"
#include "cli/run_config.hpp"

#include "condconf/conformal.hpp"

#include <map>
#include <string>
#include <vector>

namespace condconf::cli {

inline const std::vector<std::string> kCommands = {"synth", "calibrate", "filter", "boost", "estimate-alpha",
                                                   "evaluate"};

struct CommandResult {
  std::vector<std::string> outputs;  ///< files written, relative to the output dir
  std::vector<std::string> warnings;
};

/// Runs one command; every command also writes manifest_<command>.json with
/// the config hash, seeds, outputs and the ids used in each data role.
CommandResult run_command(const std::string& command, const RunConfig& config);

// Pieces shared by the commands, exposed for tests.

/// Claim-score weights over `methods`: a boost artifact, explicit weights, or uniform.
Vector ensemble_weights(const RunConfig& config, const std::vector<std::string>& methods);

/// Columns of the configured function class; `names` receives column labels.
FeatureMatrix class_features(const ClaimDataset& data, const FunctionClassSpec& fc,
                             std::vector<std::string>* names = nullptr);

ScoredClaimSet weighted_claims(const ClaimRecord& record, const std::vector<std::string>& methods,
                               const Vector& weights);

/// Records each id under one role; an id seen under two roles throws.
class SplitRegistry {
 public:
  void add(const std::string& role, const ClaimDataset& data);
  const std::map<std::string, std::vector<std::string>>& roles() const { return roles_; }

 private:
  std::map<std::string, std::string> owner_;
  std::map<std::string, std::vector<std::string>> roles_;
};

}  // namespace condconf::cli
