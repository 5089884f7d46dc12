#pragma once

#include <map>
#include <string>
#include <vector>

namespace condconf::cli {

struct ClaimEntry {
  std::map<std::string, double> scores;  ///< method name -> confidence
  int annotation = 0;                    ///< 1 = true claim
  std::string text;
};

struct ClaimRecord {
  std::string id;
  std::string group;
  std::map<std::string, double> features;
  std::vector<ClaimEntry> claims;
};

struct ClaimDataset {
  std::vector<ClaimRecord> records;
  std::vector<std::string> feature_names;  ///< shared by every record
  std::vector<std::string> methods;        ///< score methods present on every claim
  std::vector<std::string> warnings;
};

/// Newline-delimited JSON, one record per line. Blank lines are skipped.
/// Throws IoError, ParseError (with line number) or SchemaError.
ClaimDataset load_claims(const std::string& path);

/// Serializes one record per line with keys in a fixed order.
std::string dump_claims(const ClaimDataset& data);

}  // namespace condconf::cli
