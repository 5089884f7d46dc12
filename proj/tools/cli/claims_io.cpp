#include "cli/claims_io.hpp"

#include "condconf/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>

namespace condconf::cli {

using nlohmann::json;

namespace {

[[noreturn]] void schema(std::size_t line, const std::string& what) {
  throw SchemaError("line " + std::to_string(line) + ": " + what);
}

std::map<std::string, double> number_map(const json& obj, std::size_t line, const char* field) {
  if (!obj.is_object()) schema(line, std::string("'") + field + "' must be an object");
  std::map<std::string, double> out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!it.value().is_number()) schema(line, std::string("'") + field + "." + it.key() + "' must be a number");
    out.emplace(it.key(), it.value().get<double>());
  }
  return out;
}

ClaimRecord parse_record(const json& j, std::size_t line) {
  if (!j.is_object()) schema(line, "record must be a JSON object");
  ClaimRecord rec;
  if (!j.contains("id") || !j["id"].is_string()) schema(line, "missing string field 'id'");
  rec.id = j["id"].get<std::string>();
  if (j.contains("group")) {
    if (!j["group"].is_string()) schema(line, "'group' must be a string");
    rec.group = j["group"].get<std::string>();
  }
  if (j.contains("features")) rec.features = number_map(j["features"], line, "features");
  if (!j.contains("claims") || !j["claims"].is_array()) schema(line, "missing array field 'claims'");
  std::size_t k = 0;
  for (const auto& c : j["claims"]) {
    const std::string where = "claims[" + std::to_string(k++) + "]";
    if (!c.is_object()) schema(line, where + " must be an object");
    ClaimEntry e;
    if (!c.contains("scores")) schema(line, where + " is missing 'scores'");
    e.scores = number_map(c["scores"], line, "scores");
    if (!c.contains("annotation")) schema(line, where + " is missing 'annotation'");
    const json& a = c["annotation"];
    if (!a.is_number_integer() || (a.get<int>() != 0 && a.get<int>() != 1)) {
      schema(line, where + ".annotation must be 0 or 1");
    }
    e.annotation = a.get<int>();
    if (c.contains("text")) {
      if (!c["text"].is_string()) schema(line, where + ".text must be a string");
      e.text = c["text"].get<std::string>();
    }
    rec.claims.push_back(std::move(e));
  }
  return rec;
}

}  // namespace

ClaimDataset load_claims(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open claims file '" + path + "'");
  ClaimDataset data;
  std::set<std::string> ids;
  std::optional<std::set<std::string>> shared;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    ClaimRecord rec = parse_record(j, line);
    if (!ids.insert(rec.id).second) schema(line, "duplicate id '" + rec.id + "'");

    std::vector<std::string> names;
    for (const auto& [name, v] : rec.features) names.push_back(name);
    if (data.records.empty()) {
      data.feature_names = names;
    } else if (names != data.feature_names) {
      schema(line, "feature names differ from earlier records");
    }
    for (const auto& c : rec.claims) {
      std::set<std::string> here;
      for (const auto& [m, v] : c.scores) here.insert(m);
      if (!shared) {
        shared = here;
      } else {
        std::set<std::string> keep;
        std::set_intersection(shared->begin(), shared->end(), here.begin(), here.end(),
                              std::inserter(keep, keep.begin()));
        shared = std::move(keep);
      }
      if (shared->empty()) schema(line, "no score method is shared by all claims");
    }
    data.records.push_back(std::move(rec));
  }
  if (shared) data.methods.assign(shared->begin(), shared->end());
  if (data.records.empty()) data.warnings.push_back("claims file '" + path + "' holds no records");
  return data;
}

std::string dump_claims(const ClaimDataset& data) {
  std::ostringstream out;
  for (const auto& rec : data.records) {
    json j = json::object();
    j["id"] = rec.id;
    j["group"] = rec.group;
    j["features"] = json::object();
    for (const auto& [k, v] : rec.features) j["features"][k] = v;
    j["claims"] = json::array();
    for (const auto& c : rec.claims) {
      json cj = json::object();
      cj["scores"] = json::object();
      for (const auto& [k, v] : c.scores) cj["scores"][k] = v;
      cj["annotation"] = c.annotation;
      if (!c.text.empty()) cj["text"] = c.text;
      j["claims"].push_back(std::move(cj));
    }
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace condconf::cli
