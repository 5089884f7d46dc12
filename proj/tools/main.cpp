#include "cli/commands.hpp"
#include "cli/run_config.hpp"

#include "condconf/errors.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

// Overrides are folded into the JSON before parsing so they land in the config hash.
condconf::cli::RunConfig read_config(const std::string& path, const std::optional<std::uint64_t>& seed,
                                     const std::optional<std::string>& out) {
  std::ifstream in(path);
  if (!in) throw condconf::IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw condconf::ParseError(0, std::string("config is not valid JSON: ") + e.what());
  }
  if (j.is_object()) {
    if (seed) j["seed"] = *seed;
    if (out) j["output_dir"] = *out;
  }
  return condconf::cli::parse_config(j.dump());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional conformal calibration and claim filtering"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  app.add_option("command,--command", command, "synth | boost | estimate-alpha | calibrate | filter | evaluate")
      ->required()
      ->check(CLI::IsMember(condconf::cli::kCommands));
  app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed override");
  app.add_option("--out", out, "output directory override");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = read_config(config_path, seed, out);
    const auto result = condconf::cli::run_command(command, cfg);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& f : result.outputs) std::cout << cfg.output_dir << "/" << f << "\n";
    return 0;
  } catch (const condconf::Error& e) {
    std::cerr << "error[" << condconf::category_name(e.category()) << "]: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
