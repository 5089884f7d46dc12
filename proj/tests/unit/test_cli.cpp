#include "cli/claims_io.hpp"
#include "cli/commands.hpp"
#include "cli/reports.hpp"
#include "cli/run_config.hpp"

#include "condconf/errors.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace condconf;
using namespace condconf::cli;
namespace fs = std::filesystem;

namespace {

class Workdir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("condconf_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void put(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }
  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // claims splits written by the synth command
  RunConfig synth_config(Index boost, Index calib, Index test) const {
    std::ostringstream cfg;
    cfg << R"({"synth": {"kind": "claims", "splits": {"boost": )" << boost << R"(, "calib": )" << calib
        << R"(, "test": )" << test << R"(}}, "seed": 21, "output_dir": ")" << path("data") << "\"}";
    return parse_config(cfg.str());
  }

  RunConfig run_config(const std::string& extra = "") const {
    return parse_config(R"({"data": {"boost": ")" + path("data/boost.jsonl") + R"(", "calibration": ")" +
                        path("data/calib.jsonl") + R"(", "test": ")" + path("data/test.jsonl") +
                        R"("}, "output_dir": ")" + path("out") + "\"" + extra + "}");
  }

  fs::path dir_;
};

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

using ClaimsIo = Workdir;
using Config = Workdir;
using Reports = Workdir;
using Commands = Workdir;

TEST_F(ClaimsIo, EmptyFileWarns) {
  put("e.jsonl", "");
  const auto d = load_claims(path("e.jsonl"));
  EXPECT_TRUE(d.records.empty());
  EXPECT_EQ(d.warnings.size(), 1u);
}

TEST_F(ClaimsIo, MissingAnnotationNamesTheLine) {
  put("m.jsonl",
      "{\"id\":\"a\",\"claims\":[{\"scores\":{\"s\":0.5},\"annotation\":1}]}\n"
      "{\"id\":\"b\",\"claims\":[{\"scores\":{\"s\":0.5}}]}\n");
  try {
    load_claims(path("m.jsonl"));
    FAIL() << "expected a schema error";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST_F(ClaimsIo, MalformedLineIsAParseError) {
  put("p.jsonl", "{\"id\":\"a\",\"claims\":[]}\n\n{oops\n");
  try {
    load_claims(path("p.jsonl"));
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST_F(ClaimsIo, SchemaViolations) {
  put("f.jsonl",
      "{\"id\":\"a\",\"features\":{\"x\":1},\"claims\":[]}\n"
      "{\"id\":\"b\",\"features\":{\"y\":1},\"claims\":[]}\n");
  EXPECT_THROW(load_claims(path("f.jsonl")), SchemaError);
  put("d.jsonl", "{\"id\":\"a\",\"claims\":[]}\n{\"id\":\"a\",\"claims\":[]}\n");
  EXPECT_THROW(load_claims(path("d.jsonl")), SchemaError);
  put("n.jsonl", "{\"id\":\"a\",\"claims\":[{\"scores\":{\"s\":1},\"annotation\":2}]}\n");
  EXPECT_THROW(load_claims(path("n.jsonl")), SchemaError);
  put("s.jsonl",
      "{\"id\":\"a\",\"claims\":[{\"scores\":{\"s\":1},\"annotation\":1},{\"scores\":{\"t\":1},\"annotation\":1}]}\n");
  EXPECT_THROW(load_claims(path("s.jsonl")), SchemaError);
  EXPECT_THROW(load_claims(path("absent.jsonl")), IoError);
}

TEST_F(ClaimsIo, RoundTrip) {
  ClaimDataset d;
  for (int i = 0; i < 5; ++i) {
    ClaimRecord r;
    r.id = "r" + std::to_string(i);
    r.group = i % 2 ? "x" : "y";
    r.features = {{"age", 0.1 * i}, {"len", 3.0 + i}};
    for (int j = 0; j <= i; ++j) {
      ClaimEntry c;
      c.scores = {{"m0", 0.3 + 0.01 * j}, {"m1", 1.0 / (j + 3)}};
      c.annotation = j % 2;
      if (j == 1) c.text = "claim \"quoted\", with comma";
      r.claims.push_back(c);
    }
    d.records.push_back(r);
  }
  put("rt.jsonl", dump_claims(d));
  const auto back = load_claims(path("rt.jsonl"));
  ASSERT_EQ(back.records.size(), d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    EXPECT_EQ(back.records[i].id, d.records[i].id);
    EXPECT_EQ(back.records[i].group, d.records[i].group);
    EXPECT_EQ(back.records[i].features, d.records[i].features);
    ASSERT_EQ(back.records[i].claims.size(), d.records[i].claims.size());
    for (std::size_t j = 0; j < d.records[i].claims.size(); ++j) {
      EXPECT_EQ(back.records[i].claims[j].scores, d.records[i].claims[j].scores);
      EXPECT_EQ(back.records[i].claims[j].annotation, d.records[i].claims[j].annotation);
      EXPECT_EQ(back.records[i].claims[j].text, d.records[i].claims[j].text);
    }
  }
  EXPECT_EQ(dump_claims(back), dump_claims(d));
}

TEST_F(Config, UnknownKeysAndRanges) {
  EXPECT_THROW(parse_config(R"({"levle": {}})"), SchemaError);
  EXPECT_THROW(parse_config(R"({"level": {"alpha": 1.5}})"), SchemaError);
  EXPECT_THROW(parse_config(R"({"level": {"mode": "sometimes"}})"), SchemaError);
  EXPECT_THROW(parse_config(R"({"boosting": {"temperature": 0}})"), ValidationError);
  EXPECT_THROW(parse_config("{not json"), ParseError);
}

TEST_F(Config, DefaultsAndGrids) {
  const auto c = parse_config("{}");
  EXPECT_EQ(c.level.alpha, 0.1);
  EXPECT_EQ(c.alpha_estimation.grid.size(), 99u);
  EXPECT_EQ(c.alpha_estimation.criterion.threshold, 0.7);
  const auto e = parse_config(R"({"alpha_estimation": {"grid": "even50", "truncation": [0.1, 0.5]}})");
  EXPECT_EQ(e.alpha_estimation.grid.size(), 50u);
}

TEST_F(Config, HashFollowsContent) {
  EXPECT_EQ(config_hash(parse_config(R"({"seed": 1})")), config_hash(parse_config(R"({ "seed" : 1 })")));
  EXPECT_NE(config_hash(parse_config(R"({"seed": 1})")), config_hash(parse_config(R"({"seed": 2})")));
  EXPECT_EQ(config_hash(parse_config("{}")).size(), 16u);
}

TEST_F(Reports, HeadersAndBounds) {
  const std::vector<double> nominal = {0.55, 0.6, 0.9, 0.93};
  const std::vector<double> out = {1, 0, 1, 1};
  const auto bins = bin_report_csv(calibration_curve(nominal, out, {0.5, 0.75, 1.0}));
  const auto rows = csv_rows(bins);
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(bins.substr(0, bins.find('\n')), kBinHeader);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double realized = std::stod(rows[r][3]);
    EXPECT_GE(realized, 0.0);
    EXPECT_LE(realized, 1.0);
  }
  EXPECT_EQ(bins, bin_report_csv(calibration_curve(nominal, out, {0.5, 0.75, 1.0})));
  const auto groups = group_report_csv(coverage_by_group(out, {"a", "a", "b", "b"}, {"a", "b"}, nominal));
  EXPECT_EQ(groups.substr(0, groups.find('\n')), kGroupHeader);
  // empty report still has its header
  EXPECT_EQ(bin_report_csv(CoverageReport{}), std::string(kBinHeader) + "\n");
}

TEST_F(Reports, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3, -2.5e-17, 12345.678}) EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(kInf), "inf");
  EXPECT_EQ(format_number(-kInf), "-inf");
}

TEST_F(Reports, UnwritableDirectoryIsAnIoError) {
  put("file", "x");
  EXPECT_THROW(write_file_atomic(path("file/sub/out.csv"), "a"), IoError);
  write_file_atomic(path("deep/er/out.csv"), "abc");
  EXPECT_EQ(read("deep/er/out.csv"), "abc");
}

TEST_F(Commands, CalibrateInterceptOnlyIsSplitConformal) {
  run_command("synth", synth_config(0, 150, 20));
  const auto cfg = run_config(R"(, "level": {"alpha": 0.1, "randomized": false})");
  run_command("calibrate", cfg);

  const auto calib = load_claims(path("data/calib.jsonl"));
  const Vector w = ensemble_weights(cfg, calib.methods);
  std::vector<double> raw;
  for (const auto& r : calib.records) raw.push_back(score_from_loss(weighted_claims(r, calib.methods, w), MonotoneLoss::count_false(0)));
  // -inf scores sit at the bottom whatever floor replaces them
  const double expect = oracle::order_statistic_cutoff(raw, 0.1);
  ASSERT_TRUE(std::isfinite(expect));

  const auto rows = csv_rows(read("out/cutoffs.csv"));
  ASSERT_EQ(rows.size(), 21u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"id", "tau", "alpha", "nominal", "randomized", "u", "eta_test"}));
  for (std::size_t r = 1; r < rows.size(); ++r) EXPECT_EQ(std::stod(rows[r][1]), expect);
}

TEST_F(Commands, PipelineIsReproducible) {
  run_command("synth", synth_config(120, 120, 60));
  const auto cfg = run_config(R"(, "boosting": {"steps": 5, "learning_rate": 0.01}, "function_class": {"groups": ["g1"]}, "seed": 4)");
  std::map<std::string, std::string> first;
  for (const char* cmd : {"boost", "calibrate", "filter", "evaluate"}) {
    for (const auto& f : run_command(cmd, cfg).outputs) first[f] = read("out/" + f);
  }
  for (const char* cmd : {"boost", "calibrate", "filter", "evaluate"}) {
    for (const auto& f : run_command(cmd, cfg).outputs) EXPECT_EQ(read("out/" + f), first[f]) << f;
  }
  EXPECT_TRUE(first.count("manifest_evaluate.json"));
  EXPECT_NE(first["manifest_evaluate.json"].find(config_hash(cfg)), std::string::npos);
  EXPECT_EQ(first["coverage_groups.csv"].substr(0, first["coverage_groups.csv"].find('\n')), kGroupHeader);
}

TEST_F(Commands, FilterWithEmptyTestData) {
  put("empty.jsonl", "");
  const auto cfg = parse_config(R"({"data": {"test": ")" + path("empty.jsonl") + R"("}, "output_dir": ")" +
                                path("out") + "\"}");
  const auto res = run_command("filter", cfg);
  EXPECT_EQ(read("out/retained.jsonl"), "");
  EXPECT_FALSE(res.warnings.empty());
}

TEST_F(Commands, SplitRolesMustBeDisjoint) {
  run_command("synth", synth_config(0, 60, 0));
  const auto cfg = parse_config(R"({"data": {"calibration": ")" + path("data/calib.jsonl") + R"(", "test": ")" +
                                path("data/calib.jsonl") + R"("}, "output_dir": ")" + path("out") + "\"}");
  EXPECT_THROW(run_command("calibrate", cfg), ValidationError);
}

TEST_F(Commands, AdaptiveLevelsFromEstimatedFunction) {
  run_command("synth", synth_config(400, 200, 50));
  const std::string lf = path("out/level_function.json");
  const auto cfg = run_config(R"(, "function_class": {"groups": ["g1"], "alpha_bins": [0, 0.25, 0.5, 1]},
      "level": {"mode": "adaptive", "level_function": ")" + lf + R"("}, "alpha_estimation": {"truncation": [0.05, 0.5]})");
  run_command("estimate-alpha", cfg);
  run_command("calibrate", cfg);
  const auto rows = csv_rows(read("out/cutoffs.csv"));
  ASSERT_EQ(rows.size(), 51u);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double a = std::stod(rows[r][2]);
    EXPECT_GE(a, 0.05);
    EXPECT_LE(a, 0.5);
    EXPECT_NEAR(std::stod(rows[r][3]), 1 - a, 1e-15);
  }
}

TEST_F(Commands, ExecutableReportsErrorCategory) {
  put("bad.json", R"({"bogus": true})");
  const std::string cmd = std::string(CONDCONF_CLI_PATH) + " calibrate --config " + path("bad.json") + " 2>" +
                          path("err.txt");
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), static_cast<int>(ErrorCategory::schema));
  EXPECT_EQ(read("err.txt").rfind("error[schema]:", 0), 0u);
}
