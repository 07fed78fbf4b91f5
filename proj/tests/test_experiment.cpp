#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <sys/wait.h>

#include "chance_lab/experiment.hpp"
#include "generators.hpp"

using namespace chance_lab;
namespace ex = chance_lab::experiment;
namespace fs = std::filesystem;
using testgen::q;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chance_lab_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

const ex::OutputFile& file_named(const ex::ExecutionResult& r, const std::string& name) {
  for (const auto& f : r.files) {
    if (f.name == name) return f;
  }
  throw std::runtime_error("no output file " + name);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CHANCE_LAB_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string run_cli_stderr(const std::string& args) {
  const fs::path err = scratch("stderr.txt");
  const std::string cmd = std::string(CHANCE_LAB_BIN) + " " + args + " > /dev/null 2> " + err.string();
  [[maybe_unused]] const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_json(const std::string& name, const Json& j) {
  const fs::path p = scratch(name);
  std::ofstream(p) << j.dump();
  return p.string();
}

Json two_function_board() {
  return Json::parse(R"({"members":[{"tail":[0,1]},{"tail":[0,2]}],"weights":["1/2","1/2"]})");
}

const std::map<std::string, Json>& sample_configs() {
  static const std::map<std::string, Json> configs = {
      {"shaman", Json::parse(R"({"draws":30,"seeds":[1,2,3]})")},
      {"confirm", Json::parse(R"({"hypotheses":["shaman",{"hstar":"shaman"},
          {"head":["1/4"],"tails":[{"c":"3/4","rho":"1/2","start":2}]}],
          "priors":["1/3","1/3","1/3"],"true_model":"geometric","draws":25,"seeds":[5,6]})")},
      {"dominate", Json::parse(R"({"measure":"shaman","horizon":8})")},
      {"bk", Json{{"board", two_function_board()}, {"horizon", 6}}},
      {"scale", Json::parse(R"({"family":"linear_index","stages":[0,2,"w","w+1"],"horizon":8})")},
      {"spinner", Json::parse(R"({"model":{"breakpoints":[0,180,360],"cdf":[0,"53/100",1]},
          "point":"90","depth":6,"arcs":[[0,180]]})")},
      {"coins", Json::parse(R"({"biases":["1/2","1/2","1/2"],"prefix":"HTT"})")},
      {"lottery", Json::parse(R"({"hit_chance":"1/4","max_spins":20,"seeds":[3,4]})")},
  };
  return configs;
}

}  // namespace

// ---------------------------------------------------------------- config parsing

TEST(ParseConfig, RejectsUnknownKeysByName) {
  try {
    ex::parse_config("shaman", Json::parse(R"({"drawz": 5})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'drawz'"), std::string::npos);
  }
  EXPECT_THROW(ex::parse_config("shaman", Json::parse(R"({"horizon": 5})")), ConfigError);
  EXPECT_THROW(ex::parse_config("bk", Json::parse(R"({"output": {"fmt": "csv"}})")), ConfigError);
  EXPECT_THROW(ex::parse_config("nope", Json::object()), ConfigError);
  EXPECT_THROW(ex::parse_config("bk", Json::parse(R"({"scenario": "shaman"})")), ConfigError);
}

TEST(ParseConfig, NestedParseErrorsBecomeConfigErrors) {
  auto c = ex::parse_config("confirm", Json::parse(R"({"hypotheses":[{"head":["0.5"]}, "geometric"],
      "priors":["1/2","1/2"],"true_model":"geometric","draws":3})"));
  try {
    ex::execute(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("hypotheses[0]"), std::string::npos) << e.what();
  }
  auto d = ex::parse_config("shaman", Json::parse(R"({"priors": ["1/2", "0.5"]})"));
  EXPECT_THROW(ex::execute(d), ConfigError);
  auto m = ex::parse_config("confirm", Json::parse(R"({"hypotheses":["shaman","geometric"],"draws":3,"true_model":"geometric"})"));
  EXPECT_THROW(ex::execute(m), ConfigError);  // priors missing
}

TEST(ParseConfig, DefaultsAndOverrides) {
  const auto c = ex::parse_config("shaman", Json::object());
  EXPECT_EQ(c.seeds, std::vector<std::uint64_t>{42});
  EXPECT_EQ(c.format, ex::Format::Csv);
  const auto d = ex::parse_config("dominate", Json::parse(R"({"output":{"path":"x","format":"json"}})"));
  EXPECT_TRUE(d.seeds.empty());
  EXPECT_EQ(d.format, ex::Format::Json);
  EXPECT_EQ(d.output_dir, fs::path("x"));
}

TEST(ConfigHash, StableAndSensitive) {
  const auto a = ex::parse_config("shaman", Json::parse(R"({"draws":3})"));
  const auto b = ex::parse_config("shaman", Json::parse(R"({"draws":3})"));
  const auto c = ex::parse_config("shaman", Json::parse(R"({"draws":4})"));
  EXPECT_EQ(ex::config_hash(a), ex::config_hash(b));
  EXPECT_NE(ex::config_hash(a), ex::config_hash(c));
  EXPECT_EQ(ex::config_hash(a).size(), 16u);
}

// ---------------------------------------------------------------- scenario outputs

TEST(ShamanScenario, CumulativeFactorIsTwoToTheN) {
  const auto c = ex::parse_config("shaman", Json::parse(R"({"draws":100,"seeds":[42]})"));
  const auto r = ex::execute(c);
  const auto rows = parse_csv(file_named(r, "shaman_seed42.csv").content);
  ASSERT_EQ(rows.size(), 102u);
  const auto& header = rows[0];
  const auto col = std::find(header.begin(), header.end(), "cumulative_bf_Hstar") - header.begin();
  ASSERT_LT(col, static_cast<long>(header.size()));
  for (std::size_t n = 0; n <= 100; ++n) {
    EXPECT_EQ(parse_rational(rows[n + 1][col]), pow(Rational(2), n)) << "row " << n;
  }
  EXPECT_EQ(parse_rational(rows[4][col]), q(8));
}

TEST(DominateScenario, JsonHoldsTheGeometricMeasure) {
  const auto c = ex::parse_config("dominate", Json::parse(R"({"measure":"shaman","output":{"format":"json"}})"));
  const auto j = Json::parse(file_named(ex::execute(c), "dominate.json").content);
  const auto pr_star = measure_from_json(j["dominate"]);
  for (std::uint64_t n = 1; n <= 30; ++n) EXPECT_EQ(pr_star.mass(n).value(), half_pow(n));
  EXPECT_EQ(j["dominate_total"], "1/1");
  EXPECT_EQ(j["dominate_report"]["dominates_everywhere"], true);
}

TEST(BkScenario, TableAndCertificate) {
  const auto c = ex::parse_config("bk", Json{{"board", two_function_board()}, {"horizon", 4}});
  const auto r = ex::execute(c);
  const auto rows = parse_csv(file_named(r, "bk.csv").content);
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t n = 1; n <= 4; ++n) EXPECT_EQ(rows[n][1], std::to_string(2 * n + 1));
  EXPECT_NE(r.summary.find("coverage > 1/2"), std::string::npos);
  const auto chain = parse_csv(file_named(r, "bk_certificate.csv").content);
  ASSERT_EQ(chain.size(), 4u);
  for (std::size_t i = 1; i < chain.size(); ++i) EXPECT_EQ(chain[i][3], "true");
}

TEST(ScaleScenario, OmegaColumnIsTriangularForConstantOne) {
  const auto c = ex::parse_config("scale", Json::parse(R"({"family":"constant_one","stages":[0,3,"w"],"horizon":10})"));
  const auto rows = parse_csv(file_named(ex::execute(c), "scale.csv").content);
  ASSERT_EQ(rows[0], (std::vector<std::string>{"n", "g_0", "g_3", "g_w"}));
  for (std::size_t n = 1; n <= 10; ++n) {
    EXPECT_EQ(rows[n][2], "4");
    EXPECT_EQ(rows[n][3], std::to_string((n + 1) * (n + 2) / 2));
  }
}

TEST(CoinsScenario, HttIsOneEighth) {
  const auto c = ex::parse_config("coins", sample_configs().at("coins"));
  const auto rows = parse_csv(file_named(ex::execute(c), "coins.csv").content);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[3][4], "1/8");
}

TEST(ConfirmScenario, DeficientTrueModelIsAScenarioError) {
  const auto c = ex::parse_config("confirm", Json::parse(R"({"hypotheses":["shaman","geometric"],
      "priors":["1/2","1/2"],"true_model":"shaman","draws":3})"));
  EXPECT_THROW(ex::execute(c), DeficientTrueModel);
}

// ---------------------------------------------------------------- plot data

TEST(PlotData, ShamanLengthThree) {
  const auto h = shaman_measure();
  const auto s = CredenceState::make({make_hypothesis(h, "H"), make_hypothesis(hstar(h), "H*")}, {q(1, 2), q(1, 2)});
  const std::vector<std::uint64_t> cells{2, 1, 5};
  const auto rows = parse_csv(ex::plot_data_csv(run_sequence(s, cells)));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"step", "credence_H", "credence_H_exact"}));
  for (std::size_t n = 0; n <= 3; ++n) {
    const Rational a = half_pow(n);
    EXPECT_EQ(parse_rational(rows[n + 1][2]), a / (a + 1));
    EXPECT_EQ(rows[n + 1][1], to_decimal(a / (a + 1)));
  }
  EXPECT_EQ(rows[2][2], "1/3");
  EXPECT_EQ(rows[2][1], "0.333333333333");
}

TEST(PlotData, EmptyTrajectoryIsAnError) {
  EXPECT_THROW(ex::plot_data_csv(Trajectory{}), OutOfRange);
  EXPECT_THROW(ex::emit_plot_data(Trajectory{}, scratch("empty_plot.csv")), OutOfRange);
}

TEST(PlotData, ZeroDrawsGivesThePriorRow) {
  const auto c = ex::parse_config("shaman", Json::parse(R"({"draws":0,"seeds":[1]})"));
  const auto rows = parse_csv(file_named(ex::execute(c), "shaman_seed1_plot.csv").content);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1], (std::vector<std::string>{"0", "0.5", "1/2"}));
}

TEST(PlotData, UnwritablePathIsAnIoError) {
  const auto h = shaman_measure();
  const auto s = CredenceState::make({make_hypothesis(h, "H"), make_hypothesis(hstar(h), "H*")}, {q(1, 2), q(1, 2)});
  EXPECT_THROW(ex::emit_plot_data(run_sequence(s, {}), "/nonexistent_dir_xyz/plot.csv"), IoError);
}

// ---------------------------------------------------------------- invariants

TEST(Invariant, DeterministicAcrossRunsAndThreadCounts) {
  for (const auto& [scenario, cfg] : sample_configs()) {
    for (const char* fmt : {"csv", "json"}) {
      Json j = cfg;
      j["output"] = {{"format", fmt}};
      const auto c = ex::parse_config(scenario, j);
      ::setenv("CHANCE_LAB_THREADS", "1", 1);
      const auto a = ex::execute(c);
      ::setenv("CHANCE_LAB_THREADS", "4", 1);
      const auto b = ex::execute(c);
      ::unsetenv("CHANCE_LAB_THREADS");
      ASSERT_EQ(a.files.size(), b.files.size()) << scenario;
      for (std::size_t i = 0; i < a.files.size(); ++i) {
        EXPECT_EQ(a.files[i].name, b.files[i].name);
        EXPECT_EQ(a.files[i].content, b.files[i].content) << scenario << " " << a.files[i].name;
      }
    }
  }
}

TEST(Invariant, DecimalsOnlyInPlotFiles) {
  const std::regex decimal(R"((^|[^0-9/])-?[0-9]+\.[0-9]+|[0-9]e[-+][0-9])");
  for (const auto& [scenario, cfg] : sample_configs()) {
    for (const char* fmt : {"csv", "json"}) {
      Json j = cfg;
      j["output"] = {{"format", fmt}};
      const auto r = ex::execute(ex::parse_config(scenario, j));
      for (const auto& f : r.files) {
        const bool plot = f.name.ends_with("_plot.csv");
        EXPECT_EQ(std::regex_search(f.content, decimal), plot) << scenario << " " << f.name;
      }
    }
  }
}

TEST(Invariant, RunWritesFilesAndManifest) {
  const fs::path out = scratch("run");
  Json j = sample_configs().at("lottery");
  j["output"] = {{"path", out.string()}};
  const auto m = ex::run(ex::parse_config("lottery", j));
  EXPECT_EQ(m.files, (std::vector<std::string>{"lottery_seed3.csv", "lottery_seed4.csv"}));
  for (const auto& f : m.files) EXPECT_TRUE(fs::exists(out / f));
  const auto manifest = Json::parse(std::ifstream(out / "manifest.json"));
  EXPECT_EQ(manifest["config_hash"], m.config_hash);
  EXPECT_EQ(manifest["tool_version"], ex::kToolVersion);
  EXPECT_EQ(manifest["files"].size(), 2u);
  EXPECT_TRUE(manifest.contains("wall_clock_seconds"));
  fs::remove_all(out);
}

// ---------------------------------------------------------------- CLI

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli");
  EXPECT_EQ(run_cli("shaman --draws 5 -q --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "shaman_seed42.csv"));
  EXPECT_EQ(run_cli("shaman --config " + write_json("bad.json", Json::parse(R"({"drawz":1})"))), 2);
  EXPECT_EQ(run_cli("shaman --config /nonexistent/config.json"), 2);
  EXPECT_EQ(run_cli("shaman --horizon 3"), 2);
  EXPECT_EQ(run_cli(""), 2);
  const auto deficient = write_json("deficient.json", Json::parse(R"({"hypotheses":["shaman","geometric"],
      "priors":["1/2","1/2"],"true_model":"shaman","draws":3})"));
  EXPECT_EQ(run_cli("confirm -q --config " + deficient + " --out " + out.string()), 3);
  fs::remove_all(out);
}

TEST(Cli, ConfigErrorNamesTheKey) {
  const auto bad = write_json("bad2.json", Json::parse(R"({"draws":3,"prioirs":["1/2","1/2"]})"));
  EXPECT_NE(run_cli_stderr("shaman --config " + bad).find("'prioirs'"), std::string::npos);
}

TEST(Cli, FlagsOverrideConfigAndSeedsRepeat) {
  const fs::path out = scratch("cli_seeds");
  const auto cfg = write_json("seeds.json", Json::parse(R"({"draws":2,"seeds":[9]})"));
  EXPECT_EQ(run_cli("shaman -q --config " + cfg + " --seed 1 --seed 2 --draws 4 --format json --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "shaman_seed1.json"));
  EXPECT_TRUE(fs::exists(out / "shaman_seed2.json"));
  EXPECT_FALSE(fs::exists(out / "shaman_seed9.json"));
  const auto j = Json::parse(std::ifstream(out / "shaman_seed1.json"));
  EXPECT_EQ(j["steps"].size(), 5u);
  fs::remove_all(out);
}
