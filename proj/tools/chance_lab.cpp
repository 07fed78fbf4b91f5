// chance-lab <scenario> [--config FILE] [--seed N]... [--out PATH] [--format csv|json]
//
// Exit codes: 0 ok, 2 bad config or arguments, 3 scenario failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chance_lab/experiment.hpp"

namespace {

using chance_lab::Json;
namespace ex = chance_lab::experiment;

struct Options {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string format;
  bool quiet = false;
  // scalar overrides, keyed by config key
  std::map<std::string, std::uint64_t> counts;
  std::map<std::string, std::string> strings;
};

// Scalar keys exposed as flags, per scenario. Rationals and prefixes travel
// as strings, counts as integers.
const std::map<std::string, std::vector<std::pair<std::string, bool>>>& flag_keys() {
  static const std::map<std::string, std::vector<std::pair<std::string, bool>>> keys = {
      {"shaman", {{"draws", true}}},
      {"confirm", {{"draws", true}}},
      {"dominate", {{"horizon", true}}},
      {"bk", {{"horizon", true}}},
      {"scale", {{"horizon", true}}},
      {"spinner", {{"point", false}, {"depth", true}}},
      {"coins", {{"prefix", false}}},
      {"lottery", {{"hit_chance", false}, {"max_spins", true}}},
  };
  return keys;
}

std::string flag_name(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw chance_lab::ConfigError("cannot read config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw chance_lab::ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

int run_scenario(const std::string& scenario, const Options& opt) {
  Json config = load_config(opt.config_path);
  if (!config.is_object()) throw chance_lab::ConfigError("config must be a JSON object");
  for (const auto& [key, value] : opt.counts) config[key] = value;
  for (const auto& [key, value] : opt.strings) config[key] = value;
  if (!opt.seeds.empty()) config["seeds"] = opt.seeds;
  if (!opt.out.empty()) config["output"]["path"] = opt.out;
  if (!opt.format.empty()) config["output"]["format"] = opt.format;

  const ex::ExperimentConfig parsed = ex::parse_config(scenario, config);
  const ex::RunManifest manifest = ex::run(parsed);
  if (!opt.quiet) {
    std::cout << manifest.summary;
    std::cout << "wrote " << manifest.files.size() << " file(s) to " << parsed.output_dir.string()
              << " (config " << manifest.config_hash << ")\n";
  }
  return 0;
}

const std::map<std::string, std::string> kDescriptions = {
    {"shaman", "credence in H vs H* over sampled draws"},
    {"confirm", "sequential update over user hypotheses"},
    {"dominate", "base measure next to dominate() and hstar()"},
    {"bk", "dominating function and coverage certificate for a dartboard"},
    {"scale", "increasing scale of functions through limit stages"},
    {"spinner", "arc chances and shrinking arcs on a circle"},
    {"coins", "chance of a coin-flip prefix and its bound"},
    {"lottery", "rejection lottery spins until the first hit"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact-arithmetic chance experiments"};
  app.set_version_flag("--version", std::string(ex::kToolVersion));
  app.require_subcommand(1);

  Options opt;
  std::string chosen;
  for (const auto& scenario : ex::scenarios()) {
    CLI::App* sub = app.add_subcommand(scenario, kDescriptions.at(scenario));
    sub->add_option("--config", opt.config_path, "JSON config file");
    sub->add_option("--seed", opt.seeds, "seed (repeatable; replaces config seeds)");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("-q,--quiet", opt.quiet, "no summary on stdout");
    for (const auto& [key, is_count] : flag_keys().at(scenario)) {
      const std::string k = key;
      if (is_count) {
        sub->add_option_function<std::uint64_t>(
            flag_name(k), [&opt, k](const std::uint64_t& v) { opt.counts[k] = v; }, "overrides '" + k + "'");
      } else {
        sub->add_option_function<std::string>(
            flag_name(k), [&opt, k](const std::string& v) { opt.strings[k] = v; }, "overrides '" + k + "'");
      }
    }
    sub->callback([&chosen, scenario] { chosen = scenario; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run_scenario(chosen, opt);
  } catch (const chance_lab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const chance_lab::Error& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 3;
  }
}
