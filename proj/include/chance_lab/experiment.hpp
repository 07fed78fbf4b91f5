#pragma once

// Experiment runner behind the chance-lab CLI. A config names a scenario and
// its parameters; execute() renders every output file in memory (so two runs
// of the same config can be compared byte for byte) and run() writes them
// plus a manifest.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "chance_lab/confirmation.hpp"
#include "chance_lab/errors.hpp"
#include "chance_lab/json_io.hpp"
#include "chance_lab/measures.hpp"
#include "chance_lab/procedures.hpp"
#include "chance_lab/rational.hpp"
#include "chance_lab/scales.hpp"

namespace chance_lab::experiment {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Format { Csv, Json };

inline const std::vector<std::string>& scenarios() {
  static const std::vector<std::string> names = {"shaman", "confirm", "dominate", "bk",
                                                 "scale",  "spinner", "coins",    "lottery"};
  return names;
}

inline bool seeded(const std::string& scenario) {
  return scenario == "shaman" || scenario == "confirm" || scenario == "lottery";
}

struct ExperimentConfig {
  std::string scenario;
  Json params = Json::object();  // scenario keys only
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "chance-lab-out";
  Format format = Format::Csv;

  // Canonical JSON of everything that determines the data outputs.
  Json canonical() const {
    Json seeds_json = Json::array();
    for (auto s : seeds) seeds_json.push_back(s);
    return {{"scenario", scenario},
            {"params", params},
            {"seeds", seeds_json},
            {"format", format == Format::Csv ? "csv" : "json"}};
  }
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct ExecutionResult {
  std::vector<OutputFile> files;
  std::string summary;  // human-readable, printed by the CLI
};

struct RunManifest {
  std::string scenario;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> files;
  double wall_clock_seconds = 0;
  std::string summary;

  Json to_json() const {
    return {{"scenario", scenario},     {"config_hash", config_hash},
            {"tool_version", tool_version}, {"seeds", seeds},
            {"files", files},           {"wall_clock_seconds", wall_clock_seconds}};
  }
};

// FNV-1a over the canonical config dump.
inline std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config.canonical().dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// ---------------------------------------------------------------- config

namespace detail {

inline const std::vector<std::string>& scenario_keys(const std::string& scenario) {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"shaman", {"draws", "priors", "true_model"}},
      {"confirm", {"hypotheses", "priors", "true_model", "draws"}},
      {"dominate", {"measure", "horizon"}},
      {"bk", {"board", "horizon"}},
      {"scale", {"family", "stages", "horizon"}},
      {"spinner", {"model", "point", "depth", "arcs"}},
      {"coins", {"biases", "prefix"}},
      {"lottery", {"hit_chance", "max_spins"}},
  };
  auto it = keys.find(scenario);
  if (it == keys.end()) throw ConfigError("unknown scenario '" + scenario + "'");
  return it->second;
}

template <class F>
auto config_guard(const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  } catch (const Json::exception& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

inline std::uint64_t get_count(const Json& params, const std::string& key, std::uint64_t fallback,
                               bool allow_zero = false) {
  if (!params.contains(key)) return fallback;
  const Json& v = params[key];
  if (!json_io::is_count(v) || (!allow_zero && v.get<std::uint64_t>() == 0)) {
    throw ConfigError("key '" + key + "': expected a " +
                      std::string(allow_zero ? "non-negative" : "positive") + " integer");
  }
  return v.get<std::uint64_t>();
}

inline Rational get_rational(const Json& params, const std::string& key, const Rational& fallback) {
  if (!params.contains(key)) return fallback;
  return config_guard(key, [&] { return json_io::rational(params[key], key); });
}

inline Json require(const Json& params, const std::string& key) {
  if (!params.contains(key)) throw ConfigError("missing required key '" + key + "'");
  return params[key];
}

// "shaman", "geometric", an inline measure, or {"hstar": ref} / {"dominate": ref}.
inline PartitionMeasure measure_ref(const Json& j, const std::string& key) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "shaman") return shaman_measure();
    if (name == "geometric") return geometric_measure();
    throw ConfigError("key '" + key + "': unknown built-in measure '" + name + "'");
  }
  if (j.is_object() && j.size() == 1 && j.contains("hstar")) {
    return hstar(measure_ref(j["hstar"], key + ".hstar"));
  }
  if (j.is_object() && j.size() == 1 && j.contains("dominate")) {
    return dominate(measure_ref(j["dominate"], key + ".dominate"));
  }
  return config_guard(key, [&] { return measure_from_json(j, key); });
}

inline OrdinalIndex parse_stage(const Json& j, const std::string& key) {
  if (json_io::is_count(j)) return OrdinalIndex::finite(j.get<std::uint64_t>());
  if (!j.is_string()) throw ConfigError("key '" + key + "': stage must be an integer or \"w+k\"");
  std::string s = j.get<std::string>();
  auto numeric = [&](const std::string& t) -> std::uint64_t {
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw ConfigError("key '" + key + "': bad stage '" + s + "'");
    }
    return std::stoull(t);
  };
  for (const std::string omega : {"omega", "w"}) {
    if (s.rfind(omega, 0) == 0) {
      const std::string rest = s.substr(omega.size());
      if (rest.empty()) return OrdinalIndex::omega();
      if (rest[0] != '+') throw ConfigError("key '" + key + "': bad stage '" + s + "'");
      return {1, numeric(rest.substr(1))};
    }
  }
  return OrdinalIndex::finite(numeric(s));
}

inline ScaleFamily parse_family(const Json& j, const std::string& key) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "constant_one") return ScaleFamily::constant_one();
    if (name == "linear_index") return ScaleFamily::linear_index();
    throw ConfigError("key '" + key + "': unknown family '" + name + "'");
  }
  return config_guard(key, [&]() -> ScaleFamily {
    if (j.is_object() && j.contains("members")) {
      json_io::require_keys(j, {"members"}, {"members"}, key);
      std::vector<SequenceFunction> members;
      for (std::size_t i = 0; i < j["members"].size(); ++i) {
        members.push_back(sequence_from_json(j["members"][i], key + ".members[" + std::to_string(i) + "]"));
      }
      return ScaleFamily::finite(std::move(members));
    }
    json_io::require_keys(j, {"polynomial", "symbolic"}, {"polynomial"}, key);
    std::vector<Polynomial> terms;
    for (std::size_t e = 0; e < j["polynomial"].size(); ++e) {
      terms.emplace_back(json_io::rational_list(j["polynomial"][e], key + ".polynomial[" + std::to_string(e) + "]"));
    }
    ScaleFamily fam = ScaleFamily::polynomial(terms);
    if (j.contains("symbolic") && j["symbolic"] == false) {
      return ScaleFamily::generated([fam](OrdinalIndex a) { return fam.at(a); });
    }
    return fam;
  });
}

}  // namespace detail

// Validates and normalizes a config object for the given scenario. Keys are
// checked strictly; the error message names the offending key.
inline ExperimentConfig parse_config(const std::string& scenario, const Json& config) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  const auto& keys = detail::scenario_keys(scenario);
  ExperimentConfig out;
  out.scenario = scenario;
  for (const auto& [key, value] : config.items()) {
    if (key == "scenario") {
      if (!value.is_string() || value.get<std::string>() != scenario) {
        throw ConfigError("key 'scenario': config is for '" + value.dump() +
                          "' but subcommand is '" + scenario + "'");
      }
    } else if (key == "seeds") {
      if (!value.is_array()) throw ConfigError("key 'seeds': expected an array of integers");
      for (const auto& s : value) {
        if (!json_io::is_count(s)) throw ConfigError("key 'seeds': expected non-negative integers");
        out.seeds.push_back(s.get<std::uint64_t>());
      }
    } else if (key == "output") {
      if (!value.is_object()) throw ConfigError("key 'output': expected an object");
      for (const auto& [ok, ov] : value.items()) {
        if (ok == "path") {
          if (!ov.is_string()) throw ConfigError("key 'output.path': expected a string");
          out.output_dir = ov.get<std::string>();
        } else if (ok == "format") {
          const std::string f = ov.is_string() ? ov.get<std::string>() : "";
          if (f == "csv") {
            out.format = Format::Csv;
          } else if (f == "json") {
            out.format = Format::Json;
          } else {
            throw ConfigError("key 'output.format': expected \"csv\" or \"json\"");
          }
        } else {
          throw ConfigError("unknown key 'output." + ok + "'");
        }
      }
    } else if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
      out.params[key] = value;
    } else {
      throw ConfigError("unknown key '" + key + "' for scenario '" + scenario + "'");
    }
  }
  if (seeded(scenario) && out.seeds.empty()) out.seeds.push_back(42);
  return out;
}

// ---------------------------------------------------------------- rendering

namespace detail {

inline std::string csv_cell(const std::optional<Rational>& r, const char* missing = "") {
  return r ? to_string(*r) : std::string(missing);
}

inline std::string sanitize(std::string name) {
  for (auto& c : name) {
    if (c == ',' || c == '\n' || c == '"' || c == ' ') c = '_';
  }
  return name;
}

inline std::string ext(Format f) { return f == Format::Csv ? ".csv" : ".json"; }

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

// step,drawn_cell,posterior_<h>...,envelope,bf_<h>...,cumulative_bf_<h>...
// where the Bayes factors compare each later hypothesis with the first.
inline std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream os;
  os << "step,drawn_cell";
  for (const auto& n : t.hypothesis_names) os << ",posterior_" << detail::sanitize(n);
  os << ",envelope";
  for (std::size_t i = 1; i < t.hypothesis_names.size(); ++i) os << ",bf_" << detail::sanitize(t.hypothesis_names[i]);
  for (std::size_t i = 1; i < t.hypothesis_names.size(); ++i) {
    os << ",cumulative_bf_" << detail::sanitize(t.hypothesis_names[i]);
  }
  os << "\n";
  for (const auto& s : t.steps) {
    os << s.step << ",";
    if (s.cell) os << *s.cell;
    for (const auto& p : s.posteriors) os << "," << to_string(p);
    os << "," << (s.envelope ? to_string(*s.envelope) : "");
    for (std::size_t i = 1; i < s.bayes_factors.size(); ++i) {
      os << "," << (s.cell ? detail::csv_cell(s.bayes_factors[i], "inf") : "");
    }
    for (std::size_t i = 1; i < s.cumulative_factors.size(); ++i) {
      os << "," << detail::csv_cell(s.cumulative_factors[i], "inf");
    }
    os << "\n";
  }
  return os.str();
}

inline Json trajectory_json(const Trajectory& t, const std::string& scenario) {
  Json steps = Json::array();
  for (const auto& s : t.steps) {
    Json post = Json::array(), bf = Json::array(), cum = Json::array();
    for (const auto& p : s.posteriors) post.push_back(to_string(p));
    for (const auto& b : s.bayes_factors) bf.push_back(b ? Json(to_string(*b)) : Json(nullptr));
    for (const auto& c : s.cumulative_factors) cum.push_back(c ? Json(to_string(*c)) : Json(nullptr));
    steps.push_back({{"step", s.step},
                     {"cell", s.cell ? Json(*s.cell) : Json(nullptr)},
                     {"posteriors", post},
                     {"bayes_factors", bf},
                     {"cumulative_bayes_factors", cum},
                     {"lambda", s.lambda ? Json(to_string(*s.lambda)) : Json(nullptr)},
                     {"envelope", s.envelope ? Json(to_string(*s.envelope)) : Json(nullptr)}});
  }
  return {{"scenario", scenario}, {"seed", t.seed}, {"hypotheses", t.hypothesis_names}, {"steps", steps}};
}

// step, credence in the first hypothesis to 12 significant digits, and the
// same credence exactly. The only place decimal renderings appear.
inline std::string plot_data_csv(const Trajectory& t) {
  if (t.steps.empty()) throw OutOfRange("cannot emit plot data for an empty trajectory");
  const std::string name = t.hypothesis_names.empty() ? "H" : detail::sanitize(t.hypothesis_names[0]);
  std::ostringstream os;
  os << "step,credence_" << name << ",credence_" << name << "_exact\n";
  for (const auto& s : t.steps) {
    os << s.step << "," << to_decimal(s.posteriors.at(0).value()) << ","
       << to_string(s.posteriors.at(0)) << "\n";
  }
  return os.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline void emit_plot_data(const Trajectory& t, const std::filesystem::path& path) {
  write_file(path, plot_data_csv(t));
}

// ---------------------------------------------------------------- scenarios

namespace detail {

inline std::size_t thread_cap(std::size_t jobs) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CHANCE_LAB_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && v > 0) cap = v;
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

// Runs job(i) for i in [0, n) on up to CHANCE_LAB_THREADS workers. Results
// are stored by index, so the order of completion never shows up in output.
template <class T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& job) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t threads = thread_cap(n);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::vector<Rational> priors_from(const Json& params, std::size_t count) {
  if (!params.contains("priors")) return std::vector<Rational>(count, Rational(1, static_cast<unsigned long>(count)));
  return config_guard("priors", [&] { return json_io::rational_list(params["priors"], "priors"); });
}

inline ExecutionResult confirmation_scenario(const ExperimentConfig& c, CredenceState initial,
                                             const PartitionMeasure& truth, std::uint64_t draws) {
  auto runs = parallel_map<Trajectory>(c.seeds.size(), [&](std::size_t i) {
    return run_trajectory(initial, truth, draws, c.seeds[i]);
  });
  ExecutionResult r;
  std::ostringstream summary;
  summary << c.scenario << ": " << draws << " draws from '" << truth.label() << "'\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& t = runs[i];
    const std::string stem = c.scenario + "_seed" + std::to_string(t.seed);
    r.files.push_back({stem + ext(c.format), c.format == Format::Csv
                                                  ? trajectory_csv(t)
                                                  : dump(trajectory_json(t, c.scenario))});
    r.files.push_back({stem + "_plot.csv", plot_data_csv(t)});
    const auto& last = t.steps.back();
    summary << "  seed " << t.seed << ": credence in " << t.hypothesis_names[0] << " = "
            << to_decimal(last.posteriors[0].value());
    if (last.envelope) summary << " <= envelope " << to_decimal(last.envelope->value());
    if (last.cumulative_factors.size() > 1 && last.cumulative_factors[1]) {
      summary << ", cumulative factor " << to_string(*last.cumulative_factors[1]);
    }
    summary << "\n";
  }
  r.summary = summary.str();
  return r;
}

inline ExecutionResult run_shaman(const ExperimentConfig& c) {
  const std::uint64_t draws = get_count(c.params, "draws", 100, true);
  const PartitionMeasure h = shaman_measure();
  const PartitionMeasure hs = hstar(h);
  const auto priors = priors_from(c.params, 2);
  const PartitionMeasure truth =
      c.params.contains("true_model") ? measure_ref(c.params["true_model"], "true_model") : geometric_measure();
  auto state = CredenceState::make({make_hypothesis(h, "H"), make_hypothesis(hs, "Hstar")}, priors);
  return confirmation_scenario(c, std::move(state), truth, draws);
}

inline ExecutionResult run_confirm(const ExperimentConfig& c) {
  const Json hyps = require(c.params, "hypotheses");
  if (!hyps.is_array()) throw ConfigError("key 'hypotheses': expected an array");
  std::vector<ChanceHypothesis> hypotheses;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    auto m = measure_ref(hyps[i], "hypotheses[" + std::to_string(i) + "]");
    std::string name = m.label().empty() ? "h" + std::to_string(i) : m.label();
    hypotheses.push_back(make_hypothesis(std::move(m), std::move(name)));
  }
  require(c.params, "priors");
  const auto priors = priors_from(c.params, hypotheses.size());
  const PartitionMeasure truth = measure_ref(require(c.params, "true_model"), "true_model");
  require(c.params, "draws");
  const std::uint64_t draws = get_count(c.params, "draws", 0, true);
  auto state = CredenceState::make(std::move(hypotheses), priors);
  return confirmation_scenario(c, std::move(state), truth, draws);
}

inline Json report_json(const DominationReport& r) {
  return {{"horizon", r.horizon},
          {"cells_dominated", r.cells_dominated},
          {"tail_dominated", r.tail_dominated},
          {"tail_checked_through", r.tail_checked_through},
          {"tail_symbolic_from", r.tail_symbolic_from},
          {"witness", r.witness ? Json(*r.witness) : Json(nullptr)},
          {"base_deficiency", to_string(r.base_deficiency)},
          {"candidate_deficiency", to_string(r.candidate_deficiency)},
          {"base_additive", r.base_additive},
          {"candidate_additive", r.candidate_additive},
          {"dominates_everywhere", r.dominates_everywhere}};
}

inline ExecutionResult run_dominate(const ExperimentConfig& c) {
  const PartitionMeasure base =
      c.params.contains("measure") ? measure_ref(c.params["measure"], "measure") : shaman_measure();
  const std::uint64_t horizon = get_count(c.params, "horizon", 10);
  const PartitionMeasure pr_star = dominate(base);
  const PartitionMeasure ch_star = hstar(base);
  const auto rep_dom = domination_report(base, pr_star, horizon);
  const auto rep_h = domination_report(base, ch_star, horizon);

  ExecutionResult r;
  if (c.format == Format::Csv) {
    std::ostringstream os;
    os << "cell,base,dominate,hstar\n";
    for (std::uint64_t n = 1; n <= horizon; ++n) {
      os << n << "," << to_string(base.mass(n)) << "," << to_string(pr_star.mass(n)) << ","
         << to_string(ch_star.mass(n)) << "\n";
    }
    r.files.push_back({"dominate.csv", os.str()});
  } else {
    Json j = {{"base", to_json(base)},
              {"base_total", to_string(base.total_mass())},
              {"deficiency", to_string(base.deficiency())},
              {"dominate", to_json(pr_star)},
              {"dominate_total", to_string(pr_star.total_mass())},
              {"hstar", to_json(ch_star)},
              {"hstar_total", to_string(ch_star.total_mass())},
              {"dominate_report", report_json(rep_dom)},
              {"hstar_report", report_json(rep_h)}};
    r.files.push_back({"dominate.json", dump(j)});
  }
  std::ostringstream s;
  s << "measure '" << base.label() << "': total " << to_string(base.total_mass()) << ", deficiency "
    << to_string(base.deficiency()) << "\n"
    << "  dominate: total " << to_string(pr_star.total_mass()) << ", dominates everywhere: "
    << (rep_dom.dominates_everywhere ? "yes" : "no") << "\n"
    << "  hstar:    total " << to_string(ch_star.total_mass()) << ", dominates everywhere: "
    << (rep_h.dominates_everywhere ? "yes" : "no") << "\n";
  r.summary = s.str();
  return r;
}

inline ExecutionResult run_bk(const ExperimentConfig& c) {
  const Dartboard board =
      config_guard("board", [&] { return dartboard_from_json(require(c.params, "board"), "board"); });
  const std::uint64_t horizon = get_count(c.params, "horizon", 16);
  const TabulatedFunction f = dominating_function(board, horizon);
  const CoverageResult cov = coverage(board, f, horizon);
  const auto& cert = cov.certificate;

  struct Link {
    std::string lhs, relation, rhs;
    bool holds;
  };
  const std::vector<Link> chain = {
      {"coverage=" + to_string(cov.coverage), ">=", "union_bound=" + to_string(cert.union_lower_bound),
       cert.coverage_ge_union},
      {"union_bound=" + to_string(cert.union_lower_bound), ">",
       "quantile_budget=" + to_string(cert.quantile_budget), cert.union_gt_budget},
      {"quantile_budget=" + to_string(cert.quantile_budget), ">=", "1/2", cert.budget_ge_half},
  };

  ExecutionResult r;
  if (c.format == Format::Csv) {
    std::ostringstream t;
    t << "n,f_omega,exceedance,budget,within_budget\n";
    for (std::uint64_t n = 1; n <= horizon; ++n) {
      t << n << "," << f(n).get_str() << "," << to_string(cert.exceedances[n - 1]) << ","
        << to_string(cert.budgets[n - 1]) << ","
        << (cert.exceedances[n - 1] < cert.budgets[n - 1] ? "true" : "false") << "\n";
    }
    r.files.push_back({"bk.csv", t.str()});
    std::ostringstream cc;
    cc << "lhs,relation,rhs,holds\n";
    for (const auto& l : chain) cc << l.lhs << "," << l.relation << "," << l.rhs << "," << (l.holds ? "true" : "false") << "\n";
    r.files.push_back({"bk_certificate.csv", cc.str()});
  } else {
    Json table = Json::array();
    for (std::uint64_t n = 1; n <= horizon; ++n) {
      table.push_back({{"n", n},
                       {"f_omega", json_io::integer_json(f(n))},
                       {"exceedance", to_string(cert.exceedances[n - 1])},
                       {"budget", to_string(cert.budgets[n - 1])}});
    }
    Json links = Json::array();
    for (const auto& l : chain) links.push_back({{"lhs", l.lhs}, {"relation", l.relation}, {"rhs", l.rhs}, {"holds", l.holds}});
    r.files.push_back({"bk.json", dump({{"board", to_json(board)},
                                        {"horizon", horizon},
                                        {"table", table},
                                        {"coverage", to_string(cov.coverage)},
                                        {"certificate", links},
                                        {"certified", cert.certified}})});
  }

  std::ostringstream s;
  s << "n   f_omega(n)   Ch(g(n) >= f_omega(n))   budget\n";
  for (std::uint64_t n = 1; n <= horizon; ++n) {
    s << n << "   " << f(n).get_str() << "   " << to_string(cert.exceedances[n - 1]) << "   "
      << to_string(cert.budgets[n - 1]) << "\n";
  }
  for (const auto& l : chain) s << l.lhs << " " << l.relation << " " << l.rhs << (l.holds ? "" : "  [FAILS]") << "\n";
  s << (cov.coverage.value() > Rational(1, 2) ? "coverage > 1/2" : "coverage <= 1/2") << "\n";
  r.summary = s.str();
  return r;
}

inline ExecutionResult run_scale(const ExperimentConfig& c) {
  const ScaleFamily family = parse_family(require(c.params, "family"), "family");
  const std::uint64_t horizon = get_count(c.params, "horizon", 10);
  std::vector<OrdinalIndex> stages;
  if (c.params.contains("stages")) {
    const Json& js = c.params["stages"];
    if (!js.is_array()) throw ConfigError("key 'stages': expected an array");
    for (std::size_t i = 0; i < js.size(); ++i) stages.push_back(parse_stage(js[i], "stages"));
  } else {
    for (std::uint64_t b = 0; b <= 5; ++b) stages.push_back(OrdinalIndex::finite(b));
    stages.push_back(OrdinalIndex::omega());
  }
  const auto built = build_scale_stages(family, stages, horizon);
  const auto report = verify_scale(family, built);

  auto kind_name = [](ScaleCheck::Kind k) { return k == ScaleCheck::Kind::Increasing ? "g<g" : "f<g"; };
  ExecutionResult r;
  if (c.format == Format::Csv) {
    std::ostringstream t;
    t << "n";
    for (const auto& s : built) t << ",g_" << s.index.to_string();
    t << "\n";
    for (std::uint64_t n = 1; n <= horizon; ++n) {
      t << n;
      for (const auto& s : built) t << "," << s.g(n).get_str();
      t << "\n";
    }
    r.files.push_back({"scale.csv", t.str()});
    std::ostringstream ch;
    ch << "check,lower,upper,holds,threshold,symbolic\n";
    for (const auto& k : report.checks) {
      ch << kind_name(k.kind) << "," << k.lower.to_string() << "," << k.upper.to_string() << ","
         << (k.holds ? "true" : "false") << "," << k.threshold << "," << (k.symbolic ? "true" : "false") << "\n";
    }
    r.files.push_back({"scale_checks.csv", ch.str()});
  } else {
    Json js = Json::array();
    for (const auto& s : built) {
      Json values = Json::array();
      for (std::uint64_t n = 1; n <= horizon; ++n) values.push_back(json_io::integer_json(s.g(n)));
      Json entry = {{"stage", s.index.to_string()}, {"values", values}};
      entry["function"] = s.g.symbolic() ? to_json(s.g.sequence()) : Json(nullptr);
      js.push_back(entry);
    }
    Json checks = Json::array();
    for (const auto& k : report.checks) {
      checks.push_back({{"check", kind_name(k.kind)},
                        {"lower", k.lower.to_string()},
                        {"upper", k.upper.to_string()},
                        {"holds", k.holds},
                        {"threshold", k.threshold},
                        {"symbolic", k.symbolic}});
    }
    r.files.push_back({"scale.json", dump({{"horizon", horizon}, {"stages", js}, {"checks", checks}, {"all_hold", report.all_hold}})});
  }
  std::ostringstream s;
  for (const auto& st : built) {
    s << "g_" << st.index.to_string() << ": "
      << (!st.g.symbolic() ? "tabulated to n=" + std::to_string(*st.g.horizon())
          : st.g.sequence().prefix().empty()
              ? st.g.sequence().tail().to_string()
              : st.g.sequence().tail().to_string() + " for n > " +
                    std::to_string(st.g.sequence().prefix().size()))
      << "\n";
  }
  s << report.checks.size() << " checks, " << (report.all_hold ? "all hold" : "FAILURES") << "\n";
  r.summary = s.str();
  return r;
}

inline ExecutionResult run_spinner(const ExperimentConfig& c) {
  const CircleChanceModel model =
      c.params.contains("model")
          ? (c.params["model"] == "uniform"
                 ? CircleChanceModel::uniform()
                 : config_guard("model", [&] { return circle_from_json(c.params["model"], "model"); }))
          : CircleChanceModel::uniform();
  const Rational point = get_rational(c.params, "point", Rational(0));
  const std::uint64_t depth = get_count(c.params, "depth", 10);

  struct Row {
    std::string kind;
    std::uint64_t level;
    Arc arc;
    Probability chance;
    std::optional<Probability> bound;
  };
  std::vector<Row> rows;
  if (c.params.contains("arcs")) {
    const Json& ja = c.params["arcs"];
    if (!ja.is_array()) throw ConfigError("key 'arcs': expected an array of [start, end] pairs");
    for (std::size_t i = 0; i < ja.size(); ++i) {
      const std::string w = "arcs[" + std::to_string(i) + "]";
      if (!ja[i].is_array() || ja[i].size() != 2) throw ConfigError("key '" + w + "': expected [start, end]");
      Arc a = config_guard(w, [&] {
        return Arc::make(json_io::rational(ja[i][0], w), json_io::rational(ja[i][1], w));
      });
      rows.push_back({"query", i + 1, a, arc_chance(model, a), std::nullopt});
    }
  }
  const Probability single = singleton_chance(model, point);
  for (const auto& s : shrinking_arcs(model, point, depth)) {
    rows.push_back({"shrink", s.level, s.arc, s.chance, s.bound});
  }

  ExecutionResult r;
  if (c.format == Format::Csv) {
    std::ostringstream t;
    t << "kind,level,start,end,width,chance,bound\n";
    t << "singleton,0," << to_string(point) << "," << to_string(point) << ",0/1," << to_string(single) << ",\n";
    for (const auto& row : rows) {
      t << row.kind << "," << row.level << "," << to_string(row.arc.start()) << "," << to_string(row.arc.end())
        << "," << to_string(row.arc.width()) << "," << to_string(row.chance) << ","
        << (row.bound ? to_string(*row.bound) : "") << "\n";
    }
    r.files.push_back({"spinner.csv", t.str()});
  } else {
    Json arr = Json::array();
    for (const auto& row : rows) {
      arr.push_back({{"kind", row.kind},
                     {"level", row.level},
                     {"start", to_string(row.arc.start())},
                     {"end", to_string(row.arc.end())},
                     {"width", to_string(row.arc.width())},
                     {"chance", to_string(row.chance)},
                     {"bound", row.bound ? Json(to_string(*row.bound)) : Json(nullptr)}});
    }
    r.files.push_back({"spinner.json", dump({{"model", to_json(model)},
                                             {"point", to_string(point)},
                                             {"singleton_chance", to_string(single)},
                                             {"arcs", arr}})});
  }
  std::ostringstream s;
  s << "singleton chance at " << to_string(point) << " deg: " << to_string(single) << "\n";
  for (const auto& row : rows) {
    s << row.kind << " " << row.level << ": [" << to_decimal(row.arc.start()) << ", " << to_decimal(row.arc.end())
      << ") chance " << to_string(row.chance);
    if (row.bound) s << " < " << to_string(*row.bound);
    s << "\n";
  }
  r.summary = s.str();
  return r;
}

inline ExecutionResult run_coins(const ExperimentConfig& c) {
  const auto biases =
      config_guard("biases", [&] { return json_io::rational_list(require(c.params, "biases"), "biases"); });
  const Json jp = require(c.params, "prefix");
  if (!jp.is_string()) throw ConfigError("key 'prefix': expected a string of H/T");
  const auto prefix = config_guard("prefix", [&] { return parse_coin_prefix(jp.get<std::string>()); });
  const CoinPrefixChance total = coin_prefix_chance(biases, prefix);

  ExecutionResult r;
  std::ostringstream t;
  Json rows = Json::array();
  t << "flip,face,bias,flip_chance,prefix_chance,bound\n";
  for (std::size_t i = 1; i <= prefix.size(); ++i) {
    const std::vector<CoinFace> head(prefix.begin(), prefix.begin() + static_cast<long>(i));
    const auto part = coin_prefix_chance(biases, head);
    const Rational flip = prefix[i - 1] == CoinFace::Heads ? biases[i - 1] : Rational(1 - biases[i - 1]);
    const char face = prefix[i - 1] == CoinFace::Heads ? 'H' : 'T';
    t << i << "," << face << "," << to_string(biases[i - 1]) << "," << to_string(flip) << ","
      << to_string(part.chance) << "," << to_string(part.bound) << "\n";
    rows.push_back({{"flip", i},
                    {"face", std::string(1, face)},
                    {"bias", to_string(biases[i - 1])},
                    {"flip_chance", to_string(flip)},
                    {"prefix_chance", to_string(part.chance)},
                    {"bound", to_string(part.bound)}});
  }
  if (c.format == Format::Csv) {
    r.files.push_back({"coins.csv", t.str()});
  } else {
    r.files.push_back({"coins.json", dump({{"flips", rows},
                                           {"chance", to_string(total.chance)},
                                           {"bound", to_string(total.bound)},
                                           {"r", to_string(total.max_flip_chance)}})});
  }
  r.summary = "prefix chance " + to_string(total.chance) + " <= r^n = " + to_string(total.bound) +
              " (r = " + to_string(total.max_flip_chance) + ")\n";
  return r;
}

inline ExecutionResult run_lottery(const ExperimentConfig& c) {
  const Rational q = config_guard("hit_chance", [&] {
    return json_io::rational(require(c.params, "hit_chance"), "hit_chance");
  });
  require(c.params, "max_spins");
  const std::uint64_t max_spins = get_count(c.params, "max_spins", 1);
  const Probability hit(q);
  auto reports = parallel_map<LotteryReport>(c.seeds.size(), [&](std::size_t i) {
    return rejection_lottery(hit, max_spins, c.seeds[i]);
  });
  ExecutionResult r;
  std::ostringstream s;
  for (const auto& rep : reports) {
    const std::string stem = "lottery_seed" + std::to_string(rep.seed);
    if (c.format == Format::Csv) {
      std::ostringstream t;
      t << "spin,hit,terminated_within\n";
      for (const auto& sp : rep.spins) {
        t << sp.spin << "," << (sp.hit ? 1 : 0) << ","
          << to_string(Rational(1 - pow(Rational(1 - q), sp.spin))) << "\n";
      }
      r.files.push_back({stem + ".csv", t.str()});
    } else {
      Json spins = Json::array();
      for (const auto& sp : rep.spins) spins.push_back({{"spin", sp.spin}, {"hit", sp.hit}});
      r.files.push_back({stem + ".json",
                         dump({{"seed", rep.seed},
                               {"hit_chance", to_string(rep.hit_chance)},
                               {"max_spins", rep.max_spins},
                               {"spins", spins},
                               {"terminated_at", rep.terminated_at ? Json(*rep.terminated_at) : Json(nullptr)},
                               {"termination_chance", to_string(rep.termination_chance)},
                               {"nontermination_chance", to_string(rep.nontermination_chance)}})});
    }
    s << "seed " << rep.seed << ": "
      << (rep.terminated_at ? "terminated at spin " + std::to_string(*rep.terminated_at)
                            : "no hit in " + std::to_string(rep.max_spins) + " spins")
      << "; P(terminate within " << rep.max_spins << ") = " << to_string(rep.termination_chance)
      << ", P(never terminate) = " << to_string(rep.nontermination_chance) << "\n";
  }
  r.summary = s.str();
  return r;
}

}  // namespace detail

// Runs the scenario and renders every data file in memory.
inline ExecutionResult execute(const ExperimentConfig& c) {
  if (c.scenario == "shaman") return detail::run_shaman(c);
  if (c.scenario == "confirm") return detail::run_confirm(c);
  if (c.scenario == "dominate") return detail::run_dominate(c);
  if (c.scenario == "bk") return detail::run_bk(c);
  if (c.scenario == "scale") return detail::run_scale(c);
  if (c.scenario == "spinner") return detail::run_spinner(c);
  if (c.scenario == "coins") return detail::run_coins(c);
  if (c.scenario == "lottery") return detail::run_lottery(c);
  throw ConfigError("unknown scenario '" + c.scenario + "'");
}

// Executes, writes the data files and manifest.json into the output
// directory, and returns the manifest.
inline RunManifest run(const ExperimentConfig& c) {
  const auto started = std::chrono::steady_clock::now();
  ExecutionResult result = execute(c);

  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec) throw IoError("cannot create '" + c.output_dir.string() + "': " + ec.message());

  RunManifest m;
  m.scenario = c.scenario;
  m.config_hash = config_hash(c);
  m.seeds = c.seeds;
  m.summary = std::move(result.summary);
  for (const auto& f : result.files) {
    write_file(c.output_dir / f.name, f.content);
    m.files.push_back(f.name);
  }
  m.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_file(c.output_dir / "manifest.json", detail::dump(m.to_json()));
  return m;
}

}  // namespace chance_lab::experiment
