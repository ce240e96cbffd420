#pragma once

// Run configuration: a flat JSON file whose keys mirror the command-line
// flags, with flags taking precedence over file values.
//
//   {
//     "scenario": "fig1a",
//     "n_spins": 10, "j": 1.0, "j0": 1.0, "b_field": 0.01,
//     "field_on_system": false, "convention": "hopping",
//     "t_max": 9.0, "steps": 2000,
//     "pair": "paper", "path": "auto", "seed": 7,
//     "out": "traj.csv", "summary": "summary.json",
//     "model": "configs/zz_model.json",
//     "bound_check": {"n_models": 50, "d_env": [2, 3, 4, 8], "n_times": 20, "t_max": 5.0},
//     "sweep": {"j0": {"min": 0.5, "max": 1.5, "count": 3}, "b_field": {"min": 0.0, "max": 1.0, "count": 5}}
//   }
//
// Sweep ranges are in units of J (J0/J and B/J).

#include "nmsec/evolution.hpp"
#include "nmsec/measure.hpp"
#include "nmsec/model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nmsec::cli {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, std::string location, const std::string& message)
      : std::runtime_error(location + ": '" + key + "': " + message), key_(std::move(key)),
        location_(std::move(location)) {}
  const std::string& key() const noexcept { return key_; }
  const std::string& location() const noexcept { return location_; }

 private:
  std::string key_;
  std::string location_;
};

enum class Scenario { Fig1a, Fig1b, Fig2a, Fig2b, BoundCheck, Measure, Sweep, Custom };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Fig1a: return "fig1a";
    case Scenario::Fig1b: return "fig1b";
    case Scenario::Fig2a: return "fig2a";
    case Scenario::Fig2b: return "fig2b";
    case Scenario::BoundCheck: return "bound-check";
    case Scenario::Measure: return "measure";
    case Scenario::Sweep: return "sweep";
    case Scenario::Custom: return "custom";
  }
  return "custom";
}

inline std::optional<Scenario> parse_scenario(const std::string& s) {
  for (Scenario v : {Scenario::Fig1a, Scenario::Fig1b, Scenario::Fig2a, Scenario::Fig2b, Scenario::BoundCheck,
                     Scenario::Measure, Scenario::Sweep, Scenario::Custom})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

inline std::string to_string(CouplingConvention c) { return c == CouplingConvention::Pauli ? "pauli" : "hopping"; }

struct Range {
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  std::vector<double> values() const {
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = count == 1 ? min : min + (max - min) * i / (count - 1);
    return v;
  }
};

struct BoundCheckConfig {
  int n_models = 50;
  std::vector<Index> d_env{2, 3, 4, 8};
  int n_times = 20;
  double t_max = 5.0;
  double step = 1e-5;  // half-width of the local central difference
};

struct SweepConfig {
  ChainParams base;  // n_total, J, field placement, convention
  Range j0_ratio;
  Range b_ratio;
  TimeGrid grid;
  PairFamily pair;
  EvolutionPath path = EvolutionPath::Auto;
  std::string out;
};

struct RunConfig {
  Scenario scenario = Scenario::Fig1a;
  ChainParams chain;
  TimeGrid grid;
  std::string pair = "paper";
  EvolutionPath path = EvolutionPath::Auto;
  std::uint64_t seed = 7;
  std::string out;
  std::string summary;
  std::string model_path;  // custom scenario: generic model file
  BoundCheckConfig bound_check;
  Range j0_grid;  // sweep, J0/J
  Range b_grid;   // sweep, B/J

  PairFamily pair_family() const { return PairFamily::parse(pair, seed); }

  SweepConfig sweep_config() const {
    return {chain, j0_grid, b_grid, grid, pair_family(), path, out};
  }
};

/// Values given on the command line; unset members fall back to the file, then to defaults.
struct Overrides {
  std::optional<std::string> scenario;
  std::optional<int> n_spins;
  std::optional<double> j;
  std::optional<double> j0;
  std::optional<double> b_field;
  std::optional<double> t_max;
  std::optional<int> steps;
  std::optional<std::string> pair;
  std::optional<std::string> path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> summary;
  std::optional<bool> field_on_system;
  std::optional<std::string> convention;
  std::optional<std::string> model;
  std::optional<std::string> j0_grid;
  std::optional<std::string> b_grid;
  std::optional<int> n_models;
};

namespace detail {

class FileReader {
 public:
  FileReader(const nlohmann::json& doc, std::string source) : doc_(doc), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& pointer, const std::string& msg) const {
    throw ConfigError(key, source_ + "#" + pointer, msg);
  }

  // "/sweep/j0" + "min" -> "sweep.j0.min"
  static std::string dotted(const std::string& at, const std::string& key) {
    std::string out = at.empty() ? std::string() : at.substr(1) + ".";
    for (char& c : out)
      if (c == '/') c = '.';
    return out + key;
  }

  void only_keys(const nlohmann::json& obj, const std::string& at, std::initializer_list<const char*> allowed) const {
    for (const auto& [k, v] : obj.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail(dotted(at, k), at + "/" + k, "unknown key");
    }
  }

  template <typename T>
  void read(const nlohmann::json& obj, const std::string& at, const char* key, std::optional<T>& into) const {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string name = dotted(at, key);
    const std::string pointer = at + "/" + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(name, pointer, "expected true or false");
      into = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(name, pointer, "expected a string");
      into = v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(name, pointer, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) into = v.get<T>();
        else if (v.get<long long>() < 0) fail(name, pointer, "expected a non-negative integer");
        else into = static_cast<T>(v.get<long long>());
      } else {
        into = static_cast<T>(v.get<long long>());
      }
    } else {
      if (!v.is_number()) fail(name, pointer, "expected a number");
      into = v.get<double>();
    }
  }

  Range range(const nlohmann::json& obj, const std::string& at) const {
    std::string name = dotted(at, "");
    name.pop_back();
    if (!obj.is_object()) fail(name, at, "expected an object {min, max, count}");
    only_keys(obj, at, {"min", "max", "count"});
    std::optional<double> lo, hi;
    std::optional<int> n;
    read(obj, at, "min", lo);
    read(obj, at, "max", hi);
    read(obj, at, "count", n);
    if (!lo) fail(name + ".min", at + "/min", "missing required field");
    if (!n) fail(name + ".count", at + "/count", "missing required field");
    return {*lo, hi.value_or(*lo), *n};
  }

  const nlohmann::json& doc_;
  std::string source_;
};

inline Range parse_range_flag(const std::string& key, const std::string& text) {
  // min:max:count, or a single value
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key, "command line", "malformed number '" + s + "'");
  };
  if (parts.size() == 1) return {number(parts[0]), number(parts[0]), 1};
  if (parts.size() != 3) throw ConfigError(key, "command line", "expected min:max:count, got '" + text + "'");
  const double count = number(parts[2]);
  if (count != std::floor(count)) throw ConfigError(key, "command line", "count must be an integer");
  return {number(parts[0]), number(parts[1]), static_cast<int>(count)};
}

}  // namespace detail

/// Parses `text` (file contents; may be empty) from `source`, then applies `flags`.
inline RunConfig parse_config(const std::string& text, const std::string& source, const Overrides& flags) {
  Overrides file;
  std::optional<Range> file_j0_grid, file_b_grid;
  std::optional<int> bc_n_times;
  std::optional<double> bc_t_max;
  std::optional<std::vector<Index>> bc_d_env;

  if (!text.empty()) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("<document>", source + "@byte" + std::to_string(e.byte), "not valid JSON");
    }
    if (!doc.is_object()) throw ConfigError("<document>", source + "#", "expected a JSON object");
    detail::FileReader r(doc, source);
    r.only_keys(doc, "",
                {"scenario", "n_spins", "j", "j0", "b_field", "t_max", "steps", "pair", "path", "seed", "out", "summary",
                 "field_on_system", "convention", "model", "bound_check", "sweep"});
    r.read(doc, "", "scenario", file.scenario);
    r.read(doc, "", "n_spins", file.n_spins);
    r.read(doc, "", "j", file.j);
    r.read(doc, "", "j0", file.j0);
    r.read(doc, "", "b_field", file.b_field);
    r.read(doc, "", "t_max", file.t_max);
    r.read(doc, "", "steps", file.steps);
    r.read(doc, "", "pair", file.pair);
    r.read(doc, "", "path", file.path);
    r.read(doc, "", "seed", file.seed);
    r.read(doc, "", "out", file.out);
    r.read(doc, "", "summary", file.summary);
    r.read(doc, "", "field_on_system", file.field_on_system);
    r.read(doc, "", "convention", file.convention);
    r.read(doc, "", "model", file.model);
    if (doc.contains("bound_check")) {
      const auto& bc = doc["bound_check"];
      if (!bc.is_object()) r.fail("bound_check", "/bound_check", "expected an object");
      r.only_keys(bc, "/bound_check", {"n_models", "d_env", "n_times", "t_max"});
      r.read(bc, "/bound_check", "n_models", file.n_models);
      r.read(bc, "/bound_check", "n_times", bc_n_times);
      r.read(bc, "/bound_check", "t_max", bc_t_max);
      if (bc.contains("d_env")) {
        const auto& d = bc["d_env"];
        if (!d.is_array() || d.empty()) r.fail("bound_check.d_env", "/bound_check/d_env", "expected a non-empty array");
        std::vector<Index> dims;
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (!d[i].is_number_integer() || d[i].get<long long>() < 1)
            r.fail("bound_check.d_env", "/bound_check/d_env/" + std::to_string(i), "expected a positive integer");
          dims.push_back(static_cast<Index>(d[i].get<long long>()));
        }
        bc_d_env = dims;
      }
    }
    if (doc.contains("sweep")) {
      const auto& sw = doc["sweep"];
      if (!sw.is_object()) r.fail("sweep", "/sweep", "expected an object");
      r.only_keys(sw, "/sweep", {"j0", "b_field"});
      if (sw.contains("j0")) file_j0_grid = r.range(sw["j0"], "/sweep/j0");
      if (sw.contains("b_field")) file_b_grid = r.range(sw["b_field"], "/sweep/b_field");
    }
  }

  auto pick = [](const auto& flag, const auto& from_file) { return flag ? flag : from_file; };
  auto where = [&](const auto& flag, const std::string& key) {
    return flag ? std::string("command line") : source + "#/" + key;
  };

  RunConfig cfg;
  const auto scenario_text = pick(flags.scenario, file.scenario);
  if (!scenario_text) throw ConfigError("scenario", source.empty() ? "command line" : source, "missing required field");
  const auto scenario = parse_scenario(*scenario_text);
  if (!scenario)
    throw ConfigError("scenario", where(flags.scenario, "scenario"),
                      "unknown scenario '" + *scenario_text +
                          "' (fig1a|fig1b|fig2a|fig2b|bound-check|measure|sweep|custom)");
  cfg.scenario = *scenario;
  const bool short_window = cfg.scenario == Scenario::Fig2b || cfg.scenario == Scenario::Sweep;

  cfg.chain.n_total = pick(flags.n_spins, file.n_spins).value_or(10);
  cfg.chain.j_env = pick(flags.j, file.j).value_or(1.0);
  cfg.chain.j_sys = pick(flags.j0, file.j0).value_or(1.0);
  cfg.chain.b_field = pick(flags.b_field, file.b_field).value_or(cfg.scenario == Scenario::Fig2b ? 0.5 : 0.01);
  cfg.chain.field_on_system = pick(flags.field_on_system, file.field_on_system).value_or(false);
  const std::string convention = pick(flags.convention, file.convention).value_or("hopping");
  if (convention == "hopping") cfg.chain.convention = CouplingConvention::Hopping;
  else if (convention == "pauli") cfg.chain.convention = CouplingConvention::Pauli;
  else throw ConfigError("convention", where(flags.convention, "convention"), "expected 'hopping' or 'pauli'");

  if (cfg.chain.n_total < 2 || cfg.chain.n_total > 12)
    throw ConfigError("n_spins", where(flags.n_spins, "n_spins"), "must be between 2 and 12");
  if (!(cfg.chain.j_env != 0.0)) throw ConfigError("j", where(flags.j, "j"), "must be nonzero");
  try {
    cfg.chain.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("chain", source.empty() ? "command line" : source, e.what());
  }

  const double default_t_max = short_window ? 0.5 * (cfg.chain.n_total - 1) : static_cast<double>(cfg.chain.n_total - 1);
  const double t_max = pick(flags.t_max, file.t_max).value_or(default_t_max);
  const int steps = pick(flags.steps, file.steps).value_or(short_window ? 1000 : 2000);
  if (steps < 0) throw ConfigError("steps", where(flags.steps, "steps"), "must be >= 0");
  if (!std::isfinite(t_max) || t_max < 0.0 || (steps > 0 && t_max == 0.0))
    throw ConfigError("t_max", where(flags.t_max, "t_max"), "must be finite and positive");
  cfg.grid = TimeGrid::make(t_max, steps);

  cfg.pair = pick(flags.pair, file.pair).value_or("paper");
  cfg.seed = pick(flags.seed, file.seed).value_or(7);
  try {
    PairFamily::parse(cfg.pair, cfg.seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("pair", where(flags.pair, "pair"), e.what());
  }
  try {
    cfg.path = parse_evolution_path(pick(flags.path, file.path).value_or("auto"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("path", where(flags.path, "path"), e.what());
  }
  cfg.out = pick(flags.out, file.out).value_or("");
  cfg.summary = pick(flags.summary, file.summary).value_or("");
  cfg.model_path = pick(flags.model, file.model).value_or("");
  if (!cfg.model_path.empty() && cfg.scenario != Scenario::Custom && cfg.scenario != Scenario::Measure)
    throw ConfigError("model", where(flags.model, "model"), "a model file is only used by the custom and measure scenarios");

  if (auto n = pick(flags.n_models, file.n_models)) cfg.bound_check.n_models = *n;
  if (bc_n_times) cfg.bound_check.n_times = *bc_n_times;
  if (bc_t_max) cfg.bound_check.t_max = *bc_t_max;
  if (bc_d_env) cfg.bound_check.d_env = *bc_d_env;
  if (cfg.bound_check.n_models < 1)
    throw ConfigError("bound_check.n_models", where(flags.n_models, "bound_check/n_models"), "must be >= 1");
  if (cfg.bound_check.n_times < 1)
    throw ConfigError("bound_check.n_times", source + "#/bound_check/n_times", "must be >= 1");
  if (!(cfg.bound_check.t_max > 0.0) || !std::isfinite(cfg.bound_check.t_max))
    throw ConfigError("bound_check.t_max", source + "#/bound_check/t_max", "must be finite and positive");

  const double j = cfg.chain.j_env;
  cfg.j0_grid = flags.j0_grid ? detail::parse_range_flag("j0_grid", *flags.j0_grid)
                              : file_j0_grid.value_or(Range{cfg.chain.j_sys / j, cfg.chain.j_sys / j, 1});
  cfg.b_grid = flags.b_grid ? detail::parse_range_flag("b_grid", *flags.b_grid)
                            : file_b_grid.value_or(Range{cfg.chain.b_field / j, cfg.chain.b_field / j, 1});
  for (const auto& [key, r] : {std::pair<const char*, const Range&>{"sweep.j0", cfg.j0_grid},
                               std::pair<const char*, const Range&>{"sweep.b_field", cfg.b_grid}}) {
    if (r.count < 1) throw ConfigError(key, source.empty() ? "command line" : source, "count must be >= 1");
    if (!std::isfinite(r.min) || !std::isfinite(r.max))
      throw ConfigError(key, source.empty() ? "command line" : source, "range must be finite");
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path, const Overrides& flags) {
  if (path.empty()) return parse_config("", "", flags);
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", path, "cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path, flags);
}

}  // namespace nmsec::cli
