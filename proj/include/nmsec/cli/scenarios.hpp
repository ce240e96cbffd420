#pragma once

// Scenario drivers behind the `run`, `sweep` and `verify` verbs.
// Exit codes: 0 ok, 1 numerical-invariant violation (or failed sweep point),
// 2 configuration error.

#include "nmsec/cli/config.hpp"
#include "nmsec/cli/output.hpp"
#include "nmsec/diagnostics.hpp"
#include "nmsec/evolution.hpp"
#include "nmsec/measure.hpp"
#include "nmsec/model.hpp"
#include "nmsec/model_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace nmsec::cli {

enum ExitCode : int { kExitOk = 0, kExitViolation = 1, kExitConfig = 2 };

// Tolerances enforced on every run.
inline constexpr double kBoundTolerance = 1e-6;
inline constexpr double kRowIdentityTolerance = 1e-12;
inline constexpr double kPurityTolerance = 1e-10;
inline constexpr double kMagnetizationTolerance = 1e-10;
inline constexpr double kChiTraceTolerance = 1e-12;
inline constexpr double kGammaTolerance = 1e-10;

// --- series analysis ----------------------------------------------------------

/// Times where sigma goes from negative to non-negative, linearly interpolated.
inline std::vector<double> zero_crossings_down_up(const std::vector<DiagnosticsRow>& rows) {
  std::vector<double> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double s0 = rows[i - 1].sigma;
    const double s1 = rows[i].sigma;
    if (s0 < 0.0 && s1 >= 0.0) out.push_back(rows[i - 1].t + (rows[i].t - rows[i - 1].t) * (-s0) / (s1 - s0));
  }
  return out;
}

/// Maximal runs of rows with sigma > 0, as (first, last) row indices.
inline std::vector<std::pair<std::size_t, std::size_t>> sigma_positive_runs(const std::vector<DiagnosticsRow>& rows) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < rows.size()) {
    if (rows[i].sigma > 0.0) {
      const std::size_t start = i;
      while (i + 1 < rows.size() && rows[i + 1].sigma > 0.0) ++i;
      out.emplace_back(start, i);
    }
    ++i;
  }
  return out;
}

/// Linear interpolation of a column at time t.
inline double column_at(const std::vector<DiagnosticsRow>& rows, double DiagnosticsRow::*field, double t) {
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (t <= rows.front().t) return rows.front().*field;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].t >= t) {
      const double w = (t - rows[i - 1].t) / (rows[i].t - rows[i - 1].t);
      return (1.0 - w) * (rows[i - 1].*field) + w * (rows[i].*field);
    }
  }
  return rows.back().*field;
}

struct WindowMinimum {
  double t = 0.0;         // time of the smallest sample in the window
  double value = 0.0;
  bool interior = false;  // the smallest sample is not on the window edge
};

/// Smallest sample of `field` within [tc - half_width, tc + half_width].
inline WindowMinimum window_minimum(const std::vector<DiagnosticsRow>& rows, double DiagnosticsRow::*field, double tc,
                                    double half_width) {
  WindowMinimum best;
  std::size_t first = rows.size(), last = 0, arg = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].t < tc - half_width || rows[i].t > tc + half_width) continue;
    first = std::min(first, i);
    last = i;
    if (arg == rows.size() || rows[i].*field < rows[arg].*field) arg = i;
  }
  if (arg == rows.size()) return best;
  best.t = rows[arg].t;
  best.value = rows[arg].*field;
  best.interior = arg != first && arg != last;
  return best;
}

// --- shared pieces --------------------------------------------------------------

inline std::ofstream open_output(const std::string& path, const char* key) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(key, path, "cannot open for writing");
  return out;
}

inline Json parameters_json(const RunConfig& cfg) {
  Json p;
  p["scenario"] = to_string(cfg.scenario);
  if (cfg.model_path.empty()) {
    p["n_total"] = cfg.chain.n_total;
    p["j"] = cfg.chain.j_env;
    p["j0"] = cfg.chain.j_sys;
    p["b_field"] = cfg.chain.b_field;
    p["field_on_system"] = cfg.chain.field_on_system;
    p["convention"] = to_string(cfg.chain.convention);
  } else {
    p["model"] = cfg.model_path;
  }
  p["t_max"] = cfg.grid.t_max;
  p["n_steps"] = cfg.grid.n_steps;
  p["pair"] = cfg.pair;
  p["path"] = std::string(to_string(cfg.path));
  p["seed"] = cfg.seed;
  if (cfg.scenario == Scenario::BoundCheck) {
    p["bound_check"] = {{"n_models", cfg.bound_check.n_models},
                        {"d_env", cfg.bound_check.d_env},
                        {"n_times", cfg.bound_check.n_times},
                        {"t_max", cfg.bound_check.t_max},
                        {"step", cfg.bound_check.step}};
  }
  if (cfg.scenario == Scenario::Sweep) {
    auto range = [](const Range& r) { return Json{{"min", r.min}, {"max", r.max}, {"count", r.count}}; };
    p["sweep"] = {{"j0_over_j", range(cfg.j0_grid)}, {"b_over_j", range(cfg.b_grid)}};
  }
  return p;
}

/// Writes the summary to `cfg.summary`, or to `out` when no path is set.
inline void emit_summary(const RunConfig& cfg, const Summary& s, std::ostream& out) {
  const Json j = s.to_json(utc_timestamp());
  if (cfg.summary.empty()) {
    write_json(out, j);
  } else {
    auto f = open_output(cfg.summary, "summary");
    write_json(f, j);
  }
}

struct ModelSource {
  Model model;
  bool is_chain = true;
};

inline ModelSource load_model(const RunConfig& cfg) {
  if (!cfg.model_path.empty()) return {load_generic_model(cfg.model_path), false};
  return {build_chain_model(cfg.chain), true};
}

inline std::vector<CandidatePair> candidates_for(const RunConfig& cfg, const ModelSource& src) {
  const PairFamily family = cfg.pair_family();
  return src.is_chain ? chain_candidates(cfg.chain.n_total, family) : generic_candidates(src.model, family);
}

inline void check_trajectory_invariants(const TrajectoryRecord& rec, std::vector<Violation>& out) {
  const InvariantReport& inv = rec.invariants;
  if (inv.max_bound_violation > kBoundTolerance)
    out.push_back({"bound", inv.max_bound_violation, kBoundTolerance, "max over rows of sigma - bound_total"});
  if (inv.max_row_identity_defect > kRowIdentityTolerance)
    out.push_back({"row_identity", inv.max_row_identity_defect, kRowIdentityTolerance,
                   "bound_total = (term1 + term2)/2 and E_indist = 1 - D_env"});
  if (inv.max_purity_drift > kPurityTolerance)
    out.push_back({"purity", inv.max_purity_drift, kPurityTolerance, "joint purity drift"});
  if (inv.max_magnetization_drift && *inv.max_magnetization_drift > kMagnetizationTolerance)
    out.push_back({"magnetization", *inv.max_magnetization_drift, kMagnetizationTolerance, "total magnetization drift"});
  if (inv.max_chi_partial_trace > kChiTraceTolerance)
    out.push_back({"chi_partial_trace", inv.max_chi_partial_trace, kChiTraceTolerance, "largest entry of Tr_S chi, Tr_E chi"});
}

// --- trajectory scenarios (fig1a, fig1b, fig2a, fig2b, custom) ------------------

struct TrajectoryOutcome {
  TrajectoryRecord record;
  MeasureReport report;
};

inline TrajectoryOutcome trajectory_outcome(const RunConfig& cfg, const ModelSource& src) {
  const auto candidates = candidates_for(cfg, src);
  TrajectoryOutcome out;
  std::size_t best = 0;
  if (candidates.size() > 1) {
    out.report = measure_candidates(src.model, candidates, cfg.grid, cfg.path);
    best = out.report.best_index;
  }
  out.record = run_trajectory(with_initial_pair(src.model, candidates[best].pair), cfg.grid, cfg.path);
  if (candidates.size() == 1) {
    const auto d = out.record.column(&DiagnosticsRow::D_system);
    out.report.n_measure = blp_integral(d);
    out.report.intervals = increasing_intervals(d, cfg.grid);
    out.report.best_pair = candidates[0].descriptor;
    out.report.per_pair_values = {{candidates[0].descriptor, out.report.n_measure}};
    out.report.path_used = out.record.path_used;
  }
  return out;
}

inline Json figure_extras(Scenario scenario, const std::vector<DiagnosticsRow>& rows,
                          const std::vector<double>& crossings) {
  Json x = Json::object();
  if (scenario == Scenario::Fig1a || scenario == Scenario::Custom) {
    const auto runs = sigma_positive_runs(rows);
    x["n_sigma_positive_runs"] = runs.size();
    if (!runs.empty()) {
      double gap = std::numeric_limits<double>::infinity();
      for (std::size_t i = runs[0].first; i <= runs[0].second; ++i) gap = std::min(gap, rows[i].bound_total - rows[i].sigma);
      x["first_interval"] = {{"t_start", rows[runs[0].first].t}, {"t_end", rows[runs[0].second].t}, {"min_gap", gap}};
    }
  }
  if (scenario == Scenario::Fig1b) {
    Json list = Json::array();
    for (double tc : crossings) {
      Json c;
      c["t"] = tc;
      c["E_indist_at_crossing"] = column_at(rows, &DiagnosticsRow::E_indist, tc);
      for (auto [name, field] : {std::pair<const char*, double DiagnosticsRow::*>{"E_indist", &DiagnosticsRow::E_indist},
                                 {"X_corr", &DiagnosticsRow::X_corr},
                                 {"chi1_norm", &DiagnosticsRow::chi1_norm},
                                 {"chi2_norm", &DiagnosticsRow::chi2_norm}}) {
        const WindowMinimum m = window_minimum(rows, field, tc, 0.1);
        c["minima"][name] = {{"t", m.t}, {"value", m.value}, {"offset", m.t - tc}, {"interior", m.interior}};
      }
      list.push_back(c);
    }
    x["crossings"] = list;
  }
  if (scenario == Scenario::Fig2a) {
    double pure_mi = 0.0, entropy_sym = 0.0;
    for (const auto& r : rows) {
      pure_mi = std::max(pure_mi, std::abs(r.mutual_info_1 - 2.0 * r.svn_system_1));
      entropy_sym = std::max(entropy_sym, std::abs(r.svn_system_1 - r.svn_system_2));
    }
    x["max_abs_mutual_info_minus_twice_entropy"] = pure_mi;
    x["max_abs_entropy_difference"] = entropy_sym;
    x["mutual_info_at_zero"] = rows.empty() ? 0.0 : rows.front().mutual_info_1;
  }
  if (scenario == Scenario::Fig2b) {
    double max_sigma = -std::numeric_limits<double>::infinity();
    Json first = nullptr;
    for (const auto& r : rows) {
      max_sigma = std::max(max_sigma, r.sigma);
      if (first.is_null() && r.sigma > kBoundTolerance) first = r.t;
    }
    x["max_sigma"] = number_or_null(max_sigma);
    x["first_t_sigma_above_tolerance"] = first;
  }
  return x;
}

inline int run_trajectory_scenario(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::optional<std::ofstream> csv;
  if (!cfg.out.empty()) csv = open_output(cfg.out, "out");
  const ModelSource src = load_model(cfg);
  const TrajectoryOutcome o = trajectory_outcome(cfg, src);
  const auto& rows = o.record.rows;
  if (csv) write_trajectory_csv(*csv, rows);

  Summary s;
  s.parameters = parameters_json(cfg);
  s.n_measure = o.report.n_measure;
  s.intervals = o.report.intervals;
  s.zero_crossings_down_up = zero_crossings_down_up(rows);
  s.max_bound_violation = o.record.invariants.max_bound_violation;
  s.path_used = std::string(to_string(o.record.path_used));
  check_trajectory_invariants(o.record, s.violations);
  s.extras = figure_extras(cfg.scenario, rows, s.zero_crossings_down_up);
  s.extras["best_pair"] = o.report.best_pair;
  if (o.report.per_pair_values.size() > 1) {
    Json per = Json::array();
    for (const auto& v : o.report.per_pair_values) per.push_back({{"pair", v.descriptor}, {"n_measure", v.n_measure}});
    s.extras["per_pair"] = per;
  }
  s.extras["model"] = src.model.label;
  s.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit_summary(cfg, s, out);
  for (const auto& v : s.violations) log << "violation: " << v.check << " = " << v.value << " (tolerance " << v.tolerance << ")\n";
  return s.violations.empty() ? kExitOk : kExitViolation;
}

// --- random-model bound suite -----------------------------------------------------

struct BoundSuiteResult {
  CsvTable table{{"instance", "d_env", "t", "sigma", "bound_total", "bound_term1", "bound_term2"}};
  double max_violation = -std::numeric_limits<double>::infinity();  // max of sigma - bound_total
  int failures = 0;                                                 // rows beyond tolerance
  int n_models = 0;
  double max_gamma_defect = 0.0;  // |gamma_term1 - branch| over all samples
};

inline double reduced_distance(const Propagator& prop, const Model& m, double t) {
  const ComplexMatrix u = prop.unitary(t);
  const ComplexMatrix r1 = partial_trace(u * m.initial_pair[0].matrix() * u.adjoint(), m.bipartition, Keep::System);
  const ComplexMatrix r2 = partial_trace(u * m.initial_pair[1].matrix() * u.adjoint(), m.bipartition, Keep::System);
  return trace_distance(r1, r2);
}

/// sigma from a local central difference of width 2h, against the bound at each sampled time.
inline BoundSuiteResult bound_suite(const BoundCheckConfig& bc, std::uint64_t seed) {
  BoundSuiteResult res;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> when(0.0, bc.t_max);
  const double h = bc.step;
  for (int i = 0; i < bc.n_models; ++i) {
    const Index de = bc.d_env[static_cast<std::size_t>(i) % bc.d_env.size()];
    const Model m = random_generic_model(2, de, rng);
    const Propagator prop = make_propagator(m.hamiltonian);
    std::vector<double> times(static_cast<std::size_t>(bc.n_times));
    for (double& t : times) t = when(rng);
    std::sort(times.begin(), times.end());
    for (double t : times) {
      const double sigma = (reduced_distance(prop, m, t + h) - reduced_distance(prop, m, t - h)) / (2.0 * h);
      const ComplexMatrix u = prop.unitary(t);
      const ComplexMatrix rho1 = u * m.initial_pair[0].matrix() * u.adjoint();
      const ComplexMatrix rho2 = u * m.initial_pair[1].matrix() * u.adjoint();
      const BoundTerms b = bound_rhs(m.hamiltonian, m.bipartition, rho1, rho2);
      const ComplexMatrix delta =
          partial_trace(rho1, m.bipartition, Keep::Environment) - partial_trace(rho2, m.bipartition, Keep::Environment);
      const std::array<const ComplexMatrix*, 2> rho{&rho1, &rho2};
      for (int k = 0; k < 2; ++k) {
        const double g = gamma_term1(m, partial_trace(*rho[k], m.bipartition, Keep::System), delta);
        res.max_gamma_defect = std::max(res.max_gamma_defect, std::abs(g - b.branches[k]));
      }
      res.table.row() << i << static_cast<long long>(de) << t << sigma << b.total << b.term1 << b.term2;
      res.max_violation = std::max(res.max_violation, sigma - b.total);
      if (sigma > b.total + kBoundTolerance) ++res.failures;
    }
    ++res.n_models;
  }
  return res;
}

inline int run_bound_check(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::optional<std::ofstream> csv;
  if (!cfg.out.empty()) csv = open_output(cfg.out, "out");
  const BoundSuiteResult res = bound_suite(cfg.bound_check, cfg.seed);
  if (csv) res.table.write(*csv);

  Summary s;
  s.parameters = parameters_json(cfg);
  s.max_bound_violation = res.max_violation;
  s.path_used = "dense";
  if (res.failures > 0)
    s.violations.push_back({"bound", res.max_violation, kBoundTolerance,
                            std::to_string(res.failures) + " sampled times with sigma > bound_total + tolerance"});
  if (res.max_gamma_defect > kGammaTolerance)
    s.violations.push_back({"gamma_term1", res.max_gamma_defect, kGammaTolerance, "gamma route vs direct term-1 branch"});
  s.extras = {{"n_models", res.n_models}, {"n_samples", res.table.size()}, {"max_gamma_defect", res.max_gamma_defect}};
  s.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit_summary(cfg, s, out);
  for (const auto& v : s.violations) log << "violation: " << v.check << " = " << v.value << " (" << v.detail << ")\n";
  return s.violations.empty() ? kExitOk : kExitViolation;
}

// --- measure ------------------------------------------------------------------------

inline int run_measure(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto start = std::chrono::steady_clock::now();
  std::optional<std::ofstream> csv;
  if (!cfg.out.empty()) csv = open_output(cfg.out, "out");
  const ModelSource src = load_model(cfg);
  const MeasureReport r = measure_candidates(src.model, candidates_for(cfg, src), cfg.grid, cfg.path);
  if (csv) {
    CsvTable t({"pair", "n_measure"});
    for (const auto& v : r.per_pair_values) t.row() << v.descriptor << v.n_measure;
    t.write(*csv);
  }
  Summary s;
  s.parameters = parameters_json(cfg);
  s.n_measure = r.n_measure;
  s.intervals = r.intervals;
  s.max_bound_violation = std::numeric_limits<double>::quiet_NaN();  // not evaluated
  s.path_used = std::string(to_string(r.path_used));
  Json per = Json::array();
  for (const auto& v : r.per_pair_values) per.push_back({{"pair", v.descriptor}, {"n_measure", v.n_measure}});
  s.extras = {{"best_pair", r.best_pair}, {"per_pair", per}};
  s.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit_summary(cfg, s, out);
  return kExitOk;
}

// --- sweep --------------------------------------------------------------------------

struct SweepPoint {
  double j0_over_j = 0.0;
  double b_over_j = 0.0;
  bool ok = false;
  double n_measure = 0.0;
  std::size_t n_intervals = 0;
  std::optional<double> first_interval_start;
  std::string path_used;
  std::string message;
};

/// One point per (J0/J, B/J), J0 outer and B inner.
inline std::vector<SweepPoint> sweep_points(const SweepConfig& sc) {
  std::vector<SweepPoint> out;
  for (double j0r : sc.j0_ratio.values()) {
    for (double br : sc.b_ratio.values()) {
      SweepPoint p;
      p.j0_over_j = j0r;
      p.b_over_j = br;
      try {
        ChainParams params = sc.base;
        params.j_sys = j0r * sc.base.j_env;
        params.b_field = br * sc.base.j_env;
        const MeasureReport r = blp_measure(params, sc.grid, sc.pair, sc.path);
        p.n_measure = r.n_measure;
        p.n_intervals = r.intervals.size();
        if (!r.intervals.empty()) p.first_interval_start = r.intervals.front().t_start;
        p.path_used = std::string(to_string(r.path_used));
        p.ok = true;
      } catch (const std::exception& e) {
        p.message = e.what();
        std::replace(p.message.begin(), p.message.end(), ',', ';');
        std::replace(p.message.begin(), p.message.end(), '\n', ' ');
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  CsvTable t({"j0_over_j", "b_over_j", "n_measure", "n_intervals", "first_interval_start", "path_used", "status",
              "message"});
  for (const auto& p : points) {
    auto& row = t.row();
    row << p.j0_over_j << p.b_over_j;
    if (p.ok) row << p.n_measure << p.n_intervals;
    else row << "" << "";
    row << (p.first_interval_start ? format_double(*p.first_interval_start) : std::string()) << p.path_used
        << (p.ok ? "ok" : "error") << p.message;
  }
  t.write(out);
}

inline int run_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::optional<std::ofstream> csv;
  if (!cfg.out.empty()) csv = open_output(cfg.out, "out");
  const auto points = sweep_points(cfg.sweep_config());
  if (csv) write_sweep_csv(*csv, points);

  Summary s;
  s.parameters = parameters_json(cfg);
  s.parameters["scenario"] = "sweep";
  s.max_bound_violation = std::numeric_limits<double>::quiet_NaN();
  Json list = Json::array();
  int failed = 0;
  for (const auto& p : points) {
    if (p.ok) s.n_measure = std::max(s.n_measure, p.n_measure);
    else ++failed;
    Json j = {{"j0_over_j", p.j0_over_j}, {"b_over_j", p.b_over_j}, {"status", p.ok ? "ok" : "error"}};
    if (p.ok) j["n_measure"] = p.n_measure;
    else j["message"] = p.message;
    list.push_back(j);
    if (!p.path_used.empty()) s.path_used = p.path_used;
  }
  if (failed > 0) s.violations.push_back({"sweep_point", static_cast<double>(failed), 0.0, "points that failed"});
  s.extras = {{"points", list}};
  s.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit_summary(cfg, s, out);
  for (const auto& p : points)
    if (!p.ok) log << "sweep point (" << p.j0_over_j << ", " << p.b_over_j << ") failed: " << p.message << '\n';
  return failed == 0 ? kExitOk : kExitViolation;
}

// --- verify -------------------------------------------------------------------------

struct CheckLine {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
};

/// Structural invariants of a chain trajectory plus the gamma cross-check at sampled rows.
inline std::vector<CheckLine> chain_structure_checks(const ChainParams& params, const TimeGrid& grid, EvolutionPath path,
                                                     int gamma_samples = 20) {
  const Model m = build_chain_model(params);
  if (path == EvolutionPath::Auto) path = subspace_applicable(m) ? EvolutionPath::Subspace : EvolutionPath::Dense;
  const TrajectoryRecord rec = run_trajectory(m, grid, path);
  const InvariantReport& inv = rec.invariants;

  // gamma route on the full environment; subspace marginals are embedded back.
  double gamma_defect = 0.0;
  std::unique_ptr<SubspaceEvolver> sub;
  std::unique_ptr<DenseEvolver> dense;
  if (path == EvolutionPath::Subspace) sub = std::make_unique<SubspaceEvolver>(m);
  else dense = std::make_unique<DenseEvolver>(m);
  const std::size_t stride = std::max<std::size_t>(1, grid.size() / static_cast<std::size_t>(gamma_samples));
  for (std::size_t i = 0; i < grid.size(); i += stride) {
    const double t = grid.time(i);
    const auto rho = sub ? sub->states(t) : dense->states(t);
    const Bipartition bp = sub ? sub->bipartition() : dense->bipartition();
    const ComplexMatrix h = sub ? sub->generator() : dense->generator();
    const BoundTerms b = bound_rhs(h, bp, rho[0], rho[1]);
    ComplexMatrix delta = partial_trace(rho[0], bp, Keep::Environment) - partial_trace(rho[1], bp, Keep::Environment);
    if (sub) delta = sub->embed_environment(delta);
    for (int k = 0; k < 2; ++k) {
      const double g = gamma_term1(m, partial_trace(rho[k], bp, Keep::System), delta);
      gamma_defect = std::max(gamma_defect, std::abs(g - b.branches[k]));
    }
  }
  const double mag = inv.max_magnetization_drift.value_or(0.0);
  return {
      {"chain chi partial traces", inv.max_chi_partial_trace <= kChiTraceTolerance, inv.max_chi_partial_trace, kChiTraceTolerance},
      {"chain joint purity drift", inv.max_purity_drift <= kPurityTolerance, inv.max_purity_drift, kPurityTolerance},
      {"chain magnetization drift", mag <= kMagnetizationTolerance, mag, kMagnetizationTolerance},
      {"chain gamma_term1 vs term-1 branch", gamma_defect <= kGammaTolerance, gamma_defect, kGammaTolerance},
      {"chain row identities", inv.max_row_identity_defect <= kRowIdentityTolerance, inv.max_row_identity_defect,
       kRowIdentityTolerance},
      {"chain sigma <= bound", inv.max_bound_violation <= kBoundTolerance, inv.max_bound_violation, kBoundTolerance},
  };
}

inline int run_verify(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::optional<std::ofstream> csv;
  if (!cfg.out.empty()) csv = open_output(cfg.out, "out");
  const BoundSuiteResult suite = bound_suite(cfg.bound_check, cfg.seed);
  if (csv) suite.table.write(*csv);

  std::vector<CheckLine> checks{
      {"random models sigma <= bound", suite.failures == 0, suite.max_violation, kBoundTolerance},
      {"random models gamma_term1 vs term-1 branch", suite.max_gamma_defect <= kGammaTolerance, suite.max_gamma_defect,
       kGammaTolerance},
  };
  for (auto& c : chain_structure_checks(cfg.chain, cfg.grid, cfg.path)) checks.push_back(std::move(c));

  Summary s;
  s.parameters = parameters_json(cfg);
  s.parameters["scenario"] = "verify";
  s.max_bound_violation = suite.max_violation;
  s.path_used = std::string(to_string(cfg.path));
  Json lines = Json::array();
  for (const auto& c : checks) {
    log << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << format_double(c.value) << " (tolerance "
        << format_double(c.tolerance) << ")\n";
    lines.push_back({{"check", c.name}, {"pass", c.pass}, {"value", number_or_null(c.value)}, {"tolerance", c.tolerance}});
    if (!c.pass) s.violations.push_back({c.name, c.value, c.tolerance, "verify"});
  }
  s.extras = {{"checks", lines}, {"n_models", suite.n_models}};
  s.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.summary.empty()) emit_summary(cfg, s, out);
  return s.violations.empty() ? kExitOk : kExitViolation;
}

// --- dispatch -----------------------------------------------------------------------

inline int run_scenario(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  switch (cfg.scenario) {
    case Scenario::BoundCheck: return run_bound_check(cfg, out, log);
    case Scenario::Measure: return run_measure(cfg, out, log);
    case Scenario::Sweep: return run_sweep(cfg, out, log);
    default: return run_trajectory_scenario(cfg, out, log);
  }
}

/// Runs `body` and maps failures onto exit codes.
template <typename Body>
int guarded(Body&& body, std::ostream& log) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ModelFileError& e) {
    log << "model file error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitViolation;
  }
}

}  // namespace nmsec::cli
