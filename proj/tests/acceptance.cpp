// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "nmsec/cli/config.hpp"
#include "nmsec/cli/scenarios.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace nmsec;
using namespace nmsec::cli;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

ChainParams chain(int n_total, double b_field) {
  ChainParams p;
  p.n_total = n_total;
  p.j_env = 1.0;
  p.j_sys = 1.0;
  p.b_field = b_field;
  p.convention = CouplingConvention::Hopping;
  return p;
}

// The non-Markovian reference trajectory shared by criteria 2 to 4.
struct Reference {
  TrajectoryRecord record;
  double seconds = 0.0;
};

const Reference& reference() {
  static const Reference ref = [] {
    Reference r;
    const auto start = Clock::now();
    r.record = run_trajectory(build_chain_model(chain(10, 0.01)), TimeGrid::make(9.0, 2000), EvolutionPath::Subspace);
    r.seconds = seconds_since(start);
    return r;
  }();
  return ref;
}

constexpr double kFrozenFirstIntervalGap = 0.0012884670201605206;
constexpr double kFrozenGapTolerance = 1e-8;
constexpr double kFrozenEnvThreshold = 1e-4;
constexpr double kMarkovWindowEnd = 5.0;

Outcome criterion1() {
  Outcome o;
  BoundCheckConfig bc;
  bc.n_models = 50;
  bc.d_env = {2, 3, 4, 8};
  bc.n_times = 20;
  bc.t_max = 5.0;
  const auto start = Clock::now();
  const BoundSuiteResult res = bound_suite(bc, 7);
  const double secs = seconds_since(start);
  o.require(res.n_models == 50 && res.table.size() == 1000, "samples " + std::to_string(res.table.size()));
  o.require(res.max_violation <= kBoundTolerance, "max(sigma - bound) " + num(res.max_violation));
  o.require(secs < 30.0, "runtime " + num(secs) + " s");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto& ref = reference();
  const auto& rows = ref.record.rows;
  const auto runs = sigma_positive_runs(rows);
  o.require(!runs.empty(), std::to_string(runs.size()) + " sigma-positive intervals");
  o.require(ref.record.invariants.max_bound_violation <= kBoundTolerance,
            "max(sigma - bound) " + num(ref.record.invariants.max_bound_violation));
  if (!runs.empty()) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = runs[0].first; i <= runs[0].second; ++i) gap = std::min(gap, rows[i].bound_total - rows[i].sigma);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", gap);
    o.require(gap >= 0.0 && std::abs(gap - kFrozenFirstIntervalGap) <= kFrozenGapTolerance,
              std::string("first-interval gap ") + buf);
  }
  o.require(ref.seconds < 30.0, "runtime " + num(ref.seconds) + " s");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto& rows = reference().record.rows;
  const auto crossings = zero_crossings_down_up(rows);
  o.require(!crossings.empty(), std::to_string(crossings.size()) + " crossings");
  const std::pair<const char*, double DiagnosticsRow::*> fields[] = {{"E", &DiagnosticsRow::E_indist},
                                                                     {"X", &DiagnosticsRow::X_corr},
                                                                     {"chi1", &DiagnosticsRow::chi1_norm},
                                                                     {"chi2", &DiagnosticsRow::chi2_norm}};
  double worst_offset = 0.0, worst_env = 0.0;
  for (double tc : crossings) {
    for (const auto& [name, field] : fields) {
      const WindowMinimum m = window_minimum(rows, field, tc, 0.1);
      if (!m.interior) o.require(false, std::string(name) + " has no local minimum near t=" + num(tc));
      worst_offset = std::max(worst_offset, std::abs(m.t - tc));
    }
    worst_env = std::max(worst_env, column_at(rows, &DiagnosticsRow::E_indist, tc));
  }
  o.require(worst_offset <= 0.1, "max |t_min - t_c| " + num(worst_offset));
  o.require(worst_env < kFrozenEnvThreshold, "max E at crossings " + num(worst_env));
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto& rows = reference().record.rows;
  double twice = 0.0, equal = 0.0;
  for (const auto& r : rows) {
    twice = std::max(twice, std::abs(r.mutual_info_1 - 2.0 * r.svn_system_1));
    equal = std::max(equal, std::abs(r.svn_system_1 - r.svn_system_2));
  }
  o.require(twice <= 1e-9, "max |I - 2S| " + num(twice));
  o.require(equal <= 1e-10, "max |S1 - S2| " + num(equal));
  o.require(std::abs(rows.front().mutual_info_1) <= 1e-10, "I(0) " + num(rows.front().mutual_info_1));
  return o;
}

Outcome criterion5() {
  Outcome o;
  const TimeGrid grid = TimeGrid::make(kMarkovWindowEnd, 1111);
  const TrajectoryRecord rec = run_trajectory(build_chain_model(chain(10, 0.5)), grid, EvolutionPath::Subspace);
  double max_sigma = -std::numeric_limits<double>::infinity();
  std::vector<double> d;
  for (const auto& r : rec.rows) {
    max_sigma = std::max(max_sigma, r.sigma);
    d.push_back(r.D_system);
  }
  const double n = blp_integral(d);
  o.require(max_sigma <= 1e-6, "max sigma on [0, " + num(kMarkovWindowEnd) + "] " + num(max_sigma));
  o.require(std::abs(n) <= 1e-6, "N " + num(n));
  return o;
}

// || Tr_E[U(dt) X U(dt)^dagger - X] || / dt against || Tr_E[H, X] ||.
double discrepancy(const Propagator& prop, const Model& m, const ComplexMatrix& x, double dt) {
  const ComplexMatrix u = prop.unitary(dt);
  const double finite = trace_norm(partial_trace(u * x * u.adjoint() - x, m.bipartition, Keep::System)) / dt;
  return std::abs(finite - trace_norm(env_traced_commutator(m.hamiltonian, x, m.bipartition)));
}

Outcome criterion6() {
  Outcome o;
  const Model m = build_chain_model(chain(7, 0.01));
  const DenseEvolver ev(m);
  const Propagator& prop = ev.propagator();
  const Bipartition bp = m.bipartition;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> when(0.2, 6.0);
  const double steps[] = {1e-2, 1e-3, 1e-4};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int k = 0; k < 5; ++k) {
    const double t = when(rng);
    const auto rho = ev.states(t);
    const ComplexMatrix delta = partial_trace(rho[0], bp, Keep::Environment) - partial_trace(rho[1], bp, Keep::Environment);
    const ComplexMatrix term1 = kron(partial_trace(rho[0], bp, Keep::System), delta);
    const ComplexMatrix term2 = correlation_operator(rho[0], bp) - correlation_operator(rho[1], bp);
    for (const ComplexMatrix* x : {&term1, &term2}) {
      double e[3];
      for (int s = 0; s < 3; ++s) e[s] = discrepancy(prop, m, *x, steps[s]);
      for (int s = 0; s + 1 < 3; ++s) {
        const double slope = std::log10(e[s] / e[s + 1]) / std::log10(steps[s] / steps[s + 1]);
        lo = std::min(lo, slope);
        hi = std::max(hi, slope);
        if (!(std::abs(slope - 1.0) <= 0.2)) o.require(false, "slope " + num(slope) + " at t=" + num(t));
      }
    }
  }
  o.require(lo >= 0.8 && hi <= 1.2, "slopes in [" + num(lo) + ", " + num(hi) + "]");
  return o;
}

Outcome criterion7() {
  Outcome o;
  double worst_path = 0.0;
  for (int n = 3; n <= 7; ++n) {
    const Model m = build_chain_model(chain(n, 0.01));
    const TimeGrid grid = TimeGrid::make(n - 1.0, 200);
    const auto dense = run_trajectory(m, grid, EvolutionPath::Dense);
    const auto sub = run_trajectory(m, grid, EvolutionPath::Subspace);
    for (std::size_t i = 0; i < dense.rows.size(); ++i)
      for (const auto& col : kTrajectoryColumns)
        worst_path = std::max(worst_path, std::abs(dense.rows[i].*(col.second) - sub.rows[i].*(col.second)));
  }
  o.require(worst_path <= 1e-9, "dense vs subspace " + num(worst_path));

  std::mt19937_64 rng(11);
  double worst_norm = 0.0, worst_trace = 0.0, worst_prop = 0.0;
  for (Index d : {2, 3, 6, 16}) {
    const ComplexMatrix a = testing::random_complex(d, d, rng);
    worst_norm = std::max(worst_norm, std::abs(trace_norm(a) - testing::trace_norm_oracle(a)) / testing::trace_norm_oracle(a));
  }
  for (auto [ds, de] : {std::pair<Index, Index>{2, 2}, {2, 3}, {3, 4}, {2, 8}}) {
    const ComplexMatrix rho = testing::random_density(ds * de, rng);
    const Bipartition bp{ds, de};
    worst_trace = std::max(worst_trace, testing::max_abs(partial_trace(rho, bp, Keep::System) -
                                                         testing::trace_out_environment_oracle(rho, ds, de)));
    worst_trace = std::max(worst_trace, testing::max_abs(partial_trace(rho, bp, Keep::Environment) -
                                                         testing::trace_out_system_oracle(rho, ds, de)));
  }
  for (int n : {3, 5}) {
    const Model m = build_chain_model(chain(n, 0.3));
    ComplexVector psi = testing::random_complex(m.dim(), 1, rng);
    psi /= psi.norm();
    for (double t : {0.1, 0.4}) {
      const ComplexVector oracle = testing::taylor_evolve(m.hamiltonian, psi, t, 30);
      worst_prop = std::max(worst_prop, (make_propagator(m.hamiltonian).apply(psi, t) - oracle).cwiseAbs().maxCoeff());
    }
  }
  o.require(worst_norm <= 1e-12, "trace_norm vs oracle " + num(worst_norm));
  o.require(worst_trace <= 1e-14, "partial_trace vs oracle " + num(worst_trace));
  o.require(worst_prop <= 1e-10, "propagator vs Taylor " + num(worst_prop));
  return o;
}

Outcome criterion8() {
  Outcome o;
  for (const CheckLine& c : chain_structure_checks(chain(10, 0.01), TimeGrid::make(9.0, 2000), EvolutionPath::Subspace))
    o.require(c.pass, c.name + " " + num(c.value));
  BoundCheckConfig bc;
  bc.n_models = 12;
  bc.n_times = 5;
  const BoundSuiteResult res = bound_suite(bc, 7);
  o.require(res.max_gamma_defect <= kGammaTolerance, "random gamma_term1 vs branch " + num(res.max_gamma_defect));
  return o;
}

Outcome criterion9() {
  Outcome o;
  const MeasureReport r =
      blp_measure(chain(10, 0.01), TimeGrid::make(9.0, 2000), PairFamily::equatorial(12), EvolutionPath::Subspace);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& v : r.per_pair_values) {
    lo = std::min(lo, v.n_measure);
    hi = std::max(hi, v.n_measure);
  }
  o.require(r.per_pair_values.size() == 12, std::to_string(r.per_pair_values.size()) + " angles");
  o.require(lo > 0.0, "N " + num(lo));
  o.require(hi - lo <= 1e-9, "spread " + num(hi - lo));
  return o;
}

Outcome criterion10() {
  Outcome o;
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "nmsec_acceptance";
  std::filesystem::create_directories(dir);
  Overrides flags;
  flags.scenario = "fig1a";
  flags.path = "subspace";
  flags.out = (dir / "fig1a.csv").string();
  flags.summary = (dir / "fig1a.json").string();
  const RunConfig cfg = parse_config("", "", flags);
  std::ostringstream out, log;
  auto start = Clock::now();
  const int code = run_scenario(cfg, out, log);
  const double fig1a = seconds_since(start);
  o.require(code == kExitOk, "fig1a exit " + std::to_string(code));
  o.require(fig1a < 30.0, "fig1a " + num(fig1a) + " s");

  start = Clock::now();
  const auto rec = run_trajectory(build_chain_model(chain(7, 0.01)), TimeGrid::make(6.0, 500), EvolutionPath::Dense);
  const double dense = seconds_since(start);
  o.require(rec.rows.size() == 501, "dense rows " + std::to_string(rec.rows.size()));
  o.require(dense < 60.0, "dense n=7 " + num(dense) + " s");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 bound on random models", criterion1},
      {"2 non-Markovian chain reference", criterion2},
      {"3 minima at sigma zero crossings", criterion3},
      {"4 mutual information and entropies", criterion4},
      {"5 Markovian point", criterion5},
      {"6 first-order convergence", criterion6},
      {"7 oracle equivalence", criterion7},
      {"8 structural invariants", criterion8},
      {"9 equatorial symmetry", criterion9},
      {"10 performance", criterion10},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
