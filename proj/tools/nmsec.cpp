#include "nmsec/cli/config.hpp"
#include "nmsec/cli/scenarios.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

using nmsec::cli::Overrides;

// Flag storage; copied into Overrides only for options actually given.
struct Flags {
  std::string config;
  std::string scenario;
  int n_spins = 0;
  double j = 0.0, j0 = 0.0, b_field = 0.0, t_max = 0.0;
  int steps = 0;
  std::string pair, path;
  std::uint64_t seed = 0;
  std::string out, summary, convention, model, j0_grid, b_grid;
  int n_models = 0;
  bool field_on_system = false;

  struct Bound {
    CLI::Option* scenario = nullptr;
    CLI::Option* n_spins = nullptr;
    CLI::Option* j = nullptr;
    CLI::Option* j0 = nullptr;
    CLI::Option* b_field = nullptr;
    CLI::Option* t_max = nullptr;
    CLI::Option* steps = nullptr;
    CLI::Option* pair = nullptr;
    CLI::Option* path = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* summary = nullptr;
    CLI::Option* field_on_system = nullptr;
    CLI::Option* convention = nullptr;
    CLI::Option* model = nullptr;
    CLI::Option* j0_grid = nullptr;
    CLI::Option* b_grid = nullptr;
    CLI::Option* n_models = nullptr;
  };

  Bound attach(CLI::App* app, bool with_scenario) {
    Bound b;
    app->add_option("--config", config, "JSON config file");
    if (with_scenario)
      b.scenario = app->add_option("--scenario", scenario, "fig1a|fig1b|fig2a|fig2b|bound-check|measure|sweep|custom");
    b.n_spins = app->add_option("--n-spins", n_spins, "chain length N+1 (default 10)");
    b.j = app->add_option("--j", j, "environment coupling J");
    b.j0 = app->add_option("--j0", j0, "system-environment coupling J0");
    b.b_field = app->add_option("--b-field", b_field, "field B");
    b.t_max = app->add_option("--t-max", t_max, "time window, units of 1/J");
    b.steps = app->add_option("--steps", steps, "number of time steps");
    b.pair = app->add_option("--pair", pair, "paper | equatorial:K | random:N");
    b.path = app->add_option("--path", path, "dense | subspace | auto");
    b.seed = app->add_option("--seed", seed, "seed for random scenarios");
    b.out = app->add_option("--out", out, "CSV output");
    b.summary = app->add_option("--summary", summary, "JSON summary output");
    b.field_on_system = app->add_flag("--field-on-system", field_on_system, "field also on the system spin");
    b.convention = app->add_option("--convention", convention, "hopping (default) | pauli");
    b.model = app->add_option("--model", model, "generic model file (custom, measure)");
    b.j0_grid = app->add_option("--j0-grid", j0_grid, "sweep J0/J as min:max:count");
    b.b_grid = app->add_option("--b-grid", b_grid, "sweep B/J as min:max:count");
    b.n_models = app->add_option("--n-models", n_models, "random models in the bound suite");
    return b;
  }

  Overrides collect(const Bound& b) const {
    Overrides o;
    auto set = [](CLI::Option* opt, auto& into, const auto& value) {
      if (opt && opt->count() > 0) into = value;
    };
    set(b.scenario, o.scenario, scenario);
    set(b.n_spins, o.n_spins, n_spins);
    set(b.j, o.j, j);
    set(b.j0, o.j0, j0);
    set(b.b_field, o.b_field, b_field);
    set(b.t_max, o.t_max, t_max);
    set(b.steps, o.steps, steps);
    set(b.pair, o.pair, pair);
    set(b.path, o.path, path);
    set(b.seed, o.seed, seed);
    set(b.out, o.out, out);
    set(b.summary, o.summary, summary);
    set(b.field_on_system, o.field_on_system, field_on_system);
    set(b.convention, o.convention, convention);
    set(b.model, o.model, model);
    set(b.j0_grid, o.j0_grid, j0_grid);
    set(b.b_grid, o.b_grid, b_grid);
    set(b.n_models, o.n_models, n_models);
    return o;
  }
};

}  // namespace

int main(int argc, char** argv) {
  namespace cli = nmsec::cli;
  CLI::App app{"Trace-distance non-Markovianity and correlation-bound laboratory"};
  app.require_subcommand(1);

  Flags run_flags, sweep_flags, verify_flags;
  CLI::App* run = app.add_subcommand("run", "run one scenario");
  CLI::App* sweep = app.add_subcommand("sweep", "non-Markovianity over a (J0/J, B/J) grid");
  CLI::App* verify = app.add_subcommand("verify", "random-model bound suite and structural invariants");
  const auto run_bound = run_flags.attach(run, true);
  const auto sweep_bound = sweep_flags.attach(sweep, false);
  const auto verify_bound = verify_flags.attach(verify, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitConfig;
  }

  return cli::guarded(
      [&]() -> int {
        if (run->parsed()) {
          const auto cfg = cli::load_config(run_flags.config, run_flags.collect(run_bound));
          return cli::run_scenario(cfg, std::cout, std::cerr);
        }
        if (sweep->parsed()) {
          auto o = sweep_flags.collect(sweep_bound);
          o.scenario = "sweep";
          const auto cfg = cli::load_config(sweep_flags.config, o);
          return cli::run_sweep(cfg, std::cout, std::cerr);
        }
        auto o = verify_flags.collect(verify_bound);
        o.scenario = "bound-check";
        const auto cfg = cli::load_config(verify_flags.config, o);
        return cli::run_verify(cfg, std::cout, std::cerr);
      },
      std::cerr);
}
