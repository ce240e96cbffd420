#pragma once

// Trace-distance non-Markovianity: increasing stretches of D(t), their
// accumulated growth, and the maximum over a family of input pairs.

#include "nmsec/evolution.hpp"
#include "nmsec/model.hpp"

#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace nmsec {

/// D must exceed its previous sample by more than this to count as growth.
inline constexpr double kIncreaseThreshold = 1e-12;

struct Interval {
  double t_start = 0.0;
  double t_end = 0.0;
  double contribution = 0.0;  // D(t_end) - D(t_start)
};

/// Maximal runs of strictly increasing samples, reported at grid times.
inline std::vector<Interval> increasing_intervals(std::span<const double> d, std::span<const double> times) {
  if (d.size() != times.size()) throw DimensionError("increasing_intervals: series and times differ in length");
  std::vector<Interval> out;
  std::size_t i = 0;
  while (i + 1 < d.size()) {
    if (d[i + 1] > d[i] + kIncreaseThreshold) {
      const std::size_t start = i;
      while (i + 1 < d.size() && d[i + 1] > d[i] + kIncreaseThreshold) ++i;
      out.push_back({times[start], times[i], d[i] - d[start]});
    } else {
      ++i;
    }
  }
  return out;
}

inline std::vector<Interval> increasing_intervals(std::span<const double> d, const TimeGrid& grid) {
  const auto ts = grid.times();
  return increasing_intervals(d, ts);
}

/// Sum of the positive increments of D: the discrete integral of sigma over sigma > 0.
inline double blp_integral(std::span<const double> d) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < d.size(); ++i)
    if (d[i + 1] > d[i] + kIncreaseThreshold) total += d[i + 1] - d[i];
  return total;
}

struct PairFamily {
  enum class Kind { Paper, Equatorial, Random };
  Kind kind = Kind::Paper;
  int count = 1;
  std::uint64_t seed = 0;

  static PairFamily paper() { return {Kind::Paper, 1, 0}; }
  static PairFamily equatorial(int n_phi = 12) { return {Kind::Equatorial, n_phi, 0}; }
  static PairFamily random(int n, std::uint64_t seed) { return {Kind::Random, n, seed}; }

  /// "paper", "equatorial:K" or "random:N".
  static PairFamily parse(const std::string& text, std::uint64_t seed = 0) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    if (head == "paper" && colon == std::string::npos) return paper();
    if ((head == "equatorial" || head == "random") && colon != std::string::npos) {
      int n = 0;
      try {
        std::size_t used = 0;
        n = std::stoi(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) n = 0;
      } catch (const std::exception&) {
        n = 0;
      }
      if (n < 1) throw std::invalid_argument("pair family count must be a positive integer: '" + text + "'");
      return head == "equatorial" ? equatorial(n) : random(n, seed);
    }
    throw std::invalid_argument("unknown pair family '" + text + "' (paper | equatorial:K | random:N)");
  }

  std::string describe() const {
    switch (kind) {
      case Kind::Paper: return "paper";
      case Kind::Equatorial: return "equatorial:" + std::to_string(count);
      case Kind::Random: return "random:" + std::to_string(count);
    }
    return "paper";
  }
};

struct CandidatePair {
  std::string descriptor;
  InitialPair pair;
};

struct PairValue {
  std::string descriptor;
  double n_measure = 0.0;
};

struct MeasureReport {
  std::vector<Interval> intervals;  // for the best pair
  double n_measure = 0.0;
  std::string best_pair;
  std::size_t best_index = 0;
  std::vector<PairValue> per_pair_values;
  EvolutionPath path_used = EvolutionPath::Dense;
};

/// D_system(t) only; the cheap route used when scanning many pairs.
template <typename Evolver>
std::vector<double> distance_series(const Evolver& evolver, const TimeGrid& grid) {
  const Bipartition bp = evolver.bipartition();
  std::vector<double> d(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto rho = evolver.states(grid.time(i));
    d[i] = trace_distance(partial_trace(rho[0], bp, Keep::System), partial_trace(rho[1], bp, Keep::System));
  }
  return d;
}

inline std::vector<double> distance_series(const Model& model, const TimeGrid& grid, EvolutionPath& path) {
  if (path == EvolutionPath::Auto) path = subspace_applicable(model) ? EvolutionPath::Subspace : EvolutionPath::Dense;
  if (path == EvolutionPath::Subspace) return distance_series(SubspaceEvolver(model), grid);
  return distance_series(DenseEvolver(model), grid);
}

/// Evaluates every candidate; the first pair attaining the maximum wins.
inline MeasureReport measure_candidates(const Model& base, const std::vector<CandidatePair>& candidates,
                                        const TimeGrid& grid, EvolutionPath path) {
  if (candidates.empty()) throw std::invalid_argument("blp_measure: no candidate pairs");
  MeasureReport report;
  const auto ts = grid.times();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    EvolutionPath used = path;
    const auto d = distance_series(with_initial_pair(base, candidates[k].pair), grid, used);
    report.path_used = used;
    const double value = blp_integral(d);
    report.per_pair_values.push_back({candidates[k].descriptor, value});
    if (k == 0 || value > report.n_measure) {
      report.n_measure = value;
      report.best_index = k;
      report.best_pair = candidates[k].descriptor;
      report.intervals = increasing_intervals(d, ts);
    }
  }
  return report;
}

inline std::string phi_descriptor(double phi) { return detail::concat("equatorial:phi=", phi); }

/// Chain family: environment fixed in |0...0>.
inline std::vector<CandidatePair> chain_candidates(int n_total, const PairFamily& family) {
  std::vector<CandidatePair> out;
  switch (family.kind) {
    case PairFamily::Kind::Paper:
      out.push_back({"paper", plus_minus_pair(n_total)});
      break;
    case PairFamily::Kind::Equatorial:
      for (int k = 0; k < family.count; ++k) {
        const double phi = std::numbers::pi * k / family.count;
        out.push_back({phi_descriptor(phi), equatorial_pair(phi, n_total)});
      }
      break;
    case PairFamily::Kind::Random: {
      std::mt19937_64 rng(family.seed);
      const Index de = Index{1} << (n_total - 1);
      const ComplexVector env = basis_vector(de, 0);
      for (int k = 0; k < family.count; ++k) {
        InitialPair pair;
        for (auto& rho : pair) {
          const ComplexVector joint = kron(random_pure_vector(2, rng), env);
          rho = DensityMatrix::unchecked(joint * joint.adjoint(), {2, de});
        }
        out.push_back({"random:" + std::to_string(k), std::move(pair)});
      }
      break;
    }
  }
  return out;
}

/// Generic family: the environment is the marginal of the model's first initial state.
inline std::vector<CandidatePair> generic_candidates(const Model& base, const PairFamily& family) {
  std::vector<CandidatePair> out;
  const Bipartition bp = base.bipartition;
  const std::vector<Index> dims{bp.d_system, bp.d_environment};
  const ComplexMatrix env = partial_trace(base.initial_pair[0].matrix(), bp, Keep::Environment);
  auto product = [&](const ComplexVector& s) {
    return DensityMatrix::unchecked(kron(ComplexMatrix(s * s.adjoint()), env), dims);
  };
  switch (family.kind) {
    case PairFamily::Kind::Paper:
      out.push_back({"paper", base.initial_pair});
      break;
    case PairFamily::Kind::Equatorial:
      if (bp.d_system != 2) throw std::invalid_argument("equatorial pairs need a qubit system");
      for (int k = 0; k < family.count; ++k) {
        const double phi = std::numbers::pi * k / family.count;
        ComplexVector plus(2), minus(2);
        plus << 1.0 / std::numbers::sqrt2, std::polar(1.0, phi) / std::numbers::sqrt2;
        minus << 1.0 / std::numbers::sqrt2, -std::polar(1.0, phi) / std::numbers::sqrt2;
        out.push_back({phi_descriptor(phi), {product(plus), product(minus)}});
      }
      break;
    case PairFamily::Kind::Random: {
      std::mt19937_64 rng(family.seed);
      for (int k = 0; k < family.count; ++k) {
        const ComplexVector a = random_pure_vector(bp.d_system, rng);
        const ComplexVector b = random_pure_vector(bp.d_system, rng);
        out.push_back({"random:" + std::to_string(k), {product(a), product(b)}});
      }
      break;
    }
  }
  return out;
}

inline MeasureReport blp_measure(const ChainParams& params, const TimeGrid& grid, const PairFamily& family,
                                 EvolutionPath path = EvolutionPath::Auto) {
  const Model base = build_chain_model(params);
  return measure_candidates(base, chain_candidates(params.n_total, family), grid, path);
}

inline MeasureReport blp_measure(const Model& base, const TimeGrid& grid, const PairFamily& family,
                                 EvolutionPath path = EvolutionPath::Auto) {
  return measure_candidates(base, generic_candidates(base, family), grid, path);
}

}  // namespace nmsec
