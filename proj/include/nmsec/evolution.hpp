#pragma once

// Exact unitary propagation and trajectory assembly.
//
// Two interchangeable evolvers produce the pair of joint states at time t:
//
//  * DenseEvolver works on the full joint space with one eigendecomposition of
//    the whole Hamiltonian. It accepts mixed initial states and any model.
//
//  * SubspaceEvolver needs conserved sectors and pure initial states. It
//    diagonalises only the sectors the initial states touch, and represents
//    every joint operator on S (x) W, where W is spanned by the environment
//    basis states appearing in those sectors. Partial traces over E commute
//    with I (x) P_W, so all diagnostics evaluated on S (x) W are exact. For
//    the chain with |+->|0...0> inputs, W = {vacuum, one excitation on each
//    environment site} and S (x) W has dimension 2 n_total.

#include "nmsec/diagnostics.hpp"
#include "nmsec/model.hpp"
#include "nmsec/operator_core.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nmsec {

struct TimeGrid {
  double t_max = 0.0;
  int n_steps = 0;

  static TimeGrid make(double t_max, int n_steps) {
    if (n_steps < 0) throw std::invalid_argument("TimeGrid: n_steps must be >= 0");
    if (!std::isfinite(t_max) || t_max < 0.0 || (n_steps > 0 && t_max == 0.0))
      throw std::invalid_argument("TimeGrid: t_max must be finite and positive");
    return {t_max, n_steps};
  }

  std::size_t size() const { return static_cast<std::size_t>(n_steps) + 1; }
  double spacing() const { return n_steps == 0 ? 0.0 : t_max / n_steps; }
  double time(std::size_t i) const { return n_steps == 0 ? 0.0 : static_cast<double>(i) * t_max / n_steps; }
  std::vector<double> times() const {
    std::vector<double> ts(size());
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = time(i);
    return ts;
  }
};

struct SpectralBlock {
  std::vector<Index> indices;  // basis states spanned by the block
  RealVector energies;
  ComplexMatrix vectors;  // columns, expressed on `indices`
};

/// e^{-iHt} from a one-time spectral factorisation, possibly restricted to a
/// set of invariant blocks. Outside the covered blocks the operator is zero.
class Propagator {
 public:
  Propagator() = default;
  Propagator(Index dimension, std::vector<SpectralBlock> blocks) : dimension_(dimension), blocks_(std::move(blocks)) {
    for (const auto& b : blocks_) covered_ += static_cast<Index>(b.indices.size());
  }

  Index dimension() const { return dimension_; }
  Index covered_dimension() const { return covered_; }
  const std::vector<SpectralBlock>& blocks() const { return blocks_; }

  ComplexMatrix unitary(double t) const {
    ComplexMatrix u = ComplexMatrix::Zero(dimension_, dimension_);
    for (const auto& b : blocks_) {
      const ComplexMatrix ub = b.vectors * phases(b, t).asDiagonal() * b.vectors.adjoint();
      const Index n = static_cast<Index>(b.indices.size());
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) u(b.indices[i], b.indices[j]) = ub(i, j);
    }
    return u;
  }

  ComplexVector apply(const ComplexVector& psi, double t) const {
    if (psi.size() != dimension_)
      throw DimensionError(detail::concat("Propagator: state length ", psi.size(), " != ", dimension_));
    ComplexVector out = ComplexVector::Zero(dimension_);
    double covered_weight = 0.0;
    for (const auto& b : blocks_) {
      const Index n = static_cast<Index>(b.indices.size());
      ComplexVector local(n);
      for (Index i = 0; i < n; ++i) local(i) = psi(b.indices[i]);
      covered_weight += local.squaredNorm();
      const ComplexVector evolved = b.vectors * phases(b, t).asDiagonal() * (b.vectors.adjoint() * local);
      for (Index i = 0; i < n; ++i) out(b.indices[i]) = evolved(i);
    }
    if (std::abs(psi.squaredNorm() - covered_weight) > 1e-12)
      throw InvalidStateError("Propagator: state has weight outside the factorised sectors");
    return out;
  }

  static ComplexVector phases(const SpectralBlock& b, double t) {
    ComplexVector p(b.energies.size());
    for (Index k = 0; k < b.energies.size(); ++k) p(k) = std::polar(1.0, -b.energies(k) * t);
    return p;
  }

 private:
  Index dimension_ = 0;
  Index covered_ = 0;
  std::vector<SpectralBlock> blocks_;
};

inline SpectralBlock spectral_block(const ComplexMatrix& h, std::vector<Index> indices) {
  const Index n = static_cast<Index>(indices.size());
  ComplexMatrix sub(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) sub(i, j) = h(indices[i], indices[j]);
  EigenDecomposition eig = hermitian_eig(sub);
  return {std::move(indices), std::move(eig.eigenvalues), std::move(eig.eigenvectors)};
}

/// Dense factorisation of an arbitrary Hermitian generator.
inline Propagator make_propagator(const ComplexMatrix& h) {
  detail::require_square(h, "make_propagator");
  std::vector<Index> all(static_cast<std::size_t>(h.rows()));
  for (Index i = 0; i < h.rows(); ++i) all[static_cast<std::size_t>(i)] = i;
  return Propagator(h.rows(), {spectral_block(h, std::move(all))});
}

/// Sectors carrying weight in either initial state, in sector order.
inline std::vector<const Sector*> touched_sectors(const Model& model) {
  std::vector<const Sector*> out;
  if (!model.sector_basis) return out;
  for (const auto& sector : *model.sector_basis) {
    double weight = 0.0;
    for (const auto& rho : model.initial_pair)
      for (Index i : sector.indices) weight += rho.matrix()(i, i).real();
    if (weight > 1e-14) out.push_back(&sector);
  }
  return out;
}

enum class PropagatorScope { Auto, Dense, TouchedSectors };

/// Auto: per touched sector when the model has a sector basis, dense otherwise.
inline Propagator make_propagator(const Model& model, PropagatorScope scope = PropagatorScope::Auto) {
  if (scope == PropagatorScope::Auto)
    scope = model.sector_basis ? PropagatorScope::TouchedSectors : PropagatorScope::Dense;
  if (scope == PropagatorScope::Dense) return make_propagator(model.hamiltonian);
  if (!model.sector_basis) throw std::invalid_argument("make_propagator: model has no sector basis");
  std::vector<SpectralBlock> blocks;
  for (const Sector* s : touched_sectors(model)) blocks.push_back(spectral_block(model.hamiltonian, s->indices));
  return Propagator(model.dim(), std::move(blocks));
}

inline PureState evolve_state(const Propagator& prop, const PureState& psi0, double t) {
  return PureState::make(prop.apply(psi0.amplitudes(), t), psi0.dims());
}

/// Low-rank carrier: the dense operator is basis * coefficients * basis^dagger.
struct SubspaceOperator {
  ComplexMatrix basis;  // full-space orthonormal columns
  ComplexMatrix coefficients;

  ComplexMatrix to_dense() const { return basis * coefficients * basis.adjoint(); }
  double gram_defect() const {
    return (basis.adjoint() * basis - ComplexMatrix::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
  }
};

// --- evolvers ---------------------------------------------------------------

class DenseEvolver {
 public:
  explicit DenseEvolver(const Model& model)
      : h_(model.hamiltonian),
        bp_(model.bipartition),
        prop_(make_propagator(model.hamiltonian)),
        rho0_{model.initial_pair[0].matrix(), model.initial_pair[1].matrix()} {
    if (model.sector_basis) {
      diag_magnetization_ = RealVector::Zero(model.dim());
      for (const auto& s : *model.sector_basis)
        for (Index i : s.indices) (*diag_magnetization_)(i) = s.magnetization;
    }
  }

  std::array<ComplexMatrix, 2> states(double t) const {
    const ComplexMatrix u = prop_.unitary(t);
    return {u * rho0_[0] * u.adjoint(), u * rho0_[1] * u.adjoint()};
  }

  const ComplexMatrix& generator() const { return h_; }
  Bipartition bipartition() const { return bp_; }
  const Propagator& propagator() const { return prop_; }

  std::optional<double> magnetization(const ComplexMatrix& rho) const {
    if (!diag_magnetization_) return std::nullopt;
    return (rho.diagonal().real().array() * diag_magnetization_->array()).sum();
  }

 private:
  ComplexMatrix h_;
  Bipartition bp_;
  Propagator prop_;
  std::array<ComplexMatrix, 2> rho0_;
  std::optional<RealVector> diag_magnetization_;
};

class SubspaceEvolver {
 public:
  explicit SubspaceEvolver(const Model& model) : bp_full_(model.bipartition), full_dim_(model.dim()) {
    if (!model.sector_basis) throw std::invalid_argument("subspace path requires a model with sector metadata");
    std::array<ComplexVector, 2> psi0;
    for (int j = 0; j < 2; ++j) {
      try {
        psi0[j] = pure_vector(model.initial_pair[j].matrix());
      } catch (const InvalidStateError&) {
        throw std::invalid_argument("subspace path requires pure initial states");
      }
    }

    const Index de = bp_full_.d_environment;
    std::map<Index, int> env_position;
    for (const Sector* s : touched_sectors(model)) {
      SpectralBlock block = spectral_block(model.hamiltonian, s->indices);
      const Index offset = static_cast<Index>(touched_.size());
      for (Index idx : s->indices) {
        touched_.push_back(idx);
        touched_magnetization_.push_back(s->magnetization);
        env_position.emplace(idx % de, 0);
      }
      blocks_.push_back({offset, std::move(block)});
    }
    int pos = 0;
    for (auto& [e, p] : env_position) {
      p = pos++;
      env_states_.push_back(e);
    }
    m_ = static_cast<Index>(env_states_.size());
    const Index ds = bp_full_.d_system;
    bp_ = {ds, m_};

    coord_.reserve(touched_.size());
    for (Index idx : touched_) coord_.push_back((idx / de) * m_ + env_position.at(idx % de));

    const Index r = ds * m_;
    h_ = ComplexMatrix(r, r);
    for (Index a = 0; a < r; ++a)
      for (Index b = 0; b < r; ++b) h_(a, b) = model.hamiltonian(full_index(a), full_index(b));

    // Project initial vectors onto each block's eigenbasis once.
    for (int j = 0; j < 2; ++j) {
      for (const auto& [offset, block] : blocks_) {
        const Index n = static_cast<Index>(block.indices.size());
        ComplexVector local(n);
        for (Index i = 0; i < n; ++i) local(i) = psi0[j](block.indices[i]);
        spectral_coeffs_[j].push_back(block.vectors.adjoint() * local);
      }
    }
  }

  /// Joint state vectors on S (x) W.
  std::array<ComplexVector, 2> vectors(double t) const {
    std::array<ComplexVector, 2> out;
    for (int j = 0; j < 2; ++j) {
      out[j] = ComplexVector::Zero(bp_.joint_dim());
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto& [offset, block] = blocks_[b];
        const ComplexVector local =
            block.vectors * (Propagator::phases(block, t).asDiagonal() * spectral_coeffs_[j][b]);
        for (Index i = 0; i < local.size(); ++i) out[j](coord_[static_cast<std::size_t>(offset + i)]) = local(i);
      }
    }
    return out;
  }

  std::array<ComplexMatrix, 2> states(double t) const {
    const auto v = vectors(t);
    return {v[0] * v[0].adjoint(), v[1] * v[1].adjoint()};
  }

  const ComplexMatrix& generator() const { return h_; }
  Bipartition bipartition() const { return bp_; }
  Index environment_subspace_dim() const { return m_; }
  Index touched_dimension() const { return static_cast<Index>(touched_.size()); }
  const std::vector<Index>& environment_states() const { return env_states_; }

  std::optional<double> magnetization(const ComplexMatrix& rho) const {
    double m = 0.0;
    for (std::size_t k = 0; k < touched_.size(); ++k) m += rho(coord_[k], coord_[k]).real() * touched_magnetization_[k];
    return m;
  }

  /// Full-space index of coordinate a on S (x) W.
  Index full_index(Index a) const {
    return (a / m_) * bp_full_.d_environment + env_states_[static_cast<std::size_t>(a % m_)];
  }

  /// Columns are the full-space basis vectors |s>|w>.
  ComplexMatrix isometry() const {
    const Index r = bp_.joint_dim();
    ComplexMatrix v = ComplexMatrix::Zero(full_dim_, r);
    for (Index a = 0; a < r; ++a) v(full_index(a), a) = 1.0;
    return v;
  }

  SubspaceOperator lift(const ComplexMatrix& coefficients) const { return {isometry(), coefficients}; }

  /// Embeds an operator on W into the full environment space.
  ComplexMatrix embed_environment(const ComplexMatrix& op_w) const {
    const Index de = bp_full_.d_environment;
    ComplexMatrix out = ComplexMatrix::Zero(de, de);
    for (Index i = 0; i < m_; ++i)
      for (Index j = 0; j < m_; ++j) out(env_states_[i], env_states_[j]) = op_w(i, j);
    return out;
  }

 private:
  Bipartition bp_full_;
  Index full_dim_ = 0;
  Bipartition bp_;
  Index m_ = 0;
  ComplexMatrix h_;
  std::vector<Index> touched_;
  std::vector<double> touched_magnetization_;
  std::vector<Index> coord_;
  std::vector<Index> env_states_;
  std::vector<std::pair<Index, SpectralBlock>> blocks_;
  std::array<std::vector<ComplexVector>, 2> spectral_coeffs_;
};

// --- trajectories -----------------------------------------------------------

enum class EvolutionPath { Dense, Subspace, Auto };

inline std::string_view to_string(EvolutionPath p) {
  switch (p) {
    case EvolutionPath::Dense: return "dense";
    case EvolutionPath::Subspace: return "subspace";
    case EvolutionPath::Auto: return "auto";
  }
  return "auto";
}

inline EvolutionPath parse_evolution_path(std::string_view s) {
  if (s == "dense") return EvolutionPath::Dense;
  if (s == "subspace") return EvolutionPath::Subspace;
  if (s == "auto") return EvolutionPath::Auto;
  throw std::invalid_argument(detail::concat("unknown evolution path '", s, "' (dense|subspace|auto)"));
}

/// Worst deviations seen along a trajectory.
struct InvariantReport {
  double max_purity_drift = 0.0;
  std::optional<double> max_magnetization_drift;
  double max_chi_partial_trace = 0.0;
  double max_row_identity_defect = 0.0;
  double max_bound_violation = -std::numeric_limits<double>::infinity();  // max(sigma - bound_total)
};

struct TrajectoryRecord {
  std::vector<DiagnosticsRow> rows;
  EvolutionPath path_used = EvolutionPath::Dense;
  InvariantReport invariants;

  std::vector<double> column(double DiagnosticsRow::*field) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.*field);
    return out;
  }
};

inline bool subspace_applicable(const Model& model) {
  if (!model.sector_basis) return false;
  for (const auto& rho : model.initial_pair) {
    try {
      pure_vector(rho.matrix());
    } catch (const InvalidStateError&) {
      return false;
    }
  }
  return true;
}

/// Fills sigma and dIdt_1 from neighbouring rows.
inline void fill_rates(std::vector<DiagnosticsRow>& rows, double dt) {
  if (rows.size() == 1) {
    rows[0].sigma = 0.0;
    rows[0].dIdt_1 = 0.0;
    return;
  }
  if (rows.size() == 2) {
    const double s = (rows[1].D_system - rows[0].D_system) / dt;
    const double i = (rows[1].mutual_info_1 - rows[0].mutual_info_1) / dt;
    for (auto& r : rows) {
      r.sigma = s;
      r.dIdt_1 = i;
    }
    return;
  }
  std::vector<double> d, mi;
  for (const auto& r : rows) {
    d.push_back(r.D_system);
    mi.push_back(r.mutual_info_1);
  }
  const auto s = sigma_series(d, dt);
  const auto i = mutual_information_rate(mi, dt);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].sigma = s[k];
    rows[k].dIdt_1 = i[k];
  }
}

template <typename Evolver>
TrajectoryRecord trajectory_from(const Evolver& evolver, const TimeGrid& grid, EvolutionPath path_used) {
  TrajectoryRecord rec;
  rec.path_used = path_used;
  rec.rows.reserve(grid.size());
  const Bipartition bp = evolver.bipartition();
  std::array<double, 2> purity0{};
  std::array<std::optional<double>, 2> mag0{};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.time(i);
    const auto rho = evolver.states(t);
    DiagnosticsRow row = evaluate_instant(t, evolver.generator(), bp, rho[0], rho[1]);
    for (int j = 0; j < 2; ++j) {
      const double p = purity(rho[j]);
      const auto mag = evolver.magnetization(rho[j]);
      if (i == 0) {
        purity0[j] = p;
        mag0[j] = mag;
      }
      rec.invariants.max_purity_drift = std::max(rec.invariants.max_purity_drift, std::abs(p - purity0[j]));
      if (mag && mag0[j]) {
        const double drift = std::abs(*mag - *mag0[j]);
        rec.invariants.max_magnetization_drift = std::max(rec.invariants.max_magnetization_drift.value_or(0.0), drift);
      }
      rec.invariants.max_chi_partial_trace =
          std::max(rec.invariants.max_chi_partial_trace, correlation_trace_residual(correlation_operator(rho[j], bp), bp));
    }
    rec.rows.push_back(row);
  }
  fill_rates(rec.rows, grid.spacing());
  for (const auto& r : rec.rows) {
    rec.invariants.max_row_identity_defect = std::max(rec.invariants.max_row_identity_defect, row_identity_defect(r));
    rec.invariants.max_bound_violation = std::max(rec.invariants.max_bound_violation, r.sigma - r.bound_total);
  }
  return rec;
}

inline TrajectoryRecord run_trajectory(const Model& model, const TimeGrid& grid,
                                       EvolutionPath path = EvolutionPath::Auto) {
  if (path == EvolutionPath::Auto) path = subspace_applicable(model) ? EvolutionPath::Subspace : EvolutionPath::Dense;
  if (path == EvolutionPath::Subspace) return trajectory_from(SubspaceEvolver(model), grid, path);
  return trajectory_from(DenseEvolver(model), grid, path);
}

}  // namespace nmsec
