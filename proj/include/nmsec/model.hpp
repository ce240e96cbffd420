#pragma once

// XX spin chain with a transverse field, initial-state families, and random
// generic system-environment models.

#include "nmsec/operator_core.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace nmsec {

enum class Axis { X, Y, Z };

/// How J, J0 and B enter the chain Hamiltonian.
///   Pauli:   H = -2 J0 (x0 x1 + y0 y1) - 2 J sum (xn xn+1 + yn yn+1) - 2 B sum zn
///   Hopping: H = -(J0/2)(x0 x1 + y0 y1) - (J/2) sum (...) - B sum zn
/// Hopping makes J the amplitude for a single excitation to hop one site and
/// 2B the Zeeman splitting, so the maximal group velocity is 2J. It is the
/// normalisation under which (J0/J, B/J) = (1, 1/2) is the Markovian point.
enum class CouplingConvention { Pauli, Hopping };

struct ChainParams {
  int n_total = 10;  // spins 0..n_total-1, spin 0 is the system
  double j_env = 1.0;
  double j_sys = 1.0;
  double b_field = 0.01;
  bool field_on_system = false;
  CouplingConvention convention = CouplingConvention::Pauli;

  void validate() const {
    if (n_total < 2) throw std::invalid_argument("ChainParams: n_total must be >= 2");
    if (n_total > 12) throw std::invalid_argument("ChainParams: n_total > 12 exceeds the dense model size");
    if (j_env == 0.0) throw std::invalid_argument("ChainParams: j_env must be nonzero");
    if (!std::isfinite(j_env) || !std::isfinite(j_sys) || !std::isfinite(b_field))
      throw std::invalid_argument("ChainParams: couplings must be finite");
  }

  double pair_coefficient(double j) const {
    return convention == CouplingConvention::Pauli ? -2.0 * j : -0.5 * j;
  }
  double field_coefficient() const {
    return convention == CouplingConvention::Pauli ? -2.0 * b_field : -b_field;
  }
};

struct InteractionTerm {
  ComplexMatrix system_op;
  ComplexMatrix environment_op;
};

/// Computational-basis states sharing a conserved quantity.
struct Sector {
  int excitations = 0;
  double magnetization = 0.0;
  std::vector<Index> indices;
};

using InitialPair = std::array<DensityMatrix, 2>;

struct Model {
  ComplexMatrix hamiltonian;
  Bipartition bipartition;
  std::vector<InteractionTerm> interaction_terms;
  // Environment-only part; with interaction_terms it reconstructs hamiltonian
  // as sum kron(A, B) + kron(I, environment_local).
  std::optional<ComplexMatrix> environment_local;
  std::optional<std::vector<Sector>> sector_basis;
  InitialPair initial_pair;
  std::string label;

  Index dim() const { return hamiltonian.rows(); }
};

inline ComplexMatrix pauli(Axis axis) {
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  switch (axis) {
    case Axis::X:
      s(0, 1) = 1.0;
      s(1, 0) = 1.0;
      break;
    case Axis::Y:
      s(0, 1) = Complex(0, -1);
      s(1, 0) = Complex(0, 1);
      break;
    case Axis::Z:
      s(0, 0) = 1.0;
      s(1, 1) = -1.0;
      break;
  }
  return s;
}

/// Tensor product over n_sites qubits with the given single-site operators
/// (site 0 leftmost) and identity elsewhere.
inline ComplexMatrix site_product(const std::vector<std::pair<int, ComplexMatrix>>& ops, int n_sites) {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (int site = 0; site < n_sites; ++site) {
    ComplexMatrix local = ComplexMatrix::Identity(2, 2);
    for (const auto& [s, op] : ops)
      if (s == site) local = op * local;
    out = kron(out, local);
  }
  return out;
}

inline ComplexMatrix pauli_on_site(Axis axis, int site, int n_total) {
  if (site < 0 || site >= n_total)
    throw std::out_of_range(detail::concat("pauli_on_site: site ", site, " outside [0, ", n_total, ")"));
  return site_product({{site, pauli(axis)}}, n_total);
}

/// Number of sites in |1> (sigma^z = -1) for basis index `index`, site 0 = most significant bit.
inline int excitation_count(Index index) { return std::popcount(static_cast<std::uint64_t>(index)); }

inline std::vector<Sector> magnetization_sectors(int n_total) {
  std::vector<Sector> sectors(static_cast<std::size_t>(n_total + 1));
  for (int k = 0; k <= n_total; ++k) {
    sectors[k].excitations = k;
    sectors[k].magnetization = n_total - 2.0 * k;
  }
  const Index dim = Index{1} << n_total;
  for (Index i = 0; i < dim; ++i) sectors[static_cast<std::size_t>(excitation_count(i))].indices.push_back(i);
  return sectors;
}

inline ComplexVector basis_vector(Index dim, Index i) {
  ComplexVector v = ComplexVector::Zero(dim);
  v(i) = 1.0;
  return v;
}

/// (|0> + e^{i phi}|1>)/sqrt2 and its antipode, each with the environment in |0...0>.
inline InitialPair equatorial_pair(double phi, int n_total) {
  if (n_total < 2) throw std::invalid_argument("equatorial_pair: n_total must be >= 2");
  const Index de = Index{1} << (n_total - 1);
  const ComplexVector env = basis_vector(de, 0);
  const Complex phase = std::polar(1.0, phi);
  InitialPair pair;
  for (int j = 0; j < 2; ++j) {
    ComplexVector sys(2);
    sys << 1.0 / std::numbers::sqrt2, (j == 0 ? 1.0 : -1.0) * phase / std::numbers::sqrt2;
    const ComplexVector joint = kron(sys, env);
    pair[j] = DensityMatrix::unchecked(joint * joint.adjoint(), {2, de});
  }
  return pair;
}

/// |+>|0...0> and |->|0...0>.
inline InitialPair plus_minus_pair(int n_total) { return equatorial_pair(0.0, n_total); }

inline Model build_chain_model(const ChainParams& p) {
  p.validate();
  const int n = p.n_total;
  const int n_env = n - 1;
  const ComplexMatrix sx = pauli(Axis::X);
  const ComplexMatrix sy = pauli(Axis::Y);
  const ComplexMatrix sz = pauli(Axis::Z);
  const double c_sys = p.pair_coefficient(p.j_sys);
  const double c_env = p.pair_coefficient(p.j_env);
  const double c_field = p.field_coefficient();

  // Environment sites 1..N are sites 0..N-1 of the environment factor.
  const Index de = Index{1} << n_env;
  ComplexMatrix h_env = ComplexMatrix::Zero(de, de);
  for (int k = 0; k + 1 < n_env; ++k) {
    h_env += c_env * site_product({{k, sx}, {k + 1, sx}}, n_env);
    h_env += c_env * site_product({{k, sy}, {k + 1, sy}}, n_env);
  }
  for (int k = 0; k < n_env; ++k) h_env += c_field * site_product({{k, sz}}, n_env);

  Model m;
  m.bipartition = {2, de};
  m.interaction_terms.push_back({sx, c_sys * site_product({{0, sx}}, n_env)});
  m.interaction_terms.push_back({sy, c_sys * site_product({{0, sy}}, n_env)});
  if (p.field_on_system) m.interaction_terms.push_back({sz, c_field * ComplexMatrix::Identity(de, de)});

  m.hamiltonian = kron(ComplexMatrix::Identity(2, 2), h_env);
  for (const auto& term : m.interaction_terms) m.hamiltonian += kron(term.system_op, term.environment_op);
  m.environment_local = std::move(h_env);
  m.sector_basis = magnetization_sectors(n);
  m.initial_pair = plus_minus_pair(n);
  m.label = detail::concat("xx-chain n_total=", n, " J=", p.j_env, " J0=", p.j_sys, " B=", p.b_field,
                           p.convention == CouplingConvention::Pauli ? " (pauli)" : " (hopping)");
  return m;
}

inline Model with_initial_pair(Model m, InitialPair pair) {
  for (const auto& rho : pair) {
    if (rho.dim() != m.dim())
      throw DimensionError(detail::concat("with_initial_pair: state dimension ", rho.dim(),
                                          " != model dimension ", m.dim()));
  }
  m.initial_pair = std::move(pair);
  return m;
}

/// Exact split H = sum_ab |a><b| (x) H_ab over system matrix units.
inline std::vector<InteractionTerm> block_decomposition(const ComplexMatrix& h, Bipartition bp) {
  detail::require_square(h, "block_decomposition");
  if (h.rows() != bp.joint_dim()) throw DimensionError("block_decomposition: dimension mismatch");
  std::vector<InteractionTerm> terms;
  const Index ds = bp.d_system;
  const Index de = bp.d_environment;
  for (Index a = 0; a < ds; ++a)
    for (Index b = 0; b < ds; ++b) {
      ComplexMatrix unit = ComplexMatrix::Zero(ds, ds);
      unit(a, b) = 1.0;
      terms.push_back({unit, h.block(a * de, b * de, de, de)});
    }
  return terms;
}

// --- random generic models -------------------------------------------------

/// Hermitian matrix with unit-variance entries: real N(0,1) diagonal, complex
/// off-diagonal entries with independent N(0,1/2) real and imaginary parts.
inline ComplexMatrix random_hermitian(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix h(d, d);
  for (Index i = 0; i < d; ++i) {
    h(i, i) = normal(rng);
    for (Index j = i + 1; j < d; ++j) {
      const double re = normal(rng) / std::numbers::sqrt2;
      const double im = normal(rng) / std::numbers::sqrt2;
      h(i, j) = Complex(re, im);
      h(j, i) = Complex(re, -im);
    }
  }
  return h;
}

/// Haar-random pure state vector.
inline ComplexVector random_pure_vector(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexVector v(d);
  for (Index i = 0; i < d; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(i) = Complex(re, im);
  }
  return v / v.norm();
}

/// Random system-environment model: random Hamiltonian, two independent
/// Haar-random product pure states, block-decomposed interaction terms.
inline Model random_generic_model(Index d_system, Index d_environment, std::mt19937_64& rng) {
  Model m;
  m.bipartition = {d_system, d_environment};
  m.hamiltonian = random_hermitian(m.bipartition.joint_dim(), rng);
  for (auto& rho : m.initial_pair) {
    const ComplexVector s = random_pure_vector(d_system, rng);
    const ComplexVector e = random_pure_vector(d_environment, rng);
    const ComplexVector joint = kron(s, e);
    rho = DensityMatrix::unchecked(joint * joint.adjoint(), {d_system, d_environment});
  }
  m.interaction_terms = block_decomposition(m.hamiltonian, m.bipartition);
  m.label = detail::concat("random d_S=", d_system, " d_E=", d_environment);
  return m;
}

}  // namespace nmsec
