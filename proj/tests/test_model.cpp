#include "nmsec/diagnostics.hpp"
#include "nmsec/model.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace nmsec {
namespace {

using testing::max_abs;

ComplexMatrix total_magnetization(int n) {
  ComplexMatrix m = ComplexMatrix::Zero(Index{1} << n, Index{1} << n);
  for (int k = 0; k < n; ++k) m += pauli_on_site(Axis::Z, k, n);
  return m;
}

TEST(PauliOnSite, SingleSite) { EXPECT_EQ(max_abs(pauli_on_site(Axis::Z, 0, 1) - pauli(Axis::Z)), 0.0); }

TEST(PauliOnSite, SecondOfTwo) {
  EXPECT_EQ(max_abs(pauli_on_site(Axis::X, 1, 2) - kron(ComplexMatrix::Identity(2, 2), pauli(Axis::X))), 0.0);
}

TEST(PauliOnSite, Anticommutation) {
  const ComplexMatrix x = pauli_on_site(Axis::X, 0, 1);
  const ComplexMatrix y = pauli_on_site(Axis::Y, 0, 1);
  EXPECT_EQ(max_abs(x * y + y * x), 0.0);
}

TEST(PauliOnSite, RejectsOutOfRange) {
  EXPECT_THROW(pauli_on_site(Axis::X, 2, 2), std::out_of_range);
  EXPECT_THROW(pauli_on_site(Axis::X, -1, 2), std::out_of_range);
}

TEST(ChainModel, TwoSpinHamiltonian) {
  ChainParams p;
  p.n_total = 2;
  p.j_sys = 0.7;
  p.b_field = 0.3;
  const Model m = build_chain_model(p);
  const ComplexMatrix i2 = ComplexMatrix::Identity(2, 2);
  const ComplexMatrix expected = -2.0 * p.j_sys * (kron(pauli(Axis::X), pauli(Axis::X)) + kron(pauli(Axis::Y), pauli(Axis::Y))) -
                                 2.0 * p.b_field * kron(i2, pauli(Axis::Z));
  EXPECT_LT(max_abs(m.hamiltonian - expected), 1e-15);
  // |01> and |10> are indices 1 and 2.
  EXPECT_NEAR(m.hamiltonian(1, 2).real(), -4.0 * p.j_sys, 1e-15);
  EXPECT_NEAR(m.hamiltonian(2, 1).real(), -4.0 * p.j_sys, 1e-15);
  EXPECT_EQ(m.bipartition.d_system, 2);
  EXPECT_EQ(m.bipartition.d_environment, 2);
}

TEST(ChainModel, ConservesMagnetization) {
  for (bool on_system : {false, true}) {
    ChainParams p;
    p.n_total = 5;
    p.j_env = 1.3;
    p.j_sys = 0.4;
    p.b_field = 0.7;
    p.field_on_system = on_system;
    const Model m = build_chain_model(p);
    EXPECT_LT(max_abs(commutator(m.hamiltonian, total_magnetization(5))), 1e-12);
  }
}

TEST(ChainModel, RealSymmetric) {
  ChainParams p;
  p.n_total = 6;
  p.b_field = 0.2;
  const Model m = build_chain_model(p);
  EXPECT_LT(m.hamiltonian.imag().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(max_asymmetry(m.hamiltonian), 1e-12);
}

TEST(ChainModel, InteractionReconstruction) {
  for (bool on_system : {false, true}) {
    ChainParams p;
    p.n_total = 5;
    p.b_field = 0.3;
    p.field_on_system = on_system;
    const Model m = build_chain_model(p);
    ComplexMatrix rest = m.hamiltonian;
    for (const auto& term : m.interaction_terms) rest -= kron(term.system_op, term.environment_op);
    ASSERT_TRUE(m.environment_local.has_value());
    EXPECT_LT(max_abs(rest - kron(ComplexMatrix::Identity(2, 2), *m.environment_local)), 1e-12);
  }
}

TEST(ChainModel, InteractionTermsAreTheCoupling) {
  ChainParams p;
  p.n_total = 4;
  p.j_sys = 0.9;
  const Model m = build_chain_model(p);
  ASSERT_EQ(m.interaction_terms.size(), 2u);
  const Index de = m.bipartition.d_environment;
  EXPECT_LT(max_abs(m.interaction_terms[0].system_op - pauli(Axis::X)), 1e-15);
  EXPECT_LT(max_abs(m.interaction_terms[0].environment_op -
                    (-2.0 * p.j_sys) * kron(pauli(Axis::X), ComplexMatrix::Identity(de / 2, de / 2))),
            1e-15);
  EXPECT_LT(max_abs(m.interaction_terms[1].system_op - pauli(Axis::Y)), 1e-15);
}

TEST(ChainModel, SectorBlockDiagonal) {
  ChainParams p;
  p.n_total = 6;
  p.b_field = 0.4;
  p.field_on_system = true;
  const Model m = build_chain_model(p);
  ASSERT_TRUE(m.sector_basis.has_value());
  std::vector<int> label(static_cast<std::size_t>(m.dim()));
  Index total = 0;
  for (const auto& s : *m.sector_basis) {
    total += static_cast<Index>(s.indices.size());
    for (Index i : s.indices) label[static_cast<std::size_t>(i)] = s.excitations;
  }
  EXPECT_EQ(total, m.dim());
  double worst = 0.0;
  for (Index i = 0; i < m.dim(); ++i)
    for (Index j = 0; j < m.dim(); ++j)
      if (label[i] != label[j]) worst = std::max(worst, std::abs(m.hamiltonian(i, j)));
  EXPECT_LE(worst, 1e-14);
}

TEST(ChainModel, InitialStateSupportOnLowSectors) {
  ChainParams p;  // n_total = 10, J = J0 = 1, B = 0.01
  const Model m = build_chain_model(p);
  const ComplexVector psi = pure_vector(m.initial_pair[0].matrix());
  Index supported_dim = 0;
  double weight_in_low = 0.0;
  for (const auto& s : *m.sector_basis) {
    double w = 0.0;
    for (Index i : s.indices) w += std::norm(psi(i));
    if (w > 1e-14) {
      supported_dim += static_cast<Index>(s.indices.size());
      EXPECT_LE(s.excitations, 1);
    }
    if (s.excitations <= 1) weight_in_low += w;
  }
  EXPECT_EQ(supported_dim, 11);
  EXPECT_NEAR(weight_in_low, 1.0, 1e-14);
}

TEST(ChainModel, HoppingConventionIsARescaling) {
  ChainParams hop;
  hop.n_total = 4;
  hop.j_env = 1.2;
  hop.j_sys = 0.8;
  hop.b_field = 0.5;
  hop.convention = CouplingConvention::Hopping;
  ChainParams pauli_form = hop;
  pauli_form.convention = CouplingConvention::Pauli;
  pauli_form.j_env = hop.j_env / 4.0;
  pauli_form.j_sys = hop.j_sys / 4.0;
  pauli_form.b_field = hop.b_field / 2.0;
  EXPECT_LT(max_abs(build_chain_model(hop).hamiltonian - build_chain_model(pauli_form).hamiltonian), 1e-15);
  // One excitation hops with amplitude -J and costs 2B on an environment site.
  const Model m = build_chain_model(hop);
  // |0100> (index 4) and |0010> (index 2): hop between environment sites 1 and 2.
  EXPECT_NEAR(m.hamiltonian(4, 2).real(), -hop.j_env, 1e-15);
  EXPECT_NEAR(m.hamiltonian(4, 4).real() - m.hamiltonian(0, 0).real(), 2.0 * hop.b_field, 1e-14);
}

TEST(ChainParams, Validation) {
  ChainParams p;
  p.n_total = 1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.n_total = 3;
  p.j_env = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(InitialPair, PlusMinusProperties) {
  const auto pair = plus_minus_pair(4);
  const Bipartition bp{2, 8};
  const ComplexMatrix r1 = partial_trace(pair[0].matrix(), bp, Keep::System);
  const ComplexMatrix r2 = partial_trace(pair[1].matrix(), bp, Keep::System);
  EXPECT_NEAR(trace_distance(r1, r2), 1.0, 1e-14);
  for (const auto& rho : pair) {
    EXPECT_NO_THROW(rho.validate());
    EXPECT_LT(max_abs(correlation_operator(rho, bp)), 1e-15);
    EXPECT_NEAR(purity(rho.matrix()), 1.0, 1e-14);
  }
}

TEST(InitialPair, EquatorialPhiZeroIsPlusMinus) {
  const auto a = equatorial_pair(0.0, 3);
  const auto b = plus_minus_pair(3);
  for (int j = 0; j < 2; ++j) EXPECT_EQ(max_abs(a[j].matrix() - b[j].matrix()), 0.0);
}

TEST(InitialPair, EquatorialHalfPi) {
  const auto pair = equatorial_pair(std::numbers::pi / 2, 3);
  const Bipartition bp{2, 4};
  const ComplexMatrix r1 = partial_trace(pair[0].matrix(), bp, Keep::System);
  EXPECT_NEAR(r1(1, 0).real(), 0.0, 1e-15);
  EXPECT_NEAR(r1(1, 0).imag(), 0.5, 1e-15);
  EXPECT_NEAR(trace_distance(r1, partial_trace(pair[1].matrix(), bp, Keep::System)), 1.0, 1e-14);
}

TEST(InitialPair, EquatorialHasNoZComponent) {
  for (double phi : {0.3, 1.1, 2.9, 4.0}) {
    const auto pair = equatorial_pair(phi, 2);
    for (const auto& rho : pair) {
      const ComplexMatrix rs = partial_trace(rho.matrix(), {2, 2}, Keep::System);
      EXPECT_NEAR((rs * pauli(Axis::Z)).trace().real(), 0.0, 1e-15);
    }
  }
}

TEST(BlockDecomposition, Reconstructs) {
  std::mt19937_64 rng(59);
  const ComplexMatrix h = random_hermitian(6, rng);
  ComplexMatrix sum = ComplexMatrix::Zero(6, 6);
  for (const auto& t : block_decomposition(h, {2, 3})) sum += kron(t.system_op, t.environment_op);
  EXPECT_LT(max_abs(sum - h), 1e-15);
}

TEST(RandomModel, ProductPureInputs) {
  std::mt19937_64 rng(61);
  const Model m = random_generic_model(2, 3, rng);
  EXPECT_LT(max_asymmetry(m.hamiltonian), 1e-15);
  for (const auto& rho : m.initial_pair) {
    EXPECT_NO_THROW(rho.validate());
    EXPECT_NEAR(purity(rho.matrix()), 1.0, 1e-12);
    EXPECT_LT(trace_norm_hermitian(correlation_operator(rho, m.bipartition)), 1e-12);
  }
}

}  // namespace
}  // namespace nmsec
