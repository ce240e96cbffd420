#pragma once

// Per-time quantities for a pair of evolving joint states: trace distance and
// its rate, the correlation-aware upper bound on that rate, environment
// distinguishability, correlation operators, entropies and mutual information.

#include "nmsec/model.hpp"
#include "nmsec/operator_core.hpp"

#include <algorithm>
#include <array>
#include <span>
#include <stdexcept>
#include <vector>

namespace nmsec {

struct DiagnosticsRow {
  double t = 0.0;
  double D_system = 0.0;
  double sigma = 0.0;
  double bound_total = 0.0;
  double bound_term1 = 0.0;
  double bound_term2 = 0.0;
  double D_env = 0.0;
  double E_indist = 1.0;
  double X_corr = 0.0;
  double chi1_norm = 0.0;
  double chi2_norm = 0.0;
  double svn_system_1 = 0.0;
  double svn_system_2 = 0.0;
  double mutual_info_1 = 0.0;
  double mutual_info_2 = 0.0;
  double dIdt_1 = 0.0;
};

/// Largest violation of the arithmetic identities a row must satisfy.
inline double row_identity_defect(const DiagnosticsRow& r) {
  return std::max(std::abs(r.bound_total - 0.5 * (r.bound_term1 + r.bound_term2)),
                  std::abs(r.E_indist - (1.0 - r.D_env)));
}

inline double trace_distance(const ComplexMatrix& r1, const ComplexMatrix& r2) {
  detail::require_same_shape(r1, r2, "trace_distance");
  return 0.5 * trace_norm_hermitian(r1 - r2);
}

inline double trace_distance(const DensityMatrix& r1, const DensityMatrix& r2) {
  return trace_distance(r1.matrix(), r2.matrix());
}

/// Probability of identifying which of two equiprobable preparations was made.
inline double guess_probability(double d) {
  if (!(d >= 0.0 && d <= 1.0))
    throw std::domain_error(detail::concat("guess_probability: distance ", d, " outside [0, 1]"));
  return 0.5 * (1.0 + d);
}

/// d/dt on a uniform grid: central differences inside, one-sided at the ends.
inline std::vector<double> finite_difference_rate(std::span<const double> values, double dt) {
  if (values.size() < 3)
    throw std::invalid_argument(detail::concat("rate: need at least 3 samples, got ", values.size()));
  if (!(dt > 0.0)) throw std::invalid_argument("rate: grid spacing must be positive");
  const std::size_t n = values.size();
  std::vector<double> rate(n);
  rate[0] = (values[1] - values[0]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) rate[i] = (values[i + 1] - values[i - 1]) / (2.0 * dt);
  rate[n - 1] = (values[n - 1] - values[n - 2]) / dt;
  return rate;
}

inline std::vector<double> sigma_series(std::span<const double> d_values, double dt) {
  return finite_difference_rate(d_values, dt);
}

inline std::vector<double> mutual_information_rate(std::span<const double> i_values, double dt) {
  return finite_difference_rate(i_values, dt);
}

/// chi = rho_SE - rho_S (x) rho_E.
inline ComplexMatrix correlation_operator(const ComplexMatrix& rho_se, Bipartition bp) {
  return rho_se - kron(partial_trace(rho_se, bp, Keep::System), partial_trace(rho_se, bp, Keep::Environment));
}

inline ComplexMatrix correlation_operator(const DensityMatrix& rho_se, Bipartition bp) {
  return correlation_operator(rho_se.matrix(), bp);
}

/// Tr_E [H, X] computed block by block: with H_ac, X_cb the environment
/// blocks, (Tr_E HX)_ab = sum_c Tr(H_ac X_cb). Costs O(d_S^3 d_E^2).
inline ComplexMatrix env_traced_commutator(const ComplexMatrix& h, const ComplexMatrix& x, Bipartition bp) {
  detail::require_same_shape(h, x, "env_traced_commutator");
  if (h.rows() != bp.joint_dim()) throw DimensionError("env_traced_commutator: dimension does not match bipartition");
  const Index ds = bp.d_system;
  const Index de = bp.d_environment;
  auto block_trace = [&](const ComplexMatrix& p, Index pr, Index pc, const ComplexMatrix& q, Index qr, Index qc) {
    return (p.block(pr * de, pc * de, de, de).cwiseProduct(q.block(qr * de, qc * de, de, de).transpose())).sum();
  };
  ComplexMatrix out = ComplexMatrix::Zero(ds, ds);
  for (Index a = 0; a < ds; ++a)
    for (Index b = 0; b < ds; ++b)
      for (Index c = 0; c < ds; ++c) out(a, b) += block_trace(h, a, c, x, c, b) - block_trace(x, a, c, h, c, b);
  return out;
}

struct BoundTerms {
  double term1 = 0.0;                 // min over k of the environment-difference branch
  double term2 = 0.0;                 // correlation branch
  double total = 0.0;                 // (term1 + term2) / 2
  std::array<double, 2> branches{};   // term1 before the minimum, k = 1, 2
};

/// Right-hand side of the rate bound for joint states rho1, rho2 evolving under h.
inline BoundTerms bound_rhs(const ComplexMatrix& h, Bipartition bp, const ComplexMatrix& rho1,
                            const ComplexMatrix& rho2) {
  detail::require_same_shape(rho1, rho2, "bound_rhs");
  detail::require_same_shape(h, rho1, "bound_rhs");
  const ComplexMatrix rs1 = partial_trace(rho1, bp, Keep::System);
  const ComplexMatrix rs2 = partial_trace(rho2, bp, Keep::System);
  const ComplexMatrix re1 = partial_trace(rho1, bp, Keep::Environment);
  const ComplexMatrix re2 = partial_trace(rho2, bp, Keep::Environment);
  const ComplexMatrix delta_env = re1 - re2;
  const ComplexMatrix chi_diff = (rho1 - kron(rs1, re1)) - (rho2 - kron(rs2, re2));

  BoundTerms b;
  b.branches[0] = trace_norm(env_traced_commutator(h, kron(rs1, delta_env), bp));
  b.branches[1] = trace_norm(env_traced_commutator(h, kron(rs2, delta_env), bp));
  b.term1 = std::min(b.branches[0], b.branches[1]);
  b.term2 = trace_norm(env_traced_commutator(h, chi_diff, bp));
  b.total = 0.5 * (b.term1 + b.term2);
  return b;
}

inline BoundTerms bound_rhs(const Model& model, const DensityMatrix& rho1_se, const DensityMatrix& rho2_se) {
  return bound_rhs(model.hamiltonian, model.bipartition, rho1_se.matrix(), rho2_se.matrix());
}

/// Environment-difference branch through the interaction decomposition:
/// || [sum_a gamma_a A_a, rho_S] || with gamma_a = Tr(B_a delta_env).
inline double gamma_term1(const Model& model, const ComplexMatrix& rho_k_s, const ComplexMatrix& delta_env) {
  if (model.interaction_terms.empty())
    throw std::invalid_argument("gamma_term1: model carries no interaction_terms");
  const Bipartition bp = model.bipartition;
  if (rho_k_s.rows() != bp.d_system || rho_k_s.cols() != bp.d_system || delta_env.rows() != bp.d_environment ||
      delta_env.cols() != bp.d_environment)
    throw DimensionError("gamma_term1: operator dimensions do not match the model bipartition");
  ComplexMatrix generator = ComplexMatrix::Zero(bp.d_system, bp.d_system);
  for (const auto& term : model.interaction_terms) {
    const Complex gamma = (term.environment_op * delta_env).trace();
    generator += gamma * term.system_op;
  }
  return trace_norm(commutator(generator, rho_k_s));
}

inline double env_indistinguishability(const ComplexMatrix& rho1_e, const ComplexMatrix& rho2_e) {
  return 1.0 - trace_distance(rho1_e, rho2_e);
}

inline double env_indistinguishability(const DensityMatrix& rho1_e, const DensityMatrix& rho2_e) {
  return env_indistinguishability(rho1_e.matrix(), rho2_e.matrix());
}

inline double correlation_distance(const ComplexMatrix& chi1, const ComplexMatrix& chi2) {
  detail::require_same_shape(chi1, chi2, "correlation_distance");
  return 0.5 * trace_norm_hermitian(chi1 - chi2);
}

/// S(rho_S) + S(rho_E) - S(rho_SE), in bits.
inline double mutual_information(const ComplexMatrix& rho_se, Bipartition bp) {
  return entropy_bits(partial_trace(rho_se, bp, Keep::System)) +
         entropy_bits(partial_trace(rho_se, bp, Keep::Environment)) - entropy_bits(rho_se);
}

inline double mutual_information(const DensityMatrix& rho_se, Bipartition bp) {
  return mutual_information(rho_se.matrix(), bp);
}

/// Largest |entry| of Tr_S chi and Tr_E chi.
inline double correlation_trace_residual(const ComplexMatrix& chi, Bipartition bp) {
  return std::max(partial_trace(chi, bp, Keep::System).cwiseAbs().maxCoeff(),
                  partial_trace(chi, bp, Keep::Environment).cwiseAbs().maxCoeff());
}

/// Everything in a DiagnosticsRow except the two rates, which need neighbours in time.
/// `h` is the generator on the same space as the joint states.
inline DiagnosticsRow evaluate_instant(double t, const ComplexMatrix& h, Bipartition bp, const ComplexMatrix& rho1,
                                       const ComplexMatrix& rho2) {
  const ComplexMatrix rs1 = partial_trace(rho1, bp, Keep::System);
  const ComplexMatrix rs2 = partial_trace(rho2, bp, Keep::System);
  const ComplexMatrix re1 = partial_trace(rho1, bp, Keep::Environment);
  const ComplexMatrix re2 = partial_trace(rho2, bp, Keep::Environment);
  const ComplexMatrix chi1 = rho1 - kron(rs1, re1);
  const ComplexMatrix chi2 = rho2 - kron(rs2, re2);
  const BoundTerms b = bound_rhs(h, bp, rho1, rho2);

  DiagnosticsRow r;
  r.t = t;
  r.D_system = trace_distance(rs1, rs2);
  r.bound_term1 = b.term1;
  r.bound_term2 = b.term2;
  r.bound_total = b.total;
  r.D_env = trace_distance(re1, re2);
  r.E_indist = 1.0 - r.D_env;
  r.X_corr = correlation_distance(chi1, chi2);
  r.chi1_norm = trace_norm_hermitian(chi1);
  r.chi2_norm = trace_norm_hermitian(chi2);
  r.svn_system_1 = entropy_bits(rs1);
  r.svn_system_2 = entropy_bits(rs2);
  r.mutual_info_1 = r.svn_system_1 + entropy_bits(re1) - entropy_bits(rho1);
  r.mutual_info_2 = r.svn_system_2 + entropy_bits(re2) - entropy_bits(rho2);
  return r;
}

}  // namespace nmsec
