#pragma once

// Dense complex kernels and quantum-state primitives.
//
// Conventions used everywhere in nmsec:
//  * matrices are Eigen::MatrixXcd; "row-major logical order" only matters when
//    a flat list of entries is turned into a matrix (from_row_major).
//  * in a bipartite space the system is the leftmost tensor factor, so the
//    joint index of (s, e) is s * d_environment + e.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nmsec {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotHermitianError : public std::invalid_argument {
 public:
  NotHermitianError(const std::string& what, double max_asymmetry)
      : std::invalid_argument(what), max_asymmetry_(max_asymmetry) {}
  double max_asymmetry() const noexcept { return max_asymmetry_; }

 private:
  double max_asymmetry_;
};

class InvalidStateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  os.precision(17);
  (os << ... << std::forward<Args>(args));
  return os.str();
}

inline void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(concat(what, ": expected a square matrix, got ", m.rows(), "x", m.cols()));
  }
}

inline void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(concat(what, ": shape mismatch ", a.rows(), "x", a.cols(), " vs ", b.rows(),
                                "x", b.cols()));
  }
}

}  // namespace detail

/// Builds a rows x cols matrix from entries listed row by row.
inline ComplexMatrix from_row_major(Index rows, Index cols, std::span<const Complex> entries) {
  if (rows <= 0 || cols <= 0 || static_cast<Index>(entries.size()) != rows * cols) {
    throw DimensionError(detail::concat("from_row_major: ", entries.size(), " entries for a ", rows, "x",
                                        cols, " matrix"));
  }
  ComplexMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = entries[static_cast<std::size_t>(i * cols + j)];
  return m;
}

inline ComplexMatrix dagger(const ComplexMatrix& a) { return a.adjoint(); }

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a * b - b * a;
}

/// Largest elementwise |A - A^dagger|.
inline double max_asymmetry(const ComplexMatrix& a) {
  detail::require_square(a, "max_asymmetry");
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const ComplexMatrix& a, double tol = 1e-12) {
  return a.rows() == a.cols() && max_asymmetry(a) <= tol;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

struct Bipartition {
  Index d_system = 1;
  Index d_environment = 1;

  Index joint_dim() const { return d_system * d_environment; }
  bool operator==(const Bipartition&) const = default;
};

enum class Keep { System, Environment };

inline ComplexMatrix partial_trace(const ComplexMatrix& m, Bipartition bp, Keep keep) {
  detail::require_square(m, "partial_trace");
  if (bp.d_system <= 0 || bp.d_environment <= 0 || m.rows() != bp.joint_dim()) {
    throw DimensionError(detail::concat("partial_trace: matrix dimension ", m.rows(),
                                        " does not match bipartition ", bp.d_system, "x",
                                        bp.d_environment));
  }
  const Index ds = bp.d_system;
  const Index de = bp.d_environment;
  if (keep == Keep::System) {
    ComplexMatrix out = ComplexMatrix::Zero(ds, ds);
    for (Index a = 0; a < ds; ++a)
      for (Index b = 0; b < ds; ++b) out(a, b) = m.block(a * de, b * de, de, de).trace();
    return out;
  }
  ComplexMatrix out = ComplexMatrix::Zero(de, de);
  for (Index s = 0; s < ds; ++s) out += m.block(s * de, s * de, de, de);
  return out;
}

struct EigenDecomposition {
  RealVector eigenvalues;     // ascending
  ComplexMatrix eigenvectors;  // columns
};

/// Spectral decomposition h = V diag(lambda) V^dagger of a Hermitian matrix.
/// The asymmetry tolerance is relative to max(1, max|h_ij|).
inline EigenDecomposition hermitian_eig(const ComplexMatrix& h, double tol = 1e-12) {
  detail::require_square(h, "hermitian_eig");
  const double asym = max_asymmetry(h);
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (asym > tol * scale) {
    throw NotHermitianError(
        detail::concat("hermitian_eig: matrix is not Hermitian (max asymmetry ", asym, ")"), asym);
  }
  const ComplexMatrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) throw std::runtime_error("hermitian_eig: eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline RealVector hermitian_eigenvalues(const ComplexMatrix& h) {
  const ComplexMatrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

/// Sum of singular values. Valid for any square matrix, including the
/// anti-Hermitian partial traces of commutators.
inline double trace_norm(const ComplexMatrix& a) {
  detail::require_square(a, "trace_norm");
  if (a.size() == 0) return 0.0;
  if (a.rows() <= 16) return Eigen::JacobiSVD<ComplexMatrix>(a).singularValues().sum();
  return Eigen::BDCSVD<ComplexMatrix>(a).singularValues().sum();
}

/// Trace norm of a Hermitian matrix as the sum of |eigenvalues|.
inline double trace_norm_hermitian(const ComplexMatrix& a) {
  detail::require_square(a, "trace_norm_hermitian");
  return hermitian_eigenvalues(a).cwiseAbs().sum();
}

/// Entropy in bits of the spectrum of a Hermitian PSD matrix.
/// Eigenvalues below 1e-14 count as exactly zero.
inline double entropy_bits(const ComplexMatrix& rho) {
  const RealVector lambda = hermitian_eigenvalues(rho);
  double s = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    const double l = lambda(i);
    if (l > 1e-14) s -= l * std::log2(l);
  }
  return s;
}

inline double purity(const ComplexMatrix& rho) { return (rho.adjoint() * rho).trace().real(); }

inline Index product_of(const std::vector<Index>& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

class DensityMatrix {
 public:
  DensityMatrix() = default;

  /// Validates Hermiticity (1e-12), unit trace (1e-12) and positivity (-1e-10).
  static DensityMatrix make(ComplexMatrix m, std::vector<Index> dims = {}) {
    DensityMatrix d = unchecked(std::move(m), std::move(dims));
    d.validate();
    return d;
  }

  /// For states produced by trusted code paths (unitary evolution of a valid state).
  static DensityMatrix unchecked(ComplexMatrix m, std::vector<Index> dims = {}) {
    detail::require_square(m, "DensityMatrix");
    if (dims.empty()) dims.push_back(m.rows());
    if (product_of(dims) != m.rows()) {
      throw DimensionError(detail::concat("DensityMatrix: factor dimensions multiply to ",
                                          product_of(dims), ", matrix has dimension ", m.rows()));
    }
    DensityMatrix d;
    d.matrix_ = std::move(m);
    d.dims_ = std::move(dims);
    return d;
  }

  void validate() const {
    const double asym = max_asymmetry(matrix_);
    if (asym > 1e-12)
      throw NotHermitianError(detail::concat("density matrix not Hermitian (max asymmetry ", asym, ")"),
                              asym);
    const Complex tr = matrix_.trace();
    if (std::abs(tr - 1.0) > 1e-12)
      throw InvalidStateError(detail::concat("density matrix trace ", tr.real(), " != 1"));
    const double lmin = hermitian_eigenvalues(matrix_).minCoeff();
    if (lmin < -1e-10)
      throw InvalidStateError(detail::concat("density matrix has negative eigenvalue ", lmin));
  }

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  const std::vector<Index>& dims() const noexcept { return dims_; }
  Index dim() const noexcept { return matrix_.rows(); }

 private:
  ComplexMatrix matrix_;
  std::vector<Index> dims_;
};

class PureState {
 public:
  PureState() = default;

  static PureState make(ComplexVector amplitudes, std::vector<Index> dims = {}) {
    if (dims.empty()) dims.push_back(amplitudes.size());
    if (product_of(dims) != amplitudes.size()) {
      throw DimensionError(detail::concat("PureState: factor dimensions multiply to ", product_of(dims),
                                          ", vector has length ", amplitudes.size()));
    }
    const double norm = amplitudes.norm();
    if (std::abs(norm - 1.0) > 1e-12)
      throw InvalidStateError(detail::concat("PureState: norm ", norm, " != 1"));
    PureState p;
    p.amplitudes_ = std::move(amplitudes);
    p.dims_ = std::move(dims);
    return p;
  }

  const ComplexVector& amplitudes() const noexcept { return amplitudes_; }
  const std::vector<Index>& dims() const noexcept { return dims_; }
  Index dim() const noexcept { return amplitudes_.size(); }

  DensityMatrix projector() const {
    return DensityMatrix::unchecked(amplitudes_ * amplitudes_.adjoint(), dims_);
  }

 private:
  ComplexVector amplitudes_;
  std::vector<Index> dims_;
};

inline double von_neumann_entropy(const DensityMatrix& rho) { return entropy_bits(rho.matrix()); }

/// Recovers |psi> (up to a global phase) from a rank-one projector in O(d^2).
/// Throws InvalidStateError when rho is not pure within tol.
inline ComplexVector pure_vector(const ComplexMatrix& rho, double tol = 1e-10) {
  detail::require_square(rho, "pure_vector");
  Index j = 0;
  rho.diagonal().real().maxCoeff(&j);
  const double pjj = rho(j, j).real();
  if (pjj <= 0.0) throw InvalidStateError("pure_vector: zero matrix");
  ComplexVector psi = rho.col(j) / std::sqrt(pjj);
  const double defect = (rho - psi * psi.adjoint()).cwiseAbs().maxCoeff();
  if (defect > tol)
    throw InvalidStateError(detail::concat("pure_vector: state is not pure (defect ", defect, ")"));
  return psi;
}

}  // namespace nmsec
