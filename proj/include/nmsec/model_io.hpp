#pragma once

// Generic model files (JSON):
//
//   {
//     "label": "optional text",
//     "dims": {"system": 2, "environment": 3},
//     "hamiltonian": [[[re, im], ...], ...],            // joint space, row by row
//     "initial_states": [                               // exactly two entries
//       {"system_state": ..., "environment_state": ...},
//       {"joint_state": ...}
//     ],
//     "interaction_terms": [                            // optional
//       {"system_operator": [[...]], "environment_operator": [[...]]}
//     ]
//   }
//
// A state is either a vector of amplitudes [[re, im], ...] or a density
// matrix [[[re, im], ...], ...]. A complex entry may also be a plain number,
// except inside a density matrix, whose entries must be [re, im] pairs.

#include "nmsec/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace nmsec {

class ModelFileError : public std::runtime_error {
 public:
  enum class Kind { Parse, NotHermitian, DimensionMismatch, InitialCorrelations, InvalidState, InconsistentInteraction };

  ModelFileError(Kind kind, std::string location, const std::string& message)
      : std::runtime_error(location + ": " + message), kind_(kind), location_(std::move(location)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& location() const noexcept { return location_; }

 private:
  Kind kind_;
  std::string location_;
};

namespace detail {

class ModelReader {
 public:
  explicit ModelReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(ModelFileError::Kind kind, const std::string& pointer, const std::string& msg) const {
    throw ModelFileError(kind, source_ + "#" + pointer, msg);
  }

  const nlohmann::json& member(const nlohmann::json& obj, const std::string& key, const std::string& at) const {
    if (!obj.is_object()) fail(ModelFileError::Kind::Parse, at, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(ModelFileError::Kind::Parse, at + "/" + key, "missing required field");
    return *it;
  }

  Index positive_int(const nlohmann::json& v, const std::string& at) const {
    if (!v.is_number_integer() || v.get<long long>() <= 0)
      fail(ModelFileError::Kind::Parse, at, "expected a positive integer");
    return static_cast<Index>(v.get<long long>());
  }

  Complex complex(const nlohmann::json& v, const std::string& at) const {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
      return {v[0].get<double>(), v[1].get<double>()};
    fail(ModelFileError::Kind::Parse, at, "expected a number or [re, im]");
  }

  static bool is_complex_entry(const nlohmann::json& v) {
    return v.is_number() || (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number());
  }

  ComplexVector vector(const nlohmann::json& v, const std::string& at) const {
    if (!v.is_array() || v.empty()) fail(ModelFileError::Kind::Parse, at, "expected a non-empty array");
    ComplexVector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = complex(v[i], at + "/" + std::to_string(i));
    return out;
  }

  ComplexMatrix matrix(const nlohmann::json& v, const std::string& at) const {
    if (!v.is_array() || v.empty() || !v[0].is_array())
      fail(ModelFileError::Kind::Parse, at, "expected an array of rows");
    const std::size_t rows = v.size();
    const std::size_t cols = v[0].size();
    ComplexMatrix out(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      const std::string row_at = at + "/" + std::to_string(i);
      if (!v[i].is_array()) fail(ModelFileError::Kind::Parse, row_at, "expected a row array");
      if (v[i].size() != cols)
        fail(ModelFileError::Kind::DimensionMismatch, row_at,
             concat("row has ", v[i].size(), " entries, expected ", cols));
      for (std::size_t j = 0; j < cols; ++j)
        out(static_cast<Index>(i), static_cast<Index>(j)) = complex(v[i][j], row_at + "/" + std::to_string(j));
    }
    return out;
  }

  /// Vector or matrix form; returns a density matrix of dimension `dim`.
  ComplexMatrix state(const nlohmann::json& v, Index dim, const std::string& at) const {
    if (!v.is_array() || v.empty()) fail(ModelFileError::Kind::Parse, at, "expected a state vector or matrix");
    ComplexMatrix rho;
    if (is_complex_entry(v[0])) {
      const ComplexVector psi = vector(v, at);
      if (psi.size() != dim)
        fail(ModelFileError::Kind::DimensionMismatch, at, concat("state has length ", psi.size(), ", expected ", dim));
      if (std::abs(psi.norm() - 1.0) > 1e-12)
        fail(ModelFileError::Kind::InvalidState, at, concat("state vector norm ", psi.norm(), " != 1"));
      rho = psi * psi.adjoint();
    } else {
      rho = matrix(v, at);
      if (rho.rows() != dim || rho.cols() != dim)
        fail(ModelFileError::Kind::DimensionMismatch, at,
             concat("density matrix is ", rho.rows(), "x", rho.cols(), ", expected ", dim, "x", dim));
      try {
        DensityMatrix::make(rho);
      } catch (const std::invalid_argument& e) {
        fail(ModelFileError::Kind::InvalidState, at, e.what());
      }
    }
    return rho;
  }

  Model read(const nlohmann::json& doc) const {
    Model m;
    const auto& dims = member(doc, "dims", "");
    m.bipartition.d_system = positive_int(member(dims, "system", "/dims"), "/dims/system");
    m.bipartition.d_environment = positive_int(member(dims, "environment", "/dims"), "/dims/environment");
    const Index dim = m.bipartition.joint_dim();

    m.hamiltonian = matrix(member(doc, "hamiltonian", ""), "/hamiltonian");
    if (m.hamiltonian.rows() != dim || m.hamiltonian.cols() != dim)
      fail(ModelFileError::Kind::DimensionMismatch, "/hamiltonian",
           concat("Hamiltonian is ", m.hamiltonian.rows(), "x", m.hamiltonian.cols(), ", dims imply ", dim, "x", dim));
    const double asym = max_asymmetry(m.hamiltonian);
    if (asym > 1e-12)
      fail(ModelFileError::Kind::NotHermitian, "/hamiltonian", concat("not Hermitian (max asymmetry ", asym, ")"));

    const auto& states = member(doc, "initial_states", "");
    if (!states.is_array() || states.size() != 2)
      fail(ModelFileError::Kind::Parse, "/initial_states", "expected exactly two initial states");
    for (std::size_t j = 0; j < 2; ++j) {
      const std::string at = "/initial_states/" + std::to_string(j);
      const auto& entry = states[j];
      if (!entry.is_object()) fail(ModelFileError::Kind::Parse, at, "expected an object");
      ComplexMatrix joint;
      if (entry.contains("joint_state")) {
        joint = state(entry["joint_state"], dim, at + "/joint_state");
      } else {
        const ComplexMatrix rs = state(member(entry, "system_state", at), m.bipartition.d_system, at + "/system_state");
        const ComplexMatrix re = state(member(entry, "environment_state", at), m.bipartition.d_environment,
                                       at + "/environment_state");
        joint = kron(rs, re);
      }
      const ComplexMatrix chi = joint - kron(partial_trace(joint, m.bipartition, Keep::System),
                                             partial_trace(joint, m.bipartition, Keep::Environment));
      const double sec = trace_norm_hermitian(chi);
      if (sec > 1e-10)
        fail(ModelFileError::Kind::InitialCorrelations, at,
             concat("initial state is correlated (||chi|| = ", sec, "); initial system-environment correlations are not allowed"));
      m.initial_pair[j] = DensityMatrix::unchecked(std::move(joint), {m.bipartition.d_system, m.bipartition.d_environment});
    }

    if (doc.contains("interaction_terms")) {
      const auto& terms = doc["interaction_terms"];
      if (!terms.is_array()) fail(ModelFileError::Kind::Parse, "/interaction_terms", "expected an array");
      ComplexMatrix remainder = m.hamiltonian;
      for (std::size_t a = 0; a < terms.size(); ++a) {
        const std::string at = "/interaction_terms/" + std::to_string(a);
        InteractionTerm term{matrix(member(terms[a], "system_operator", at), at + "/system_operator"),
                             matrix(member(terms[a], "environment_operator", at), at + "/environment_operator")};
        if (term.system_op.rows() != m.bipartition.d_system || term.system_op.cols() != m.bipartition.d_system ||
            term.environment_op.rows() != m.bipartition.d_environment ||
            term.environment_op.cols() != m.bipartition.d_environment)
          fail(ModelFileError::Kind::DimensionMismatch, at, "operator shapes do not match dims");
        remainder -= kron(term.system_op, term.environment_op);
        m.interaction_terms.push_back(std::move(term));
      }
      // What is left must act as identity on the system.
      const ComplexMatrix env_part = partial_trace(remainder, m.bipartition, Keep::Environment) /
                                     static_cast<double>(m.bipartition.d_system);
      const double defect =
          (remainder - kron(ComplexMatrix::Identity(m.bipartition.d_system, m.bipartition.d_system), env_part))
              .cwiseAbs()
              .maxCoeff();
      if (defect > 1e-10)
        fail(ModelFileError::Kind::InconsistentInteraction, "/interaction_terms",
             concat("H - sum kron(A, B) is not of the form I (x) M (defect ", defect, ")"));
      m.environment_local = env_part;
    }

    m.label = doc.contains("label") && doc["label"].is_string() ? doc["label"].get<std::string>() : source_;
    return m;
  }

 private:
  std::string source_;
};

}  // namespace detail

inline Model parse_generic_model(const std::string& text, const std::string& source = "<memory>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelFileError(ModelFileError::Kind::Parse, detail::concat(source, "@byte", e.byte), e.what());
  }
  return detail::ModelReader(source).read(doc);
}

inline Model load_generic_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelFileError(ModelFileError::Kind::Parse, path.string(), "cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_generic_model(buffer.str(), path.string());
}

}  // namespace nmsec
