#pragma once

// CSV and JSON emission. Numbers in CSV use 17 significant digits; the JSON
// writer emits the shortest representation that round-trips.

#include "nmsec/diagnostics.hpp"
#include "nmsec/measure.hpp"

#include <json.hpp>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nmsec::cli {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr std::array<std::pair<std::string_view, double DiagnosticsRow::*>, 16> kTrajectoryColumns{{
    {"t", &DiagnosticsRow::t},
    {"D_system", &DiagnosticsRow::D_system},
    {"sigma", &DiagnosticsRow::sigma},
    {"bound_total", &DiagnosticsRow::bound_total},
    {"bound_term1", &DiagnosticsRow::bound_term1},
    {"bound_term2", &DiagnosticsRow::bound_term2},
    {"D_env", &DiagnosticsRow::D_env},
    {"E_indist", &DiagnosticsRow::E_indist},
    {"X_corr", &DiagnosticsRow::X_corr},
    {"chi1_norm", &DiagnosticsRow::chi1_norm},
    {"chi2_norm", &DiagnosticsRow::chi2_norm},
    {"svn_system_1", &DiagnosticsRow::svn_system_1},
    {"svn_system_2", &DiagnosticsRow::svn_system_2},
    {"mutual_info_1", &DiagnosticsRow::mutual_info_1},
    {"mutual_info_2", &DiagnosticsRow::mutual_info_2},
    {"dIdt_1", &DiagnosticsRow::dIdt_1},
}};

inline void write_trajectory_csv(std::ostream& out, const std::vector<DiagnosticsRow>& rows) {
  for (std::size_t c = 0; c < kTrajectoryColumns.size(); ++c) out << (c ? "," : "") << kTrajectoryColumns[c].first;
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < kTrajectoryColumns.size(); ++c)
      out << (c ? "," : "") << format_double(r.*(kTrajectoryColumns[c].second));
    out << '\n';
  }
}

/// Plain table writer: strings are written verbatim, so callers keep them comma-free.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double v) { return add(format_double(v)); }
    Row& operator<<(long long v) { return add(std::to_string(v)); }
    Row& operator<<(int v) { return add(std::to_string(v)); }
    Row& operator<<(std::size_t v) { return add(std::to_string(v)); }
    Row& operator<<(const std::string& s) { return add(s); }
    Row& operator<<(const char* s) { return add(s); }

   private:
    friend class CsvTable;
    Row& add(std::string s) {
      cells_.push_back(std::move(s));
      return *this;
    }
    std::vector<std::string> cells_;
  };

  Row& row() {
    rows_.emplace_back();
    return rows_.back();
  }

  std::size_t size() const { return rows_.size(); }

  void write(std::ostream& out) const {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t c = 0; c < cells.size(); ++c) out << (c ? "," : "") << cells[c];
      out << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r.cells_);
  }

 private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json intervals_json(const std::vector<Interval>& intervals) {
  Json a = Json::array();
  for (const auto& iv : intervals) a.push_back({{"t_start", iv.t_start}, {"t_end", iv.t_end}, {"contribution", iv.contribution}});
  return a;
}

/// JSON cannot hold inf/nan; such values are written as null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

struct Violation {
  std::string check;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

inline Json violations_json(const std::vector<Violation>& vs) {
  Json a = Json::array();
  for (const auto& v : vs)
    a.push_back({{"check", v.check}, {"value", number_or_null(v.value)}, {"tolerance", v.tolerance}, {"detail", v.detail}});
  return a;
}

struct Summary {
  Json parameters = Json::object();
  double n_measure = 0.0;
  std::vector<Interval> intervals;
  std::vector<double> zero_crossings_down_up;
  double max_bound_violation = 0.0;
  double runtime_seconds = 0.0;
  std::string path_used;
  std::vector<Violation> violations;
  Json extras = Json::object();

  Json to_json(const std::string& timestamp) const {
    Json j;
    j["parameters"] = parameters;
    j["n_measure"] = n_measure;
    j["intervals"] = intervals_json(intervals);
    j["zero_crossings_down_up"] = zero_crossings_down_up;
    j["max_bound_violation"] = number_or_null(max_bound_violation);
    j["runtime_seconds"] = runtime_seconds;
    j["path_used"] = path_used;
    j["timestamp"] = timestamp;
    j["violations"] = violations_json(violations);
    j["extras"] = extras;
    return j;
  }
};

inline void write_json(std::ostream& out, const Json& j) { out << j.dump(2) << '\n'; }

}  // namespace nmsec::cli
