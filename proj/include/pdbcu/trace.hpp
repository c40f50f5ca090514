#pragma once

#include <pdbcu/types.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace pdbcu {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One per-epoch record. Columns that a run mode does not produce stay
/// NaN / empty and are written as empty CSV fields.
struct TraceRow {
  std::int64_t epoch = 0;
  double obj_err = kMissing;  // |F(x^k) - F*|
  double feas = kMissing;     // ||A x^k - b||
  double wall_ms = 0.0;       // solver time since start, metrics excluded
  double erg_obj_err = kMissing;
  double erg_feas = kMissing;
  double iterations_per_sec = kMissing;
  std::optional<std::int64_t> max_delay;
  double mean_delay = kMissing;
  std::optional<std::int64_t> dropped_messages;
  std::optional<int> tau;
};

struct RunTrace {
  // Config echo and instance fingerprint, in insertion order.
  std::vector<std::pair<std::string, std::string>> header;
  double initial_feas = kMissing;  // ||r^0||
  std::vector<TraceRow> rows;

  void set(const std::string& key, const std::string& value) {
    for (auto& kv : header)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    header.emplace_back(key, value);
  }
  std::optional<std::string> get(const std::string& key) const {
    for (const auto& kv : header)
      if (kv.first == key) return kv.second;
    return std::nullopt;
  }
  const TraceRow& last() const {
    if (rows.empty()) throw StateError("trace: no rows");
    return rows.back();
  }
};

inline const char* kTraceColumns =
    "epoch,obj_err,feas,wall_ms,erg_obj_err,erg_feas,iterations_per_sec,max_delay,mean_delay,"
    "dropped_messages,tau";

namespace detail {
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
template <class T>
std::string fmt_opt(const std::optional<T>& v) {
  return v ? std::to_string(*v) : std::string();
}
inline double parse_double(const std::string& s) {
  if (s.empty()) return kMissing;
  if (s == "inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw IngestionError("trace: bad number '" + s + "'");
  return v;
}
}  // namespace detail

/// Timing columns can be zeroed so that repeated deterministic runs give
/// identical bytes.
inline void write_trace_csv(std::ostream& os, const RunTrace& t, bool zero_timing = false) {
  for (const auto& [k, v] : t.header) os << "# " << k << "=" << v << "\n";
  os << "# initial_feas=" << detail::fmt_double(t.initial_feas) << "\n";
  os << kTraceColumns << "\n";
  for (const auto& r : t.rows) {
    os << r.epoch << ',' << detail::fmt_double(r.obj_err) << ',' << detail::fmt_double(r.feas)
       << ',' << detail::fmt_double(zero_timing ? 0.0 : r.wall_ms) << ','
       << detail::fmt_double(r.erg_obj_err) << ',' << detail::fmt_double(r.erg_feas) << ','
       << detail::fmt_double(zero_timing && !std::isnan(r.iterations_per_sec)
                                 ? 0.0
                                 : r.iterations_per_sec)
       << ',' << detail::fmt_opt(r.max_delay) << ',' << detail::fmt_double(r.mean_delay) << ','
       << detail::fmt_opt(r.dropped_messages) << ',' << detail::fmt_opt(r.tau) << "\n";
  }
}

inline void write_trace_csv(const std::string& path, const RunTrace& t, bool zero_timing = false) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write trace file " + path);
  write_trace_csv(os, t, zero_timing);
  if (!os) throw IoError("write failed for " + path);
}

inline RunTrace read_trace_csv(std::istream& is) {
  RunTrace t;
  std::string line;
  bool have_columns = false;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string val = line.substr(eq + 1);
      if (key == "initial_feas")
        t.initial_feas = detail::parse_double(val);
      else
        t.header.emplace_back(key, val);
      continue;
    }
    if (!have_columns) {
      if (line != kTraceColumns)
        throw IngestionError("trace: unexpected column header at line " + std::to_string(lineno));
      have_columns = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 11)
      throw IngestionError("trace: expected 11 fields at line " + std::to_string(lineno));
    try {
      TraceRow r;
      r.epoch = std::stoll(f[0]);
      r.obj_err = detail::parse_double(f[1]);
      r.feas = detail::parse_double(f[2]);
      r.wall_ms = detail::parse_double(f[3]);
      r.erg_obj_err = detail::parse_double(f[4]);
      r.erg_feas = detail::parse_double(f[5]);
      r.iterations_per_sec = detail::parse_double(f[6]);
      if (!f[7].empty()) r.max_delay = std::stoll(f[7]);
      r.mean_delay = detail::parse_double(f[8]);
      if (!f[9].empty()) r.dropped_messages = std::stoll(f[9]);
      if (!f[10].empty()) r.tau = std::stoi(f[10]);
      t.rows.push_back(r);
    } catch (const std::logic_error&) {
      throw IngestionError("trace: unparsable field at line " + std::to_string(lineno));
    }
  }
  if (!have_columns) throw IngestionError("trace: missing column header");
  return t;
}

inline RunTrace read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open trace file " + path);
  return read_trace_csv(is);
}

/// Structural checks on a trace; returns a list of problems (empty when valid).
inline std::vector<std::string> validate_trace(const RunTrace& t) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].epoch < 1) problems.push_back("row " + std::to_string(i) + ": epoch < 1");
    if (i > 0 && t.rows[i].epoch <= t.rows[i - 1].epoch)
      problems.push_back("row " + std::to_string(i) + ": epochs not strictly increasing");
    if (!(t.rows[i].feas >= 0.0))
      problems.push_back("row " + std::to_string(i) + ": feasibility missing or negative");
  }
  return problems;
}

/// Equality of the deterministic columns (everything except timing).
inline bool same_trajectory(const RunTrace& a, const RunTrace& b) {
  if (a.rows.size() != b.rows.size()) return false;
  auto eq = [](double u, double v) {
    return (std::isnan(u) && std::isnan(v)) || u == v;
  };
  if (!eq(a.initial_feas, b.initial_feas)) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& r = a.rows[i];
    const auto& s = b.rows[i];
    if (r.epoch != s.epoch || !eq(r.obj_err, s.obj_err) || !eq(r.feas, s.feas) ||
        !eq(r.erg_obj_err, s.erg_obj_err) || !eq(r.erg_feas, s.erg_feas))
      return false;
  }
  return true;
}

}  // namespace pdbcu
