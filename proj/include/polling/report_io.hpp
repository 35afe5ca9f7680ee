#pragma once

// JSON reports and CSV series. Floats in CSV use 17 significant digits.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "analysis.hpp"
#include "config_io.hpp"
#include "convergence.hpp"
#include "model.hpp"
#include "simulator.hpp"
#include "version.hpp"

namespace polling {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Header attached to every artifact.
inline json meta_json(const ModelConfig& cfg, const json& params, bool deterministic) {
  json m{{"tool", kToolName}, {"version", kVersion}, {"config_hash", config_hash(cfg)}, {"params", params}};
  if (!deterministic) m["timestamp"] = utc_timestamp();
  return m;
}

/// The same header as "# key: value" comment lines for CSV outputs.
inline void write_csv_header(std::ostream& os, const json& meta) {
  for (const auto& [key, value] : meta.items()) os << "# " << key << ": " << value.dump() << '\n';
}

inline json gate_json(GateCount k) {
  if (is_unlimited(k)) return "inf";
  return k;
}

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(m.row(r));
  return rows;
}

inline json to_json(const ValidationReport& rep) {
  json reasons = json::array();
  for (auto r : rep.reasons) reasons.push_back(to_string(r));
  return json{{"per_queue_load", rep.per_queue_load},
              {"total_load", rep.total_load},
              {"b_log_b_finite", rep.b_log_b_finite},
              {"verdict", rep.accepted() ? "accept" : "reject"},
              {"reasons", reasons}};
}

inline json to_json(const FluidConstants& fc) {
  return json{{"alpha", fc.alpha}, {"b_bar", fc.b_bar}, {"a_bar", to_json(fc.a_bar)},
              {"b", fc.b},         {"a", to_json(fc.a)}, {"rho", fc.rho}};
}

inline json analysis_json(const Analysis& an, const ExtinctionData* ext) {
  json j{{"m_check", to_json(an.visit.m_check)},
         {"gamma", an.visit.gamma},
         {"M", to_json(an.M)},
         {"rho", an.spectral.rho},
         {"u", an.spectral.u},
         {"v", an.spectral.v},
         {"reducible", an.spectral.reducible}};
  if (ext) {
    j["q"] = ext->q;
    j["q_se"] = ext->q_se;
    j["q_G"] = ext->q_G;
    j["q_G_se"] = ext->q_G_se;
    j["ambiguity_fraction"] = ext->ambiguity_fraction;
    j["caps_too_tight"] = ext->caps_too_tight;
    j["extinction_replications"] = ext->replications;
  }
  return j;
}

inline json to_json(const RatioEstimate& e) {
  return json{{"kind", e.kind}, {"i", e.i + 1},          {"n", e.n},         {"median", e.median},
              {"iqr", e.iqr},   {"target", e.target},    {"count", e.count}};
}

inline json to_json(const BusyMomentReport& r) {
  return json{{"i", r.i + 1},
              {"k", gate_json(r.k)},
              {"gates", gate_json(r.gates)},
              {"reps", r.reps},
              {"mean", r.mean},
              {"mean_se", r.mean_se},
              {"mean_target", r.mean_target},
              {"f_moment", r.f_moment},
              {"f_moment_se", r.f_moment_se},
              {"bound_c", r.bound_c},
              {"bound_c_se", r.bound_c_se},
              {"bound", r.bound_value}};
}

inline json to_json(const TrajectorySummary& t) {
  return json{{"n", t.n}, {"sup_distance", t.median_sup_distance}, {"completed", t.completed}, {"total", t.total}};
}

/// One row per visit boundary: session, i, t_i, Q_1..Q_I (i = 1..I+1).
inline void write_trace_csv(std::ostream& os, const EventTrace& tr) {
  const std::size_t n = tr.arrivals_count.size();
  os << "session,i,t_i";
  for (std::size_t j = 0; j < n; ++j) os << ",Q_" << j + 1;
  os << '\n';
  for (const auto& s : tr.sessions)
    for (std::size_t i = 0; i < s.visit_starts.size(); ++i) {
      os << s.index << ',' << i + 1 << ',' << fmt17(s.visit_starts[i]);
      for (auto q : s.q_at_visits[i]) os << ',' << q;
      os << '\n';
    }
}

inline void write_trajectory_csv(std::ostream& os, const EventTrace& tr) {
  const std::size_t n = tr.arrivals_count.size();
  os << 't';
  for (std::size_t j = 0; j < n; ++j) os << ",Q_" << j + 1;
  os << '\n';
  for (std::size_t g = 0; g < tr.grid.size(); ++g) {
    os << fmt17(tr.grid[g]);
    for (auto q : tr.grid_values[g]) os << ',' << q;
    os << '\n';
  }
}

inline void write_fluid_csv(std::ostream& os, const FluidConstants& fc, const std::vector<double>& grid, double xi) {
  os << 't';
  for (std::size_t j = 0; j < fc.size(); ++j) os << ",qbar_" << j + 1;
  os << '\n';
  for (double t : grid) {
    const Vector q = xi == 1.0 ? eval_fluid(fc, t) : scaled_limit(fc, xi, t);
    os << fmt17(t);
    for (double x : q) os << ',' << fmt17(x);
    os << '\n';
  }
}

inline void write_column_csv(std::ostream& os, const char* name, const std::vector<double>& xs) {
  os << name << '\n';
  for (double x : xs) os << fmt17(x) << '\n';
}

}  // namespace polling
