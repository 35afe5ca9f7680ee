#pragma once

// Monte Carlo checks that the simulated system approaches the random fluid
// limit, plus busy-period moment checks for a single queue in isolation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simulator.hpp"
#include "stats.hpp"

namespace polling {

/// eta_n = min{k : t^(k) >= rho^n}, or nullopt when the trace stops short.
inline std::optional<std::size_t> eta_index(const EventTrace& tr, double rho, int n) {
  const double level = std::pow(rho, n);
  for (std::size_t k = 0; k < tr.sessions.size(); ++k)
    if (tr.sessions[k].t_session >= level) return k;
  return std::nullopt;
}

/// (Q(t^(m)) . u) / rho^m at m = number of completed sessions.
inline double zeta_hat(const EventTrace& tr, const SpectralData& sd) {
  const auto& q = tr.sessions.back().q_at_visits.back();
  double proj = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) proj += static_cast<double>(q[j]) * sd.u[j];
  return proj / std::pow(sd.rho, static_cast<double>(tr.sessions.size()));
}

inline std::vector<double> make_grid(double t0, double t1, std::size_t points, bool log_spaced) {
  if (!(t0 > 0.0 && t1 >= t0) || points == 0) throw std::invalid_argument("grid: need 0 < t0 <= T and points > 0");
  std::vector<double> g(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double f = points == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(points - 1);
    g[k] = log_spaced ? t0 * std::pow(t1 / t0, f) : t0 + f * (t1 - t0);
  }
  g.back() = t1;
  return g;
}

// ---------------------------------------------------------------------------
// Switching-instant ratios

struct RatioOptions {
  std::vector<int> scales{6, 8, 10};
  std::size_t reps = 200;
  std::size_t max_sessions = 100000;
  unsigned threads = 1;
};

struct RatioEstimate {
  std::string kind;  // "switch": t_{i+1}/t_i, "queue": Q_i(t_i)/t_i, "post_visit": Q_i(t_{i+1})/t_{i+1}
  std::size_t i = 0;  // 0-based queue
  int n = 0;
  double median = 0.0;
  double iqr = 0.0;
  double target = 0.0;
  std::size_t count = 0;
};

struct RatioReport {
  std::vector<RatioEstimate> estimates;
  std::size_t dropped = 0;
  std::size_t total = 0;
  // n - eta_n equal at the two largest scales (after shifting by their gap)
  double eta_stable_fraction = 0.0;
  // n - eta_n == floor(log_rho(alpha zeta_hat)) at the largest scale
  double eta_matches_zeta_fraction = 0.0;
};

inline RatioReport switching_ratio_estimates(const Analysis& an, const RatioOptions& opt, const RngStream& s) {
  if (opt.scales.empty() || opt.reps == 0) throw std::invalid_argument("switching_ratio_estimates: empty request");
  const std::size_t n_q = an.cfg.size();
  const std::size_t n_sc = opt.scales.size();
  const double rho = an.spectral.rho;
  const int n_max = *std::max_element(opt.scales.begin(), opt.scales.end());

  struct Rep {
    bool ok = false;
    std::vector<double> values;  // [scale][kind][i]
    std::vector<long> offsets;   // n - eta_n per scale
    long zeta_floor = 0;
  };
  std::vector<Rep> reps(opt.reps);
  parallel_for(opt.reps, opt.threads, [&](std::size_t r) {
    RngStream rs = s.child(r);
    TraceRequest req;
    req.n_sessions = opt.max_sessions;
    req.stop_after_session_start = std::pow(rho, n_max);
    const EventTrace tr = run_trace(an.cfg, rs, req);
    Rep& out = reps[r];
    out.values.assign(n_sc * 3 * n_q, 0.0);
    for (std::size_t c = 0; c < n_sc; ++c) {
      const auto eta = eta_index(tr, rho, opt.scales[c]);
      if (!eta) return;
      const auto& rec = tr.sessions[*eta];
      for (std::size_t i = 0; i < n_q; ++i) {
        const double ti = rec.visit_starts[i];
        const double tn = rec.visit_starts[i + 1];
        out.values[(c * 3 + 0) * n_q + i] = tn / ti;
        out.values[(c * 3 + 1) * n_q + i] = static_cast<double>(rec.q_at_visits[i][i]) / ti;
        out.values[(c * 3 + 2) * n_q + i] = static_cast<double>(rec.q_at_visits[i + 1][i]) / tn;
      }
      out.offsets.push_back(static_cast<long>(opt.scales[c]) - static_cast<long>(*eta));
    }
    const double z = zeta_hat(tr, an.spectral);
    if (!(z > 0.0)) return;
    out.zeta_floor = static_cast<long>(std::floor(std::log(an.fluid.alpha * z) / std::log(rho)));
    out.ok = true;
  });

  RatioReport rep;
  rep.total = opt.reps;
  std::size_t stable = 0, matches = 0, kept = 0;
  std::vector<std::size_t> order(n_sc);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return opt.scales[a] < opt.scales[b]; });
  const std::size_t hi = order.back();
  const std::size_t lo = order.size() > 1 ? order[order.size() - 2] : hi;
  for (const auto& r : reps) {
    if (!r.ok) {
      ++rep.dropped;
      continue;
    }
    ++kept;
    if (r.offsets[hi] == r.offsets[lo]) ++stable;
    if (r.offsets[hi] == r.zeta_floor) ++matches;
  }
  if (kept) {
    rep.eta_stable_fraction = static_cast<double>(stable) / static_cast<double>(kept);
    rep.eta_matches_zeta_fraction = static_cast<double>(matches) / static_cast<double>(kept);
  }

  const auto& fc = an.fluid;
  static const char* kinds[] = {"switch", "queue", "post_visit"};
  for (std::size_t c = 0; c < n_sc; ++c)
    for (std::size_t kind = 0; kind < 3; ++kind)
      for (std::size_t i = 0; i < n_q; ++i) {
        std::vector<double> xs;
        for (const auto& r : reps)
          if (r.ok) xs.push_back(r.values[(c * 3 + kind) * n_q + i]);
        RatioEstimate e;
        e.kind = kinds[kind];
        e.i = i;
        e.n = opt.scales[c];
        e.count = xs.size();
        if (kind == 0) e.target = fc.b_bar[i + 1] / fc.b_bar[i];
        if (kind == 1) e.target = fc.a_bar(i, i) / fc.b_bar[i];
        if (kind == 2) e.target = fc.a_bar(i + 1, i) / fc.b_bar[i + 1];
        if (!xs.empty()) {
          e.median = median(xs);
          e.iqr = iqr(xs);
        }
        rep.estimates.push_back(e);
      }
  return rep;
}

// ---------------------------------------------------------------------------
// Scaling factor from whole-system simulation

struct XiEmpirical {
  std::vector<double> xi;
  std::vector<double> zeta;
  std::vector<std::size_t> sessions;  // m used for each estimate
  std::size_t dropped = 0;
  std::size_t total = 0;
};

struct XiEmpiricalOptions {
  std::size_t reps = 2000;
  int n = 10;
  std::size_t max_sessions = 100000;
  unsigned threads = 1;
};

/// Per replication: simulate from empty until a session starts at or after
/// rho^n, estimate zeta by the u-projection at the last session start, and
/// fold alpha * zeta into [1, rho).
inline XiEmpirical extract_xi_empirical(const Analysis& an, const XiEmpiricalOptions& opt, const RngStream& s) {
  const double rho = an.spectral.rho;
  std::vector<double> zs(opt.reps, 0.0);
  std::vector<std::size_t> ms(opt.reps, 0);
  parallel_for(opt.reps, opt.threads, [&](std::size_t r) {
    RngStream rs = s.child(r);
    TraceRequest req;
    req.n_sessions = opt.max_sessions;
    req.stop_after_session_start = std::pow(rho, opt.n);
    const EventTrace tr = run_trace(an.cfg, rs, req);
    if (!eta_index(tr, rho, opt.n)) return;
    zs[r] = zeta_hat(tr, an.spectral);
    ms[r] = tr.sessions.size();
  });
  XiEmpirical out;
  out.total = opt.reps;
  for (std::size_t r = 0; r < opt.reps; ++r) {
    if (!(zs[r] > 0.0)) {
      ++out.dropped;
      continue;
    }
    out.zeta.push_back(zs[r]);
    out.sessions.push_back(ms[r]);
    out.xi.push_back(fractional_scale(an.fluid.alpha * zs[r], rho));
  }
  return out;
}

/// zeta estimates (Q(t^(m)) . u) / rho^m at fixed session counts m, one row
/// per m, keeping replications that never empty after session min(m).
struct ZetaBySessions {
  std::vector<std::size_t> m;
  std::vector<std::vector<double>> zeta;
  std::size_t dropped = 0;
};

inline ZetaBySessions zeta_at_sessions(const Analysis& an, std::vector<std::size_t> m_values, std::size_t reps,
                                       const RngStream& s, unsigned threads = 1) {
  if (m_values.empty()) throw std::invalid_argument("zeta_at_sessions: no session counts");
  std::sort(m_values.begin(), m_values.end());
  const std::size_t m_min = m_values.front();
  const std::size_t m_max = m_values.back();
  std::vector<std::vector<double>> rows(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    RngStream rs = s.child(r);
    const EventTrace tr = run_trace(an.cfg, rs, m_max);
    if (tr.last_empty_session && *tr.last_empty_session >= m_min) return;
    std::vector<double> z;
    for (std::size_t m : m_values) {
      const auto& q = tr.sessions[m - 1].q_at_visits.back();
      double proj = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) proj += static_cast<double>(q[j]) * an.spectral.u[j];
      z.push_back(proj / std::pow(an.spectral.rho, static_cast<double>(m)));
    }
    rows[r] = std::move(z);
  });
  ZetaBySessions out{m_values, std::vector<std::vector<double>>(m_values.size()), 0};
  for (const auto& row : rows) {
    if (row.empty()) {
      ++out.dropped;
      continue;
    }
    for (std::size_t c = 0; c < row.size(); ++c) out.zeta[c].push_back(row[c]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Uniform distance to the scaled fluid limit

struct TrajectoryDistance {
  double sup_distance = 0.0;
  double xi_hat = 1.0;
  double sup_distance_xi_one = 0.0;  // same path against xi = 1
  bool completed = false;
};

/// One replication: sup over the grid of |Q(rho^n t)/rho^n - xi qbar(t/xi)|,
/// with xi taken from the replication's own zeta estimate unless overridden.
inline TrajectoryDistance scaled_trajectory_distance(const Analysis& an, int n, const std::vector<double>& grid,
                                                     RngStream& s, std::optional<double> xi_override = std::nullopt,
                                                     std::size_t max_sessions = 100000) {
  if (grid.empty() || !(grid.front() > 0.0)) throw std::invalid_argument("scaled_trajectory_distance: grid must be positive");
  const double scale = std::pow(an.spectral.rho, n);
  TraceRequest req;
  req.n_sessions = max_sessions;
  for (double t : grid) req.grid.push_back(t * scale);
  const double horizon = req.grid.back();
  req.stop_after_session_start = horizon;
  req.min_end_time = horizon;
  const EventTrace tr = run_trace(an.cfg, s, req);
  TrajectoryDistance out;
  const double z = zeta_hat(tr, an.spectral);
  if (tr.grid.size() < grid.size() || !(z > 0.0)) return out;
  out.completed = true;
  out.xi_hat = xi_override ? *xi_override : fractional_scale(an.fluid.alpha * z, an.spectral.rho);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Vector lim = scaled_limit(an.fluid, out.xi_hat, grid[g]);
    const Vector one = eval_fluid(an.fluid, grid[g]);
    for (std::size_t j = 0; j < lim.size(); ++j) {
      const double obs = static_cast<double>(tr.grid_values[g][j]) / scale;
      out.sup_distance = std::max(out.sup_distance, std::abs(obs - lim[j]));
      out.sup_distance_xi_one = std::max(out.sup_distance_xi_one, std::abs(obs - one[j]));
    }
  }
  return out;
}

struct TrajectorySummary {
  int n = 0;
  double median_sup_distance = 0.0;
  std::size_t completed = 0;
  std::size_t total = 0;
};

inline std::vector<TrajectorySummary> trajectory_distances(const Analysis& an, const std::vector<int>& scales,
                                                           const std::vector<double>& grid, std::size_t reps,
                                                           const RngStream& s, unsigned threads = 1) {
  std::vector<TrajectorySummary> out;
  for (std::size_t c = 0; c < scales.size(); ++c) {
    std::vector<TrajectoryDistance> d(reps);
    parallel_for(reps, threads, [&](std::size_t r) {
      RngStream rs = s.child(c).child(r);
      d[r] = scaled_trajectory_distance(an, scales[c], grid, rs);
    });
    std::vector<double> xs;
    for (const auto& x : d)
      if (x.completed) xs.push_back(x.sup_distance);
    TrajectorySummary t{scales[c], xs.empty() ? std::numeric_limits<double>::quiet_NaN() : median(xs), xs.size(), reps};
    out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Busy-period moments for one queue in isolation

/// f(x) = x log x on [1, inf), 0 below.
inline double f_moment_kernel(double x) { return x >= 1.0 ? x * std::log(x) : 0.0; }

struct BusyMomentReport {
  std::size_t i = 0;
  GateCount k = 0;       // exponent index: a visit with k + 1 gates
  GateCount gates = 1;
  std::size_t reps = 0;
  double mean = 0.0;
  double mean_se = 0.0;
  double mean_target = 0.0;
  double f_moment = 0.0;
  double f_moment_se = 0.0;
  double bound_c = 0.0;
  double bound_c_se = 0.0;
  double bound_value = 0.0;
};

/// (1/mu)(1 - r^{k+1})/(1 - r) with r = lambda/mu; 1/(mu - lambda) for k = inf.
inline double visit_mean_target(double lambda, double mu, GateCount k) {
  if (is_unlimited(k)) return 1.0 / (mu - lambda);
  const double r = lambda / mu;
  return (1.0 - std::pow(r, static_cast<double>(k) + 1.0)) / (1.0 - r) / mu;
}

/// Replication r of every k uses the same stream, so truncations at
/// different k are pathwise coupled.
inline BusyMomentReport busy_period_moments(double lambda, const ServiceDistribution& service, GateCount k,
                                            std::size_t reps, const RngStream& s, unsigned threads = 1) {
  if (reps < 2) throw std::invalid_argument("busy_period_moments: need at least 2 replications");
  const double mu = 1.0 / service_mean(service);
  if (!(lambda > 0.0 && lambda < mu)) throw DomainError("busy_period_moments: need 0 < lambda < mu");
  const GateCount gates = is_unlimited(k) ? kUnlimitedGates : k + 1;
  std::vector<double> dur(reps), fv(reps), c1(reps), c2(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    RngStream vs = s.child(0).child(r);
    const auto v = simulate_isolated_visit(lambda, service, gates, vs);
    dur[r] = v.duration;
    fv[r] = f_moment_kernel(v.duration);
    RngStream cs = s.child(1).child(r);
    const double b = sample_service(service, cs);
    double t = cs.exponential(lambda);
    double arrivals = 0.0;
    while (t <= b) {
      arrivals += 1.0;
      t += cs.exponential(lambda);
    }
    c1[r] = f_moment_kernel(2.0 * b) / 2.0;
    c2[r] = f_moment_kernel(2.0 * arrivals) / (2.0 * (mu - lambda));
  });
  BusyMomentReport rep;
  rep.k = k;
  rep.gates = gates;
  rep.reps = reps;
  const auto d = mean_se(dur);
  const auto f = mean_se(fv);
  std::vector<double> c(reps);
  for (std::size_t r = 0; r < reps; ++r) c[r] = c1[r] + c2[r];
  const auto cc = mean_se(c);
  rep.mean = d.mean;
  rep.mean_se = d.se;
  rep.mean_target = visit_mean_target(lambda, mu, k);
  rep.f_moment = f.mean;
  rep.f_moment_se = f.se;
  rep.bound_c = cc.mean;
  rep.bound_c_se = cc.se;
  rep.bound_value = cc.mean / (1.0 - lambda / mu);
  return rep;
}

inline BusyMomentReport busy_period_moments(const ValidatedConfig& cfg, std::size_t i, GateCount k, std::size_t reps,
                                            const RngStream& s, unsigned threads = 1) {
  if (i >= cfg.size()) throw std::out_of_range("busy_period_moments: queue index");
  auto rep = busy_period_moments(cfg.lambda()[i], cfg.queue(i).service, k, reps, s, threads);
  rep.i = i;
  return rep;
}

}  // namespace polling
