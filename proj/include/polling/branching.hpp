#pragma once

// The multitype branching process embedded at session starts.
//
// A customer of queue i present at a session start is replaced, by the next
// session start, by a random vector L_i of customers (its session offspring);
// Q(t^(n)) is then a branching process with immigration G at state 0. This
// header holds the closed-form mean data, the Perron-Frobenius triple of the
// mean matrix, and Monte Carlo samplers for extinction, the Kesten-Stigum
// limits zeta_i and the scaling factor xi.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simulator.hpp"

namespace polling {

// ---------------------------------------------------------------------------
// Mean data

struct VisitMeans {
  Matrix m_check;  // E of the visit offspring vectors, one row per queue
  Vector gamma;    // mean visit durations
};

inline VisitMeans visit_means(const ValidatedConfig& cfg) {
  const std::size_t n = cfg.size();
  VisitMeans vm{Matrix(n, n), Vector(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = cfg.lambda()[i];
    const double mu = cfg.mu()[i];
    const double own = gating_pgf_at(cfg.queue(i).gating, lam / mu);
    vm.gamma[i] = (1.0 - own) / (mu - lam);
    for (std::size_t j = 0; j < n; ++j) vm.m_check(i, j) = (i == j) ? own : cfg.lambda()[j] * vm.gamma[i];
  }
  return vm;
}

/// Mean session offspring matrix, by the backward recursion over queues
/// I, I-1, ..., 1: a queue-i customer's visit offspring in queues k > i are
/// still served within the same session.
inline Matrix session_mean_matrix(const VisitMeans& vm) {
  const std::size_t n = vm.m_check.rows();
  Matrix m(n, n);
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = (i >= j) ? vm.m_check(i, j) : 0.0;
      for (std::size_t k = i + 1; k < n; ++k) acc += vm.m_check(i, k) * m(k, j);
      m(i, j) = acc;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Perron-Frobenius data

struct SpectralData {
  double rho = 0.0;
  Vector u;  // right eigenvector, M u^T = rho u^T
  Vector v;  // left eigenvector,  v M = rho v; sum(v) = 1 and v.u = 1
  bool reducible = false;  // some coordinate of u or v is zero
  std::size_t iterations = 0;
};

struct PerronOptions {
  double rq_tolerance = 1e-13;
  double residual_tolerance = 1e-10;
  std::size_t max_iterations = 100000;
};

namespace detail {

struct PowerResult {
  double value;
  Vector vec;
  std::size_t iterations;
};

inline PowerResult power_iteration(const Matrix& m, bool left, const PerronOptions& opt) {
  const std::size_t n = m.rows();
  // Asymmetric positive start so that periodic matrices show up as a
  // non-vanishing residual instead of a lucky fixed point.
  Vector x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = 1.0 + 0.1 * static_cast<double>(k + 1) / static_cast<double>(n);
  double prev_rq = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    Vector y = left ? vec_mat(x, m) : mat_vec(m, x);
    const double scale = norm_inf(y);
    if (scale == 0.0) throw SupercriticalityError("perron: mean matrix is nilpotent (rho = 0)");
    const double rq = dot(x, y) / dot(x, x);
    for (double& e : y) e /= scale;
    const Vector my = left ? vec_mat(y, m) : mat_vec(m, y);
    double resid = 0.0;
    for (std::size_t k = 0; k < n; ++k) resid = std::max(resid, std::abs(my[k] - rq * y[k]));
    x = std::move(y);
    if (std::abs(rq - prev_rq) <= opt.rq_tolerance * std::abs(rq) &&
        resid <= 0.1 * opt.residual_tolerance * std::abs(rq))
      return {rq, x, it};
    prev_rq = rq;
  }
  throw SpectralError("perron: power iteration did not converge (periodic or ill-separated spectrum)");
}

}  // namespace detail

/// Dominant eigenvalue with nonnegative left/right eigenvectors. Throws
/// SpectralError on non-convergence and SupercriticalityError when rho <= 1.
inline SpectralData perron(const Matrix& m, const PerronOptions& opt = {}) {
  if (m.rows() == 0 || m.rows() != m.cols()) throw std::invalid_argument("perron: matrix must be square");
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (!std::isfinite(m(r, c)) || m(r, c) < 0.0)
        throw std::invalid_argument("perron: matrix must be finite and nonnegative");

  const auto right = detail::power_iteration(m, false, opt);
  const auto left = detail::power_iteration(m, true, opt);
  if (std::abs(right.value - left.value) > opt.residual_tolerance * right.value)
    throw SpectralError("perron: left and right iterations disagree on rho");

  SpectralData sd;
  sd.rho = right.value;
  sd.iterations = std::max(right.iterations, left.iterations);
  sd.u = right.vec;
  sd.v = left.vec;
  for (double& x : sd.u) x = std::max(x, 0.0);
  for (double& x : sd.v) x = std::max(x, 0.0);
  const double vs = sum(sd.v);
  for (double& x : sd.v) x /= vs;
  const double vu = dot(sd.v, sd.u);
  if (!(vu > 0.0)) throw SpectralError("perron: left and right eigenvectors are orthogonal");
  for (double& x : sd.u) x /= vu;

  const Vector mu_ = mat_vec(m, sd.u);
  const Vector vm_ = vec_mat(sd.v, m);
  double ru = 0.0, rv = 0.0;
  for (std::size_t k = 0; k < m.rows(); ++k) {
    ru = std::max(ru, std::abs(mu_[k] - sd.rho * sd.u[k]));
    rv = std::max(rv, std::abs(vm_[k] - sd.rho * sd.v[k]));
  }
  if (ru > opt.residual_tolerance * sd.rho * norm_inf(sd.u) ||
      rv > opt.residual_tolerance * sd.rho * norm_inf(sd.v))
    throw SpectralError("perron: eigen-residual above tolerance");

  sd.reducible = std::any_of(sd.u.begin(), sd.u.end(), [](double x) { return x == 0.0; }) ||
                 std::any_of(sd.v.begin(), sd.v.end(), [](double x) { return x == 0.0; });
  if (!(sd.rho > 1.0 + 1e-12))
    throw SupercriticalityError("perron: rho = " + std::to_string(sd.rho) + " <= 1, branching process is not supercritical");
  return sd;
}

// ---------------------------------------------------------------------------
// Monte Carlo over the branching process

/// One draw from the immigration law G: queue i with probability
/// lambda_i / sum(lambda), then a session-offspring draw of that queue.
inline Counts sample_immigration(const ValidatedConfig& cfg, OffspringSampler& sampler, RngStream& s) {
  const double target = s.uniform() * cfg.total_rate();
  double acc = 0.0;
  std::size_t i = 0;
  for (; i + 1 < cfg.size(); ++i) {
    acc += cfg.lambda()[i];
    if (target < acc) break;
  }
  return sampler.session(i);
}

inline Counts sample_immigration(const ValidatedConfig& cfg, RngStream& s) {
  OffspringSampler sampler(cfg, s);
  return sample_immigration(cfg, sampler, s);
}

inline std::int64_t population(const Counts& z) { return std::accumulate(z.begin(), z.end(), std::int64_t{0}); }

/// Next generation of the no-immigration process: every individual replaced
/// by an independent session-offspring draw of its type.
inline Counts next_generation(OffspringSampler& sampler, const Counts& z) {
  Counts next(z.size(), 0);
  for (std::size_t type = 0; type < z.size(); ++type)
    for (std::int64_t k = 0; k < z[type]; ++k) {
      const Counts child = sampler.session(type);
      for (std::size_t j = 0; j < z.size(); ++j) next[j] += child[j];
    }
  return next;
}

/// Uniform subsample of `keep` individuals out of population z.
inline Counts thin_population(const Counts& z, std::int64_t keep, RngStream& s) {
  Counts out(z.size(), 0);
  std::int64_t remaining = population(z);
  std::int64_t needed = keep;
  for (std::size_t type = 0; type < z.size() && needed > 0; ++type)
    for (std::int64_t k = 0; k < z[type] && needed > 0; ++k, --remaining)
      if (static_cast<double>(remaining) * s.uniform() < static_cast<double>(needed)) {
        ++out[type];
        --needed;
      }
  return out;
}

struct ExtinctionOptions {
  std::size_t reps = 2000;
  std::size_t gen_cap = 200;
  std::int64_t pop_cap = 1000;
  unsigned threads = 1;
};

struct ExtinctionData {
  Vector q;
  Vector q_se;
  double q_G = 0.0;
  double q_G_se = 0.0;
  std::size_t replications = 0;
  std::size_t ambiguous = 0;  // runs that hit gen_cap below pop_cap (counted as extinct)
  double ambiguity_fraction = 0.0;
  bool caps_too_tight = false;
};

namespace detail {

enum class Fate { extinct, survived, ambiguous };

inline Fate run_until_fate(OffspringSampler& sampler, Counts z, const ExtinctionOptions& opt) {
  for (std::size_t g = 0; g < opt.gen_cap; ++g) {
    const auto size = population(z);
    if (size == 0) return Fate::extinct;
    if (size > opt.pop_cap) return Fate::survived;
    z = next_generation(sampler, z);
  }
  const auto size = population(z);
  if (size == 0) return Fate::extinct;
  if (size > opt.pop_cap) return Fate::survived;
  return Fate::ambiguous;
}

}  // namespace detail

/// Extinction probabilities q_i (from e_i) and q_G (from an immigration
/// draw) by direct simulation with generation and population caps.
inline ExtinctionData extinction_probs(const ValidatedConfig& cfg, const ExtinctionOptions& opt, const RngStream& s) {
  if (opt.reps == 0 || opt.gen_cap == 0 || opt.pop_cap <= 0)
    throw std::invalid_argument("extinction_probs: reps, gen_cap and pop_cap must be positive");
  const std::size_t n = cfg.size();
  // start type n stands for "seeded from G"
  std::vector<detail::Fate> fates((n + 1) * opt.reps);
  parallel_for(fates.size(), opt.threads, [&](std::size_t k) {
    const std::size_t start = k / opt.reps;
    RngStream rs = s.child(start).child(k % opt.reps);
    OffspringSampler sampler(cfg, rs);
    Counts z0 = (start < n) ? unit_counts(n, start) : sample_immigration(cfg, sampler, rs);
    fates[k] = detail::run_until_fate(sampler, std::move(z0), opt);
  });

  ExtinctionData out;
  out.replications = opt.reps;
  const double reps = static_cast<double>(opt.reps);
  for (std::size_t start = 0; start <= n; ++start) {
    std::size_t extinct = 0;
    for (std::size_t r = 0; r < opt.reps; ++r) {
      const auto f = fates[start * opt.reps + r];
      if (f != detail::Fate::survived) ++extinct;
      if (f == detail::Fate::ambiguous) ++out.ambiguous;
    }
    const double q = static_cast<double>(extinct) / reps;
    const double se = std::sqrt(q * (1.0 - q) / reps);
    if (start < n) {
      out.q.push_back(q);
      out.q_se.push_back(se);
    } else {
      out.q_G = q;
      out.q_G_se = se;
    }
  }
  out.ambiguity_fraction = static_cast<double>(out.ambiguous) / (reps * static_cast<double>(n + 1));
  out.caps_too_tight = out.ambiguity_fraction > 0.01;
  return out;
}

struct ZetaOptions {
  std::size_t depth = 12;
  std::int64_t pop_cap = 10000;
};

/// (Z^(depth) . u) / rho^depth for the process started from z0. Populations
/// above pop_cap are uniformly thinned and reweighted, which keeps the
/// estimate unbiased.
inline double martingale_projection(OffspringSampler& sampler, Counts z, const SpectralData& sd,
                                    const ZetaOptions& opt, RngStream& s) {
  double weight = 1.0;
  for (std::size_t g = 0; g < opt.depth; ++g) {
    z = next_generation(sampler, z);
    const auto size = population(z);
    if (size == 0) return 0.0;
    if (size > opt.pop_cap) {
      weight *= static_cast<double>(size) / static_cast<double>(opt.pop_cap);
      z = thin_population(z, opt.pop_cap, s);
    }
  }
  double proj = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) proj += static_cast<double>(z[j]) * sd.u[j];
  return weight * proj / std::pow(sd.rho, static_cast<double>(opt.depth));
}

/// One approximate draw of zeta_i; extinct paths give exactly 0.
inline double sample_zeta(const ValidatedConfig& cfg, std::size_t i, const SpectralData& sd,
                          const ZetaOptions& opt, RngStream& s) {
  OffspringSampler sampler(cfg, s);
  return martingale_projection(sampler, unit_counts(cfg.size(), i), sd, opt, s);
}

/// rho^{frac(log_rho x)}, a value in [1, rho).
inline double fractional_scale(double x, double rho) {
  double f = std::log(x) / std::log(rho);
  f -= std::floor(f);
  double xi = std::pow(rho, f);
  if (xi >= rho) xi = std::nextafter(rho, 0.0);
  return std::max(xi, 1.0);
}

struct XiOptions {
  std::size_t n_samples = 2000;
  ZetaOptions zeta;
  std::size_t max_attempts_per_sample = 10000;
  unsigned threads = 1;
};

struct XiSamples {
  std::vector<double> values;
  std::uint64_t attempts = 0;

  double rejection_rate() const {
    return attempts ? 1.0 - static_cast<double>(values.size()) / static_cast<double>(attempts) : 0.0;
  }
};

/// Samples the scaling factor xi. Each attempt draws an immigration vector,
/// runs the no-immigration process from every immigrant separately, and
/// keeps the surviving lines; attempts where every line dies are rejected,
/// which conditions on the process never returning to 0.
inline XiSamples sample_xi(const ValidatedConfig& cfg, const SpectralData& sd, double alpha, const XiOptions& opt,
                           const RngStream& s) {
  std::vector<double> values(opt.n_samples);
  std::vector<std::uint64_t> attempts(opt.n_samples, 0);
  parallel_for(opt.n_samples, opt.threads, [&](std::size_t j) {
    RngStream rs = s.child(j);
    OffspringSampler sampler(cfg, rs);
    for (;;) {
      if (++attempts[j] > opt.max_attempts_per_sample)
        throw DegeneracyError("sample_xi: rejection rate above 99.99%; the process almost never survives");
      const Counts k = sample_immigration(cfg, sampler, rs);
      double total = 0.0;
      for (std::size_t type = 0; type < k.size(); ++type)
        for (std::int64_t a = 0; a < k[type]; ++a)
          total += martingale_projection(sampler, unit_counts(k.size(), type), sd, opt.zeta, rs);
      if (total > 0.0) {
        values[j] = fractional_scale(alpha * total, sd.rho);
        return;
      }
    }
  });
  XiSamples out{std::move(values), 0};
  for (auto a : attempts) out.attempts += a;
  if (out.rejection_rate() > 0.999) throw DegeneracyError("sample_xi: rejection rate above 99.9%");
  return out;
}

}  // namespace polling
