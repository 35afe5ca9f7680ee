#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace polling {

// ---------------------------------------------------------------------------
// Service times

struct DeterministicService {
  double value;
};

struct ExponentialService {
  double rate;
};

/// exp(N(location, scale^2))
struct LogNormalService {
  double location;
  double scale;
};

/// P{B > x} = (minimum / x)^shape for x >= minimum.
struct ParetoService {
  double shape;
  double minimum;
};

using ServiceDistribution =
    std::variant<DeterministicService, ExponentialService, LogNormalService, ParetoService>;

namespace detail {
template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

inline bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }
}  // namespace detail

/// Throws ConfigError when the parameters do not describe a positive
/// service time with finite mean.
inline void check_service(const ServiceDistribution& d) {
  std::visit(detail::overloaded{
                 [](const DeterministicService& s) {
                   if (!detail::positive_finite(s.value))
                     throw ConfigError("deterministic service: value must be positive and finite");
                 },
                 [](const ExponentialService& s) {
                   if (!detail::positive_finite(s.rate))
                     throw ConfigError("exponential service: rate must be positive and finite");
                 },
                 [](const LogNormalService& s) {
                   if (!std::isfinite(s.location) || !std::isfinite(s.scale) || s.scale < 0.0)
                     throw ConfigError("lognormal service: location finite, scale >= 0 required");
                 },
                 [](const ParetoService& s) {
                   if (!detail::positive_finite(s.minimum))
                     throw ConfigError("pareto service: minimum must be positive");
                   if (!std::isfinite(s.shape) || s.shape <= 1.0)
                     throw ConfigError("pareto service: shape must exceed 1 (finite mean)");
                 },
             },
             d);
}

/// E B in closed form.
inline double service_mean(const ServiceDistribution& d) {
  return std::visit(detail::overloaded{
                        [](const DeterministicService& s) { return s.value; },
                        [](const ExponentialService& s) { return 1.0 / s.rate; },
                        [](const LogNormalService& s) {
                          return std::exp(s.location + 0.5 * s.scale * s.scale);
                        },
                        [](const ParetoService& s) { return s.shape * s.minimum / (s.shape - 1.0); },
                    },
                    d);
}

/// Whether E B log B < infinity, decided per family.
inline bool b_log_b_finite(const ServiceDistribution& d) {
  if (const auto* p = std::get_if<ParetoService>(&d)) return p->shape > 1.0;
  return true;
}

inline double sample_service(const ServiceDistribution& d, RngStream& s) {
  return std::visit(detail::overloaded{
                        [](const DeterministicService& x) { return x.value; },
                        [&s](const ExponentialService& x) { return s.exponential(x.rate); },
                        [&s](const LogNormalService& x) {
                          return std::exp(x.location + x.scale * s.normal());
                        },
                        [&s](const ParetoService& x) {
                          return x.minimum * std::pow(s.uniform(), -1.0 / x.shape);
                        },
                    },
                    d);
}

inline double sample_exponential(double rate, RngStream& s) { return s.exponential(rate); }

// ---------------------------------------------------------------------------
// Gating indices (values in {0, 1, 2, ...} and infinity)

using GateCount = std::uint64_t;
inline constexpr GateCount kUnlimitedGates = std::numeric_limits<GateCount>::max();

inline bool is_unlimited(GateCount k) { return k == kUnlimitedGates; }

struct DeterministicGating {
  GateCount k;
};

/// P{X = k} = p (1-p)^(k-1), k = 1, 2, ...
struct GeometricGating {
  double p;
};

struct PmfGating {
  std::vector<std::pair<GateCount, double>> entries;
};

using GatingDistribution = std::variant<DeterministicGating, GeometricGating, PmfGating>;

inline constexpr double kPmfSumTolerance = 1e-12;

inline void check_gating(const GatingDistribution& g) {
  std::visit(detail::overloaded{
                 [](const DeterministicGating&) {},
                 [](const GeometricGating& x) {
                   if (!(x.p > 0.0 && x.p <= 1.0))
                     throw ConfigError("geometric gating: p must lie in (0, 1]");
                 },
                 [](const PmfGating& x) {
                   if (x.entries.empty()) throw ConfigError("pmf gating: no entries");
                   double total = 0.0;
                   for (const auto& [k, prob] : x.entries) {
                     if (!std::isfinite(prob) || prob < 0.0)
                       throw ConfigError("pmf gating: probabilities must be nonnegative");
                     total += prob;
                   }
                   if (std::abs(total - 1.0) > kPmfSumTolerance)
                     throw ConfigError("pmf gating: probabilities must sum to 1");
                 },
             },
             g);
}

/// E r^X with r^inf = 0 and r^0 = 1, for 0 <= r < 1.
inline double gating_pgf_at(const GatingDistribution& g, double r) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("gating_pgf_at: r must lie in [0, 1)");
  auto power = [r](GateCount k) {
    if (is_unlimited(k)) return 0.0;
    return std::pow(r, static_cast<double>(k));
  };
  return std::visit(detail::overloaded{
                        [&](const DeterministicGating& x) { return power(x.k); },
                        [&](const GeometricGating& x) { return x.p * r / (1.0 - (1.0 - x.p) * r); },
                        [&](const PmfGating& x) {
                          double acc = 0.0;
                          for (const auto& [k, prob] : x.entries) acc += prob * power(k);
                          return acc;
                        },
                    },
                    g);
}

/// P{X = infinity}.
inline double unlimited_mass(const GatingDistribution& g) {
  return std::visit(detail::overloaded{
                        [](const DeterministicGating& x) { return is_unlimited(x.k) ? 1.0 : 0.0; },
                        [](const GeometricGating&) { return 0.0; },
                        [](const PmfGating& x) {
                          double acc = 0.0;
                          for (const auto& [k, prob] : x.entries)
                            if (is_unlimited(k)) acc += prob;
                          return acc;
                        },
                    },
                    g);
}

/// Exhaustive in the sense of the discipline: the gate budget is infinite a.s.
inline bool is_exhaustive(const GatingDistribution& g) { return unlimited_mass(g) == 1.0; }

inline GateCount sample_gating(const GatingDistribution& g, RngStream& s) {
  return std::visit(detail::overloaded{
                        [](const DeterministicGating& x) { return x.k; },
                        [&s](const GeometricGating& x) -> GateCount {
                          if (x.p >= 1.0) return 1;
                          const double k = std::floor(std::log(s.uniform()) / std::log1p(-x.p));
                          constexpr double cap = 9.0e18;
                          return 1 + static_cast<GateCount>(k < cap ? k : cap);
                        },
                        [&s](const PmfGating& x) {
                          const double u = s.uniform();
                          double acc = 0.0;
                          for (const auto& [k, prob] : x.entries) {
                            acc += prob;
                            if (u < acc) return k;
                          }
                          // rounding slack at the top of the cdf
                          for (auto it = x.entries.rbegin(); it != x.entries.rend(); ++it)
                            if (it->second > 0.0) return it->first;
                          return x.entries.back().first;
                        },
                    },
                    g);
}

}  // namespace polling
