#pragma once

// Fluid-limit constants and the deterministic, rho-self-similar fluid
// trajectory qbar. The random fluid limit is xi * qbar(t / xi).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "branching.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"

namespace polling {

struct FluidConstants {
  double alpha = 0.0;
  Vector b_bar;      // b_bar[0..I], b_bar[0] = 1
  Matrix a_bar;      // (I+1) x I, row i = abar_{i+1}
  Vector b;          // alpha * b_bar
  Matrix a;          // alpha * a_bar
  double rho = 0.0;
  Matrix a_bar_dual; // same rows via the visit-offspring recursion
  Vector lambda;
  Vector mu;
  bool reducible = false;

  std::size_t size() const { return lambda.size(); }
  double a_own(std::size_t i) const { return a_bar(i, i); }
};

inline FluidConstants fluid_constants(const VisitMeans& vm, const SpectralData& sd, const ValidatedConfig& cfg) {
  const std::size_t n = cfg.size();
  if (sd.v.size() != n || vm.gamma.size() != n) throw std::invalid_argument("fluid_constants: dimension mismatch");
  FluidConstants fc;
  fc.rho = sd.rho;
  fc.lambda = cfg.lambda();
  fc.mu = cfg.mu();
  fc.reducible = sd.reducible;

  double num = 0.0, load = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += sd.v[i] / fc.mu[i];
    load += fc.lambda[i] / fc.mu[i];
  }
  fc.alpha = num / (load - 1.0);
  if (!(fc.alpha > 0.0) || !std::isfinite(fc.alpha)) throw ConsistencyError("fluid_constants: alpha is not positive");

  fc.b_bar.assign(n + 1, 0.0);
  fc.b_bar[0] = 1.0;
  Vector own(n);
  for (std::size_t i = 0; i < n; ++i) {
    own[i] = sd.v[i] / fc.alpha + fc.lambda[i] * (fc.b_bar[i] - fc.b_bar[0]);
    fc.b_bar[i + 1] = fc.b_bar[i] + own[i] * vm.gamma[i];
    if (!(fc.b_bar[i + 1] > fc.b_bar[i]))
      throw ConsistencyError("fluid_constants: b_bar is not strictly increasing at queue " + std::to_string(i + 1));
  }

  fc.a_bar = Matrix(n + 1, n);
  fc.a_bar_dual = Matrix(n + 1, n);
  for (std::size_t j = 0; j < n; ++j) fc.a_bar(0, j) = fc.a_bar_dual(0, j) = sd.v[j] / fc.alpha;
  for (std::size_t i = 0; i < n; ++i) {
    const double db = fc.b_bar[i + 1] - fc.b_bar[i];
    for (std::size_t j = 0; j < n; ++j)
      fc.a_bar(i + 1, j) = fc.a_bar(i, j) + db * (fc.lambda[j] - (i == j ? fc.mu[i] : 0.0));
    const double ad = fc.a_bar_dual(i, i);
    for (std::size_t j = 0; j < n; ++j)
      fc.a_bar_dual(i + 1, j) = fc.a_bar_dual(i, j) - (i == j ? ad : 0.0) + ad * vm.m_check(i, j);
  }

  fc.b.resize(n + 1);
  fc.a = Matrix(n + 1, n);
  for (std::size_t i = 0; i <= n; ++i) {
    fc.b[i] = fc.alpha * fc.b_bar[i];
    for (std::size_t j = 0; j < n; ++j) fc.a(i, j) = fc.alpha * fc.a_bar(i, j);
  }
  return fc;
}

/// Relative residuals of the identities the constants must satisfy.
struct FluidResiduals {
  double closure_b = 0.0;  // |b_bar_{I+1} - rho b_bar_1| / rho
  double closure_a = 0.0;  // max |abar_{I+1} - rho abar_1| / (rho max|abar_1|)
  double dual = 0.0;       // max |a_bar - a_bar_dual| / max|a_bar|
};

inline FluidResiduals fluid_residuals(const FluidConstants& fc) {
  const std::size_t n = fc.size();
  FluidResiduals r;
  r.closure_b = std::abs(fc.b_bar[n] - fc.rho * fc.b_bar[0]) / fc.rho;
  double scale1 = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) scale1 = std::max(scale1, std::abs(fc.a_bar(0, j)));
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(fc.a_bar(i, j)));
  for (std::size_t j = 0; j < n; ++j) {
    r.closure_a = std::max(r.closure_a, std::abs(fc.a_bar(n, j) - fc.rho * fc.a_bar(0, j)) / (fc.rho * scale1));
    for (std::size_t i = 0; i <= n; ++i)
      r.dual = std::max(r.dual, std::abs(fc.a_bar(i, j) - fc.a_bar_dual(i, j)) / scale);
  }
  return r;
}

inline constexpr long kFluidScaleLimit = 1024;

namespace detail {

using ld = long double;

inline ld rho_pow(const FluidConstants& fc, long k) { return std::pow(static_cast<ld>(fc.rho), static_cast<ld>(k)); }

/// Largest k with rho^k * base <= t, found in extended precision and then
/// confirmed by direct comparison so boundary points land on the left end.
inline long scale_index(const FluidConstants& fc, ld base, ld t) {
  const ld guess = std::log(t / base) / std::log(static_cast<ld>(fc.rho));
  long k = static_cast<long>(std::floor(guess));
  while (rho_pow(fc, k) * base > t) --k;
  while (rho_pow(fc, k + 1) * base <= t) ++k;
  return k;
}

}  // namespace detail

/// True when every coordinate's scale index lies within |k| <= 1024.
inline bool fluid_in_accurate_range(const FluidConstants& fc, double t) {
  if (t <= 0.0) return true;
  for (std::size_t i = 0; i < fc.size(); ++i)
    if (std::abs(detail::scale_index(fc, fc.b_bar[i], t)) > kFluidScaleLimit) return false;
  return true;
}

/// qbar(t) in the per-queue form: coordinate i decreases at rate
/// mu_i - lambda_i during its own fluid visits and grows at rate lambda_i
/// otherwise.
inline Vector eval_fluid(const FluidConstants& fc, double t) {
  if (!(t >= 0.0)) throw DomainError("eval_fluid: t must be nonnegative");
  const std::size_t n = fc.size();
  Vector q(n, 0.0);
  if (t == 0.0) return q;
  const detail::ld tt = t;
  for (std::size_t i = 0; i < n; ++i) {
    const long k = std::clamp(detail::scale_index(fc, fc.b_bar[i], tt), -kFluidScaleLimit - 1, kFluidScaleLimit + 1);
    const detail::ld rk = detail::rho_pow(fc, k);
    const detail::ld lam = fc.lambda[i];
    const detail::ld own = fc.a_own(i);
    if (tt < rk * fc.b_bar[i + 1])
      q[i] = static_cast<double>(rk * own + (lam - fc.mu[i]) * (tt - rk * fc.b_bar[i]));
    else
      q[i] = static_cast<double>(rk * fc.rho * own - lam * (rk * fc.rho * fc.b_bar[i] - tt));
    q[i] = std::max(q[i], 0.0);  // round-off at exhaustive zeros
  }
  return q;
}

/// qbar(t) in the session form: on [rho^k bbar_i, rho^k bbar_{i+1}) the whole
/// vector moves linearly from rho^k abar_i with velocity lambda - mu_i e_i.
inline Vector eval_fluid_alt(const FluidConstants& fc, double t) {
  if (!(t >= 0.0)) throw DomainError("eval_fluid_alt: t must be nonnegative");
  const std::size_t n = fc.size();
  Vector q(n, 0.0);
  if (t == 0.0) return q;
  const detail::ld tt = t;
  const long k = std::clamp(detail::scale_index(fc, fc.b_bar[0], tt), -kFluidScaleLimit - 1, kFluidScaleLimit + 1);
  const detail::ld rk = detail::rho_pow(fc, k);
  std::size_t seg = 0;
  while (seg + 1 < n && rk * fc.b_bar[seg + 1] <= tt) ++seg;
  const detail::ld dt = tt - rk * fc.b_bar[seg];
  for (std::size_t j = 0; j < n; ++j) {
    const detail::ld vel = static_cast<detail::ld>(fc.lambda[j]) - (j == seg ? fc.mu[seg] : 0.0);
    q[j] = std::max(static_cast<double>(rk * fc.a_bar(seg, j) + dt * vel), 0.0);
  }
  return q;
}

/// xi * qbar(t / xi), the fluid limit on the event {scaling factor = xi}.
inline Vector scaled_limit(const FluidConstants& fc, double xi, double t) {
  if (!(xi >= 1.0 && xi < fc.rho)) throw DomainError("scaled_limit: xi must lie in [1, rho)");
  Vector q = eval_fluid(fc, t / xi);
  for (double& x : q) x *= xi;
  return q;
}

}  // namespace polling
