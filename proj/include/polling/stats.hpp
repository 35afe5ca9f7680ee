#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace polling {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {m, std::sqrt(var / static_cast<double>(xs.size()))};
}

/// Linear-interpolation quantile (type 7).
inline double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = p * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline double median(const std::vector<double>& xs) { return quantile(xs, 0.5); }

inline double iqr(const std::vector<double>& xs) { return quantile(xs, 0.75) - quantile(xs, 0.25); }

struct KsResult {
  double statistic = 0.0;
  double critical_001 = 0.0;

  bool rejects() const { return statistic > critical_001; }
};

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic 1% critical
/// value sqrt(-ln(0.005)/2) * sqrt((m+n)/(mn)).
inline KsResult ks_two_sample(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("ks_two_sample: samples must be nonempty");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double m = static_cast<double>(xs.size());
  const double n = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    const double t = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] == t) ++i;
    while (j < ys.size() && ys[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  const double c = std::sqrt(-std::log(0.005) / 2.0);
  return {d, c * std::sqrt((m + n) / (m * n))};
}

}  // namespace polling
