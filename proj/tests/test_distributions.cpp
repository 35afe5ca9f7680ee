#include <gtest/gtest.h>

#include <polling/distributions.hpp>

#include <cmath>

using namespace polling;

TEST(ServiceMean, ClosedForms) {
  EXPECT_DOUBLE_EQ(service_mean(ExponentialService{3.0}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(service_mean(DeterministicService{0.5}), 0.5);
  EXPECT_DOUBLE_EQ(service_mean(ParetoService{3.0, 1.0}), 1.5);
  EXPECT_DOUBLE_EQ(service_mean(LogNormalService{0.0, 1.0}), std::exp(0.5));
}

// E B = integral of the survival function, by the midpoint rule after the
// substitution x = m / y on (0, 1].
TEST(ServiceMean, ParetoAgreesWithNumericIntegration) {
  const double shape = 3.0, m = 1.0;
  const int n = 200000;
  double integral = 0.0;
  for (int k = 0; k < n; ++k) {
    const double y = (k + 0.5) / n;
    integral += std::pow(y, shape) * m / (y * y) / n;
  }
  EXPECT_NEAR(m + integral, 1.5, 1e-8);
}

TEST(ServiceCheck, RejectsBadParameters) {
  EXPECT_THROW(check_service(ExponentialService{0.0}), ConfigError);
  EXPECT_THROW(check_service(DeterministicService{-1.0}), ConfigError);
  EXPECT_THROW(check_service(ParetoService{1.0, 1.0}), ConfigError);
  EXPECT_THROW(check_service(LogNormalService{0.0, -1.0}), ConfigError);
  EXPECT_NO_THROW(check_service(LogNormalService{0.0, 0.0}));
}

TEST(GatingPgf, Examples) {
  EXPECT_EQ(gating_pgf_at(DeterministicGating{kUnlimitedGates}, 2.0 / 3.0), 0.0);
  EXPECT_DOUBLE_EQ(gating_pgf_at(DeterministicGating{1}, 2.0 / 3.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(gating_pgf_at(DeterministicGating{0}, 0.3), 1.0);
  EXPECT_NEAR(gating_pgf_at(GeometricGating{0.5}, 0.5), 1.0 / 3.0, 1e-15);
}

TEST(GatingPgf, GeometricMatchesTruncatedSeries) {
  for (double p : {0.2, 0.5, 0.9})
    for (double r : {0.0, 0.3, 0.7, 0.95}) {
      double sum = 0.0;
      for (int k = 1; k < 2000; ++k) sum += p * std::pow(1.0 - p, k - 1) * std::pow(r, k);
      EXPECT_NEAR(gating_pgf_at(GeometricGating{p}, r), sum, 1e-13);
    }
}

TEST(GatingPgf, DomainError) {
  EXPECT_THROW(gating_pgf_at(DeterministicGating{1}, 1.0), DomainError);
  EXPECT_THROW(gating_pgf_at(DeterministicGating{1}, -0.1), DomainError);
}

TEST(GatingPgf, MonotoneInR) {
  const std::vector<GatingDistribution> gs = {DeterministicGating{0}, DeterministicGating{3},
                                              DeterministicGating{kUnlimitedGates}, GeometricGating{0.4},
                                              PmfGating{{{0, 0.1}, {2, 0.6}, {kUnlimitedGates, 0.3}}}};
  for (const auto& g : gs) {
    double prev = -1.0;
    for (int k = 0; k < 1000; ++k) {
      const double v = gating_pgf_at(g, k / 1000.0);
      EXPECT_GE(v, prev);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      prev = v;
    }
  }
}

TEST(GatingCheck, PmfMustSumToOne) {
  EXPECT_THROW(check_gating(PmfGating{{{1, 0.5}, {2, 0.4}}}), ConfigError);
  EXPECT_THROW(check_gating(PmfGating{{{1, 1.5}, {2, -0.5}}}), ConfigError);
  EXPECT_THROW(check_gating(GeometricGating{0.0}), ConfigError);
  EXPECT_NO_THROW(check_gating(PmfGating{{{1, 0.5}, {kUnlimitedGates, 0.5}}}));
}

TEST(GatingSampling, DeterministicAndUnlimited) {
  RngStream s(1, "gating");
  for (int k = 0; k < 100; ++k) {
    EXPECT_TRUE(is_unlimited(sample_gating(DeterministicGating{kUnlimitedGates}, s)));
    EXPECT_EQ(sample_gating(DeterministicGating{4}, s), 4u);
  }
  EXPECT_TRUE(is_exhaustive(DeterministicGating{kUnlimitedGates}));
  EXPECT_FALSE(is_exhaustive(PmfGating{{{1, 0.5}, {kUnlimitedGates, 0.5}}}));
  EXPECT_DOUBLE_EQ(unlimited_mass(PmfGating{{{1, 0.5}, {kUnlimitedGates, 0.5}}}), 0.5);
}

TEST(GatingSampling, GeometricAndPmfFrequencies) {
  RngStream s(2, "gating");
  const int n = 100000;
  double total = 0.0, sq = 0.0;
  int ones = 0, unlimited = 0;
  for (int k = 0; k < n; ++k) {
    const double x = static_cast<double>(sample_gating(GeometricGating{0.25}, s));
    ASSERT_GE(x, 1.0);
    total += x;
    sq += x * x;
    const auto y = sample_gating(PmfGating{{{1, 0.3}, {kUnlimitedGates, 0.7}}}, s);
    ones += y == 1;
    unlimited += is_unlimited(y);
  }
  const double mean = total / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, 4.0, 4.0 * se);
  EXPECT_EQ(ones + unlimited, n);
  EXPECT_NEAR(ones / double(n), 0.3, 4.0 * std::sqrt(0.21 / n));
}

TEST(ServiceSampling, DeterministicIsConstant) {
  RngStream s(3, "service");
  for (int k = 0; k < 10; ++k) EXPECT_EQ(sample_service(DeterministicService{0.5}, s), 0.5);
}

TEST(ServiceSampling, ExponentialMillionDraws) {
  RngStream s(4, "service");
  const int n = 1000000;
  double total = 0.0;
  for (int k = 0; k < n; ++k) total += sample_exponential(3.0, s);
  EXPECT_NEAR(total / n, 1.0 / 3.0, 3.0 * (1.0 / 3.0) / 1000.0);
}

TEST(ServiceSampling, EveryFamilyWithinFourStandardErrors) {
  const std::vector<ServiceDistribution> ds = {DeterministicService{0.7}, ExponentialService{2.0},
                                               LogNormalService{-0.3, 0.6}, ParetoService{3.5, 0.4}};
  RngStream s(5, "service");
  for (const auto& d : ds) {
    const int n = 100000;
    double total = 0.0, sq = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = sample_service(d, s);
      ASSERT_GT(x, 0.0);
      total += x;
      sq += x * x;
    }
    const double mean = total / n;
    const double se = std::sqrt(std::max(sq / n - mean * mean, 0.0) / n);
    EXPECT_NEAR(mean, service_mean(d), 4.0 * se + 1e-12) << d.index();
  }
}

TEST(ServiceSampling, Reproducible) {
  RngStream a(9, "repro", 2), b(9, "repro", 2);
  for (int k = 0; k < 1000; ++k) {
    ASSERT_EQ(sample_service(LogNormalService{0.0, 1.0}, a), sample_service(LogNormalService{0.0, 1.0}, b));
    ASSERT_EQ(sample_gating(GeometricGating{0.3}, a), sample_gating(GeometricGating{0.3}, b));
  }
}
