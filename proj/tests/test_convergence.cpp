#include <gtest/gtest.h>

#include "test_support.hpp"

#include <cmath>

using namespace polling;
using namespace polling::testing;

TEST(Grid, Spacing) {
  const auto lin = make_grid(1, 3, 3, false);
  EXPECT_EQ(lin, (std::vector<double>{1, 2, 3}));
  const auto lg = make_grid(1, 100, 3, true);
  EXPECT_NEAR(lg[1], 10.0, 1e-12);
  EXPECT_EQ(lg.back(), 100.0);
  EXPECT_THROW(make_grid(0, 1, 3, true), std::invalid_argument);
}

TEST(BusyMoments, Targets) {
  EXPECT_NEAR(visit_mean_target(2, 3, 0), 1.0 / 3, 1e-15);
  EXPECT_NEAR(visit_mean_target(2, 3, 1), 5.0 / 9, 1e-15);
  EXPECT_NEAR(visit_mean_target(2, 3, 2), 19.0 / 27, 1e-15);
  EXPECT_NEAR(visit_mean_target(2, 3, 5), 665.0 / 729, 1e-15);
  EXPECT_NEAR(visit_mean_target(2, 3, kUnlimitedGates), 1.0, 1e-15);
}

TEST(BusyMoments, MeansMonotoneAndBounded) {
  const RngStream s(51, "busy");
  double prev_mean = 0.0, prev_f = -1.0;
  for (GateCount k : {GateCount{0}, GateCount{1}, GateCount{2}, GateCount{5}, kUnlimitedGates}) {
    const auto r = busy_period_moments(2.0, ExponentialService{3.0}, k, 20000, s);
    EXPECT_NEAR(r.mean, r.mean_target, 4 * r.mean_se) << "k=" << k;
    EXPECT_GE(r.mean, prev_mean);
    EXPECT_GE(r.f_moment, prev_f);
    EXPECT_LE(r.f_moment, r.bound_value + 4 * (r.f_moment_se + r.bound_c_se / (1 - 2.0 / 3)));
    prev_mean = r.mean;
    prev_f = r.f_moment;
  }
}

TEST(BusyMoments, ThreadInvariantAndValidated) {
  const RngStream s(52, "busy");
  const auto a = busy_period_moments(1.0, DeterministicService{0.5}, 3, 2000, s, 1);
  const auto b = busy_period_moments(1.0, DeterministicService{0.5}, 3, 2000, s, 4);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.f_moment, b.f_moment);
  EXPECT_EQ(a.bound_c, b.bound_c);
  EXPECT_THROW(busy_period_moments(3.0, ExponentialService{2.0}, 1, 100, s), DomainError);
}

TEST(Eta, FirstSessionPastLevel) {
  const auto an = analyze(gated());
  RngStream s(53, "eta");
  const auto tr = run_trace(an.cfg, s, 25);
  for (int n = 1; n <= 8; ++n) {
    const auto eta = eta_index(tr, an.spectral.rho, n);
    if (!eta) continue;
    const double level = std::pow(an.spectral.rho, n);
    EXPECT_GE(tr.sessions[*eta].t_session, level);
    if (*eta > 0) { EXPECT_LT(tr.sessions[*eta - 1].t_session, level); }
  }
  EXPECT_FALSE(eta_index(tr, an.spectral.rho, 1000).has_value());
}

TEST(XiEmpirical, ValuesInRange) {
  const auto an = analyze(gated());
  const auto xe = extract_xi_empirical(an, {200, 6, 100000, 1}, RngStream(54, "xi-sim"));
  EXPECT_EQ(xe.total, 200u);
  EXPECT_EQ(xe.xi.size() + xe.dropped, 200u);
  EXPECT_GT(xe.xi.size(), 150u);
  for (double x : xe.xi) {
    EXPECT_GE(x, 1.0);
    EXPECT_LT(x, an.spectral.rho);
  }
}

// The martingale settles: successive estimates move less as m grows, and the
// mean stays near the value implied by the process started from empty.
TEST(ZetaBySessions, StabilizesWithSessions) {
  const auto an = analyze(gated());
  const auto z = zeta_at_sessions(an, {12, 8, 10}, 400, RngStream(55, "zeta-m"));
  ASSERT_EQ(z.m, (std::vector<std::size_t>{8, 10, 12}));
  std::vector<double> d1, d2;
  for (std::size_t r = 0; r < z.zeta[0].size(); ++r) {
    d1.push_back(std::abs(z.zeta[1][r] - z.zeta[0][r]) / z.zeta[1][r]);
    d2.push_back(std::abs(z.zeta[2][r] - z.zeta[1][r]) / z.zeta[2][r]);
  }
  EXPECT_LT(median(d2), median(d1));
  const auto a = mean_se(z.zeta[1]), b = mean_se(z.zeta[2]);
  EXPECT_NEAR(a.mean, b.mean, 4 * std::hypot(a.se, b.se));
}

TEST(Trajectory, DistanceShrinksWithScale) {
  const auto an = analyze(gated());
  const auto grid = make_grid(1, 10, 50, true);
  const auto t = trajectory_distances(an, {6, 8, 10}, grid, 100, RngStream(56, "trajectory"));
  ASSERT_EQ(t.size(), 3u);
  for (const auto& x : t) EXPECT_GT(x.completed, 80u);
  EXPECT_GT(t[0].median_sup_distance, t[1].median_sup_distance);
  EXPECT_GT(t[1].median_sup_distance, t[2].median_sup_distance);
}

// Forcing xi = 1 on paths whose estimate sits near rho^0.5 must fit worse.
// At n = 10 the estimate is still too noisy for this, so the check runs at n = 18.
TEST(Trajectory, WrongScalingFactorFitsWorse) {
  const auto an = analyze(gated());
  const auto grid = make_grid(1, 10, 50, true);
  const RngStream root(57, "trajectory");
  int selected = 0, worse = 0;
  for (int r = 0; r < 300; ++r) {
    RngStream s = root.child(r);
    const auto d = scaled_trajectory_distance(an, 18, grid, s);
    if (!d.completed) continue;
    const double f = std::log(d.xi_hat) / std::log(an.spectral.rho);
    if (f < 0.4 || f > 0.6) continue;
    ++selected;
    worse += d.sup_distance_xi_one > d.sup_distance;
  }
  ASSERT_GT(selected, 20);
  EXPECT_GE(worse, 0.95 * selected);
}

TEST(Trajectory, OverrideIsUsed) {
  const auto an = analyze(gated());
  const auto grid = make_grid(1, 10, 20, true);
  RngStream a(58, "trajectory"), b(58, "trajectory");
  const auto d1 = scaled_trajectory_distance(an, 6, grid, a, 1.0);
  const auto d2 = scaled_trajectory_distance(an, 6, grid, b);
  ASSERT_TRUE(d1.completed);
  EXPECT_EQ(d1.xi_hat, 1.0);
  EXPECT_EQ(d1.sup_distance, d1.sup_distance_xi_one);
  EXPECT_EQ(d1.sup_distance_xi_one, d2.sup_distance_xi_one);
}

TEST(Ratios, ExhaustiveLeavesQueuesEmpty) {
  const auto an = analyze(exhaustive());
  RatioOptions opt;
  opt.scales = {4, 6};
  opt.reps = 50;
  const auto rep = switching_ratio_estimates(an, opt, RngStream(59, "ratios"));
  EXPECT_EQ(rep.estimates.size(), 2u * 3u * 2u);
  for (const auto& e : rep.estimates) {
    EXPECT_GT(e.count, 40u);
    if (e.kind == "post_visit") {
      EXPECT_EQ(e.median, 0.0);
      EXPECT_NEAR(e.target, 0.0, 1e-12);
    }
    if (e.kind == "switch") { EXPECT_NEAR(e.target, 2.0, 1e-12); }
  }
}

TEST(Ratios, GatedTargetsAndThreadInvariance) {
  const auto an = analyze(gated());
  RatioOptions opt;
  opt.scales = {6};
  opt.reps = 40;
  const auto a = switching_ratio_estimates(an, opt, RngStream(60, "ratios"));
  opt.threads = 3;
  const auto b = switching_ratio_estimates(an, opt, RngStream(60, "ratios"));
  ASSERT_EQ(a.estimates.size(), b.estimates.size());
  for (std::size_t k = 0; k < a.estimates.size(); ++k) EXPECT_EQ(a.estimates[k].median, b.estimates[k].median);
  EXPECT_NEAR(a.estimates[0].target, 1.2152504370215302, 1e-12);
  EXPECT_NEAR(a.estimates[2].target, 0.64575131106459059, 1e-12);
}
