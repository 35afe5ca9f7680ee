#include <gtest/gtest.h>

#include "test_support.hpp"

#include <cmath>

using namespace polling;
using namespace polling::testing;

namespace {

void check_trace_invariants(const ValidatedConfig& cfg, const EventTrace& tr) {
  const std::size_t n = cfg.size();
  double idle = 0.0;
  for (const auto& s : tr.sessions) {
    ASSERT_EQ(s.visit_starts.size(), n + 1);
    ASSERT_EQ(s.q_at_visits.size(), n + 1);
    EXPECT_LE(s.t_session, s.visit_starts[0]);
    const bool was_empty =
        std::all_of(s.q_at_session.begin(), s.q_at_session.end(), [](auto x) { return x == 0; });
    if (s.t_session < s.visit_starts[0]) { EXPECT_TRUE(was_empty); }
    idle += s.visit_starts[0] - s.t_session;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LE(s.visit_starts[i], s.visit_starts[i + 1]);
      EXPECT_LE(s.gates_used[i], s.gate_budget[i]);
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_GE(s.q_at_visits[i][j], 0);
        // no departures from queues other than the one being visited
        if (j != i) { EXPECT_GE(s.q_at_visits[i + 1][j], s.q_at_visits[i][j]); }
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    EXPECT_EQ(tr.arrivals_count[j] - tr.departures_count[j], tr.sessions.back().q_at_visits.back()[j]);
  EXPECT_LE(tr.busy_time, tr.end_time * (1 + 1e-12));
  // the server only idles while waiting for the first arrival into an empty system
  EXPECT_NEAR(tr.busy_time + idle, tr.end_time, 1e-9 * tr.end_time);
}

}  // namespace

TEST(Simulator, InvariantsAcrossBattery) {
  std::uint64_t seed = 0;
  for (const auto& c : battery()) {
    const ValidatedConfig cfg(c);
    RngStream s(++seed, "invariants");
    check_trace_invariants(cfg, run_trace(cfg, s, 12));
  }
}

TEST(Simulator, FirstSessionWaitsForFirstArrival) {
  const auto cfg = gated();
  RngStream root(3, "first-wait");
  const int n = 20000;
  double total = 0.0, sq = 0.0;
  for (int r = 0; r < n; ++r) {
    RngStream s = root.child(r);
    const auto tr = run_trace(cfg, s, 1);
    const auto& s0 = tr.sessions[0];
    EXPECT_EQ(s0.t_session, 0.0);
    const double w = s0.visit_starts[0] - s0.t_session;
    total += w;
    sq += w * w;
    // a first arrival into queue 2 makes the visit to queue 1 zero-length
    if (s0.q_at_visits[0][0] == 0) { EXPECT_EQ(s0.visit_starts[1], s0.visit_starts[0]); }
  }
  const double mean = total / n;
  EXPECT_NEAR(mean, 0.25, 4.0 * std::sqrt((sq / n - mean * mean) / n));
}

TEST(Simulator, ZeroGatesNeverServes) {
  ModelConfig c = symmetric(1);
  c.queues[0].gating = DeterministicGating{0};
  const ValidatedConfig cfg(c);
  RngStream s(4, "zero-gates");
  const auto tr = run_trace(cfg, s, 30);
  EXPECT_EQ(tr.departures_count[0], 0);
  for (const auto& rec : tr.sessions) EXPECT_EQ(rec.visit_starts[0], rec.visit_starts[1]);
}

TEST(Simulator, DeterministicReplay) {
  const ValidatedConfig cfg(battery()[3]);
  RngStream a(5, "replay"), b(5, "replay");
  const auto ta = run_trace(cfg, a, 15);
  const auto tb = run_trace(cfg, b, 15);
  ASSERT_EQ(ta.sessions.size(), tb.sessions.size());
  for (std::size_t k = 0; k < ta.sessions.size(); ++k) {
    EXPECT_EQ(ta.sessions[k].visit_starts, tb.sessions[k].visit_starts);
    EXPECT_EQ(ta.sessions[k].q_at_visits, tb.sessions[k].q_at_visits);
  }
  EXPECT_EQ(ta.end_time, tb.end_time);
}

TEST(Simulator, TaggedCustomersAreServedFifoWithinGates) {
  for (const auto& c : battery()) {
    const ValidatedConfig cfg(c);
    RngStream s(6, "fifo");
    TraceRequest req;
    req.n_sessions = 10;
    req.sim.tag_customers = true;
    EXPECT_NO_THROW(run_trace(cfg, s, req));
  }
}

TEST(Simulator, EventBudgetExhaustion) {
  const auto cfg = exhaustive();
  RngStream s(7, "budget");
  TraceRequest req;
  req.n_sessions = 50;
  req.sim.max_events = 1000;
  EXPECT_THROW(run_trace(cfg, s, req), ResourceError);
}

// Workload accumulates at rate sum(lambda/mu) and drains at rate 1 once the
// system never empties, so (arrived work - elapsed time)/t -> 1/3.
TEST(Simulator, OverloadDrift) {
  const auto cfg = exhaustive();
  RngStream s(8, "drift");
  const auto tr = run_trace(cfg, s, 9);
  double work = 0.0;
  for (std::size_t j = 0; j < cfg.size(); ++j) work += static_cast<double>(tr.arrivals_count[j]) / cfg.mu()[j];
  EXPECT_GT(tr.end_time, 1e4);
  EXPECT_NEAR((work - tr.end_time) / tr.end_time, 1.0 / 3.0, 0.02);
}

TEST(Simulator, GridRecordsStepFunction) {
  const auto cfg = gated();
  RngStream s(9, "grid");
  TraceRequest req;
  req.n_sessions = 12;
  req.grid = make_grid(0.5, 20.0, 40, false);
  const auto tr = run_trace(cfg, s, req);
  ASSERT_EQ(tr.grid.size(), tr.grid_values.size());
  EXPECT_LE(tr.grid.size(), req.grid.size());
  // the session records are themselves samples of the same step function
  for (std::size_t g = 0; g < tr.grid.size(); ++g) {
    for (const auto& rec : tr.sessions)
      for (std::size_t i = 0; i + 1 < rec.visit_starts.size(); ++i)
        if (rec.visit_starts[i] == tr.grid[g]) { EXPECT_EQ(rec.q_at_visits[i], tr.grid_values[g]); }
    for (auto x : tr.grid_values[g]) EXPECT_GE(x, 0);
  }
}

TEST(Simulator, EarlyStopAtSessionStart) {
  const auto cfg = gated();
  RngStream s(10, "early-stop");
  TraceRequest req;
  req.n_sessions = 100000;
  req.stop_after_session_start = 30.0;
  const auto tr = run_trace(cfg, s, req);
  EXPECT_GE(tr.sessions.back().t_session, 30.0);
  for (std::size_t k = 0; k + 1 < tr.sessions.size(); ++k) EXPECT_LT(tr.sessions[k].t_session, 30.0);
}

TEST(VisitOffspring, ZeroGates) {
  ModelConfig c = symmetric(0);
  c.queues[0].service = ExponentialService{2.5};
  c.queues[1].service = ExponentialService{2.5};
  const ValidatedConfig cfg(c);
  RngStream s(11, "visit");
  for (std::size_t i = 0; i < 2; ++i) {
    const auto [d, l] = sample_visit_offspring(cfg, i, s);
    EXPECT_EQ(d, 0.0);
    EXPECT_EQ(l, unit_counts(2, i));
    EXPECT_EQ(sample_session_offspring(cfg, i, s), unit_counts(2, i));
  }
}

TEST(VisitOffspring, MeanDurations) {
  for (GateCount k : {GateCount{1}, kUnlimitedGates}) {
    const ValidatedConfig cfg(symmetric(k));
    RngStream s(12, "visit-mean");
    OffspringSampler sampler(cfg, s);
    const int n = 100000;
    double total = 0.0, sq = 0.0;
    for (int r = 0; r < n; ++r) {
      const double d = sampler.visit(0).first;
      total += d;
      sq += d * d;
    }
    const double mean = total / n;
    const double target = is_unlimited(k) ? 1.0 : 1.0 / 3.0;
    EXPECT_NEAR(mean, target, 4.0 * std::sqrt((sq / n - mean * mean) / n)) << k;
  }
}

TEST(SessionOffspring, ExhaustiveLastQueueEmpty) {
  const auto cfg = exhaustive();
  RngStream s(13, "session");
  OffspringSampler sampler(cfg, s);
  for (int r = 0; r < 10000; ++r) {
    EXPECT_EQ(sampler.session(0)[1], 0);
    EXPECT_EQ(sampler.session(1)[1], 0);
  }
}

TEST(IsolatedVisit, MatchesPollingVisit) {
  RngStream s(14, "isolated");
  const auto v = simulate_isolated_visit(2.0, ExponentialService{3.0}, 1, s);
  EXPECT_EQ(v.gates, 1u);
  EXPECT_EQ(v.served, 1);
  const auto w = simulate_isolated_visit(2.0, ExponentialService{3.0}, kUnlimitedGates, s);
  EXPECT_EQ(w.left_behind, 0);
}
