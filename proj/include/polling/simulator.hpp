#pragma once

// Discrete-event simulation of the cyclic polling system with multigated
// service and zero switchover times.
//
// Time is split into sessions [t^(n), t^(n+1)). A session starting with an
// empty system first idles until the next arrival; then queues 1..I are
// visited once each, empty visits taking zero time. A visit to queue i draws
// a gating index X, gates the queue (freezes the current count as a batch),
// serves the batch in arrival order and re-gates while fewer than X gates
// have been made; the visit ends when a gate finds the queue empty or the
// budget is spent.
//
// Ties: arrivals with timestamp equal to a service completion are absorbed
// before the next gating decision, so every recorded state is post-tie.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace polling {

using Counts = std::vector<std::int64_t>;

inline Counts unit_counts(std::size_t size, std::size_t i) {
  Counts e(size, 0);
  e[i] = 1;
  return e;
}

struct SessionRecord {
  std::uint64_t index = 0;
  double t_session = 0.0;
  std::vector<double> visit_starts;  // t_1 .. t_{I+1}; t_{I+1} = t^(n+1)
  Counts q_at_session;
  std::vector<Counts> q_at_visits;   // Q(t_1) .. Q(t_{I+1})
  std::vector<GateCount> gate_budget;
  std::vector<std::uint64_t> gates_used;

  double t_end() const { return visit_starts.back(); }
};

struct EventTrace {
  std::vector<SessionRecord> sessions;
  Counts arrivals_count;
  Counts departures_count;
  std::optional<std::uint64_t> last_empty_session;
  double end_time = 0.0;
  double busy_time = 0.0;
  std::vector<double> busy_by_queue;
  std::vector<double> grid;      // full-trajectory sample times (may be empty)
  std::vector<Counts> grid_values;
};

struct SimOptions {
  std::uint64_t max_events = 200'000'000;
  // Keep per-customer arrival stamps and check FIFO and gate membership on
  // every departure. Costs memory proportional to the population.
  bool tag_customers = false;
};

struct VisitResult {
  double start = 0.0;
  double end = 0.0;
  GateCount budget = 0;
  std::uint64_t gates = 0;
};

class PollingSystem {
 public:
  PollingSystem(const ValidatedConfig& cfg, RngStream& rng, SimOptions opts = {})
      : cfg_(&cfg), rng_(&rng), opts_(opts) {
    restart(Counts(cfg.size(), 0));
  }

  /// Resets the clock to 0 with the given population and fresh arrival clocks.
  void restart(Counts initial) {
    const std::size_t n = cfg_->size();
    if (initial.size() != n) throw std::invalid_argument("restart: wrong dimension");
    q_ = std::move(initial);
    arrivals_.assign(n, 0);
    departures_.assign(n, 0);
    busy_by_queue_.assign(n, 0.0);
    busy_ = 0.0;
    now_ = 0.0;
    sessions_done_ = 0;
    events_ = 0;
    last_empty_.reset();
    next_arrival_.resize(n);
    for (std::size_t j = 0; j < n; ++j) next_arrival_[j] = rng_->exponential(cfg_->lambda()[j]);
    if (opts_.tag_customers) {
      stamps_.assign(n, {});
      last_departed_stamp_.assign(n, -std::numeric_limits<double>::infinity());
      for (std::size_t j = 0; j < n; ++j) stamps_[j].assign(static_cast<std::size_t>(q_[j]), 0.0);
    }
    if (grid_) {
      grid_->values.clear();
      grid_->next = 0;
      prev_q_ = q_;
    }
  }

  /// Samples Q at the given nondecreasing times as the run passes them.
  void attach_grid(std::span<const double> grid) {
    grid_.emplace(GridState{{grid.begin(), grid.end()}, {}, 0});
    if (!std::is_sorted(grid_->times.begin(), grid_->times.end()))
      throw std::invalid_argument("attach_grid: grid must be sorted");
    prev_q_ = q_;
  }

  /// Fills grid points up to the current time and returns the recorded prefix.
  std::pair<std::vector<double>, std::vector<Counts>> take_grid() {
    if (!grid_) return {};
    auto& g = *grid_;
    while (g.next < g.times.size() && g.times[g.next] <= now_) {
      g.values.push_back(q_);
      ++g.next;
    }
    std::vector<double> times(g.times.begin(), g.times.begin() + static_cast<std::ptrdiff_t>(g.next));
    return {std::move(times), g.values};
  }

  double now() const { return now_; }
  const Counts& queue_lengths() const { return q_; }
  const Counts& arrivals() const { return arrivals_; }
  const Counts& departures() const { return departures_; }
  double busy_time() const { return busy_; }
  const std::vector<double>& busy_by_queue() const { return busy_by_queue_; }
  std::uint64_t sessions_done() const { return sessions_done_; }
  std::optional<std::uint64_t> last_empty_session() const { return last_empty_; }
  bool empty() const {
    return std::all_of(q_.begin(), q_.end(), [](std::int64_t x) { return x == 0; });
  }

  VisitResult visit(std::size_t i) { return visit(i, sample_gating(cfg_->queue(i).gating, *rng_)); }

  VisitResult visit(std::size_t i, GateCount budget) {
    VisitResult r{now_, now_, budget, 0};
    while (r.gates < budget) {
      const std::int64_t batch = q_[i];
      const double gate_time = now_;
      ++r.gates;
      if (batch == 0) break;
      for (std::int64_t k = 0; k < batch; ++k) serve_one(i, gate_time);
    }
    r.end = now_;
    return r;
  }

  SessionRecord session() {
    const std::size_t n = cfg_->size();
    SessionRecord rec;
    rec.index = sessions_done_;
    rec.t_session = now_;
    rec.q_at_session = q_;
    if (empty()) {
      last_empty_ = sessions_done_;
      idle_until_first_arrival();
    }
    rec.visit_starts.reserve(n + 1);
    rec.q_at_visits.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      rec.visit_starts.push_back(now_);
      rec.q_at_visits.push_back(q_);
      const auto v = visit(i);
      rec.gate_budget.push_back(v.budget);
      rec.gates_used.push_back(v.gates);
    }
    rec.visit_starts.push_back(now_);
    rec.q_at_visits.push_back(q_);
    ++sessions_done_;
    return rec;
  }

 private:
  struct GridState {
    std::vector<double> times;
    std::vector<Counts> values;
    std::size_t next = 0;
  };

  void count_event() {
    if (++events_ > opts_.max_events)
      throw ResourceError("simulation exceeded its event budget of " + std::to_string(opts_.max_events));
  }

  void arrive(std::size_t j) {
    count_event();
    now_ = next_arrival_[j];
    if (grid_) flush_grid();
    ++q_[j];
    ++arrivals_[j];
    if (opts_.tag_customers) stamps_[j].push_back(now_);
    next_arrival_[j] = now_ + rng_->exponential(cfg_->lambda()[j]);
    if (grid_) prev_q_ = q_;
  }

  // Grid points strictly before the current event time saw the old state.
  void flush_grid() {
    auto& g = *grid_;
    while (g.next < g.times.size() && g.times[g.next] < now_) {
      g.values.push_back(prev_q_);
      ++g.next;
    }
  }

  std::size_t earliest_arrival() const {
    return static_cast<std::size_t>(
        std::min_element(next_arrival_.begin(), next_arrival_.end()) - next_arrival_.begin());
  }

  void absorb_arrivals_through(double t) {
    for (;;) {
      const std::size_t j = earliest_arrival();
      if (next_arrival_[j] > t) break;
      arrive(j);
    }
  }

  void idle_until_first_arrival() { arrive(earliest_arrival()); }

  void serve_one(std::size_t i, double gate_time) {
    count_event();
    const double b = sample_service(cfg_->queue(i).service, *rng_);
    const double done = now_ + b;
    absorb_arrivals_through(done);
    now_ = done;
    if (grid_) flush_grid();
    --q_[i];
    ++departures_[i];
    busy_ += b;
    busy_by_queue_[i] += b;
    if (opts_.tag_customers) check_departure(i, gate_time);
    if (grid_) prev_q_ = q_;
  }

  void check_departure(std::size_t i, double gate_time) {
    auto& dq = stamps_[i];
    if (dq.empty()) throw std::logic_error("tagged departure from an empty queue");
    const double stamp = dq.front();
    dq.pop_front();
    if (stamp > gate_time) throw std::logic_error("served a customer that arrived after its gate");
    if (stamp < last_departed_stamp_[i]) throw std::logic_error("departure out of arrival order");
    last_departed_stamp_[i] = stamp;
  }

  const ValidatedConfig* cfg_;
  RngStream* rng_;
  SimOptions opts_;
  Counts q_, arrivals_, departures_;
  std::vector<double> next_arrival_;
  std::vector<double> busy_by_queue_;
  double busy_ = 0.0;
  double now_ = 0.0;
  std::uint64_t sessions_done_ = 0;
  std::uint64_t events_ = 0;
  std::optional<std::uint64_t> last_empty_;
  std::optional<GridState> grid_;
  Counts prev_q_;
  std::vector<std::deque<double>> stamps_;
  std::vector<double> last_departed_stamp_;
};

// ---------------------------------------------------------------------------
// Whole-trace runs

struct TraceRequest {
  std::size_t n_sessions = 1;  // hard cap on sessions
  // Optional early stop: once a session starting at or after this time has
  // completed and the clock has reached min_end_time.
  double stop_after_session_start = std::numeric_limits<double>::infinity();
  double min_end_time = 0.0;
  std::vector<double> grid;
  SimOptions sim;
};

inline EventTrace run_trace(const ValidatedConfig& cfg, RngStream& s, const TraceRequest& req) {
  if (req.n_sessions == 0) throw std::invalid_argument("run_trace: n_sessions must be positive");
  PollingSystem sys(cfg, s, req.sim);
  if (!req.grid.empty()) sys.attach_grid(req.grid);
  EventTrace tr;
  bool reached_start = false;
  while (tr.sessions.size() < req.n_sessions) {
    tr.sessions.push_back(sys.session());
    reached_start = reached_start || tr.sessions.back().t_session >= req.stop_after_session_start;
    if (reached_start && sys.now() >= req.min_end_time) break;
  }
  tr.arrivals_count = sys.arrivals();
  tr.departures_count = sys.departures();
  tr.last_empty_session = sys.last_empty_session();
  tr.end_time = sys.now();
  tr.busy_time = sys.busy_time();
  tr.busy_by_queue = sys.busy_by_queue();
  if (!req.grid.empty()) std::tie(tr.grid, tr.grid_values) = sys.take_grid();
  return tr;
}

/// Simulates from the empty state until n_sessions sessions complete.
inline EventTrace run_trace(const ValidatedConfig& cfg, RngStream& s, std::size_t n_sessions) {
  TraceRequest req;
  req.n_sessions = n_sessions;
  return run_trace(cfg, s, req);
}

// ---------------------------------------------------------------------------
// Offspring of a single customer

/// Reusable sampler for the offspring laws; avoids reallocating the engine
/// for every draw inside branching-process loops.
class OffspringSampler {
 public:
  OffspringSampler(const ValidatedConfig& cfg, RngStream& s) : sys_(cfg, s), size_(cfg.size()) {}

  /// One draw of L_i: Q at the end of a session started with e_i.
  Counts session(std::size_t i) {
    sys_.restart(unit_counts(size_, i));
    sys_.session();
    return sys_.queue_lengths();
  }

  /// One draw of (V_i, visit offspring) from a visit to queue i started with e_i.
  std::pair<double, Counts> visit(std::size_t i) {
    sys_.restart(unit_counts(size_, i));
    const auto v = sys_.visit(i);
    return {v.end - v.start, sys_.queue_lengths()};
  }

 private:
  PollingSystem sys_;
  std::size_t size_;
};

inline Counts sample_session_offspring(const ValidatedConfig& cfg, std::size_t i, RngStream& s) {
  return OffspringSampler(cfg, s).session(i);
}

inline std::pair<double, Counts> sample_visit_offspring(const ValidatedConfig& cfg, std::size_t i,
                                                        RngStream& s) {
  return OffspringSampler(cfg, s).visit(i);
}

// ---------------------------------------------------------------------------
// Single queue in isolation (M/G/1 started by one customer)

struct IsolatedVisit {
  double duration = 0.0;
  std::int64_t served = 0;
  std::int64_t left_behind = 0;
  std::uint64_t gates = 0;
};

/// A visit with the given gate budget to an M/G/1 queue holding one customer
/// at time 0. An unlimited budget gives the full busy period.
inline IsolatedVisit simulate_isolated_visit(double arrival_rate, const ServiceDistribution& service,
                                             GateCount budget, RngStream& s,
                                             std::uint64_t max_events = 200'000'000) {
  IsolatedVisit r;
  std::int64_t q = 1;
  double now = 0.0;
  double next_arrival = s.exponential(arrival_rate);
  std::uint64_t events = 0;
  while (r.gates < budget) {
    const std::int64_t batch = q;
    ++r.gates;
    if (batch == 0) break;
    for (std::int64_t k = 0; k < batch; ++k) {
      const double done = now + sample_service(service, s);
      while (next_arrival <= done) {
        ++q;
        next_arrival += s.exponential(arrival_rate);
        ++events;
      }
      now = done;
      --q;
      ++r.served;
      if (++events > max_events) throw ResourceError("isolated visit exceeded its event budget");
    }
  }
  r.duration = now;
  r.left_behind = q;
  return r;
}

}  // namespace polling
