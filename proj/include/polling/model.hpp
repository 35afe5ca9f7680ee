#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"

namespace polling {

struct QueueSpec {
  double arrival_rate = 0.0;
  ServiceDistribution service = ExponentialService{1.0};
  GatingDistribution gating = DeterministicGating{1};
};

struct ModelConfig {
  std::vector<QueueSpec> queues;
  std::uint64_t base_seed = 0;
};

enum class RejectReason {
  too_few_queues,
  queue_overloaded,
  not_overloaded,
  b_log_b_infinite,
};

inline const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::too_few_queues: return "too few queues";
    case RejectReason::queue_overloaded: return "queue overloaded";
    case RejectReason::not_overloaded: return "not overloaded";
    case RejectReason::b_log_b_infinite: return "E B log B infinite";
  }
  return "unknown";
}

struct ValidationReport {
  std::vector<double> per_queue_load;
  double total_load = 0.0;
  std::vector<bool> b_log_b_finite;
  std::vector<RejectReason> reasons;

  bool accepted() const { return reasons.empty(); }
};

/// Structural well-formedness: throws ConfigError on malformed parameters.
inline void check_structure(const ModelConfig& cfg) {
  if (cfg.queues.empty()) throw ConfigError("config has no queues");
  for (std::size_t i = 0; i < cfg.queues.size(); ++i) {
    const auto& q = cfg.queues[i];
    if (!std::isfinite(q.arrival_rate) || q.arrival_rate <= 0.0)
      throw ConfigError("queue " + std::to_string(i + 1) + ": arrival_rate must be positive");
    try {
      check_service(q.service);
      check_gating(q.gating);
    } catch (const ConfigError& e) {
      throw ConfigError("queue " + std::to_string(i + 1) + ": " + e.what());
    }
  }
}

/// Checks the standing load and moment assumptions. Pure.
inline ValidationReport validate_config(const ModelConfig& cfg) {
  check_structure(cfg);
  ValidationReport rep;
  bool queue_overloaded = false;
  bool b_log_b = true;
  for (const auto& q : cfg.queues) {
    const double load = q.arrival_rate * service_mean(q.service);
    rep.per_queue_load.push_back(load);
    rep.total_load += load;
    queue_overloaded = queue_overloaded || !(load < 1.0);
    rep.b_log_b_finite.push_back(b_log_b_finite(q.service));
    b_log_b = b_log_b && rep.b_log_b_finite.back();
  }
  if (cfg.queues.size() < 2) rep.reasons.push_back(RejectReason::too_few_queues);
  if (queue_overloaded) rep.reasons.push_back(RejectReason::queue_overloaded);
  if (!(rep.total_load > 1.0)) rep.reasons.push_back(RejectReason::not_overloaded);
  if (!b_log_b) rep.reasons.push_back(RejectReason::b_log_b_infinite);
  return rep;
}

/// A config that passed validate_config. The only way to feed the
/// simulator and the analyses.
class ValidatedConfig {
 public:
  explicit ValidatedConfig(ModelConfig cfg) : cfg_(std::move(cfg)) {
    const auto report = validate_config(cfg_);
    if (!report.accepted()) {
      std::string msg = "config rejected:";
      for (auto r : report.reasons) msg += std::string(" ") + to_string(r) + ";";
      throw RejectedConfigError(msg);
    }
    for (const auto& q : cfg_.queues) {
      lambda_.push_back(q.arrival_rate);
      mu_.push_back(1.0 / service_mean(q.service));
    }
    total_rate_ = std::accumulate(lambda_.begin(), lambda_.end(), 0.0);
  }

  const ModelConfig& config() const { return cfg_; }
  std::size_t size() const { return cfg_.queues.size(); }
  const QueueSpec& queue(std::size_t i) const { return cfg_.queues[i]; }
  const std::vector<double>& lambda() const { return lambda_; }
  const std::vector<double>& mu() const { return mu_; }
  double total_rate() const { return total_rate_; }
  std::uint64_t base_seed() const { return cfg_.base_seed; }

 private:
  ModelConfig cfg_;
  std::vector<double> lambda_;
  std::vector<double> mu_;
  double total_rate_ = 0.0;
};

}  // namespace polling
