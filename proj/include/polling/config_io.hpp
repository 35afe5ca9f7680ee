#pragma once

// JSON form of ModelConfig.
//
//   {
//     "base_seed": 7,
//     "queues": [
//       {"arrival_rate": 2.0,
//        "service": {"kind": "exponential", "rate": 3.0},
//        "gating":  {"kind": "deterministic", "k": 1}},
//       ...
//     ]
//   }
//
// service kinds: deterministic{value}, exponential{rate},
//                lognormal{location, scale}, pareto{shape, minimum}
// gating kinds:  deterministic{k}, geometric{p}, pmf{entries: [[k, prob], ...]}
// where a gate count k is a nonnegative integer or the string "inf".

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "model.hpp"

namespace polling {

using json = nlohmann::json;

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline double require_number(const json& j, const char* key, const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_number()) throw ConfigError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline GateCount parse_gate_count(const json& v, const std::string& where) {
  if (v.is_string() && v.get<std::string>() == "inf") return kUnlimitedGates;
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    const auto k = v.get<std::uint64_t>();
    if (k == kUnlimitedGates) throw ConfigError(where + ": gate count too large");
    return k;
  }
  throw ConfigError(where + ": gate count must be a nonnegative integer or \"inf\"");
}

inline json gate_count_json(GateCount k) {
  if (is_unlimited(k)) return "inf";
  return k;
}

}  // namespace detail

inline ServiceDistribution service_from_json(const json& j, const std::string& where = "service") {
  const auto& kind_v = detail::require(j, "kind", where);
  if (!kind_v.is_string()) throw ConfigError(where + ": 'kind' must be a string");
  const auto kind = kind_v.get<std::string>();
  ServiceDistribution d;
  if (kind == "deterministic") {
    d = DeterministicService{detail::require_number(j, "value", where)};
  } else if (kind == "exponential") {
    d = ExponentialService{detail::require_number(j, "rate", where)};
  } else if (kind == "lognormal") {
    d = LogNormalService{detail::require_number(j, "location", where),
                         detail::require_number(j, "scale", where)};
  } else if (kind == "pareto") {
    d = ParetoService{detail::require_number(j, "shape", where),
                      detail::require_number(j, "minimum", where)};
  } else {
    throw ConfigError(where + ": unknown service kind '" + kind + "'");
  }
  check_service(d);
  return d;
}

inline GatingDistribution gating_from_json(const json& j, const std::string& where = "gating") {
  const auto& kind_v = detail::require(j, "kind", where);
  if (!kind_v.is_string()) throw ConfigError(where + ": 'kind' must be a string");
  const auto kind = kind_v.get<std::string>();
  GatingDistribution g;
  if (kind == "deterministic") {
    g = DeterministicGating{detail::parse_gate_count(detail::require(j, "k", where), where)};
  } else if (kind == "geometric") {
    g = GeometricGating{detail::require_number(j, "p", where)};
  } else if (kind == "pmf") {
    const auto& entries = detail::require(j, "entries", where);
    if (!entries.is_array()) throw ConfigError(where + ": 'entries' must be an array");
    PmfGating pmf;
    for (const auto& e : entries) {
      if (!e.is_array() || e.size() != 2 || !e[1].is_number())
        throw ConfigError(where + ": pmf entries must be [k, prob] pairs");
      pmf.entries.emplace_back(detail::parse_gate_count(e[0], where), e[1].get<double>());
    }
    g = std::move(pmf);
  } else {
    throw ConfigError(where + ": unknown gating kind '" + kind + "'");
  }
  check_gating(g);
  return g;
}

inline json to_json(const ServiceDistribution& d) {
  return std::visit(
      detail::overloaded{
          [](const DeterministicService& s) { return json{{"kind", "deterministic"}, {"value", s.value}}; },
          [](const ExponentialService& s) { return json{{"kind", "exponential"}, {"rate", s.rate}}; },
          [](const LogNormalService& s) {
            return json{{"kind", "lognormal"}, {"location", s.location}, {"scale", s.scale}};
          },
          [](const ParetoService& s) {
            return json{{"kind", "pareto"}, {"shape", s.shape}, {"minimum", s.minimum}};
          },
      },
      d);
}

inline json to_json(const GatingDistribution& g) {
  return std::visit(detail::overloaded{
                        [](const DeterministicGating& x) {
                          return json{{"kind", "deterministic"}, {"k", detail::gate_count_json(x.k)}};
                        },
                        [](const GeometricGating& x) { return json{{"kind", "geometric"}, {"p", x.p}}; },
                        [](const PmfGating& x) {
                          json entries = json::array();
                          for (const auto& [k, prob] : x.entries)
                            entries.push_back(json::array({detail::gate_count_json(k), prob}));
                          return json{{"kind", "pmf"}, {"entries", entries}};
                        },
                    },
                    g);
}

inline ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  if (j.contains("base_seed")) {
    const auto& s = j.at("base_seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ConfigError("config: base_seed must be a nonnegative integer");
    cfg.base_seed = s.get<std::uint64_t>();
  }
  const auto& queues = detail::require(j, "queues", "config");
  if (!queues.is_array()) throw ConfigError("config: 'queues' must be an array");
  for (std::size_t i = 0; i < queues.size(); ++i) {
    const std::string where = "queues[" + std::to_string(i) + "]";
    const auto& q = queues[i];
    QueueSpec spec;
    spec.arrival_rate = detail::require_number(q, "arrival_rate", where);
    spec.service = service_from_json(detail::require(q, "service", where), where + ".service");
    spec.gating = gating_from_json(detail::require(q, "gating", where), where + ".gating");
    cfg.queues.push_back(std::move(spec));
  }
  check_structure(cfg);
  return cfg;
}

inline json to_json(const ModelConfig& cfg) {
  json queues = json::array();
  for (const auto& q : cfg.queues)
    queues.push_back(
        json{{"arrival_rate", q.arrival_rate}, {"service", to_json(q.service)}, {"gating", to_json(q.gating)}});
  return json{{"base_seed", cfg.base_seed}, {"queues", queues}};
}

inline ModelConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

/// Hex FNV-1a hash of the canonical JSON serialization.
inline std::string config_hash(const ModelConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a64(to_json(cfg).dump())));
  return buf;
}

}  // namespace polling
