#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/errors.hpp"

namespace hardex::orch {

struct ScriptedCrash {
  double time_s = 0;
  int instance = 0;
};

struct ServiceSpec {
  std::string name = "service";
  int target_instances = 1;
  int max_instances = 1;
  double mttf_mean_s = 0;  // <= 0 disables random crashes
  double service_time_s = 0.05;
  double deadline_s = 0.2;
  double respawn_delay_s = 1.0;
  int64_t scale_up_queue_threshold = 8;
  double arrival_rate_per_s = 0;
  std::vector<ScriptedCrash> scripted_crashes;

  // Throws ConfigError when a field breaks an invariant: the deadline must
  // exceed the service time, respawn delay must be positive, and the target
  // cannot exceed the ceiling.
  static ServiceSpec from_json(const nlohmann::json& j);
  void validate() const;
};

// Deterministic discrete-event run of one supervised service. Same spec,
// seed and duration give a byte-identical report.
nlohmann::ordered_json simulate(const ServiceSpec& spec, double duration_s, uint64_t seed);

}  // namespace hardex::orch
