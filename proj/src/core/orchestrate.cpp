#include "core/orchestrate.hpp"

#include <cmath>
#include <deque>
#include <queue>
#include <tuple>

#include "core/rng.hpp"

namespace hardex::orch {

ServiceSpec ServiceSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("service spec must be an object");
  ServiceSpec spec;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "name") {
        spec.name = value.get<std::string>();
      } else if (key == "target_instances") {
        spec.target_instances = value.get<int>();
      } else if (key == "max_instances") {
        spec.max_instances = value.get<int>();
      } else if (key == "mttf_mean_s") {
        spec.mttf_mean_s = value.get<double>();
      } else if (key == "service_time_s") {
        spec.service_time_s = value.get<double>();
      } else if (key == "deadline_s") {
        spec.deadline_s = value.get<double>();
      } else if (key == "respawn_delay_s") {
        spec.respawn_delay_s = value.get<double>();
      } else if (key == "scale_up_queue_threshold") {
        spec.scale_up_queue_threshold = value.get<int64_t>();
      } else if (key == "arrival_rate_per_s") {
        spec.arrival_rate_per_s = value.get<double>();
      } else if (key == "scripted_crashes") {
        if (!value.is_array()) throw ConfigError("scripted_crashes must be an array");
        for (const auto& entry : value) {
          ScriptedCrash c;
          c.time_s = entry.at("time_s").get<double>();
          c.instance = entry.at("instance").get<int>();
          spec.scripted_crashes.push_back(c);
        }
      } else {
        throw ConfigError("unknown service spec key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad value for '" + key + "': " + e.what());
    }
  }
  spec.validate();
  return spec;
}

void ServiceSpec::validate() const {
  if (target_instances < 1) throw ConfigError("target_instances must be at least 1");
  if (max_instances < target_instances) {
    throw ConfigError("max_instances must be at least target_instances");
  }
  if (service_time_s <= 0) throw ConfigError("service_time_s must be positive");
  if (deadline_s <= service_time_s) throw ConfigError("deadline_s must exceed service_time_s");
  if (respawn_delay_s <= 0) throw ConfigError("respawn_delay_s must be positive");
  if (arrival_rate_per_s < 0) throw ConfigError("arrival_rate_per_s must be non-negative");
  for (const auto& c : scripted_crashes) {
    if (c.time_s < 0 || c.instance < 0) throw ConfigError("scripted crash out of range");
  }
}

namespace {

constexpr int64_t kUsPerSecond = 1'000'000;

int64_t to_us(double seconds) { return std::llround(seconds * kUsPerSecond); }

// Event kinds in tie-break order at equal timestamps.
enum class Kind : int {
  Arrival = 0,
  Completion = 1,
  Crash = 2,
  SlowDetect = 3,
  RespawnDone = 4,
  ScaleUp = 5,
};

struct Event {
  int64_t time;
  Kind kind;
  int64_t instance;  // -1 when not instance-bound
  uint64_t seq;      // insertion order, final tie-break
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.time, a.kind, a.instance, a.seq) >
           std::tie(b.time, b.kind, b.instance, b.seq);
  }
};

struct Request {
  int64_t arrival;
};

struct Instance {
  bool alive = true;
  bool busy = false;
  Request current{};
  std::deque<Request> queue;
};

}  // namespace

nlohmann::ordered_json simulate(const ServiceSpec& spec, double duration_s, uint64_t seed) {
  spec.validate();
  if (duration_s <= 0) throw ConfigError("duration must be positive");

  const int64_t duration = to_us(duration_s);
  const int64_t service_time = to_us(spec.service_time_s);
  const int64_t deadline = to_us(spec.deadline_s);
  const int64_t respawn_delay = to_us(spec.respawn_delay_s);

  std::priority_queue<Event, std::vector<Event>, EventAfter> events;
  uint64_t event_seq = 0;
  auto schedule = [&](int64_t time, Kind kind, int64_t instance) {
    events.push({time, kind, instance, event_seq++});
  };

  std::vector<Instance> instances;
  rng::SplitMix64 arrivals_rng(seed, 0);
  uint64_t crash_stream = 1;

  auto spawn = [&](int64_t now) {
    const int64_t id = static_cast<int64_t>(instances.size());
    instances.push_back({});
    if (spec.mttf_mean_s > 0) {
      rng::SplitMix64 g(seed, crash_stream++);
      const double u = g.next_unit();
      const int64_t dt = to_us(-spec.mttf_mean_s * std::log1p(-u));
      schedule(now + dt, Kind::Crash, id);
    }
    return id;
  };

  for (int i = 0; i < spec.target_instances; ++i) spawn(0);
  for (const auto& c : spec.scripted_crashes) {
    schedule(to_us(c.time_s), Kind::Crash, c.instance);
  }
  if (spec.arrival_rate_per_s > 0) {
    const double u = arrivals_rng.next_unit();
    schedule(to_us(-std::log1p(-u) / spec.arrival_rate_per_s), Kind::Arrival, -1);
  }

  uint64_t completed = 0;
  uint64_t failed = 0;
  uint64_t respawns = 0;
  uint64_t crashes = 0;
  uint64_t slow_kills = 0;
  uint64_t scale_ups = 0;
  int64_t max_queue = 0;
  bool scale_pending = false;

  int64_t now = 0;
  int64_t uptime = 0;
  int64_t last_time = 0;
  auto alive_count = [&]() {
    int64_t n = 0;
    for (const auto& inst : instances) n += inst.alive ? 1 : 0;
    return n;
  };
  auto advance_to = [&](int64_t t) {
    const int64_t upto = std::min(t, duration);
    if (upto > last_time) {
      if (alive_count() > 0) uptime += upto - last_time;
      last_time = upto;
    }
    now = t;
  };

  auto start_service = [&](int64_t id) {
    Instance& inst = instances[static_cast<size_t>(id)];
    if (inst.busy || inst.queue.empty()) return;
    inst.current = inst.queue.front();
    inst.queue.pop_front();
    inst.busy = true;
    schedule(now + service_time, Kind::Completion, id);
  };

  auto total_queued = [&]() {
    int64_t n = 0;
    for (const auto& inst : instances) {
      if (inst.alive) n += static_cast<int64_t>(inst.queue.size());
    }
    return n;
  };

  auto kill = [&](int64_t id) {
    Instance& inst = instances[static_cast<size_t>(id)];
    inst.alive = false;
    if (inst.busy) {
      inst.busy = false;
      ++failed;
    }
    failed += inst.queue.size();
    inst.queue.clear();
    schedule(now + respawn_delay, Kind::RespawnDone, id);
  };

  int64_t rr_last = -1;

  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();
    if (ev.time >= duration) break;
    advance_to(ev.time);

    switch (ev.kind) {
      case Kind::Arrival: {
        // Next arrival first, so the stream is independent of dispatch.
        const double u = arrivals_rng.next_unit();
        schedule(now + to_us(-std::log1p(-u) / spec.arrival_rate_per_s), Kind::Arrival, -1);

        // Round-robin over alive instances in id order.
        int64_t chosen = -1;
        const int64_t count = static_cast<int64_t>(instances.size());
        for (int64_t probe = 1; probe <= count; ++probe) {
          const int64_t id = (rr_last + probe) % count;
          if (instances[static_cast<size_t>(id)].alive) {
            chosen = id;
            break;
          }
        }
        if (chosen < 0) {
          ++failed;
          break;
        }
        rr_last = chosen;
        instances[static_cast<size_t>(chosen)].queue.push_back({now});
        start_service(chosen);
        const int64_t queued = total_queued();
        max_queue = std::max(max_queue, queued);
        if (queued > spec.scale_up_queue_threshold && !scale_pending &&
            alive_count() < spec.max_instances) {
          scale_pending = true;
          schedule(now + respawn_delay, Kind::ScaleUp, -1);
        }
        break;
      }
      case Kind::Completion: {
        Instance& inst = instances[static_cast<size_t>(ev.instance)];
        if (!inst.alive || !inst.busy) break;
        ++completed;
        const int64_t response = now - inst.current.arrival;
        inst.busy = false;
        start_service(ev.instance);
        if (response > deadline) {
          ++slow_kills;
          schedule(now, Kind::SlowDetect, ev.instance);
        }
        break;
      }
      case Kind::Crash: {
        if (ev.instance < 0 || ev.instance >= static_cast<int64_t>(instances.size())) break;
        if (!instances[static_cast<size_t>(ev.instance)].alive) break;
        ++crashes;
        kill(ev.instance);
        break;
      }
      case Kind::SlowDetect: {
        Instance& inst = instances[static_cast<size_t>(ev.instance)];
        if (!inst.alive) break;
        kill(ev.instance);
        break;
      }
      case Kind::RespawnDone: {
        ++respawns;
        const int64_t id = spawn(now);
        start_service(id);
        break;
      }
      case Kind::ScaleUp: {
        scale_pending = false;
        ++scale_ups;
        if (alive_count() < spec.max_instances) spawn(now);
        break;
      }
    }
  }
  advance_to(duration);

  nlohmann::ordered_json report;
  report["params"] = {
      {"name", spec.name},
      {"target_instances", spec.target_instances},
      {"max_instances", spec.max_instances},
      {"mttf_mean_s", spec.mttf_mean_s},
      {"service_time_s", spec.service_time_s},
      {"deadline_s", spec.deadline_s},
      {"respawn_delay_s", spec.respawn_delay_s},
      {"scale_up_queue_threshold", spec.scale_up_queue_threshold},
      {"arrival_rate_per_s", spec.arrival_rate_per_s},
      {"duration_s", duration_s},
  };
  report["seed"] = seed;
  report["duration_us"] = duration;
  report["uptime_us"] = uptime;
  report["availability"] = static_cast<double>(uptime) / static_cast<double>(duration);
  report["completed"] = completed;
  report["failed"] = failed;
  report["crashes"] = crashes;
  report["slow_kills"] = slow_kills;
  report["respawns"] = respawns;
  report["scale_ups"] = scale_ups;
  report["max_queue"] = max_queue;
  return report;
}

}  // namespace hardex::orch
