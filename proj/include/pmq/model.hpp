#pragma once

// Core domain types shared by the closed-form models, the simulator and the
// optimizers. Units throughout: seconds, jobs per second, watts.

#include <cmath>
#include <limits>

#include "pmq/errors.hpp"

namespace pmq {

// Idle-wait threshold before the platform powers off. "never" is a
// distinguished value (the server stays on no matter how long it idles), kept
// separate so callers are not tempted to feed a huge finite threshold into
// exp(rate * threshold).
class IdleThreshold {
 public:
  constexpr IdleThreshold() = default;  // never

  static constexpr IdleThreshold never() { return IdleThreshold(); }

  static IdleThreshold finite(double seconds) {
    if (!(seconds >= 0.0) || !std::isfinite(seconds))
      throw ConfigError("idle threshold must be finite and >= 0");
    IdleThreshold t;
    t.value_ = seconds;
    return t;
  }

  constexpr bool is_never() const { return !(value_ < kNever); }

  // +infinity when never; exp(-rate * seconds()) is then an exact zero,
  // which is what every formula needs, but callers mostly branch instead.
  constexpr double seconds() const { return value_; }

  friend constexpr bool operator==(IdleThreshold a, IdleThreshold b) {
    return a.value_ == b.value_ || (a.is_never() && b.is_never());
  }

 private:
  static constexpr double kNever = std::numeric_limits<double>::infinity();
  double value_ = kNever;
};

// Physical description of one server: a DVFS-capable compute element plus
// peripherals (memory, disk, NIC) that draw constant power whenever the
// platform is on. Active power is peak_dynamic_power * frequency^3 +
// peripheral_power; the service rate scales linearly with frequency.
struct ServerParams {
  double peak_dynamic_power = 0.0;  // watts at frequency 1
  double peripheral_power = 0.0;    // watts, frequency independent
  double service_rate = 1.0;        // jobs/sec at frequency 1
  double frequency = 1.0;           // scaling factor in (0, 1]

  double effective_rate() const { return service_rate * frequency; }

  double active_power() const {
    return peak_dynamic_power * frequency * frequency * frequency + peripheral_power;
  }

  ServerParams with_frequency(double f) const {
    ServerParams s = *this;
    s.frequency = f;
    return s;
  }

  void validate() const {
    if (!(peak_dynamic_power >= 0.0) || !std::isfinite(peak_dynamic_power))
      throw ConfigError("peak dynamic power must be finite and >= 0");
    if (!(peripheral_power >= 0.0) || !std::isfinite(peripheral_power))
      throw ConfigError("peripheral power must be finite and >= 0");
    if (!(service_rate > 0.0) || !std::isfinite(service_rate))
      throw ConfigError("service rate must be finite and > 0");
    if (!(frequency > 0.0) || frequency > 1.0)
      throw ConfigError("frequency must lie in (0, 1]");
  }
};

struct Workload {
  double arrival_rate = 0.0;  // Poisson arrivals, jobs/sec

  void validate() const {
    if (!(arrival_rate > 0.0) || !std::isfinite(arrival_rate))
      throw ConfigError("arrival rate must be finite and > 0");
  }
};

// Shutdown and wake-up policy. A positive batch_delay holds the first job
// that arrives while the platform is off for that long before the wake-up
// begins, so more work piles up behind each (expensive) power cycle.
struct Policy {
  IdleThreshold idle_threshold = IdleThreshold::never();
  double wakeup_latency = 0.0;  // seconds from powered off to serving
  double batch_delay = 0.0;     // extra hold while off, after the first arrival

  void validate() const {
    if (!(wakeup_latency >= 0.0) || !std::isfinite(wakeup_latency))
      throw ConfigError("wakeup latency must be finite and >= 0");
    if (!(batch_delay >= 0.0) || !std::isfinite(batch_delay))
      throw ConfigError("batch delay must be finite and >= 0");
    if (batch_delay > 0.0 && idle_threshold.is_never())
      throw ConfigError(
          "batch delay requires a finite idle threshold; a server that never "
          "powers off never batches");
  }
};

// Extra delay experienced by the first job of a busy period (zero when the
// job caught the platform still on).
struct DelayMoments {
  double mean = 0.0;           // seconds
  double second_moment = 0.0;  // seconds^2
};

// A (mean response time, mean power) pair.
struct Metrics {
  double response = 0.0;  // seconds
  double power = 0.0;     // watts
};

enum class Dispatch { bernoulli_split, fork_join };

// Server-farm layout: `servers` homogeneous servers behind one dispatcher.
// Under fork_join every job is replicated to all servers and departs when
// join_count copies have finished; the rest are cancelled.
struct FarmConfig {
  int servers = 1;
  Dispatch dispatch = Dispatch::bernoulli_split;
  int join_count = 1;  // fork-join only

  void validate() const {
    if (servers < 1) throw ConfigError("farm needs at least one server");
    if (dispatch == Dispatch::fork_join &&
        (join_count < 1 || join_count > servers))
      throw ConfigError("fork-join join count must lie in [1, servers]");
  }
};

}  // namespace pmq
