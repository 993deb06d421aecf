#pragma once

// Closed-form mean response time and mean power for a DVFS-capable server
// with threshold shutdown and optional batching, plus simple server farms.
// Every function is pure: validate inputs, evaluate, return.

#include <algorithm>
#include <cmath>
#include <string>

#include "pmq/model.hpp"

namespace pmq {

namespace detail {

inline void require_stable(double arrival_rate, double effective_rate) {
  if (!(arrival_rate < effective_rate))
    throw UnstableSystem("arrival rate " + std::to_string(arrival_rate) +
                         " >= service capacity " + std::to_string(effective_rate));
}

}  // namespace detail

/// M/M/1 at the scaled service rate, platform always on.
inline Metrics mm1_metrics(const ServerParams& s, const Workload& w) {
  s.validate();
  w.validate();
  detail::require_stable(w.arrival_rate, s.effective_rate());
  return {1.0 / (s.effective_rate() - w.arrival_rate), s.active_power()};
}

/// First two moments of the wake delay paid by the first job of a busy
/// period. The job pays wakeup_latency + batch_delay iff the preceding idle
/// gap outlasted the threshold, which for Poisson arrivals happens with
/// probability exp(-arrival_rate * threshold).
inline DelayMoments wakeup_delay_moments(const Policy& p, const Workload& w) {
  p.validate();
  w.validate();
  if (p.idle_threshold.is_never()) return {0.0, 0.0};
  const double delay = p.wakeup_latency + p.batch_delay;
  const double shutdown_prob =
      std::exp(-w.arrival_rate * p.idle_threshold.seconds());
  return {delay * shutdown_prob, delay * delay * shutdown_prob};
}

/// Mean response time of an M/G/1 queue whose busy periods open with an
/// extra random setup delay with the given moments. service_variation2 is
/// the squared coefficient of variation of service time; exponential
/// service has service_variation2 = 1.
inline double exceptional_first_service_response(const ServerParams& s,
                                                 const Workload& w,
                                                 const DelayMoments& d,
                                                 double service_variation2) {
  s.validate();
  w.validate();
  if (!(service_variation2 >= 0.0) || !std::isfinite(service_variation2))
    throw ConfigError("squared coefficient of variation must be finite and >= 0");
  if (!(d.mean >= 0.0) || !(d.second_moment >= 0.0))
    throw ConfigError("delay moments must be >= 0");
  if (d.second_moment < d.mean * d.mean)
    throw ConfigError("delay moments violate E[D^2] >= E[D]^2");
  const double rate = s.effective_rate();
  const double lam = w.arrival_rate;
  detail::require_stable(lam, rate);
  const double base =
      1.0 / rate +
      lam * (1.0 + service_variation2) / (2.0 * rate * rate * (1.0 - lam / rate));
  const double setup =
      (2.0 * d.mean + lam * d.second_moment) / (2.0 * (1.0 + lam * d.mean));
  return base + setup;
}

/// Long-run fraction of time the platform draws zero power under the given
/// policy. Computed over one regeneration cycle (from one "queue empties"
/// instant to the next): expected off time divided by expected cycle length,
/// where the cycle length follows from work conservation.
inline double off_fraction(const ServerParams& s, const Workload& w,
                           const Policy& p) {
  s.validate();
  w.validate();
  p.validate();
  const double rate = s.effective_rate();
  const double lam = w.arrival_rate;
  detail::require_stable(lam, rate);
  if (p.idle_threshold.is_never()) return 0.0;
  const double shutdown_prob = std::exp(-lam * p.idle_threshold.seconds());
  const DelayMoments d = wakeup_delay_moments(p, w);
  // mean cycle length from lam * L = rate * (L - 1/lam - E[D])
  const double cycle = rate * (1.0 / lam + d.mean) / (rate - lam);
  // off time accrues only in cycles where the idle gap beat the threshold:
  // the residual idle gap plus the whole batch hold
  const double off_time = shutdown_prob * (1.0 / lam + p.batch_delay);
  return off_time / cycle;
}

/// Mean response time and power of the threshold mechanism, batching
/// included. Response feeds the wake delay moments into the
/// exceptional-first-service queue; power charges full active power for
/// exactly the fraction of time the platform is on.
inline Metrics threshold_metrics(const ServerParams& s, const Workload& w,
                                 const Policy& p) {
  s.validate();
  w.validate();
  p.validate();
  detail::require_stable(w.arrival_rate, s.effective_rate());
  if (p.idle_threshold.is_never()) return mm1_metrics(s, w);
  const DelayMoments d = wakeup_delay_moments(p, w);
  const double response = exceptional_first_service_response(s, w, d, 1.0);
  const double power = s.active_power() * (1.0 - off_fraction(s, w, p));
  return {response, power};
}

/// Idealized bound: the platform is on exactly while serving, with free
/// instantaneous power cycles. Response is plain M/M/1; power is active
/// power scaled by the utilization.
inline Metrics immediate_shutdown_metrics(const ServerParams& s,
                                          const Workload& w) {
  s.validate();
  w.validate();
  const double rate = s.effective_rate();
  const double lam = w.arrival_rate;
  detail::require_stable(lam, rate);
  return {1.0 / (rate - lam), lam / rate * s.active_power()};
}

/// Race to halt: run at full frequency and shut down the moment the queue
/// empties, paying wakeup_latency on every busy period. Spelled out directly
/// rather than delegated to threshold_metrics so the two routes can be
/// checked against each other.
inline Metrics race_to_halt_metrics(const ServerParams& s, const Workload& w,
                                    double wakeup_latency) {
  s.validate();
  w.validate();
  if (!(wakeup_latency >= 0.0) || !std::isfinite(wakeup_latency))
    throw ConfigError("wakeup latency must be finite and >= 0");
  const double mu = s.service_rate;  // frequency pinned to 1
  const double lam = w.arrival_rate;
  detail::require_stable(lam, mu);
  const double ts = wakeup_latency;
  const double full_power = s.peak_dynamic_power + s.peripheral_power;
  const double response =
      1.0 / (mu - lam) + ts / (2.0 * (1.0 + lam * ts)) + ts / 2.0;
  const double power = full_power * (1.0 - (1.0 - lam / mu) / (1.0 + lam * ts));
  return {response, power};
}

/// The idle threshold at which the threshold mechanism's mean response time
/// equals `budget` exactly, given the total wake delay wakeup_latency +
/// batch_delay. Throws InfeasibleBudget when the budget is at or below the
/// always-on floor 1/(mu f - lambda), and BudgetTooLoose when even
/// immediate shutdown (threshold zero) responds faster than the budget, so
/// no threshold meets it with equality.
inline double idle_threshold_for_budget(const ServerParams& s, const Workload& w,
                                        double wakeup_latency, double budget,
                                        double batch_delay = 0.0) {
  s.validate();
  w.validate();
  if (!(wakeup_latency >= 0.0) || !std::isfinite(wakeup_latency))
    throw ConfigError("wakeup latency must be finite and >= 0");
  if (!(batch_delay >= 0.0) || !std::isfinite(batch_delay))
    throw ConfigError("batch delay must be finite and >= 0");
  if (!(budget > 0.0) || !std::isfinite(budget))
    throw ConfigError("response budget must be finite and > 0");
  const double lam = w.arrival_rate;
  detail::require_stable(lam, s.effective_rate());
  const double floor = 1.0 / (s.effective_rate() - lam);
  if (!(budget > floor))
    throw InfeasibleBudget("budget " + std::to_string(budget) +
                           " is at or below the always-on response floor " +
                           std::to_string(floor));
  const double d = wakeup_latency + batch_delay;
  // solve response(threshold) = budget for exp(lam * threshold)
  const double target = (2.0 * d + lam * d * d) / (2.0 * (budget - floor)) - lam * d;
  if (target < 1.0)
    throw BudgetTooLoose(
        "threshold zero already responds in " +
        std::to_string(floor + (2.0 * d + lam * d * d) / (2.0 * (1.0 + lam * d))) +
        ", faster than the budget " + std::to_string(budget) +
        "; no threshold meets it with equality");
  return std::log(target) / lam;
}

/// Mean power at the given frequency when the idle threshold is chosen so
/// that the mean response time meets `budget` with equality (the threshold
/// is eliminated from the power expression). Needs wakeup_latency > 0:
/// with a free wake-up the response does not depend on the threshold at all.
inline double constrained_power(const ServerParams& s, const Workload& w,
                                double wakeup_latency, double budget) {
  s.validate();
  w.validate();
  if (!(wakeup_latency > 0.0) || !std::isfinite(wakeup_latency))
    throw ConfigError("constrained power needs wakeup latency > 0");
  if (!(budget > 0.0) || !std::isfinite(budget))
    throw ConfigError("response budget must be finite and > 0");
  const double rate = s.effective_rate();
  const double lam = w.arrival_rate;
  detail::require_stable(lam, rate);
  const double floor = 1.0 / (rate - lam);
  if (!(budget > floor))
    throw InfeasibleBudget("budget " + std::to_string(budget) +
                           " is at or below the always-on response floor " +
                           std::to_string(floor));
  const double ts = wakeup_latency;
  const double on_fraction = 1.0 - 2.0 * (1.0 - lam / rate) * (budget - floor) /
                                       (2.0 * ts + lam * ts * ts);
  return s.active_power() * on_fraction;
}

/// Farm of `servers` always-on M/M/1 queues behind a Bernoulli dispatcher:
/// each server sees a thinned Poisson stream at arrival_rate / servers.
inline Metrics flow_split_metrics(const ServerParams& s, const Workload& w,
                                  int servers) {
  s.validate();
  w.validate();
  if (servers < 1) throw ConfigError("farm needs at least one server");
  const double per_server = w.arrival_rate / servers;
  detail::require_stable(per_server, s.effective_rate());
  return {1.0 / (s.effective_rate() - per_server),
          servers * s.active_power()};
}

struct FlowSplitPlan {
  double frequency = 1.0;            // large-delay optimum, clamped to (0, 1]
  double servers_fractional = 0.0;   // arrival_rate / (service_rate * frequency)
  int servers = 1;                   // best integer farm size
  double frequency_at_servers = 1.0; // frequency re-optimized for that size
};

/// Frequency and farm size that minimize total farm power in the
/// large-delay regime, where per-server stability is the only binding
/// constraint. The fractional optimum makes n * (P0 f^3 + C) stationary
/// along the stability boundary n = lambda / (mu f); the integer choice
/// compares the floor and ceiling neighbors, each evaluated at its own
/// limiting frequency lambda / (mu n). The boundary power is an infimum:
/// running exactly at it is unstable, and any finite response budget picks
/// a frequency just above (see the farm optimizer).
inline FlowSplitPlan optimal_flow_split(const ServerParams& s, const Workload& w) {
  s.validate();
  w.validate();
  if (!(s.peak_dynamic_power > 0.0))
    throw ConfigError("flow-split optimum needs peak dynamic power > 0");
  if (!(s.peripheral_power > 0.0))
    throw ConfigError("flow-split optimum needs peripheral power > 0");
  const double lam = w.arrival_rate;
  const double mu = s.service_rate;

  const double ideal = std::cbrt(s.peripheral_power / (2.0 * s.peak_dynamic_power));
  const double f_star = std::min(ideal, 1.0);
  const double n_star = lam / (mu * f_star);

  // per-size limiting frequency: power rises with f, so as the response
  // budget grows the best f for a fixed size approaches the stability bound
  const auto frequency_for = [&](int n) { return lam / (mu * n); };
  const auto total_power = [&](int n) {
    const double f = frequency_for(n);
    return n * (s.peak_dynamic_power * f * f * f + s.peripheral_power);
  };
  const auto stabilizable = [&](int n) { return n >= 1 && lam < n * mu; };

  int best = -1;
  double best_power = 0.0;
  for (int n : {static_cast<int>(std::floor(n_star)),
                static_cast<int>(std::ceil(n_star))}) {
    if (!stabilizable(n)) continue;
    const double p = total_power(n);
    if (best < 0 || p < best_power || (p == best_power && n < best)) {
      best = n;
      best_power = p;
    }
  }
  if (best < 0) {
    // neither neighbor can be stabilized even at full frequency
    best = static_cast<int>(std::floor(lam / mu)) + 1;
  }
  return {f_star, n_star, best, frequency_for(best)};
}

}  // namespace pmq
