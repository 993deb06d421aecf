#pragma once

// Side-by-side comparison of the closed-form models against the simulator
// on one configuration.

#include <cmath>

#include "pmq/analytic.hpp"
#include "pmq/simulator.hpp"

namespace pmq {

struct ValidationReport {
  Metrics analytic;
  SimResult sim;
  double response_abs_err = 0, response_rel_err = 0;
  double power_abs_err = 0, power_rel_err = 0;
  bool response_within_ci = false;
  bool power_within_ci = false;
};

/// Closed-form metrics for a simulator configuration. Bernoulli farms
/// reduce to one server fed with a thinned stream (same response, power
/// scaled by the farm size); fork-join has no closed form here.
inline Metrics analytic_metrics(const SimConfig& cfg) {
  if (!cfg.farm)
    return threshold_metrics(cfg.server, cfg.workload, cfg.policy);
  cfg.farm->validate();
  if (cfg.farm->dispatch == Dispatch::fork_join)
    throw NoClosedForm(
        "fork-join response has no closed form; simulate it and judge by the "
        "reported utilization");
  const Workload per{cfg.workload.arrival_rate / cfg.farm->servers};
  Metrics m = threshold_metrics(cfg.server, per, cfg.policy);
  m.power *= cfg.farm->servers;
  return m;
}

inline ValidationReport validate_model(const SimConfig& cfg) {
  cfg.validate();
  ValidationReport rep;
  rep.analytic = analytic_metrics(cfg);
  rep.sim = simulate(cfg);
  rep.response_abs_err = std::abs(rep.sim.response_mean - rep.analytic.response);
  rep.response_rel_err = rep.response_abs_err / rep.analytic.response;
  rep.power_abs_err = std::abs(rep.sim.power_mean - rep.analytic.power);
  rep.power_rel_err =
      rep.analytic.power > 0 ? rep.power_abs_err / rep.analytic.power : 0.0;
  rep.response_within_ci = rep.response_abs_err <= rep.sim.response_ci;
  rep.power_within_ci = rep.power_abs_err <= rep.sim.power_ci;
  return rep;
}

}  // namespace pmq
