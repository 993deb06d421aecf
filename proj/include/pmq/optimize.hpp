#pragma once

// Sweet-spot searches over the policy knobs: minimize mean power subject to
// a mean response time budget. Coarse grids locate the basin, then a little
// golden-section refinement polishes the continuous coordinates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "pmq/analytic.hpp"

namespace pmq {

enum class DecisionSpace { threshold_pair, batch_triple, farm_pair };

struct OptProblem {
  ServerParams server;  // frequency field is ignored; frequency is a decision
  Workload workload;
  double wakeup_latency = 0.0;
  double budget = 0.0;  // mean response time bound, seconds
  DecisionSpace space = DecisionSpace::threshold_pair;
  double frequency_step = 1e-3;
  int servers_min = 1;
  int servers_max = 32;
  std::vector<double> batch_delay_grid;  // empty: {0} plus log-spaced 1e-3..1e4

  void validate() const {
    server.validate();
    workload.validate();
    if (!(wakeup_latency >= 0.0) || !std::isfinite(wakeup_latency))
      throw ConfigError("wakeup latency must be finite and >= 0");
    if (!(budget > 0.0) || !std::isfinite(budget))
      throw ConfigError("response budget must be finite and > 0");
    if (!(frequency_step > 0.0) || frequency_step > 0.5)
      throw ConfigError("frequency step must lie in (0, 0.5]");
    if (servers_min < 1 || servers_max < servers_min)
      throw ConfigError("server range must satisfy 1 <= min <= max");
    for (double b : batch_delay_grid)
      if (!(b >= 0.0) || !std::isfinite(b))
        throw ConfigError("batch delay grid values must be finite and >= 0");
  }
};

// One evaluated operating point. Infeasible entries say why: "unstable"
// (queue cannot be stable there) or "infeasible" (stable, but the budget is
// below the response floor). Values that do not exist at such a point are
// NaN.
struct OptCandidate {
  double frequency = std::numeric_limits<double>::quiet_NaN();
  IdleThreshold idle_threshold = IdleThreshold::never();
  double batch_delay = 0.0;
  int servers = 1;
  double response = std::numeric_limits<double>::quiet_NaN();
  double power = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;
  const char* status = "ok";
};

struct OptResult {
  OptCandidate best;
  std::vector<OptCandidate> frontier;  // every coarse grid point, in scan order
};

namespace detail {

template <typename F>
double golden_section_min(F&& g, double lo, double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double g1 = g(x1), g2 = g(x2);
  while (b - a > tol) {
    if (g1 <= g2) {
      b = x2;
      x2 = x1;
      g2 = g1;
      x1 = b - kInvPhi * (b - a);
      g1 = g(x1);
    } else {
      a = x1;
      x1 = x2;
      g1 = g2;
      x2 = a + kInvPhi * (b - a);
      g2 = g(x2);
    }
  }
  return 0.5 * (a + b);
}

inline std::vector<double> frequency_grid(double step) {
  std::vector<double> g;
  const auto count = static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));
  g.reserve(count + 1);
  for (std::size_t i = 1; i <= count; ++i)
    g.push_back(std::min(static_cast<double>(i) * step, 1.0));
  if (g.empty() || g.back() < 1.0) g.push_back(1.0);
  return g;
}

inline std::vector<double> default_batch_grid() {
  std::vector<double> g{0.0};
  for (int i = -24; i <= 32; ++i) g.push_back(std::pow(10.0, i / 8.0));
  return g;
}

// Best threshold for one (frequency, batch delay) pair: the threshold that
// meets the budget with equality, or zero when even that is faster than the
// budget (power only grows with the threshold, so never-off is never best).
inline OptCandidate eval_threshold_point(const OptProblem& p, double f,
                                         double batch_delay) {
  OptCandidate c;
  c.frequency = f;
  c.batch_delay = batch_delay;
  const double lam = p.workload.arrival_rate;
  if (!(lam < p.server.service_rate * f)) {
    c.status = "unstable";
    return c;
  }
  const ServerParams s = p.server.with_frequency(f);
  double tc = 0.0;
  try {
    tc = idle_threshold_for_budget(s, p.workload, p.wakeup_latency, p.budget,
                                   batch_delay);
  } catch (const BudgetTooLoose&) {
    tc = 0.0;
  } catch (const InfeasibleBudget&) {
    c.status = "infeasible";
    c.response = 1.0 / (s.effective_rate() - lam);  // floor, already over budget
    return c;
  }
  const Policy pol{IdleThreshold::finite(tc), p.wakeup_latency, batch_delay};
  const Metrics m = threshold_metrics(s, p.workload, pol);
  c.idle_threshold = pol.idle_threshold;
  c.response = m.response;
  c.power = m.power;
  c.feasible = true;
  return c;
}

inline double refine_frequency(const OptProblem& p, double f_center,
                               double batch_delay) {
  const double lam_over_mu = p.workload.arrival_rate / p.server.service_rate;
  const double lo = std::max(f_center - p.frequency_step, lam_over_mu + 1e-12);
  const double hi = std::min(f_center + p.frequency_step, 1.0);
  if (!(lo < hi)) return f_center;
  auto g = [&](double f) {
    const OptCandidate c = eval_threshold_point(p, f, batch_delay);
    return c.feasible ? c.power : std::numeric_limits<double>::infinity();
  };
  return golden_section_min(g, lo, hi, 1e-6);
}

inline bool better(const OptCandidate& a, const OptCandidate& b) {
  // is a better than b
  if (!b.feasible) return a.feasible;
  if (!a.feasible) return false;
  if (a.power != b.power) return a.power < b.power;
  if (a.servers != b.servers) return a.servers < b.servers;
  return a.frequency < b.frequency;
}

}  // namespace detail

inline OptResult optimize_threshold_pair(const OptProblem& p) {
  OptResult out;
  OptCandidate best;
  for (double f : detail::frequency_grid(p.frequency_step)) {
    OptCandidate c = detail::eval_threshold_point(p, f, 0.0);
    out.frontier.push_back(c);
    if (detail::better(c, best)) best = c;
  }
  if (!best.feasible)
    throw Infeasible(
        "no frequency in (0, 1] meets the response budget with a stable queue");
  const double f_ref = detail::refine_frequency(p, best.frequency, 0.0);
  const OptCandidate refined = detail::eval_threshold_point(p, f_ref, 0.0);
  if (detail::better(refined, best)) best = refined;
  out.best = best;
  return out;
}

inline OptResult optimize_batch_triple(const OptProblem& p) {
  OptResult out;
  std::vector<double> batch_grid =
      p.batch_delay_grid.empty() ? detail::default_batch_grid() : p.batch_delay_grid;
  std::sort(batch_grid.begin(), batch_grid.end());
  batch_grid.erase(std::unique(batch_grid.begin(), batch_grid.end()),
                   batch_grid.end());

  OptCandidate best;
  std::size_t best_batch_index = 0;
  const auto fgrid = detail::frequency_grid(p.frequency_step);
  for (std::size_t bi = 0; bi < batch_grid.size(); ++bi) {
    for (double f : fgrid) {
      OptCandidate c = detail::eval_threshold_point(p, f, batch_grid[bi]);
      out.frontier.push_back(c);
      if (detail::better(c, best)) {
        best = c;
        best_batch_index = bi;
      }
    }
  }
  if (!best.feasible)
    throw Infeasible(
        "no (frequency, batch delay) pair meets the response budget with a "
        "stable queue");

  // coordinate descent around the winning cell: frequency, then batch delay
  // over the bracket spanned by its grid neighbors
  const double tw_lo =
      best_batch_index == 0 ? batch_grid.front() : batch_grid[best_batch_index - 1];
  const double tw_hi = best_batch_index + 1 < batch_grid.size()
                           ? batch_grid[best_batch_index + 1]
                           : batch_grid.back();
  double f_c = best.frequency;
  double tw_c = best.batch_delay;
  for (int round = 0; round < 2; ++round) {
    f_c = detail::refine_frequency(p, f_c, tw_c);
    OptCandidate c = detail::eval_threshold_point(p, f_c, tw_c);
    if (detail::better(c, best)) best = c;
    if (tw_lo < tw_hi) {
      auto g = [&](double tw) {
        const OptCandidate cc = detail::eval_threshold_point(p, f_c, tw);
        return cc.feasible ? cc.power : std::numeric_limits<double>::infinity();
      };
      const double tol = std::max(1e-9, 1e-6 * tw_hi);
      tw_c = detail::golden_section_min(g, tw_lo, tw_hi, tol);
      c = detail::eval_threshold_point(p, f_c, tw_c);
      if (detail::better(c, best)) best = c;
    }
  }
  out.best = best;
  return out;
}

inline OptResult optimize_farm_pair(const OptProblem& p) {
  OptResult out;
  const double lam = p.workload.arrival_rate;
  const double mu = p.server.service_rate;
  OptCandidate best;
  for (int n = p.servers_min; n <= p.servers_max; ++n) {
    OptCandidate c;
    c.servers = n;
    // per-server power rises with frequency, so for a fixed size the
    // cheapest feasible frequency is the one meeting the budget exactly
    const double f_need = (1.0 / p.budget + lam / n) / mu;
    if (f_need > 1.0) {
      c.frequency = 1.0;
      if (lam / n < mu) {
        c.status = "infeasible";
        c.response = 1.0 / (mu - lam / n);  // best achievable, still over budget
      } else {
        c.status = "unstable";
      }
    } else {
      c.frequency = f_need;
      c.response = p.budget;
      c.power = n * (p.server.peak_dynamic_power * f_need * f_need * f_need +
                     p.server.peripheral_power);
      c.feasible = true;
    }
    out.frontier.push_back(c);
    if (detail::better(c, best)) best = c;
  }
  if (!best.feasible)
    throw Infeasible("no farm size in range meets the response budget");
  out.best = best;
  return out;
}

inline OptResult optimize(const OptProblem& p) {
  p.validate();
  switch (p.space) {
    case DecisionSpace::threshold_pair: return optimize_threshold_pair(p);
    case DecisionSpace::batch_triple: return optimize_batch_triple(p);
    case DecisionSpace::farm_pair: return optimize_farm_pair(p);
  }
  throw ConfigError("unknown decision space");
}

}  // namespace pmq
