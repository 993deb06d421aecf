// Sweet-spot search checks: agreement with exhaustive grid oracles, frozen
// optima verified against high-precision external minimization, budget
// monotonicity, and feasibility bookkeeping on the reported frontier.

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "pmq/analytic.hpp"
#include "pmq/optimize.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace pmq;

namespace {

OptProblem base_problem(double budget) {
  OptProblem p;
  p.server.peak_dynamic_power = 150;
  p.server.peripheral_power = 70;
  p.server.service_rate = 1;
  p.workload.arrival_rate = 0.1;
  p.wakeup_latency = 10;
  p.budget = budget;
  return p;
}

// exhaustive (frequency, threshold) scan straight over the closed form
double threshold_grid_oracle(const OptProblem& p, double f_step, double tc_step,
                             double tc_max) {
  double best = std::numeric_limits<double>::infinity();
  for (double f = f_step; f < 1.0 + 1e-12; f += f_step) {
    const double fr = std::min(f, 1.0);
    if (!(p.workload.arrival_rate < p.server.service_rate * fr)) continue;
    const ServerParams s = p.server.with_frequency(fr);
    for (double tc = 0.0; tc <= tc_max; tc += tc_step) {
      const Policy pol{IdleThreshold::finite(tc), p.wakeup_latency, 0.0};
      const Metrics m = threshold_metrics(s, p.workload, pol);
      if (m.response <= p.budget && m.power < best) best = m.power;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("threshold search is at least as good as an exhaustive grid") {
  const OptProblem p = base_problem(15.0);
  const OptResult r = optimize(p);
  const double oracle = threshold_grid_oracle(p, 1e-2, 0.5, 50.0);
  REQUIRE(r.best.power <= oracle + 1e-9);
  REQUIRE(oracle - r.best.power <= 0.01 * oracle);
  REQUIRE(r.best.response <= p.budget + 1e-9);
}

TEST_CASE("threshold search lands on the slack-region sweet spot") {
  // budget loose enough that the best point shuts down immediately;
  // reference optimum minimized externally to 1e-12
  const OptResult r = optimize(base_problem(15.0));
  REQUIRE(r.best.feasible);
  REQUIRE_THAT(r.best.power, WithinRel(49.10791738064192, 1e-9));
  REQUIRE_THAT(r.best.frequency, WithinAbs(0.3376020837766481, 1e-5));
  REQUIRE_FALSE(r.best.idle_threshold.is_never());
  REQUIRE(r.best.idle_threshold.seconds() == 0.0);
  REQUIRE(r.best.response < 14.0);  // budget does not bind here
}

TEST_CASE("threshold search meets a tight budget with equality") {
  OptProblem p = base_problem(0.0);
  const Metrics rth = race_to_halt_metrics(p.server, p.workload, 10.0);
  p.budget = rth.response;
  const OptResult r = optimize(p);
  REQUIRE_THAT(r.best.power, WithinRel(58.510177385750865, 1e-8));
  REQUIRE_THAT(r.best.frequency, WithinAbs(0.41952056517642294, 1e-4));
  REQUIRE_THAT(r.best.response, WithinAbs(p.budget, 1e-9));
  REQUIRE(r.best.idle_threshold.seconds() > 5.0);
  REQUIRE(r.best.idle_threshold.seconds() < 6.0);
  // slowing down plus a finite threshold beats racing to halt at full speed
  REQUIRE(r.best.power < 0.99 * rth.power);
}

TEST_CASE("threshold frontier labels every grid frequency") {
  const OptResult r = optimize(base_problem(15.0));
  REQUIRE(r.frontier.size() == 1000);
  REQUIRE(r.frontier.back().frequency == 1.0);
  std::size_t unstable = 0, infeasible = 0, feasible = 0;
  double prev_f = 0.0;
  for (const OptCandidate& c : r.frontier) {
    REQUIRE(c.frequency > prev_f);
    prev_f = c.frequency;
    if (std::strcmp(c.status, "unstable") == 0) {
      ++unstable;
      REQUIRE_FALSE(c.feasible);
    } else if (std::strcmp(c.status, "infeasible") == 0) {
      ++infeasible;
      REQUIRE_FALSE(c.feasible);
      REQUIRE(c.response > 15.0);  // the floor itself is over budget
    } else {
      ++feasible;
      REQUIRE(c.feasible);
      REQUIRE(c.response <= 15.0 + 1e-9);
    }
  }
  // stability needs f > 0.1; the always-on floor fits the budget from f = 0.167
  REQUIRE(unstable == 100);
  REQUIRE(infeasible == 66);
  REQUIRE(feasible == 834);
}

TEST_CASE("optimal power is nonincreasing in the budget") {
  double prev = std::numeric_limits<double>::infinity();
  for (double b : {9.0, 10.0, 11.0, 12.0, 14.0, 16.0, 20.0, 30.0, 100.0}) {
    const OptResult r = optimize(base_problem(b));
    REQUIRE(r.best.power <= prev + 1e-9);
    prev = r.best.power;
  }

  OptProblem farm = base_problem(0.0);
  farm.space = DecisionSpace::farm_pair;
  farm.server.peripheral_power = 10;
  farm.workload.arrival_rate = 0.7;
  farm.servers_max = 8;
  prev = std::numeric_limits<double>::infinity();
  for (double b : {2.0, 3.0, 4.0, 6.0, 10.0}) {
    farm.budget = b;
    const OptResult r = optimize(farm);
    REQUIRE(r.best.power <= prev + 1e-9);
    prev = r.best.power;
  }
}

TEST_CASE("budgets below the response floor are rejected") {
  OptProblem p = base_problem(1.0);  // floor at f = 1 is 1/0.9
  REQUIRE_THROWS_AS(optimize(p), Infeasible);
  p.space = DecisionSpace::batch_triple;
  REQUIRE_THROWS_AS(optimize(p), Infeasible);

  OptProblem farm = base_problem(1.0);
  farm.space = DecisionSpace::farm_pair;
  farm.workload.arrival_rate = 0.7;
  farm.servers_max = 8;  // even 8 servers need f > 1 for a response of 1
  REQUIRE_THROWS_AS(optimize(farm), Infeasible);
}

TEST_CASE("batching beats the plain threshold search on a loose budget") {
  OptProblem p = base_problem(15.0);
  const double plain = optimize(p).best.power;
  p.space = DecisionSpace::batch_triple;
  const OptResult r = optimize(p);
  REQUIRE(r.best.power < plain - 5.0);
  // externally minimized joint optimum: power 41.85902094392989 at
  // batch delay 7.5237, frequency 0.42736, threshold zero
  REQUIRE(r.best.power >= 41.85902094392989 - 1e-6);
  REQUIRE(r.best.power <= 41.88);
  REQUIRE(r.best.batch_delay > 5.5);
  REQUIRE(r.best.batch_delay < 10.5);
  REQUIRE(r.best.response <= 15.0 + 1e-9);
  REQUIRE(r.best.response > 14.5);  // the budget is nearly binding
}

TEST_CASE("batch search with a zero-delay grid reduces to the threshold search") {
  OptProblem p = base_problem(15.0);
  const double plain = optimize(p).best.power;
  p.space = DecisionSpace::batch_triple;
  p.batch_delay_grid = {0.0};
  const OptResult r = optimize(p);
  REQUIRE_THAT(r.best.power, WithinRel(plain, 1e-9));
  REQUIRE(r.best.batch_delay == 0.0);
}

TEST_CASE("batch search approaches the duty-cycle floor when the budget is loose") {
  OptProblem p = base_problem(1e9);
  p.space = DecisionSpace::batch_triple;
  const OptResult r = optimize(p);
  // infimum: power -> (P0 f^3 + C) * rho as the batch delay grows; its
  // minimum over f is 17.055470477108912 at f = cbrt(C / 2 P0)
  REQUIRE(r.best.power > 17.0554);
  REQUIRE(r.best.power < 1.01 * 17.055470477108912);
  REQUIRE(r.best.batch_delay > 9999.0);  // default grid tops out at 1e4
  REQUIRE_THAT(r.best.frequency, WithinAbs(0.6137623447158287, 1e-3));
}

TEST_CASE("with a free wake-up the search recovers the cube-root frequency") {
  OptProblem p = base_problem(1e6);
  p.wakeup_latency = 0;  // shutdown costs nothing, power is active * rho
  const OptResult r = optimize(p);
  REQUIRE_THAT(r.best.frequency, WithinAbs(0.6156382501492778, 1e-5));
  REQUIRE_THAT(r.best.power, WithinRel(17.055470477108912, 1e-9));
}

TEST_CASE("farm search matches the per-size closed form") {
  OptProblem p = base_problem(4.0);
  p.space = DecisionSpace::farm_pair;
  p.server.peripheral_power = 10;
  p.workload.arrival_rate = 0.7;
  p.servers_min = 1;
  p.servers_max = 5;
  const OptResult r = optimize(p);
  REQUIRE(r.frontier.size() == 5);
  const double expect[5] = {138.60625, 84.8, 80.81041666666665, 86.059375,
                            94.48925};
  for (int i = 0; i < 5; ++i) {
    REQUIRE(r.frontier[i].servers == i + 1);
    REQUIRE(r.frontier[i].feasible);
    REQUIRE(r.frontier[i].response == 4.0);  // budget met with equality
    REQUIRE_THAT(r.frontier[i].power, WithinRel(expect[i], 1e-12));
  }
  REQUIRE(r.best.servers == 3);
  REQUIRE_THAT(r.best.power, WithinRel(80.81041666666665, 1e-12));
  REQUIRE_THAT(r.best.frequency, WithinRel(0.25 + 0.7 / 3, 1e-12));
}

TEST_CASE("farm search beats a fine brute-force frequency grid") {
  OptProblem p = base_problem(4.0);
  p.space = DecisionSpace::farm_pair;
  p.server.peripheral_power = 10;
  p.workload.arrival_rate = 0.7;
  p.servers_max = 8;
  const OptResult r = optimize(p);

  double oracle = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= 8; ++n) {
    const Workload per{p.workload.arrival_rate / n};
    for (int i = 1; i <= 10000; ++i) {
      const double f = std::min(i * 1e-4, 1.0);
      if (!(per.arrival_rate < p.server.service_rate * f)) continue;
      const Metrics m = mm1_metrics(p.server.with_frequency(f), per);
      if (m.response <= p.budget && n * m.power < oracle) oracle = n * m.power;
    }
  }
  REQUIRE(r.best.power <= oracle + 1e-9);
  // oracle granularity: dJ/df = 3 n P0 f^2 ~ 315 W per unit frequency at the
  // winning size, so a 1e-4 grid can sit up to ~0.032 W above the optimum
  REQUIRE(oracle - r.best.power <= 0.04);
}

TEST_CASE("farm search with a loose budget sits just above the boundary optimum") {
  OptProblem p = base_problem(1e6);
  p.space = DecisionSpace::farm_pair;
  p.server.peripheral_power = 10;
  p.workload.arrival_rate = 0.7;
  p.servers_max = 8;
  const OptResult r = optimize(p);
  REQUIRE(r.best.servers == 2);
  REQUIRE_THAT(r.best.frequency, WithinRel(1e-6 + 0.35, 1e-12));
  REQUIRE(r.best.power > 2 * (150 * 0.35 * 0.35 * 0.35 + 10));  // 32.8625
  REQUIRE(r.best.power < 32.87);

  const FlowSplitPlan plan = optimal_flow_split(p.server, p.workload);
  REQUIRE(plan.servers == r.best.servers);
}

TEST_CASE("farm frontier flags sizes that cannot carry the load") {
  OptProblem p = base_problem(10.0);
  p.space = DecisionSpace::farm_pair;
  p.server.peripheral_power = 10;
  p.workload.arrival_rate = 1.5;
  p.servers_max = 10;
  const OptResult r = optimize(p);
  REQUIRE(std::strcmp(r.frontier[0].status, "unstable") == 0);
  REQUIRE_FALSE(r.frontier[0].feasible);
  REQUIRE(r.best.servers == 5);  // interior: 4 and 6 servers both cost more
  REQUIRE_THAT(r.best.power, WithinRel(98.0, 1e-12));
}

TEST_CASE("single-size farm range degenerates to plain frequency scaling") {
  OptProblem p = base_problem(4.0);
  p.space = DecisionSpace::farm_pair;
  p.server.peripheral_power = 10;
  p.workload.arrival_rate = 0.7;
  p.servers_min = 1;
  p.servers_max = 1;
  const OptResult r = optimize(p);
  REQUIRE(r.frontier.size() == 1);
  REQUIRE(r.best.servers == 1);
  REQUIRE_THAT(r.best.power, WithinRel(138.60625, 1e-12));
}

TEST_CASE("search problem validation") {
  OptProblem p = base_problem(15.0);
  p.budget = -1;
  REQUIRE_THROWS_AS(optimize(p), ConfigError);
  p = base_problem(15.0);
  p.frequency_step = 0.6;
  REQUIRE_THROWS_AS(optimize(p), ConfigError);
  p = base_problem(15.0);
  p.servers_min = 0;
  REQUIRE_THROWS_AS(optimize(p), ConfigError);
  p = base_problem(15.0);
  p.batch_delay_grid = {1.0, -2.0};
  REQUIRE_THROWS_AS(optimize(p), ConfigError);
}
