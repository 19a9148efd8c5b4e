#include <doctest.h>

#include <cmath>
#include <random>

#include "edgealloc/config.hpp"
#include "edgealloc/dual_engine.hpp"
#include "edgealloc/oracle.hpp"
#include "edgealloc/report.hpp"
#include "support/oracles.hpp"

using namespace edgealloc;

namespace {

// Optimum of the shipped scenario from an independent LP solve
// (scipy.optimize.linprog, HiGHS) on the same data.
constexpr double kShippedOptimum = 292.0803571428571;

Instance shipped() { return Instance::build(load_config_file(EDGEALLOC_DEFAULT_CONFIG).network); }

NetworkSpec single_node(double cap, double q) {
  NetworkSpec net;
  TaskSpec t;
  t.name = "only";
  t.energy_cost["box"] = 1.0;
  t.memory_cost["box"] = 1.0;
  net.tasks.push_back(t);
  NodeSpec n;
  n.id = 1;
  n.node_type = "box";
  n.energy_budget = cap;
  n.memory_budget = cap;
  n.utility_coeffs = {1.0};
  net.nodes.push_back(n);
  GroupSpec g;
  g.name = "g";
  g.weights = {1.0};
  g.qos_min = q;
  net.groups.push_back(g);
  return net;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("library oracle reproduces the independently computed optimum") {
  const auto inst = shipped();
  const auto sol = solve_centralized(make_centralized_problem(inst));
  CHECK(sol.value == doctest::Approx(kShippedOptimum).epsilon(1e-12));
}

TEST_CASE("step policy values") {
  StepPolicy c{StepMode::constant, 0.5};
  StepPolicy d{StepMode::diminishing, 0.5};
  CHECK(c.at(1) == 0.5);
  CHECK(c.at(100) == 0.5);
  CHECK(d.at(1) == 0.5);
  CHECK(d.at(4) == 0.25);
  for (std::size_t k = 1; k < 1000; ++k) CHECK(d.at(k + 1) <= d.at(k));
  const auto inst = shipped();
  CHECK(StepPolicy::scaled_default(inst.constraints).alpha0 == doctest::Approx(1.0 / 3.0));
  CHECK(parse_step_mode("constant") == StepMode::constant);
  CHECK_THROWS_AS(parse_step_mode("fast"), ParameterError);
}

TEST_CASE("q = 0 keeps lambda at zero and converges in one iteration") {
  auto net = load_config_file(EDGEALLOC_DEFAULT_CONFIG).network;
  for (auto& g : net.groups) g.qos_min = 0.0;
  const auto inst = Instance::build(net);
  auto state = DualState::start(inst);
  for (int k = 0; k < 5; ++k) {
    dual_step(state, inst, StepPolicy::scaled_default(inst.constraints));
    for (double l : state.lambda) CHECK(l == 0.0);
    for (std::size_t i = 0; i < inst.network.node_count(); ++i) {
      const auto best = solve_local_lp(inst.domains[i], inst.network.nodes[i].utility_coeffs);
      for (std::size_t t = 0; t < inst.network.task_count(); ++t) CHECK(state.x_current(i, t) == best.x[t]);
    }
  }
  const auto rep = run_until_converged(inst, StepPolicy::scaled_default(inst.constraints));
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(rep.stop_reason == StopReason::dual_stationary);
}

TEST_CASE("unreachable minimum grows lambda by at least alpha * shortfall per step") {
  const auto inst = Instance::build(single_node(10.0, 20.0));
  const StepPolicy step{StepMode::constant, 0.1};
  auto state = DualState::start(inst);
  double prev = 0.0;
  for (int k = 0; k < 50; ++k) {
    dual_step(state, inst, step);
    CHECK(state.lambda[0] - prev >= 0.1 * 10.0 - 1e-12);
    prev = state.lambda[0];
  }
  ConvergenceCriteria c;
  c.max_iterations = 2000;
  const auto rep = run_until_converged(inst, step, c);
  CHECK_FALSE(rep.converged);
  CHECK(rep.diverging_groups == std::vector<std::size_t>{0});
}

TEST_CASE("shipped scenario with the default diminishing step matches the oracle") {
  const auto inst = shipped();
  const auto rep = run_until_converged(inst, StepPolicy::scaled_default(inst.constraints));
  CHECK(rep.converged);
  CHECK(relative(rep.primal_value, kShippedOptimum) <= 1e-3);
  CHECK(rep.max_constraint_violation <= 1e-6);
  CHECK(max_group_deficit(inst, rep.x_final) <= 1e-6);
  for (const auto& dom : inst.domains) CHECK(dom.contains(rep.x_final.block(dom.node)));
  CHECK(rep.primal_value == linear_utility(inst.network, rep.x_final));
}

TEST_CASE("constant step: running minimum of the dual approaches the optimum") {
  // A constant step only reaches a neighborhood whose size scales with alpha;
  // one tenth of the scaled default is inside the 1e-3 band here.
  const auto inst = shipped();
  auto step = StepPolicy::scaled_default(inst.constraints, StepMode::constant);
  step.alpha0 /= 10.0;
  ConvergenceCriteria c;
  c.max_iterations = 20000;
  const auto rep = run_until_converged(inst, step, c);
  CHECK(rep.dual_value >= kShippedOptimum - 1e-9);
  CHECK(relative(rep.dual_value, kShippedOptimum) <= 1e-3);
}

TEST_CASE("doubling q until the oracle reports infeasible makes the engine give up") {
  auto net = load_config_file(EDGEALLOC_DEFAULT_CONFIG).network;
  int doublings = 0;
  while (true) {
    for (auto& g : net.groups) g.qos_min *= 2.0;
    ++doublings;
    const auto inst = Instance::build(net);
    if (solve_centralized(make_centralized_problem(inst)).status == OracleStatus::infeasible) break;
    REQUIRE(doublings < 20);
  }
  const auto inst = Instance::build(net);
  const auto rep = run_until_converged(inst, StepPolicy::scaled_default(inst.constraints));
  CHECK_FALSE(rep.converged);
  CHECK_FALSE(rep.diverging_groups.empty());
  CHECK_FALSE(rep.violated_groups.empty());
  for (std::size_t m : rep.diverging_groups) {
    CHECK(std::find(rep.violated_groups.begin(), rep.violated_groups.end(), m) != rep.violated_groups.end());
  }
}

TEST_CASE("dual value at lambda = 0 is the unconstrained per-node maximum") {
  const auto inst = shipped();
  double expected = 0.0;
  for (std::size_t i = 0; i < inst.network.node_count(); ++i) {
    const auto ref = oracles::vertex_enumeration_max(oracles::polytope_of(inst.domains[i]),
                                                     inst.network.nodes[i].utility_coeffs);
    expected += ref.value;
  }
  const std::vector<double> zero(inst.constraints.groups(), 0.0);
  CHECK(compute_dual_value(zero, inst) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(compute_dual_value(std::vector<double>(zero.size(), -1.0), inst), ParameterError);
}

TEST_CASE("weak duality at random nonnegative multipliers") {
  const auto inst = shipped();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lam(0.0, 5.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> l(inst.constraints.groups());
    for (double& v : l) v = lam(rng);
    CHECK(compute_dual_value(l, inst) >= kShippedOptimum - 1e-9);
  }
}

TEST_CASE("strong duality and complementary slackness at convergence") {
  const auto inst = shipped();
  // The summed residual is bounded by the absolute gap, so per-group 1e-3 needs a tighter gap.
  ConvergenceCriteria c;
  c.gap_tol = 1e-5;
  const auto rep = run_until_converged(inst, StepPolicy::scaled_default(inst.constraints), c);
  REQUIRE(rep.converged);
  CHECK(rep.dual_value - rep.primal_value <= 1e-5 * std::abs(rep.dual_value) + 1e-12);
  const auto totals = inst.constraints.group_totals(rep.x_final);
  double summed = 0.0;
  for (std::size_t m = 0; m < totals.size(); ++m) {
    const double q = inst.constraints.rhs[m];
    const double cs = rep.lambda_final[m] * (totals[m] - q);
    CHECK(cs >= -1e-9);
    CHECK(cs <= 1e-3);
    summed += cs;
  }
  CHECK(summed <= rep.dual_value - rep.primal_value + 1e-6);
}

TEST_CASE("lambda stays nonnegative and the best dual never increases") {
  const auto inst = shipped();
  ConvergenceCriteria c;
  c.record_trajectory = true;
  const auto rep = run_until_converged(inst, StepPolicy::scaled_default(inst.constraints), c);
  for (const auto& l : rep.lambda_trajectory) {
    for (double v : l) CHECK(v >= 0.0);
  }
  auto state = DualState::start(inst);
  double best = state.best_dual_value;
  for (int k = 0; k < 500; ++k) {
    dual_step(state, inst, StepPolicy::scaled_default(inst.constraints));
    CHECK(state.best_dual_value <= best);
    best = state.best_dual_value;
  }
}

TEST_CASE("ergodic average is the arithmetic mean of the iterates") {
  const auto inst = shipped();
  auto state = DualState::start(inst);
  std::vector<double> sum(inst.network.node_count() * inst.network.task_count(), 0.0);
  for (int k = 1; k <= 200; ++k) {
    dual_step(state, inst, StepPolicy::scaled_default(inst.constraints));
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += state.x_current.stacked()[j];
  }
  for (std::size_t j = 0; j < sum.size(); ++j) CHECK(state.x_average.stacked()[j] == doctest::Approx(sum[j] / 200.0));
}

TEST_CASE("two identical runs are bit-identical") {
  const auto inst = shipped();
  ConvergenceCriteria c;
  c.record_trajectory = true;
  const auto a = run_until_converged(inst, StepPolicy::scaled_default(inst.constraints), c);
  const auto b = run_until_converged(inst, StepPolicy::scaled_default(inst.constraints), c);
  CHECK(identical_reports(a, b));
}

TEST_CASE("repair") {
  SUBCASE("feasible input comes back unchanged") {
    const auto inst = shipped();
    const auto sol = solve_centralized(make_centralized_problem(inst));
    const auto rep = repair_feasibility(sol.x, inst);
    CHECK(rep.x == sol.x);
    CHECK(rep.violated_groups.empty());
    CHECK(rep.adjustments == 0);
  }
  SUBCASE("a group short by 0.5 with slack on one member raises that member by 0.5 / g") {
    auto net = single_node(10.0, 3.0);
    net.groups[0].weights = {2.0};
    const auto inst = Instance::build(net);
    AllocationPolicy x(1, 1);
    x(0, 0) = 1.25;  // total 2.5
    const auto rep = repair_feasibility(x, inst);
    CHECK(rep.x(0, 0) == doctest::Approx(1.25 + 0.5 / 2.0));
    CHECK(rep.violated_groups.empty());
  }
  SUBCASE("no slack anywhere leaves x as is and reports the shortfall") {
    const auto inst = Instance::build(single_node(10.0, 20.0));
    AllocationPolicy x(1, 1);
    x(0, 0) = 10.0;
    const auto rep = repair_feasibility(x, inst);
    CHECK(rep.x == x);
    CHECK(rep.violated_groups == std::vector<std::size_t>{0});
    CHECK(rep.max_violation == doctest::Approx(10.0));
  }
  SUBCASE("repair never leaves a domain") {
    const auto inst = shipped();
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
      AllocationPolicy x(inst.network.node_count(), inst.network.task_count());
      for (std::size_t i = 0; i < x.nodes(); ++i) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        auto vert = solve_local_lp(inst.domains[i], std::vector<double>{u(rng), u(rng)});
        const double s = u(rng);
        for (std::size_t t = 0; t < x.tasks(); ++t) x(i, t) = s * vert.x[t];
      }
      const auto rep = repair_feasibility(x, inst);
      for (const auto& dom : inst.domains) CHECK(dom.max_violation(rep.x.block(dom.node)) <= 1e-9);
    }
  }
}

TEST_CASE("local solve failures propagate with the node id") {
  const auto inst = shipped();
  EngineOptions opts;
  ConcaveTerm broken;
  broken.value = [](std::span<const double> x) { return -x[0] * x[0]; };
  broken.gradient = [](std::span<const double>) { return std::vector<double>{5.0, 5.0}; };
  opts.concave_utilities.assign(inst.network.node_count(), std::nullopt);
  opts.concave_utilities[3] = broken;
  auto state = DualState::start(inst);
  CHECK_THROWS_WITH(dual_step(state, inst, StepPolicy::scaled_default(inst.constraints), opts),
                    doctest::Contains("node 4"));
}

TEST_CASE("concave utilities run through the same loop") {
  const auto inst = shipped();
  EngineOptions opts;
  ConcaveTerm diminishing_returns;
  diminishing_returns.value = [](std::span<const double> x) { return -0.01 * (x[0] * x[0] + x[1] * x[1]); };
  diminishing_returns.gradient = [](std::span<const double> x) {
    return std::vector<double>{-0.02 * x[0], -0.02 * x[1]};
  };
  opts.concave_utilities.assign(inst.network.node_count(), diminishing_returns);
  ConvergenceCriteria c;
  c.max_iterations = 3000;
  const auto rep = run_until_converged(inst, StepPolicy::scaled_default(inst.constraints), c, opts);
  CHECK(rep.max_constraint_violation <= 1e-6);
  CHECK(rep.primal_value <= rep.dual_value + 1e-6);
}
