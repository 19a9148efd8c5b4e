#include <doctest.h>

#include <sstream>

#include "edgealloc/config.hpp"
#include "edgealloc/scenario.hpp"

using namespace edgealloc;

namespace {

NetworkSpec shipped() { return load_config_file(EDGEALLOC_DEFAULT_CONFIG).network; }

std::size_t index_of(const NetworkSpec& net, int id) {
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    if (net.nodes[i].id == id) return i;
  }
  return net.nodes.size();
}

// Coarse grid keeps the unit run short; the acceptance binary uses 0.01.
const PolicyTrace& coarse_degradation() {
  static const PolicyTrace trace = run_degradation_sweep(shipped(), {3, 6}, 0.1);
  return trace;
}

}  // namespace

TEST_CASE("apply_override scales budgets and replaces minimums") {
  const auto base = shipped();
  Override ov;
  ov.degrade[3] = 0.25;
  ov.qos_min_override[0] = 9.0;
  const auto net = apply_override(base, ov);
  const auto j = index_of(base, 3);
  CHECK(net.nodes[j].energy_budget == doctest::Approx(0.75 * base.nodes[j].energy_budget));
  CHECK(net.nodes[j].memory_budget == doctest::Approx(0.75 * base.nodes[j].memory_budget));
  CHECK(net.nodes[0].energy_budget == base.nodes[0].energy_budget);
  CHECK(net.groups[0].qos_min == 9.0);
  CHECK(net.groups[1].qos_min == base.groups[1].qos_min);

  Override bad;
  bad.degrade[3] = 1.5;
  CHECK_THROWS_AS(apply_override(base, bad), ParameterError);
  Override unknown;
  unknown.degrade[42] = 0.1;
  CHECK_THROWS_AS(apply_override(base, unknown), ParameterError);
  Override neg_q;
  neg_q.qos_min_override[0] = -1.0;
  CHECK_THROWS_AS(apply_override(base, neg_q), ParameterError);
}

TEST_CASE("static policy scales only the degraded blocks") {
  const auto net = shipped();
  AllocationPolicy x(net.node_count(), net.task_count());
  const auto j = index_of(net, 3);
  x(j, 0) = 4.0;
  x(j, 1) = 2.0;
  x(0, 0) = 7.0;
  Override ov;
  ov.degrade[3] = 0.1;
  const auto s = static_policy(x, net, ov);
  CHECK(s(j, 0) == doctest::Approx(3.6));
  CHECK(s(j, 1) == doctest::Approx(1.8));
  CHECK(s(0, 0) == 7.0);

  ov.degrade[3] = 0.0;
  CHECK(static_policy(x, net, ov) == x);
  ov.degrade[3] = 1.0;
  CHECK(static_policy(x, net, ov)(j, 0) == 0.0);
  CHECK(static_policy(x, net, ov)(j, 1) == 0.0);
}

TEST_CASE("evaluate_policy reports objective, totals and violations") {
  const auto inst = Instance::build(shipped());
  AllocationPolicy zero(inst.network.node_count(), inst.network.task_count());
  const auto ez = evaluate_policy(zero, inst);
  CHECK(ez.objective == 0.0);
  CHECK(ez.violations.size() == inst.network.groups.size());

  AllocationPolicy x = zero;
  for (std::size_t i = 0; i < x.nodes(); ++i) {
    x(i, 0) = 2.0;
    x(i, 1) = 1.0;
  }
  const auto ex = evaluate_policy(x, inst);
  CHECK(ex.violations.empty());
  CHECK(ex.group_qos[0] == 6.0);
  double expected = 0.0;
  for (const auto& n : inst.network.nodes) expected += 2.0 * n.utility_coeffs[0] + n.utility_coeffs[1];
  CHECK(ex.objective == doctest::Approx(expected));
}

TEST_CASE("degradation sweep on a coarse grid") {
  const auto& trace = coarse_degradation();
  REQUIRE(trace.steps.size() == 11);
  CHECK(trace.kind == "degradation");
  CHECK(trace.degraded_nodes == std::vector<int>{3, 6});

  SUBCASE("no degradation: both policies coincide") {
    const auto& s0 = trace.steps.front();
    REQUIRE(s0.static_x.has_value());
    CHECK(*s0.static_x == s0.dynamic_x);
  }
  SUBCASE("full degradation zeroes the degraded blocks and breaks the static policy") {
    const auto& s = trace.steps.back();
    const auto net = shipped();
    for (int id : {3, 6}) {
      const auto j = index_of(net, id);
      for (std::size_t t = 0; t < net.task_count(); ++t) {
        CHECK(s.dynamic_x(j, t) == 0.0);
        CHECK((*s.static_x)(j, t) == 0.0);
      }
    }
    CHECK_FALSE(s.static_eval->violations.empty());
  }
  SUBCASE("the dynamic policy meets every minimum wherever the oracle is feasible") {
    for (const auto& s : trace.steps) {
      CAPTURE(s.param);
      if (s.oracle_status != OracleStatus::optimal) continue;
      CHECK(s.dynamic_eval.violations.empty());
      CHECK(s.dynamic_feasible);
      CHECK(s.dynamic_eval.objective == doctest::Approx(s.oracle_value).epsilon(1e-3));
    }
  }
  SUBCASE("a feasible static policy never out-earns the re-optimized one") {
    for (const auto& s : trace.steps) {
      if (s.static_eval->violations.empty()) {
        CHECK(s.static_eval->objective <= s.dynamic_eval.objective + 1e-3 * std::max(1.0, s.oracle_value));
      }
    }
  }
}

TEST_CASE("sweeps are reproducible byte for byte") {
  const auto net = shipped();
  const auto a = run_degradation_sweep(net, {3, 6}, 0.25);
  const auto b = run_degradation_sweep(net, {3, 6}, 0.25);
  std::ostringstream sa, sb, ta, tb;
  write_trace_csv(sa, a, net);
  write_trace_csv(sb, b, net);
  write_trace_summary_csv(ta, a);
  write_trace_summary_csv(tb, b);
  CHECK(sa.str() == sb.str());
  CHECK(ta.str() == tb.str());
  CHECK(sa.str().find("wall") == std::string::npos);
}

TEST_CASE("QoS sweep covers r = 2..16 on the wildfire groups") {
  const auto net = shipped();
  const auto trace = run_qos_sweep(net, 0);
  REQUIRE(trace.steps.size() == 15);
  CHECK(trace.kind == "qos");
  CHECK(trace.steps.front().param == 2.0);
  CHECK(trace.steps.back().param == 16.0);
  const auto& q = trace.steps.front().qos_min;
  CHECK(q[0] == 6.0);
  CHECK(q[1] == 4.0);
  CHECK(q[2] == 6.0);
  CHECK(q[3] == net.groups[3].qos_min);
  CHECK(trace.steps.back().qos_min[0] == 48.0);
  for (const auto& s : trace.steps) {
    CHECK_FALSE(s.static_x.has_value());
    CHECK(s.oracle_status == OracleStatus::optimal);
    CHECK(s.dynamic_feasible);
  }
}

TEST_CASE("sweep parameters are checked") {
  const auto net = shipped();
  CHECK_THROWS_AS(run_degradation_sweep(net, {3}, 0.0), ParameterError);
  CHECK_THROWS_AS(run_degradation_sweep(net, {3}, 0.3), ParameterError);
  CHECK_THROWS_AS(run_degradation_sweep(net, {99}, 0.5), ParameterError);
  CHECK_THROWS_AS(run_qos_sweep(net, 5), ParameterError);
  CHECK_THROWS_AS(run_qos_sweep(net, 0, 4.0, 2.0), ParameterError);
}

TEST_CASE("trace CSV layout") {
  const auto net = shipped();
  const auto trace = run_degradation_sweep(net, {3, 6}, 0.5);
  std::ostringstream os;
  write_trace_csv(os, trace, net);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line ==
        "step_param,record,node_id,task_id,group_id,runs_dynamic,runs_static,achieved_qos_dynamic,"
        "achieved_qos_static,q_m,feasible_dynamic,feasible_static,oracle_feasible");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  // 3 steps x (6 nodes x 2 tasks + 7 groups)
  CHECK(rows == 3 * (12 + 7));
}
