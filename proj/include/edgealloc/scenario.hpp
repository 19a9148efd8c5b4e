#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgealloc/dual_engine.hpp"
#include "edgealloc/model.hpp"
#include "edgealloc/oracle.hpp"

namespace edgealloc {

/// One point of a scenario timeline.
struct Override {
  std::map<int, double> degrade;                   // node id -> delta in [0, 1]
  std::map<std::size_t, double> qos_min_override;  // group index -> new q_m
};

struct ScenarioTimeline {
  NetworkSpec base;
  std::vector<double> step_param;  // label per step (delta or r)
  std::vector<Override> steps;
};

/// Budgets of degraded nodes scaled by (1 - delta), q_m replaced where overridden.
NetworkSpec apply_override(const NetworkSpec& base, const Override& ov);

/// Degraded node blocks scaled by (1 - delta); everything else copied. No QoS check.
AllocationPolicy static_policy(const AllocationPolicy& base_solution, const NetworkSpec& net,
                               const Override& ov);

struct PolicyEvaluation {
  double objective = 0.0;
  std::vector<double> group_qos;
  std::vector<std::size_t> violations;  // groups with (G x)_m < q_m - 1e-9
};

PolicyEvaluation evaluate_policy(const AllocationPolicy& x, const Instance& inst);

struct SweepStep {
  double param = 0.0;
  std::vector<double> qos_min;  // q at this step
  AllocationPolicy dynamic_x;
  std::optional<AllocationPolicy> static_x;
  PolicyEvaluation dynamic_eval;
  std::optional<PolicyEvaluation> static_eval;
  OracleStatus oracle_status = OracleStatus::infeasible;
  double oracle_value = 0.0;
  bool dynamic_feasible = false;  // solver converged and no group violated
  bool converged = false;
  StopReason stop_reason = StopReason::iteration_cap;
  std::size_t iterations = 0;
  std::chrono::duration<double> wall_time{0.0};
};

struct PolicyTrace {
  std::string kind;  // "degradation" or "qos"
  std::vector<SweepStep> steps;
  std::vector<int> degraded_nodes;
};

struct SweepOptions {
  StepMode step_mode = StepMode::diminishing;
  std::optional<double> alpha0;  // scaled default per step when empty
  ConvergenceCriteria criteria;
  bool warm_start = true;
  double cycle_seconds = 600.0;
  // A solve counts as fast enough when it takes at most this share of a cycle.
  double timescale_fraction = 0.01;
};

/// Solves every step in order, warm-starting lambda from the last converged
/// step. With with_static, step 0 supplies the base solution for the static policy.
PolicyTrace run_timeline(const ScenarioTimeline& timeline, const SweepOptions& options,
                         bool with_static);

/// delta = 0, grid, 2 grid, ..., 1 applied to every node in degraded_nodes.
PolicyTrace run_degradation_sweep(const NetworkSpec& base, const std::vector<int>& degraded_nodes,
                                  double grid = 0.01, const SweepOptions& options = {});

/// q_m = r |m| for every group of `task`, r from r_min to r_max; other groups fixed.
PolicyTrace run_qos_sweep(const NetworkSpec& base, std::size_t task, double r_min = 2.0,
                          double r_max = 16.0, double r_step = 1.0,
                          const SweepOptions& options = {});

/// Slowest step's wall time against the allowed share of a cycle.
bool trace_within_timescale(const PolicyTrace& trace, const SweepOptions& options);

/// Long format: one "allocation" row per step/node/task and one "group" row per
/// step/group. Columns step_param,record,node_id,task_id,group_id,runs_dynamic,
/// runs_static,achieved_qos_dynamic,achieved_qos_static,q_m,feasible_dynamic,
/// feasible_static,oracle_feasible.
void write_trace_csv(std::ostream& out, const PolicyTrace& trace, const NetworkSpec& base);

/// One row per step: objectives, oracle value, violation counts, iterations.
void write_trace_summary_csv(std::ostream& out, const PolicyTrace& trace);

}  // namespace edgealloc
