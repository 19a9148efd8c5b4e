#pragma once

#include <chrono>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgealloc/local_solver.hpp"
#include "edgealloc/model.hpp"

namespace edgealloc {

enum class StepMode { constant, diminishing };

const char* to_string(StepMode m);
StepMode parse_step_mode(const std::string& s);

struct StepPolicy {
  StepMode mode = StepMode::diminishing;
  double alpha0 = 1.0;

  /// alpha_k for k >= 1: alpha0 (constant) or alpha0 / sqrt(k) (diminishing).
  [[nodiscard]] double at(std::size_t k) const;

  /// alpha0 = 1 / (max row norm of G)^2.
  static StepPolicy scaled_default(const ConstraintSystem& sys,
                                   StepMode mode = StepMode::diminishing);
};

struct ConvergenceCriteria {
  double dual_tol = 1e-6;  // ||lambda(k+1) - lambda(k)||_inf
  double feas_tol = 1e-6;  // max(q - G x, 0)_inf
  // Relative duality gap between the best dual value and the repaired average.
  double gap_tol = 1e-4;
  std::size_t gap_check_interval = 100;
  std::size_t max_iterations = 200000;
  bool record_trajectory = false;
};

/// Optional concave additions to the linear utilities, one slot per node.
struct EngineOptions {
  std::vector<std::optional<ConcaveTerm>> concave_utilities;
  double concave_tol = 1e-9;

  [[nodiscard]] bool linear() const;
};

struct DualState {
  std::vector<double> lambda;
  std::size_t iteration = 0;
  AllocationPolicy x_current;
  AllocationPolicy x_sum;  // x(1) + ... + x(k)
  AllocationPolicy x_average;
  double best_dual_value = std::numeric_limits<double>::infinity();
  std::vector<double> best_lambda;
  double last_dual_value = std::numeric_limits<double>::quiet_NaN();
  double last_lambda_change = std::numeric_limits<double>::infinity();

  /// Cold start (x = 0, lambda = 0), or a warm start from a prior lambda.
  static DualState start(const Instance& inst, std::optional<std::vector<double>> lambda = {});

  /// Folds in x(k+1), lambda(k+1) and the dual value d(lambda(k)) realized by x(k+1).
  void record(const AllocationPolicy& x_next, std::vector<double> lambda_next,
              double dual_value_at_previous);
};

/// u_i + w_i with w_i[t] = sum over groups m of task t of lambda_m * g_m[i] (ascending m).
std::vector<double> node_price(const Instance& inst, std::size_t node,
                               std::span<const double> lambda);

/// max{lambda - alpha (total - q), 0}
inline double project_multiplier(double lambda, double alpha, double total, double q) {
  const double next = lambda - alpha * (total - q);
  return next > 0.0 ? next : 0.0;
}

/// Best response of one node to its price vector.
LocalSolution node_best_response(const Instance& inst, std::size_t node,
                                 std::span<const double> price, const EngineOptions& options);

/// One iteration of projected dual descent.
void dual_step(DualState& state, const Instance& inst, const StepPolicy& step,
               const EngineOptions& options = {});

/// max_x sum_i U_i(x_i) + lambda^T (G x - q), via per-node solves.
double compute_dual_value(std::span<const double> lambda, const Instance& inst,
                          const EngineOptions& options = {});

struct RepairResult {
  AllocationPolicy x;
  std::vector<std::size_t> violated_groups;
  double max_violation = 0.0;  // max(q - G x, 0) after repair
  std::size_t adjustments = 0;
};

/// Raises members of deficient groups inside their remaining domain slack
/// (proportional fill), then shifts effort away from tasks whose groups keep
/// a surplus. Never leaves a node's domain.
RepairResult repair_feasibility(const AllocationPolicy& x, const Instance& inst);

/// max(q - G x, 0)_inf computed groupwise.
double max_group_deficit(const Instance& inst, const AllocationPolicy& x);

/// Objective including any concave additions.
double primal_objective(const Instance& inst, const AllocationPolicy& x,
                        const EngineOptions& options = {});

enum class StopReason { dual_stationary, certified_gap, certified_infeasible, iteration_cap };
const char* to_string(StopReason r);

struct SolveReport {
  AllocationPolicy x_final;    // repaired
  AllocationPolicy x_average;  // before repair
  std::vector<double> lambda_final;
  std::size_t iterations = 0;
  double dual_value = 0.0;  // best d(lambda(k)) seen
  double primal_value = 0.0;
  double gap = 0.0;
  double max_constraint_violation = 0.0;
  bool converged = false;
  StopReason stop_reason = StopReason::iteration_cap;
  std::vector<std::size_t> diverging_groups;
  std::vector<std::size_t> violated_groups;
  std::chrono::duration<double> wall_time{0.0};
  std::vector<std::vector<double>> lambda_trajectory;  // lambda(0), lambda(1), ... when recorded
};

/// Stopping rules and report assembly, shared by the centralized loop and the
/// message-passing harness so both stop on the same iteration.
class ConvergenceMonitor {
 public:
  ConvergenceMonitor(const Instance& inst, ConvergenceCriteria criteria, EngineOptions options,
                     const DualState& initial);

  bool should_stop(const DualState& state);
  [[nodiscard]] SolveReport finalize(const DualState& state) const;

 private:
  const Instance& inst_;
  ConvergenceCriteria criteria_;
  EngineOptions options_;
  double utility_floor_ = 0.0;
  StopReason reason_ = StopReason::iteration_cap;
  std::vector<std::vector<double>> trajectory_;
  std::vector<double> snapshot_prev_;
  std::vector<double> snapshot_last_;
  std::size_t next_snapshot_ = 1;
};

SolveReport run_until_converged(const Instance& inst, const StepPolicy& step,
                                const ConvergenceCriteria& criteria = {},
                                const EngineOptions& options = {},
                                std::optional<std::vector<double>> initial_lambda = {});

}  // namespace edgealloc
