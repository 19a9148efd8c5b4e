#include "edgealloc/dual_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace edgealloc {

const char* to_string(StepMode m) {
  return m == StepMode::constant ? "constant" : "diminishing";
}

StepMode parse_step_mode(const std::string& s) {
  if (s == "constant") return StepMode::constant;
  if (s == "diminishing") return StepMode::diminishing;
  throw ParameterError("unknown step mode '" + s + "' (expected constant or diminishing)");
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::dual_stationary: return "dual-stationary";
    case StopReason::certified_gap: return "certified-gap";
    case StopReason::certified_infeasible: return "certified-infeasible";
    case StopReason::iteration_cap: return "iteration-cap";
  }
  return "unknown";
}

double StepPolicy::at(std::size_t k) const {
  if (mode == StepMode::constant) return alpha0;
  return alpha0 / std::sqrt(static_cast<double>(std::max<std::size_t>(k, 1)));
}

StepPolicy StepPolicy::scaled_default(const ConstraintSystem& sys, StepMode mode) {
  const double norm_sq = sys.max_row_norm_squared();
  return {mode, norm_sq > 0.0 ? 1.0 / norm_sq : 1.0};
}

bool EngineOptions::linear() const {
  return std::none_of(concave_utilities.begin(), concave_utilities.end(),
                      [](const auto& term) { return term.has_value(); });
}

DualState DualState::start(const Instance& inst, std::optional<std::vector<double>> lambda) {
  const std::size_t n = inst.network.node_count();
  const std::size_t t = inst.network.task_count();
  const std::size_t m = inst.constraints.groups();
  DualState s;
  if (lambda) {
    if (lambda->size() != m) throw ParameterError("warm-start lambda has wrong length");
    s.lambda = std::move(*lambda);
    for (double& v : s.lambda) {
      if (!std::isfinite(v)) throw ParameterError("warm-start lambda must be finite");
      v = std::max(v, 0.0);
    }
  } else {
    s.lambda.assign(m, 0.0);
  }
  s.x_current = AllocationPolicy(n, t);
  s.x_sum = AllocationPolicy(n, t);
  s.x_average = AllocationPolicy(n, t);
  s.best_lambda = s.lambda;
  return s;
}

void DualState::record(const AllocationPolicy& x_next, std::vector<double> lambda_next,
                       double dual_value_at_previous) {
  double change = 0.0;
  for (std::size_t m = 0; m < lambda.size(); ++m) {
    change = std::max(change, std::abs(lambda_next[m] - lambda[m]));
  }
  if (dual_value_at_previous < best_dual_value) {
    best_dual_value = dual_value_at_previous;
    best_lambda = lambda;
  }
  last_dual_value = dual_value_at_previous;
  last_lambda_change = change;
  lambda = std::move(lambda_next);
  ++iteration;
  x_current = x_next;
  auto sum = x_sum.stacked();
  auto avg = x_average.stacked();
  const auto next = x_next.stacked();
  const double k = static_cast<double>(iteration);
  for (std::size_t j = 0; j < sum.size(); ++j) {
    sum[j] += next[j];
    avg[j] = sum[j] / k;
  }
}

std::vector<double> node_price(const Instance& inst, std::size_t node,
                               std::span<const double> lambda) {
  const auto& sys = inst.constraints;
  std::vector<double> price = inst.network.nodes[node].utility_coeffs;
  for (std::size_t m = 0; m < sys.groups(); ++m) {
    for (const auto& member : sys.members[m]) {
      if (member.node == node) {
        price[sys.group_task[m]] += lambda[m] * member.weight;
        break;
      }
    }
  }
  return price;
}

LocalSolution node_best_response(const Instance& inst, std::size_t node,
                                 std::span<const double> price, const EngineOptions& options) {
  const auto& dom = inst.domains[node];
  LocalSolution sol;
  if (node < options.concave_utilities.size() && options.concave_utilities[node]) {
    LocalObjective obj{std::vector<double>(price.begin(), price.end()),
                       options.concave_utilities[node]};
    try {
      sol = solve_local_concave(dom, obj, options.concave_tol);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "local solve failed on node " << inst.network.nodes[node].id << ": " << e.what();
      throw std::runtime_error(os.str());
    }
  } else {
    sol = solve_local_lp(dom, price);
  }
  if (sol.status == SolveStatus::infeasible) {
    std::ostringstream os;
    os << "local solve infeasible on node " << inst.network.nodes[node].id;
    throw std::runtime_error(os.str());
  }
  return sol;
}

void dual_step(DualState& state, const Instance& inst, const StepPolicy& step,
               const EngineOptions& options) {
  const auto& sys = inst.constraints;
  const std::size_t n = inst.network.node_count();
  const std::size_t k = state.iteration + 1;
  const double alpha = step.at(k);

  AllocationPolicy x_next(n, inst.network.task_count());
  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto price = node_price(inst, i, state.lambda);
    const auto sol = node_best_response(inst, i, price, options);
    std::copy(sol.x.begin(), sol.x.end(), x_next.block(i).begin());
    dual += sol.objective_value;
  }
  const auto totals = sys.group_totals(x_next);
  std::vector<double> lambda_next(sys.groups());
  for (std::size_t m = 0; m < sys.groups(); ++m) {
    lambda_next[m] = project_multiplier(state.lambda[m], alpha, totals[m], sys.rhs[m]);
    dual -= state.lambda[m] * sys.rhs[m];
  }
  state.record(x_next, std::move(lambda_next), dual);
}

double compute_dual_value(std::span<const double> lambda, const Instance& inst,
                          const EngineOptions& options) {
  for (double v : lambda) {
    if (!(v >= 0.0)) throw ParameterError("compute_dual_value: lambda must be >= 0");
  }
  double dual = 0.0;
  for (std::size_t i = 0; i < inst.network.node_count(); ++i) {
    const auto price = node_price(inst, i, lambda);
    dual += node_best_response(inst, i, price, options).objective_value;
  }
  for (std::size_t m = 0; m < inst.constraints.groups(); ++m) {
    dual -= lambda[m] * inst.constraints.rhs[m];
  }
  return dual;
}

double max_group_deficit(const Instance& inst, const AllocationPolicy& x) {
  const auto totals = inst.constraints.group_totals(x);
  double worst = 0.0;
  for (std::size_t m = 0; m < totals.size(); ++m) {
    worst = std::max(worst, inst.constraints.rhs[m] - totals[m]);
  }
  return worst;
}

double primal_objective(const Instance& inst, const AllocationPolicy& x,
                        const EngineOptions& options) {
  double total = linear_utility(inst.network, x);
  for (std::size_t i = 0; i < options.concave_utilities.size(); ++i) {
    if (options.concave_utilities[i]) total += options.concave_utilities[i]->value(x.block(i));
  }
  return total;
}

namespace {

double row_lhs(const HalfPlane& row, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) s += row.coeffs[t] * x[t];
  return s;
}

// How far x_i[t] can rise on its own before some row binds.
double single_room(const LocalDomain& dom, std::span<const double> xi, std::size_t t) {
  double room = std::numeric_limits<double>::infinity();
  for (const auto& row : dom.rows) {
    if (row.coeffs[t] <= 0.0) continue;
    room = std::min(room, std::max(row.bound - row_lhs(row, xi), 0.0) / row.coeffs[t]);
  }
  return room;
}

}  // namespace

RepairResult repair_feasibility(const AllocationPolicy& x0, const Instance& inst) {
  const auto& sys = inst.constraints;
  const std::size_t tasks = inst.network.task_count();
  RepairResult out{x0, {}, 0.0, 0};
  auto& x = out.x;
  auto totals = sys.group_totals(x);

  for (std::size_t m = 0; m < sys.groups(); ++m) {
    const double deficit = sys.rhs[m] - totals[m];
    if (deficit <= 0.0) continue;
    const std::size_t t = sys.group_task[m];

    std::vector<double> room(sys.members[m].size());
    double capacity = 0.0;
    std::size_t unbounded = sys.members[m].size();
    for (std::size_t k = 0; k < sys.members[m].size(); ++k) {
      const auto& member = sys.members[m][k];
      room[k] = single_room(inst.domains[member.node], x.block(member.node), t);
      if (std::isinf(room[k])) {
        if (unbounded == sys.members[m].size()) unbounded = k;
        continue;
      }
      capacity += member.weight * room[k];
    }
    if (unbounded != sys.members[m].size()) {
      const auto& member = sys.members[m][unbounded];
      x(member.node, t) += deficit / member.weight;
      ++out.adjustments;
    } else if (capacity > 0.0) {
      const double fraction = std::min(1.0, deficit / capacity);
      for (std::size_t k = 0; k < sys.members[m].size(); ++k) {
        if (room[k] <= 0.0) continue;
        x(sys.members[m][k].node, t) += room[k] * fraction;
        ++out.adjustments;
      }
    }
    totals = sys.group_totals(x);
  }

  // Shift effort from surplus tasks on the same node when the fill ran out of slack.
  for (std::size_t m = 0; m < sys.groups(); ++m) {
    const std::size_t t = sys.group_task[m];
    for (const auto& member : sys.members[m]) {
      double deficit = sys.rhs[m] - totals[m];
      if (deficit <= 0.0) break;
      const std::size_t i = member.node;
      const auto& dom = inst.domains[i];
      for (std::size_t s = 0; s < tasks && deficit > 0.0; ++s) {
        if (s == t) continue;
        double donate_max = x(i, s);
        for (std::size_t other = 0; other < sys.groups(); ++other) {
          if (sys.group_task[other] != s) continue;
          for (const auto& om : sys.members[other]) {
            if (om.node != i) continue;
            donate_max = std::min(donate_max, std::max(totals[other] - sys.rhs[other], 0.0) / om.weight);
          }
        }
        if (donate_max <= 0.0) continue;

        double raise_max = deficit / member.weight;
        for (const auto& row : dom.rows) {
          if (row.coeffs[t] <= 0.0) continue;
          const double slack = std::max(row.bound - row_lhs(row, x.block(i)), 0.0);
          raise_max = std::min(raise_max, (slack + row.coeffs[s] * donate_max) / row.coeffs[t]);
        }
        if (raise_max <= 0.0) continue;

        double donate = 0.0;
        for (const auto& row : dom.rows) {
          if (row.coeffs[t] <= 0.0) continue;
          const double slack = std::max(row.bound - row_lhs(row, x.block(i)), 0.0);
          const double need = row.coeffs[t] * raise_max - slack;
          if (need > 0.0 && row.coeffs[s] > 0.0) donate = std::max(donate, need / row.coeffs[s]);
        }
        donate = std::min(donate, donate_max);
        x(i, t) += raise_max;
        x(i, s) = std::max(x(i, s) - donate, 0.0);
        ++out.adjustments;
        totals = sys.group_totals(x);
        deficit = sys.rhs[m] - totals[m];
      }
    }
  }

  for (std::size_t m = 0; m < sys.groups(); ++m) {
    const double gap = sys.rhs[m] - totals[m];
    out.max_violation = std::max(out.max_violation, gap);
    if (gap > 1e-9) out.violated_groups.push_back(m);
  }
  return out;
}

ConvergenceMonitor::ConvergenceMonitor(const Instance& inst, ConvergenceCriteria criteria,
                                       EngineOptions options, const DualState& initial)
    : inst_(inst), criteria_(criteria), options_(std::move(options)) {
  if (!(criteria_.dual_tol > 0.0) || !(criteria_.feas_tol > 0.0) || !(criteria_.gap_tol > 0.0)) {
    throw ParameterError("convergence tolerances must be > 0");
  }
  if (criteria_.max_iterations == 0) throw ParameterError("max_iterations must be >= 1");
  if (criteria_.gap_check_interval == 0) criteria_.gap_check_interval = 1;
  // Lowest utility any domain-feasible policy can score; a dual value below
  // it certifies that the group constraints cannot all hold.
  if (options_.linear()) {
    for (std::size_t i = 0; i < inst.network.node_count(); ++i) {
      std::vector<double> neg = inst.network.nodes[i].utility_coeffs;
      for (double& v : neg) v = -v;
      utility_floor_ -= solve_local_lp(inst.domains[i], neg).objective_value;
    }
  }
  if (criteria_.record_trajectory) trajectory_.push_back(initial.lambda);
  snapshot_prev_ = initial.lambda;
  snapshot_last_ = initial.lambda;
}

bool ConvergenceMonitor::should_stop(const DualState& state) {
  const std::size_t k = state.iteration;
  if (criteria_.record_trajectory) trajectory_.push_back(state.lambda);
  if (k >= next_snapshot_) {
    snapshot_prev_ = snapshot_last_;
    snapshot_last_ = state.lambda;
    next_snapshot_ *= 2;
  }

  const bool linear = options_.linear();
  const AllocationPolicy& candidate = linear ? state.x_average : state.x_current;

  if (state.last_lambda_change <= criteria_.dual_tol &&
      max_group_deficit(inst_, candidate) <= criteria_.feas_tol) {
    reason_ = StopReason::dual_stationary;
    return true;
  }
  if (linear && state.best_dual_value <
                    utility_floor_ - 1e-9 * std::max(1.0, std::abs(utility_floor_))) {
    reason_ = StopReason::certified_infeasible;
    return true;
  }
  if (k % criteria_.gap_check_interval == 0) {
    const auto repaired = repair_feasibility(candidate, inst_);
    if (repaired.max_violation <= criteria_.feas_tol) {
      const double primal = primal_objective(inst_, repaired.x, options_);
      const double gap = state.best_dual_value - primal;
      if (gap <= criteria_.gap_tol * std::max(1.0, std::abs(state.best_dual_value))) {
        reason_ = StopReason::certified_gap;
        return true;
      }
    }
  }
  if (k >= criteria_.max_iterations) {
    reason_ = StopReason::iteration_cap;
    return true;
  }
  return false;
}

SolveReport ConvergenceMonitor::finalize(const DualState& state) const {
  SolveReport rep;
  const bool linear = options_.linear();
  rep.x_average = linear ? state.x_average : state.x_current;
  auto repaired = repair_feasibility(rep.x_average, inst_);
  rep.x_final = std::move(repaired.x);
  rep.violated_groups = std::move(repaired.violated_groups);
  rep.max_constraint_violation = std::max(repaired.max_violation, 0.0);
  rep.lambda_final = state.lambda;
  rep.iterations = state.iteration;
  rep.dual_value = state.best_dual_value;
  rep.primal_value = primal_objective(inst_, rep.x_final, options_);
  rep.gap = rep.dual_value - rep.primal_value;
  rep.stop_reason = reason_;
  rep.converged = reason_ == StopReason::dual_stationary || reason_ == StopReason::certified_gap;
  if (!rep.converged) {
    const auto totals = inst_.constraints.group_totals(rep.x_final);
    for (std::size_t m = 0; m < totals.size(); ++m) {
      const bool short_of_q = inst_.constraints.rhs[m] - totals[m] > criteria_.feas_tol;
      if (short_of_q && state.lambda[m] > snapshot_prev_[m]) rep.diverging_groups.push_back(m);
    }
  }
  rep.lambda_trajectory = trajectory_;
  return rep;
}

SolveReport run_until_converged(const Instance& inst, const StepPolicy& step,
                                const ConvergenceCriteria& criteria, const EngineOptions& options,
                                std::optional<std::vector<double>> initial_lambda) {
  const auto started = std::chrono::steady_clock::now();
  if (!(step.alpha0 > 0.0)) throw ParameterError("step size alpha0 must be > 0");
  DualState state = DualState::start(inst, std::move(initial_lambda));
  ConvergenceMonitor monitor(inst, criteria, options, state);
  do {
    dual_step(state, inst, step, options);
  } while (!monitor.should_stop(state));
  SolveReport rep = monitor.finalize(state);
  rep.wall_time = std::chrono::steady_clock::now() - started;
  return rep;
}

}  // namespace edgealloc
