#include "edgealloc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "edgealloc/report.hpp"

namespace edgealloc {

namespace {

constexpr double kViolationTol = 1e-9;

std::size_t grid_count(double lo, double hi, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ParameterError("sweep step must be > 0");
  if (!(hi >= lo)) throw ParameterError("sweep range is empty");
  const double span = (hi - lo) / step;
  const double rounded = std::round(span);
  if (std::abs(span - rounded) > 1e-9 * std::max(1.0, span)) {
    throw ParameterError("sweep step must divide the range evenly");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

NetworkSpec apply_override(const NetworkSpec& base, const Override& ov) {
  NetworkSpec net = base;
  for (const auto& [id, delta] : ov.degrade) {
    auto idx = net.node_index(id);
    if (!idx) throw ParameterError("degradation names unknown node id " + std::to_string(id));
    if (!(delta >= 0.0 && delta <= 1.0)) {
      throw ParameterError("degradation for node " + std::to_string(id) + " must lie in [0, 1]");
    }
    net.nodes[*idx].energy_budget *= 1.0 - delta;
    net.nodes[*idx].memory_budget *= 1.0 - delta;
  }
  for (const auto& [m, q] : ov.qos_min_override) {
    if (m >= net.group_count()) throw ParameterError("QoS override names unknown group " + std::to_string(m));
    if (!(q >= 0.0) || !std::isfinite(q)) throw ParameterError("overridden QoS minimum must be >= 0");
    net.groups[m].qos_min = q;
  }
  return net;
}

AllocationPolicy static_policy(const AllocationPolicy& base_solution, const NetworkSpec& net,
                               const Override& ov) {
  AllocationPolicy x = base_solution;
  for (const auto& [id, delta] : ov.degrade) {
    auto idx = net.node_index(id);
    if (!idx) throw ParameterError("degradation names unknown node id " + std::to_string(id));
    for (double& v : x.block(*idx)) v *= 1.0 - delta;
  }
  return x;
}

PolicyEvaluation evaluate_policy(const AllocationPolicy& x, const Instance& inst) {
  if (x.nodes() != inst.network.node_count() || x.tasks() != inst.network.task_count()) {
    throw ParameterError("policy dimensions do not match the network");
  }
  PolicyEvaluation ev;
  ev.objective = linear_utility(inst.network, x);
  ev.group_qos = inst.constraints.group_totals(x);
  for (std::size_t m = 0; m < ev.group_qos.size(); ++m) {
    if (ev.group_qos[m] < inst.constraints.rhs[m] - kViolationTol) ev.violations.push_back(m);
  }
  return ev;
}

PolicyTrace run_timeline(const ScenarioTimeline& timeline, const SweepOptions& options,
                         bool with_static) {
  if (timeline.steps.size() != timeline.step_param.size()) {
    throw ParameterError("timeline needs one parameter per step");
  }
  PolicyTrace trace;
  std::optional<std::vector<double>> warm;
  std::optional<AllocationPolicy> base_solution;
  for (std::size_t k = 0; k < timeline.steps.size(); ++k) {
    const auto& ov = timeline.steps[k];
    const Instance inst = Instance::build(apply_override(timeline.base, ov));
    const auto oracle = solve_centralized(make_centralized_problem(inst));

    StepPolicy step = StepPolicy::scaled_default(inst.constraints, options.step_mode);
    if (options.alpha0) step.alpha0 = *options.alpha0;
    const SolveReport rep =
        run_until_converged(inst, step, options.criteria, {}, options.warm_start ? warm : std::nullopt);

    SweepStep s;
    s.param = timeline.step_param[k];
    s.qos_min = inst.constraints.rhs;
    s.dynamic_x = rep.x_final;
    s.dynamic_eval = evaluate_policy(rep.x_final, inst);
    s.oracle_status = oracle.status;
    s.oracle_value = oracle.value;
    s.converged = rep.converged;
    s.dynamic_feasible = rep.converged && s.dynamic_eval.violations.empty();
    s.stop_reason = rep.stop_reason;
    s.iterations = rep.iterations;
    s.wall_time = rep.wall_time;
    if (with_static) {
      if (!base_solution) base_solution = rep.x_final;
      s.static_x = static_policy(*base_solution, timeline.base, ov);
      s.static_eval = evaluate_policy(*s.static_x, inst);
    }
    if (rep.converged) warm = rep.lambda_final;
    trace.steps.push_back(std::move(s));
  }
  return trace;
}

PolicyTrace run_degradation_sweep(const NetworkSpec& base, const std::vector<int>& degraded_nodes,
                                  double grid, const SweepOptions& options) {
  if (!(grid > 0.0 && grid <= 1.0)) throw ParameterError("degradation grid must lie in (0, 1]");
  for (int id : degraded_nodes) {
    if (!base.node_index(id)) throw ParameterError("degradation names unknown node id " + std::to_string(id));
  }
  const std::size_t n = grid_count(0.0, 1.0, grid);
  ScenarioTimeline tl;
  tl.base = base;
  for (std::size_t k = 0; k <= n; ++k) {
    const double delta = static_cast<double>(k) / static_cast<double>(n);
    Override ov;
    for (int id : degraded_nodes) ov.degrade[id] = delta;
    tl.step_param.push_back(delta);
    tl.steps.push_back(std::move(ov));
  }
  PolicyTrace trace = run_timeline(tl, options, true);
  trace.kind = "degradation";
  trace.degraded_nodes = degraded_nodes;
  return trace;
}

PolicyTrace run_qos_sweep(const NetworkSpec& base, std::size_t task, double r_min, double r_max,
                          double r_step, const SweepOptions& options) {
  if (task >= base.task_count()) throw ParameterError("QoS sweep names unknown task");
  if (!(r_min >= 0.0)) throw ParameterError("per-node minimum must be >= 0");
  const std::size_t n = grid_count(r_min, r_max, r_step);
  ScenarioTimeline tl;
  tl.base = base;
  for (std::size_t k = 0; k <= n; ++k) {
    const double r = r_min + static_cast<double>(k) * r_step;
    Override ov;
    for (std::size_t m = 0; m < base.group_count(); ++m) {
      if (base.groups[m].task != task) continue;
      ov.qos_min_override[m] = r * static_cast<double>(base.groups[m].members().size());
    }
    tl.step_param.push_back(r);
    tl.steps.push_back(std::move(ov));
  }
  PolicyTrace trace = run_timeline(tl, options, false);
  trace.kind = "qos";
  return trace;
}

bool trace_within_timescale(const PolicyTrace& trace, const SweepOptions& options) {
  const double limit = options.cycle_seconds * options.timescale_fraction;
  return std::all_of(trace.steps.begin(), trace.steps.end(),
                     [&](const SweepStep& s) { return s.wall_time.count() <= limit; });
}

void write_trace_csv(std::ostream& out, const PolicyTrace& trace, const NetworkSpec& base) {
  out << "step_param,record,node_id,task_id,group_id,runs_dynamic,runs_static,"
         "achieved_qos_dynamic,achieved_qos_static,q_m,feasible_dynamic,feasible_static,"
         "oracle_feasible\n";
  auto flag = [](bool b) { return b ? "1" : "0"; };
  for (const auto& s : trace.steps) {
    const std::string param = format_number(s.param);
    const char* oracle_ok = flag(s.oracle_status == OracleStatus::optimal);
    const std::string static_ok = s.static_eval ? flag(s.static_eval->violations.empty()) : "";
    for (std::size_t i = 0; i < base.node_count(); ++i) {
      for (std::size_t t = 0; t < base.task_count(); ++t) {
        out << param << ",allocation," << base.nodes[i].id << ',' << base.tasks[t].name << ",,"
            << format_number(s.dynamic_x(i, t)) << ','
            << (s.static_x ? format_number((*s.static_x)(i, t)) : "") << ",,,,"
            << flag(s.dynamic_feasible) << ',' << static_ok << ',' << oracle_ok << '\n';
      }
    }
    for (std::size_t m = 0; m < base.group_count(); ++m) {
      const double q = s.qos_min[m];
      const double dyn = s.dynamic_eval.group_qos[m];
      out << param << ",group,," << base.tasks[base.groups[m].task].name << ','
          << base.groups[m].name << ",,," << format_number(dyn) << ','
          << (s.static_eval ? format_number(s.static_eval->group_qos[m]) : "") << ','
          << format_number(q) << ',' << flag(dyn >= q - kViolationTol) << ','
          << (s.static_eval ? flag(s.static_eval->group_qos[m] >= q - kViolationTol) : "") << ','
          << oracle_ok << '\n';
    }
  }
}

void write_trace_summary_csv(std::ostream& out, const PolicyTrace& trace) {
  out << "step_param,objective_dynamic,objective_static,oracle_status,oracle_value,"
         "violations_dynamic,violations_static,converged,stop_reason,iterations\n";
  for (const auto& s : trace.steps) {
    out << format_number(s.param) << ',' << format_number(s.dynamic_eval.objective) << ','
        << (s.static_eval ? format_number(s.static_eval->objective) : "") << ','
        << to_string(s.oracle_status) << ','
        << (s.oracle_status == OracleStatus::optimal ? format_number(s.oracle_value) : "") << ','
        << s.dynamic_eval.violations.size() << ','
        << (s.static_eval ? std::to_string(s.static_eval->violations.size()) : "") << ','
        << (s.converged ? 1 : 0) << ',' << to_string(s.stop_reason) << ',' << s.iterations << '\n';
  }
}

}  // namespace edgealloc
