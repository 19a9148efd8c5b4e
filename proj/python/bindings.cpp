#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "edgealloc/config.hpp"
#include "edgealloc/distributed.hpp"
#include "edgealloc/dual_engine.hpp"
#include "edgealloc/oracle.hpp"
#include "edgealloc/report.hpp"
#include "edgealloc/scenario.hpp"

namespace py = pybind11;
using namespace edgealloc;

namespace {

std::vector<std::vector<double>> to_rows(const AllocationPolicy& x) {
  std::vector<std::vector<double>> rows(x.nodes());
  for (std::size_t i = 0; i < x.nodes(); ++i) {
    const auto b = x.block(i);
    rows[i].assign(b.begin(), b.end());
  }
  return rows;
}

StepPolicy make_step(const Instance& inst, StepMode mode, std::optional<double> alpha0) {
  auto step = StepPolicy::scaled_default(inst.constraints, mode);
  if (alpha0) {
    if (!(*alpha0 > 0.0)) throw ParameterError("alpha0 must be > 0");
    step.alpha0 = *alpha0;
  }
  return step;
}

struct AuditResult {
  SolveReport report;
  AuditReport audit;
  std::size_t messages = 0;
  bool matches_centralized = false;
  std::string ledger_csv;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Edge task allocation by projected dual descent";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);

  py::enum_<StepMode>(m, "StepMode")
      .value("constant", StepMode::constant)
      .value("diminishing", StepMode::diminishing);
  py::enum_<StopReason>(m, "StopReason")
      .value("dual_stationary", StopReason::dual_stationary)
      .value("certified_gap", StopReason::certified_gap)
      .value("certified_infeasible", StopReason::certified_infeasible)
      .value("iteration_cap", StopReason::iteration_cap);
  py::enum_<ExchangePattern>(m, "ExchangePattern")
      .value("all_to_all", ExchangePattern::all_to_all)
      .value("hub", ExchangePattern::hub);
  py::enum_<OracleStatus>(m, "OracleStatus")
      .value("optimal", OracleStatus::optimal)
      .value("infeasible", OracleStatus::infeasible)
      .value("unbounded", OracleStatus::unbounded);

  py::class_<ConvergenceCriteria>(m, "ConvergenceCriteria")
      .def(py::init<>())
      .def_readwrite("dual_tol", &ConvergenceCriteria::dual_tol)
      .def_readwrite("feas_tol", &ConvergenceCriteria::feas_tol)
      .def_readwrite("gap_tol", &ConvergenceCriteria::gap_tol)
      .def_readwrite("gap_check_interval", &ConvergenceCriteria::gap_check_interval)
      .def_readwrite("max_iterations", &ConvergenceCriteria::max_iterations)
      .def_readwrite("record_trajectory", &ConvergenceCriteria::record_trajectory);

  py::class_<GroupSpec>(m, "Group")
      .def_readonly("name", &GroupSpec::name)
      .def_readonly("task", &GroupSpec::task)
      .def_readonly("weights", &GroupSpec::weights)
      .def_readonly("qos_min", &GroupSpec::qos_min)
      .def_property_readonly("members", &GroupSpec::members);

  py::class_<NetworkSpec>(m, "Network")
      .def_property_readonly("node_ids",
                             [](const NetworkSpec& n) {
                               std::vector<int> ids;
                               for (const auto& node : n.nodes) ids.push_back(node.id);
                               return ids;
                             })
      .def_property_readonly("task_names",
                             [](const NetworkSpec& n) {
                               std::vector<std::string> names;
                               for (const auto& t : n.tasks) names.push_back(t.name);
                               return names;
                             })
      .def_property_readonly("groups", [](const NetworkSpec& n) { return n.groups; })
      .def("task_index", &NetworkSpec::task_index)
      .def(
          "with_override",
          [](const NetworkSpec& n, std::map<int, double> degrade, std::map<std::size_t, double> qos) {
            return apply_override(n, Override{std::move(degrade), std::move(qos)});
          },
          py::arg("degrade") = std::map<int, double>{}, py::arg("qos_min") = std::map<std::size_t, double>{});

  py::class_<ConfigDocument>(m, "Config")
      .def_readonly("name", &ConfigDocument::name)
      .def_readonly("assumptions", &ConfigDocument::assumptions)
      .def_readonly("network", &ConfigDocument::network)
      .def_property_readonly("degraded_nodes", [](const ConfigDocument& d) { return d.scenario.degraded_nodes; })
      .def("to_json", &serialize_config);

  m.def("load_config", &load_config_file, py::arg("path"));
  m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<config>");

  py::class_<SolveReport>(m, "SolveReport")
      .def_property_readonly("x", [](const SolveReport& r) { return to_rows(r.x_final); })
      .def_property_readonly("x_average", [](const SolveReport& r) { return to_rows(r.x_average); })
      .def_readonly("lambda_final", &SolveReport::lambda_final)
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("dual_value", &SolveReport::dual_value)
      .def_readonly("objective", &SolveReport::primal_value)
      .def_readonly("gap", &SolveReport::gap)
      .def_readonly("max_constraint_violation", &SolveReport::max_constraint_violation)
      .def_readonly("converged", &SolveReport::converged)
      .def_readonly("stop_reason", &SolveReport::stop_reason)
      .def_readonly("diverging_groups", &SolveReport::diverging_groups)
      .def_readonly("violated_groups", &SolveReport::violated_groups)
      .def_property_readonly("wall_time", [](const SolveReport& r) { return r.wall_time.count(); })
      .def_readonly("lambda_trajectory", &SolveReport::lambda_trajectory);

  m.def(
      "solve",
      [](const NetworkSpec& net, StepMode mode, std::optional<double> alpha0,
         std::optional<ConvergenceCriteria> criteria, std::optional<std::vector<double>> initial_lambda) {
        const auto inst = Instance::build(net);
        return run_until_converged(inst, make_step(inst, mode, alpha0), criteria.value_or(ConvergenceCriteria{}), {},
                                   std::move(initial_lambda));
      },
      py::arg("network"), py::arg("step") = StepMode::diminishing, py::arg("alpha0") = py::none(),
      py::arg("criteria") = py::none(), py::arg("initial_lambda") = py::none(),
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "solve_report_csv",
      [](const NetworkSpec& net, const SolveReport& rep, std::optional<double> oracle_value) {
        std::ostringstream os;
        write_solve_report(os, Instance::build(net), rep, oracle_value);
        return os.str();
      },
      py::arg("network"), py::arg("report"), py::arg("oracle_value") = py::none());

  py::class_<OracleSolution>(m, "OracleSolution")
      .def_readonly("status", &OracleSolution::status)
      .def_readonly("value", &OracleSolution::value)
      .def_property_readonly("x", [](const OracleSolution& s) { return to_rows(s.x); });

  m.def(
      "oracle",
      [](const NetworkSpec& net) { return solve_centralized(make_centralized_problem(Instance::build(net))); },
      py::arg("network"));
  m.def(
      "slater_margin",
      [](const NetworkSpec& net) { return check_slater(make_centralized_problem(Instance::build(net))).margin; },
      py::arg("network"));

  py::class_<AuditResult>(m, "AuditResult")
      .def_readonly("report", &AuditResult::report)
      .def_readonly("messages", &AuditResult::messages)
      .def_readonly("matches_centralized", &AuditResult::matches_centralized)
      .def_readonly("ledger_csv", &AuditResult::ledger_csv)
      .def_property_readonly("violations", [](const AuditResult& a) { return a.audit.violations; })
      .def_property_readonly("pair_counts", [](const AuditResult& a) { return a.audit.pair_counts; })
      .def_property_readonly("expected_per_tick", [](const AuditResult& a) { return a.audit.expected_per_tick; })
      .def_property_readonly("ok", [](const AuditResult& a) { return a.audit.ok() && a.matches_centralized; });

  m.def(
      "audit",
      [](const NetworkSpec& net, ExchangePattern pattern, std::size_t workers, std::optional<ConvergenceCriteria> criteria) {
        const auto inst = Instance::build(net);
        auto c = criteria.value_or(ConvergenceCriteria{});
        c.record_trajectory = true;
        const auto step = StepPolicy::scaled_default(inst.constraints);
        const auto central = run_until_converged(inst, step, c);
        MessageLedger ledger;
        AuditResult out;
        out.report = run_distributed(inst, step, c, ledger, {pattern, workers});
        out.audit = audit_messages(ledger, inst, pattern);
        out.messages = ledger.size();
        out.matches_centralized = identical_reports(central, out.report);
        std::ostringstream os;
        ledger.write_csv(os, net);
        out.ledger_csv = os.str();
        return out;
      },
      py::arg("network"), py::arg("exchange") = ExchangePattern::all_to_all, py::arg("workers") = 1,
      py::arg("criteria") = py::none(), py::call_guard<py::gil_scoped_release>());

  py::class_<PolicyEvaluation>(m, "PolicyEvaluation")
      .def_readonly("objective", &PolicyEvaluation::objective)
      .def_readonly("group_qos", &PolicyEvaluation::group_qos)
      .def_readonly("violations", &PolicyEvaluation::violations);

  py::class_<SweepStep>(m, "SweepStep")
      .def_readonly("param", &SweepStep::param)
      .def_readonly("qos_min", &SweepStep::qos_min)
      .def_property_readonly("dynamic_x", [](const SweepStep& s) { return to_rows(s.dynamic_x); })
      .def_property_readonly("static_x",
                             [](const SweepStep& s) -> std::optional<std::vector<std::vector<double>>> {
                               if (!s.static_x) return std::nullopt;
                               return to_rows(*s.static_x);
                             })
      .def_readonly("dynamic_eval", &SweepStep::dynamic_eval)
      .def_readonly("static_eval", &SweepStep::static_eval)
      .def_readonly("oracle_status", &SweepStep::oracle_status)
      .def_readonly("oracle_value", &SweepStep::oracle_value)
      .def_readonly("dynamic_feasible", &SweepStep::dynamic_feasible)
      .def_readonly("converged", &SweepStep::converged)
      .def_readonly("stop_reason", &SweepStep::stop_reason)
      .def_readonly("iterations", &SweepStep::iterations);

  py::class_<PolicyTrace>(m, "PolicyTrace")
      .def_readonly("kind", &PolicyTrace::kind)
      .def_readonly("steps", &PolicyTrace::steps)
      .def_readonly("degraded_nodes", &PolicyTrace::degraded_nodes)
      .def(
          "to_csv",
          [](const PolicyTrace& t, const NetworkSpec& base) {
            std::ostringstream os;
            write_trace_csv(os, t, base);
            return os.str();
          },
          py::arg("base"))
      .def("summary_csv", [](const PolicyTrace& t) {
        std::ostringstream os;
        write_trace_summary_csv(os, t);
        return os.str();
      });

  m.def(
      "degradation_sweep",
      [](const NetworkSpec& net, std::vector<int> nodes, double grid, StepMode mode) {
        SweepOptions opts;
        opts.step_mode = mode;
        return run_degradation_sweep(net, nodes, grid, opts);
      },
      py::arg("network"), py::arg("degraded_nodes"), py::arg("grid") = 0.01, py::arg("step") = StepMode::diminishing,
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "qos_sweep",
      [](const NetworkSpec& net, std::size_t task, double r_min, double r_max, double r_step, StepMode mode) {
        SweepOptions opts;
        opts.step_mode = mode;
        return run_qos_sweep(net, task, r_min, r_max, r_step, opts);
      },
      py::arg("network"), py::arg("task") = 0, py::arg("r_min") = 2.0, py::arg("r_max") = 16.0,
      py::arg("r_step") = 1.0, py::arg("step") = StepMode::diminishing, py::call_guard<py::gil_scoped_release>());
}
