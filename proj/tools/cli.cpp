#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "edgealloc/config.hpp"
#include "edgealloc/distributed.hpp"
#include "edgealloc/dual_engine.hpp"
#include "edgealloc/oracle.hpp"
#include "edgealloc/report.hpp"
#include "edgealloc/scenario.hpp"
#include "edgealloc/svg.hpp"

namespace edgealloc::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::string> step;
  std::optional<double> alpha;
  std::optional<double> tol;
  std::optional<double> gap_tol;
  std::optional<std::size_t> max_iters;
  std::optional<std::string> exchange;
  std::optional<std::uint64_t> seed;
  bool svg = false;
  std::size_t workers = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "network/scenario JSON file")->required();
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--step", c.step, "step policy")->check(CLI::IsMember({"constant", "diminishing"}));
  sub->add_option("--alpha", c.alpha, "initial step size alpha0")->check(CLI::PositiveNumber);
  sub->add_option("--tol", c.tol, "dual-change and feasibility tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--gap-tol", c.gap_tol, "relative duality-gap tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--max-iters", c.max_iters, "iteration cap per solve")->check(CLI::PositiveNumber);
  sub->add_option("--exchange", c.exchange, "message pattern for the harness")
      ->check(CLI::IsMember({"all-to-all", "hub"}));
  sub->add_option("--seed", c.seed, "seed for randomized checks");
}

struct Run {
  ConfigDocument doc;
  StepPolicy step;
  bool alpha_given = false;
  ConvergenceCriteria criteria;
  ExchangePattern exchange = ExchangePattern::all_to_all;
  fs::path out;
};

Run prepare(const Common& c) {
  Run r;
  r.doc = load_config_file(c.config);
  auto& s = r.doc.solver;
  if (c.step) s.step = parse_step_mode(*c.step);
  if (c.alpha) s.alpha0 = *c.alpha;
  if (c.tol) s.criteria.dual_tol = s.criteria.feas_tol = *c.tol;
  if (c.gap_tol) s.criteria.gap_tol = *c.gap_tol;
  if (c.max_iters) s.criteria.max_iterations = *c.max_iters;
  if (c.exchange) s.exchange = parse_exchange_pattern(*c.exchange);
  if (c.seed) s.seed = *c.seed;
  r.criteria = s.criteria;
  r.exchange = s.exchange;
  r.alpha_given = s.alpha0.has_value();
  r.out = c.out;
  fs::create_directories(r.out);
  return r;
}

StepPolicy step_for(const Run& r, const Instance& inst) {
  StepPolicy p = StepPolicy::scaled_default(inst.constraints, r.doc.solver.step);
  if (r.doc.solver.alpha0) p.alpha0 = *r.doc.solver.alpha0;
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

template <class Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  fn(f);
}

int cmd_solve(const Common& c, std::ostream& out) {
  Run r = prepare(c);
  const Instance inst = Instance::build(r.doc.network);
  const auto oracle = solve_centralized(make_centralized_problem(inst));
  const auto report = run_until_converged(inst, step_for(r, inst), r.criteria);
  const std::optional<double> ref =
      oracle.status == OracleStatus::optimal ? std::optional<double>(oracle.value) : std::nullopt;
  write_with(r.out / "solve_report.csv", [&](std::ostream& f) { write_solve_report(f, inst, report, ref); });
  out << summarize(inst, report, ref);
  out << "wrote " << (r.out / "solve_report.csv").string() << '\n';
  if (oracle.status == OracleStatus::infeasible) {
    out << "instance is infeasible: the QoS minimums exceed what the nodes can deliver\n";
    return 2;
  }
  return report.converged ? 0 : 1;
}

void emit_trace(const Run& r, const PolicyTrace& trace, bool svg, std::ostream& out) {
  const std::string stem = trace.kind == "degradation" ? "degradation" : "qos";
  write_with(r.out / (stem + "_sweep.csv"),
             [&](std::ostream& f) { write_trace_csv(f, trace, r.doc.network); });
  write_with(r.out / (stem + "_summary.csv"), [&](std::ostream& f) { write_trace_summary_csv(f, trace); });
  out << "wrote " << (r.out / (stem + "_sweep.csv")).string() << " and "
      << (r.out / (stem + "_summary.csv")).string() << '\n';
  if (svg) {
    for (const auto& [name, chart] : trace_charts(trace, r.doc.network)) {
      write_file(r.out / (name + ".svg"), render_svg(chart));
      out << "wrote " << (r.out / (name + ".svg")).string() << '\n';
    }
  }
}

SweepOptions sweep_options(const Run& r) {
  SweepOptions o;
  o.step_mode = r.doc.solver.step;
  o.alpha0 = r.doc.solver.alpha0;
  o.criteria = r.criteria;
  return o;
}

void print_step_counts(const PolicyTrace& trace, std::ostream& out) {
  std::size_t infeasible = 0, failed = 0;
  double slowest = 0.0;
  for (const auto& s : trace.steps) {
    if (s.oracle_status != OracleStatus::optimal) ++infeasible;
    else if (!s.dynamic_feasible) ++failed;
    slowest = std::max(slowest, s.wall_time.count());
  }
  out << trace.steps.size() << " steps, " << infeasible << " infeasible per the oracle, " << failed
      << " feasible steps without a converged dynamic policy; slowest solve " << slowest << " s\n";
}

int cmd_sweep_degradation(const Common& c, std::optional<double> grid, std::ostream& out) {
  Run r = prepare(c);
  const auto opts = sweep_options(r);
  const auto trace = run_degradation_sweep(r.doc.network, r.doc.scenario.degraded_nodes,
                                           grid.value_or(r.doc.scenario.degradation_step), opts);
  print_step_counts(trace, out);
  std::optional<double> onset;
  for (const auto& s : trace.steps) {
    if (s.static_eval && !s.static_eval->violations.empty()) {
      onset = s.param;
      break;
    }
  }
  if (onset) out << "static policy first misses a QoS minimum at degradation " << format_number(*onset) << '\n';
  else out << "static policy never misses a QoS minimum\n";
  if (!trace_within_timescale(trace, opts)) out << "warning: a solve took more than 1% of the cycle\n";
  emit_trace(r, trace, c.svg, out);
  return 0;
}

int cmd_sweep_qos(const Common& c, std::optional<std::string> task, std::optional<double> r_min,
                  std::optional<double> r_max, std::ostream& out) {
  Run r = prepare(c);
  const auto& qs = r.doc.scenario.qos_sweep;
  const std::string name = task.value_or(qs.task);
  auto t = r.doc.network.task_index(name);
  if (!t) throw ParameterError("unknown task '" + name + "'");
  const auto opts = sweep_options(r);
  const auto trace = run_qos_sweep(r.doc.network, *t, r_min.value_or(qs.min_runs), r_max.value_or(qs.max_runs),
                                   qs.step, opts);
  print_step_counts(trace, out);
  if (!trace_within_timescale(trace, opts)) out << "warning: a solve took more than 1% of the cycle\n";
  emit_trace(r, trace, c.svg, out);
  return 0;
}

int cmd_audit(const Common& c, std::ostream& out) {
  Run r = prepare(c);
  const Instance inst = Instance::build(r.doc.network);
  const StepPolicy step = step_for(r, inst);
  ConvergenceCriteria criteria = r.criteria;
  criteria.record_trajectory = true;

  const auto central = run_until_converged(inst, step, criteria);
  MessageLedger ledger;
  DistributedOptions dist;
  dist.pattern = r.exchange;
  dist.workers = c.workers;
  const auto distributed = run_distributed(inst, step, criteria, ledger, dist);
  const auto audit = audit_messages(ledger, inst, r.exchange);
  const bool trajectory_equal = [&] {
    SolveReport a, b;
    a.lambda_trajectory = central.lambda_trajectory;
    b.lambda_trajectory = distributed.lambda_trajectory;
    return identical_reports(a, b);
  }();
  const bool report_equal = identical_reports(central, distributed);

  write_with(r.out / "ledger.csv", [&](std::ostream& f) { ledger.write_csv(f, inst.network); });
  write_with(r.out / "audit_report.csv", [&](std::ostream& f) {
    f << "metric,value\n";
    f << "exchange," << to_string(r.exchange) << '\n';
    f << "ticks," << distributed.iterations << '\n';
    f << "messages," << ledger.size() << '\n';
    f << "expected_messages_per_tick," << audit.expected_per_tick << '\n';
    f << "locality_violations," << audit.violations.size() << '\n';
    f << "count_mismatch_ticks," << audit.count_mismatch_ticks.size() << '\n';
    f << "lambda_trajectory_identical," << (trajectory_equal ? 1 : 0) << '\n';
    f << "report_identical," << (report_equal ? 1 : 0) << '\n';
  });
  write_with(r.out / "pair_counts.csv", [&](std::ostream& f) {
    f << "sender";
    for (const auto& n : inst.network.nodes) f << ",to_" << n.id;
    f << '\n';
    for (std::size_t i = 0; i < inst.network.node_count(); ++i) {
      f << inst.network.nodes[i].id;
      for (std::size_t j = 0; j < inst.network.node_count(); ++j) f << ',' << audit.pair_counts[i][j];
      f << '\n';
    }
  });

  out << "audit (" << to_string(r.exchange) << "): " << ledger.size() << " messages over "
      << distributed.iterations << " ticks, " << audit.expected_per_tick << " expected per tick\n";
  out << "  locality violations: " << audit.violations.size() << '\n';
  for (std::size_t k = 0; k < std::min<std::size_t>(audit.violations.size(), 10); ++k) {
    out << "    " << audit.violations[k] << '\n';
  }
  out << "  ticks with unexpected message counts: " << audit.count_mismatch_ticks.size() << '\n';
  out << "  lambda trajectory identical to centralized run: " << (trajectory_equal ? "yes" : "no") << '\n';
  out << "  report identical to centralized run: " << (report_equal ? "yes" : "no") << '\n';
  out << "wrote " << (r.out / "ledger.csv").string() << ", " << (r.out / "audit_report.csv").string()
      << " and " << (r.out / "pair_counts.csv").string() << '\n';
  return audit.ok() && trajectory_equal && report_equal ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Task allocation for heterogeneous edge nodes by distributed dual descent", "edgealloc"};
  app.require_subcommand(1);
  Common common;

  auto* solve = app.add_subcommand("solve", "solve one instance and write solve_report.csv");
  add_common(solve, common);

  auto* deg = app.add_subcommand("sweep-degradation", "static vs dynamic policy under node degradation");
  add_common(deg, common);
  std::optional<double> grid;
  deg->add_option("--grid", grid, "degradation increment (default from config)")->check(CLI::Range(1e-6, 1.0));
  deg->add_flag("--svg", common.svg, "also write SVG charts");

  auto* qos = app.add_subcommand("sweep-qos", "re-solve over a range of per-node QoS minimums");
  add_common(qos, common);
  std::optional<std::string> task;
  std::optional<double> r_min, r_max;
  qos->add_option("--task", task, "task whose group minimums are swept");
  qos->add_option("--min-runs", r_min, "first per-node minimum")->check(CLI::NonNegativeNumber);
  qos->add_option("--max-runs", r_max, "last per-node minimum")->check(CLI::NonNegativeNumber);
  qos->add_flag("--svg", common.svg, "also write SVG charts");

  auto* audit = app.add_subcommand("audit", "run the message-passing harness and audit its ledger");
  add_common(audit, common);
  audit->add_option("--workers", common.workers, "threads used by the node agents")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 1;
  }

  try {
    if (*solve) return cmd_solve(common, out);
    if (*deg) return cmd_sweep_degradation(common, grid, out);
    if (*qos) return cmd_sweep_qos(common, task, r_min, r_max, out);
    if (*audit) return cmd_audit(common, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace edgealloc::cli
