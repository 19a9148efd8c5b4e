#include "edgealloc/report.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <sstream>

namespace edgealloc {

std::string format_number(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_solve_report(std::ostream& out, const Instance& inst, const SolveReport& report,
                        std::optional<double> oracle_value) {
  const auto& net = inst.network;
  out << "record,node_id,task,group,value\n";
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    for (std::size_t t = 0; t < net.task_count(); ++t) {
      out << "x," << net.nodes[i].id << ',' << net.tasks[t].name << ",,"
          << format_number(report.x_final(i, t)) << '\n';
    }
  }
  const auto totals = inst.constraints.group_totals(report.x_final);
  for (std::size_t m = 0; m < net.group_count(); ++m) {
    out << "lambda,," << net.tasks[net.groups[m].task].name << ',' << net.groups[m].name << ','
        << format_number(report.lambda_final[m]) << '\n';
  }
  for (std::size_t m = 0; m < net.group_count(); ++m) {
    out << "group_qos,," << net.tasks[net.groups[m].task].name << ',' << net.groups[m].name << ','
        << format_number(totals[m]) << '\n';
  }
  auto scalar = [&](const char* key, const std::string& value) {
    out << key << ",,,," << value << '\n';
  };
  scalar("objective", format_number(report.primal_value));
  scalar("dual_value", format_number(report.dual_value));
  scalar("gap", format_number(report.gap));
  scalar("iterations", std::to_string(report.iterations));
  scalar("max_constraint_violation", format_number(report.max_constraint_violation));
  scalar("converged", report.converged ? "1" : "0");
  scalar("stop_reason", to_string(report.stop_reason));
  if (oracle_value) scalar("oracle_value", format_number(*oracle_value));
}

bool identical_reports(const SolveReport& a, const SolveReport& b) {
  auto same = [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; };
  auto same_vec = [&](std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (!same(x[k], y[k])) return false;
    }
    return true;
  };
  if (a.lambda_trajectory.size() != b.lambda_trajectory.size()) return false;
  for (std::size_t k = 0; k < a.lambda_trajectory.size(); ++k) {
    if (!same_vec(a.lambda_trajectory[k], b.lambda_trajectory[k])) return false;
  }
  return same_vec(a.x_final.stacked(), b.x_final.stacked()) &&
         same_vec(a.x_average.stacked(), b.x_average.stacked()) &&
         same_vec(a.lambda_final, b.lambda_final) && a.iterations == b.iterations &&
         same(a.dual_value, b.dual_value) && same(a.primal_value, b.primal_value) &&
         same(a.gap, b.gap) && same(a.max_constraint_violation, b.max_constraint_violation) &&
         a.converged == b.converged && a.stop_reason == b.stop_reason &&
         a.diverging_groups == b.diverging_groups && a.violated_groups == b.violated_groups;
}

std::string summarize(const Instance& inst, const SolveReport& report,
                      std::optional<double> oracle_value) {
  std::ostringstream os;
  os << (report.converged ? "converged" : "NOT converged") << " (" << to_string(report.stop_reason)
     << ") after " << report.iterations << " iterations in " << report.wall_time.count() << " s\n";
  os << "  objective " << format_number(report.primal_value) << ", best dual "
     << format_number(report.dual_value) << ", gap " << format_number(report.gap) << '\n';
  if (oracle_value) {
    const double rel = std::abs(report.primal_value - *oracle_value) / std::max(1.0, std::abs(*oracle_value));
    os << "  oracle " << format_number(*oracle_value) << ", relative error " << format_number(rel) << '\n';
  }
  os << "  max group deficit " << format_number(report.max_constraint_violation) << '\n';
  const auto& net = inst.network;
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    os << "  node " << net.nodes[i].id << ':';
    for (std::size_t t = 0; t < net.task_count(); ++t) {
      os << ' ' << net.tasks[t].name << '=' << format_number(report.x_final(i, t));
    }
    os << '\n';
  }
  for (std::size_t g : report.diverging_groups) {
    os << "  diverging multiplier on group " << net.groups[g].name << '\n';
  }
  return os.str();
}

}  // namespace edgealloc
