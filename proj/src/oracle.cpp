#include "edgealloc/oracle.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "edgealloc/simplex.hpp"

namespace edgealloc {

const char* to_string(OracleStatus s) {
  switch (s) {
    case OracleStatus::optimal: return "optimal";
    case OracleStatus::infeasible: return "infeasible";
    case OracleStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

CentralizedProblem make_centralized_problem(const Instance& inst) {
  const auto& net = inst.network;
  const std::size_t n = net.node_count();
  const std::size_t t_count = net.task_count();
  CentralizedProblem prob;
  prob.nodes = n;
  prob.tasks = t_count;
  prob.objective.assign(n * t_count, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < t_count; ++t) prob.objective[i * t_count + t] = net.nodes[i].utility_coeffs[t];
    for (const auto& row : inst.domains[i].rows) {
      std::vector<double> lifted(n * t_count, 0.0);
      for (std::size_t t = 0; t < t_count; ++t) lifted[i * t_count + t] = row.coeffs[t];
      prob.domain_rows.push_back(std::move(lifted));
      prob.domain_bounds.push_back(row.bound);
    }
  }
  const auto& sys = inst.constraints;
  for (std::size_t m = 0; m < sys.groups(); ++m) {
    prob.group_rows.emplace_back(sys.matrix.begin() + static_cast<std::ptrdiff_t>(m * sys.columns()),
                                 sys.matrix.begin() + static_cast<std::ptrdiff_t>((m + 1) * sys.columns()));
    prob.group_bounds.push_back(sys.rhs[m]);
  }
  return prob;
}

OracleSolution solve_centralized(const CentralizedProblem& prob) {
  const std::size_t vars = prob.variables();
  lp::LpProblem lp(vars);
  lp.objective = prob.objective;
  for (std::size_t r = 0; r < prob.domain_rows.size(); ++r) {
    lp.add_row(prob.domain_rows[r], prob.domain_bounds[r]);
  }
  for (std::size_t m = 0; m < prob.group_rows.size(); ++m) {
    std::vector<double> neg(prob.group_rows[m]);
    for (double& v : neg) v = -v;
    lp.add_row(std::move(neg), -prob.group_bounds[m]);
  }
  const auto res = lp::solve(lp);
  OracleSolution out;
  out.x = AllocationPolicy(prob.nodes, prob.tasks);
  switch (res.status) {
    case lp::LpStatus::optimal:
      out.status = OracleStatus::optimal;
      std::copy(res.x.begin(), res.x.end(), out.x.stacked().begin());
      out.value = res.value;
      break;
    case lp::LpStatus::infeasible: out.status = OracleStatus::infeasible; break;
    case lp::LpStatus::unbounded: out.status = OracleStatus::unbounded; break;
    case lp::LpStatus::iteration_limit:
      throw std::runtime_error("solve_centralized: pivot limit reached");
  }
  return out;
}

SlaterCheck check_slater(const CentralizedProblem& prob) {
  // Variables: x (N*T), s_plus, s_minus with s = s_plus - s_minus.
  const std::size_t vars = prob.variables();
  const std::size_t sp = vars;
  const std::size_t sm = vars + 1;
  lp::LpProblem lp(vars + 2);
  lp.objective[sp] = 1.0;
  lp.objective[sm] = -1.0;

  auto with_slack = [&](const std::vector<double>& coeffs, double sign) {
    std::vector<double> row(vars + 2, 0.0);
    for (std::size_t j = 0; j < vars; ++j) row[j] = sign * coeffs[j];
    row[sp] = 1.0;
    row[sm] = -1.0;
    return row;
  };
  for (std::size_t r = 0; r < prob.domain_rows.size(); ++r) {
    lp.add_row(with_slack(prob.domain_rows[r], 1.0), prob.domain_bounds[r]);
  }
  for (std::size_t m = 0; m < prob.group_rows.size(); ++m) {
    lp.add_row(with_slack(prob.group_rows[m], -1.0), -prob.group_bounds[m]);
  }
  for (std::size_t j = 0; j < vars; ++j) {
    std::vector<double> unit(vars, 0.0);
    unit[j] = 1.0;
    lp.add_row(with_slack(unit, -1.0), 0.0);
  }

  const auto res = lp::solve(lp);
  SlaterCheck out;
  if (res.status == lp::LpStatus::unbounded) {
    out.strictly_feasible = true;
    out.margin = std::numeric_limits<double>::infinity();
    return out;
  }
  if (res.status != lp::LpStatus::optimal) {
    throw std::runtime_error("check_slater: slack LP did not solve");
  }
  out.margin = res.value;
  out.strictly_feasible = res.value > 1e-9;
  return out;
}

}  // namespace edgealloc
