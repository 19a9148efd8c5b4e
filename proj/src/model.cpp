#include "edgealloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace edgealloc {

std::vector<std::size_t> GroupSpec::members() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) out.push_back(i);
  }
  return out;
}

std::optional<std::size_t> NetworkSpec::node_index(int id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> NetworkSpec::task_index(const std::string& name) const {
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (tasks[t].name == name) return t;
  }
  return std::nullopt;
}

double LocalDomain::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (double v : x) worst = std::max(worst, -v);
  for (const auto& row : rows) {
    double lhs = 0.0;
    for (std::size_t t = 0; t < x.size() && t < row.coeffs.size(); ++t) lhs += row.coeffs[t] * x[t];
    worst = std::max(worst, lhs - row.bound);
  }
  return worst;
}

std::vector<double> ConstraintSystem::apply(std::span<const double> x) const {
  std::vector<double> out(groups(), 0.0);
  const std::size_t cols = columns();
  for (std::size_t m = 0; m < groups(); ++m) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += matrix[m * cols + j] * x[j];
    out[m] = acc;
  }
  return out;
}

std::vector<double> ConstraintSystem::group_totals(const AllocationPolicy& x) const {
  std::vector<double> out(groups(), 0.0);
  for (std::size_t m = 0; m < groups(); ++m) {
    double acc = 0.0;
    for (const auto& member : members[m]) acc += member.weight * x(member.node, group_task[m]);
    out[m] = acc;
  }
  return out;
}

double ConstraintSystem::max_row_norm_squared() const {
  double best = 0.0;
  for (const auto& row : members) {
    double sq = 0.0;
    for (const auto& member : row) sq += member.weight * member.weight;
    best = std::max(best, sq);
  }
  return best;
}

namespace {

std::string group_label(const GroupSpec& g, std::size_t m) {
  std::ostringstream os;
  os << "group " << m;
  if (!g.name.empty()) os << " (" << g.name << ")";
  return os.str();
}

std::string node_label(const NodeSpec& n, std::size_t i) {
  std::ostringstream os;
  os << "node " << n.id << " (index " << i << ")";
  return os.str();
}

// Resolves one cost row for a node: the per-node override if present, else
// the task table entry for the node's type. Missing entries come back empty.
std::optional<std::vector<double>> resolve_costs(
    const NodeSpec& node, std::span<const TaskSpec> tasks,
    const std::optional<std::vector<double>>& override_row,
    std::map<std::string, double> TaskSpec::*table) {
  if (override_row) return override_row;
  std::vector<double> row;
  row.reserve(tasks.size());
  for (const auto& task : tasks) {
    const auto& entries = task.*table;
    auto it = entries.find(node.node_type);
    if (it == entries.end()) return std::nullopt;
    row.push_back(it->second);
  }
  return row;
}

}  // namespace

ConstraintSystem build_group_matrix(const NetworkSpec& net) {
  const std::size_t n = net.node_count();
  const std::size_t t_count = net.task_count();
  ConstraintSystem sys;
  sys.nodes = n;
  sys.tasks = t_count;
  sys.matrix.assign(net.group_count() * n * t_count, 0.0);
  sys.rhs.reserve(net.group_count());
  sys.group_task.reserve(net.group_count());
  sys.members.resize(net.group_count());

  for (std::size_t m = 0; m < net.group_count(); ++m) {
    const auto& g = net.groups[m];
    if (g.weights.size() != n) {
      std::ostringstream os;
      os << group_label(g, m) << ": weight vector has length " << g.weights.size()
         << ", expected " << n;
      throw ValidationError(os.str());
    }
    if (g.task >= t_count) {
      std::ostringstream os;
      os << group_label(g, m) << ": task index " << g.task << " out of range";
      throw ValidationError(os.str());
    }
    bool any_positive = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = g.weights[i];
      if (!std::isfinite(w) || w < 0.0) {
        throw ValidationError(group_label(g, m) + ": weights must be finite and nonnegative");
      }
      if (w > 0.0) {
        any_positive = true;
        sys.matrix[m * n * t_count + i * t_count + g.task] = w;
        sys.members[m].push_back({i, w});
      }
    }
    if (!any_positive) {
      throw ValidationError(group_label(g, m) + ": needs at least one strictly positive weight");
    }
    sys.rhs.push_back(g.qos_min);
    sys.group_task.push_back(g.task);
  }
  return sys;
}

LocalDomain build_local_domain(const NodeSpec& node, std::span<const TaskSpec> tasks,
                               std::size_t node_index) {
  LocalDomain dom;
  dom.node = node_index;
  dom.dimension = tasks.size();
  auto energy = resolve_costs(node, tasks, node.energy_cost, &TaskSpec::energy_cost);
  auto memory = resolve_costs(node, tasks, node.memory_cost, &TaskSpec::memory_cost);
  if (!energy || !memory) {
    throw ValidationError(node_label(node, node_index) + ": no cost entry for node type '" +
                          node.node_type + "' on every task");
  }
  if (energy->size() != tasks.size() || memory->size() != tasks.size()) {
    throw ValidationError(node_label(node, node_index) + ": cost override length differs from task count");
  }
  dom.rows.push_back({std::move(*energy), node.energy_budget});
  dom.rows.push_back({std::move(*memory), node.memory_budget});
  return dom;
}

std::vector<LocalDomain> build_local_domains(const NetworkSpec& net) {
  std::vector<LocalDomain> out;
  out.reserve(net.node_count());
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    out.push_back(build_local_domain(net.nodes[i], net.tasks, i));
  }
  return out;
}

ValidationReport validate_network(const NetworkSpec& net) {
  ValidationReport report;
  auto add = [&](std::string msg) { report.violations.push_back(std::move(msg)); };
  const std::size_t n = net.node_count();
  const std::size_t t_count = net.task_count();

  if (n == 0) add("network has no nodes");
  if (t_count == 0) add("network has no tasks");

  std::set<std::string> task_names;
  for (std::size_t t = 0; t < t_count; ++t) {
    const auto& task = net.tasks[t];
    if (!task_names.insert(task.name).second) add("task '" + task.name + "': duplicate name");
    if (!(task.min_runs_per_node >= 0.0) || !std::isfinite(task.min_runs_per_node)) {
      add("task '" + task.name + "': min_runs_per_node must be finite and >= 0");
    }
  }

  std::set<int> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = net.nodes[i];
    const std::string label = node_label(node, i);
    if (!ids.insert(node.id).second) add(label + ": duplicate id");
    if (!std::isfinite(node.energy_budget) || node.energy_budget < 0.0) {
      add(label + ": energy budget must be finite and >= 0");
    }
    if (!std::isfinite(node.memory_budget) || node.memory_budget < 0.0) {
      add(label + ": memory budget must be finite and >= 0");
    }
    if (node.utility_coeffs.size() != t_count) {
      add(label + ": utility_coeffs has length " + std::to_string(node.utility_coeffs.size()) +
          ", expected " + std::to_string(t_count));
    }
    for (double u : node.utility_coeffs) {
      if (!std::isfinite(u)) {
        add(label + ": utility_coeffs must be finite");
        break;
      }
    }
    auto check_row = [&](const std::optional<std::vector<double>>& row, const char* what) {
      if (!row) {
        add(label + ": missing " + what + " cost entry for node type '" + node.node_type + "'");
        return;
      }
      if (row->size() != t_count) {
        add(label + ": " + what + " cost row has wrong length");
        return;
      }
      for (std::size_t t = 0; t < t_count; ++t) {
        if (!std::isfinite((*row)[t]) || (*row)[t] <= 0.0) {
          add(label + ": " + what + " cost for task " + std::to_string(t) + " must be finite and > 0");
        }
      }
    };
    check_row(resolve_costs(node, net.tasks, node.energy_cost, &TaskSpec::energy_cost), "energy");
    check_row(resolve_costs(node, net.tasks, node.memory_cost, &TaskSpec::memory_cost), "memory");
  }

  for (std::size_t m = 0; m < net.group_count(); ++m) {
    const auto& g = net.groups[m];
    const std::string label = group_label(g, m);
    if (g.task >= t_count) add(label + ": task index " + std::to_string(g.task) + " out of range");
    if (!std::isfinite(g.qos_min)) add(label + ": qos_min must be finite");
    if (g.weights.size() != n) {
      std::string msg = label + ": weight vector has length " + std::to_string(g.weights.size()) +
                        " for " + std::to_string(n) + " nodes";
      for (std::size_t i = n; i < g.weights.size(); ++i) {
        if (g.weights[i] != 0.0) msg += "; references missing node index " + std::to_string(i);
      }
      add(msg);
    }
    bool any_positive = false;
    for (double w : g.weights) {
      if (!std::isfinite(w) || w < 0.0) {
        add(label + ": weights must be finite and nonnegative");
        break;
      }
      any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) add(label + ": needs at least one strictly positive weight");
  }
  return report;
}

double linear_utility(const NetworkSpec& net, const AllocationPolicy& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const auto& u = net.nodes[i].utility_coeffs;
    for (std::size_t t = 0; t < net.task_count(); ++t) total += u[t] * x(i, t);
  }
  return total;
}

Instance Instance::build(NetworkSpec net) {
  auto report = validate_network(net);
  if (!report.ok()) {
    std::string msg = "invalid network:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }
  Instance inst;
  inst.domains = build_local_domains(net);
  inst.constraints = build_group_matrix(net);
  inst.network = std::move(net);
  return inst;
}

}  // namespace edgealloc
