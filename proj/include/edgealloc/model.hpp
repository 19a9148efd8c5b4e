#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgealloc {

/// Raised when a network, domain or config breaks a structural invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for out-of-range solver or tool parameters.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TaskSpec {
  std::string name;
  double min_runs_per_node = 0.0;            // runs per cycle
  std::map<std::string, double> energy_cost;  // node type -> J per run
  std::map<std::string, double> memory_cost;  // node type -> GB*s per run

  bool operator==(const TaskSpec&) const = default;
};

struct NodeSpec {
  int id = 0;  // external label; the node index is its position in NetworkSpec::nodes
  std::string node_type;
  double energy_budget = 0.0;  // J per cycle
  double memory_budget = 0.0;  // GB*s per cycle
  std::vector<double> utility_coeffs;
  // Per-node cost rows that replace the node-type entries of TaskSpec.
  std::optional<std::vector<double>> energy_cost;
  std::optional<std::vector<double>> memory_cost;

  bool operator==(const NodeSpec&) const = default;
};

struct GroupSpec {
  std::string name;
  std::size_t task = 0;
  std::vector<double> weights;  // length N, weights[i] > 0 iff node i is a member
  double qos_min = 0.0;

  /// Node indices with a strictly positive weight, ascending.
  [[nodiscard]] std::vector<std::size_t> members() const;

  bool operator==(const GroupSpec&) const = default;
};

struct NetworkSpec {
  std::vector<NodeSpec> nodes;
  std::vector<TaskSpec> tasks;
  std::vector<GroupSpec> groups;

  [[nodiscard]] std::size_t node_count() const { return nodes.size(); }
  [[nodiscard]] std::size_t task_count() const { return tasks.size(); }
  [[nodiscard]] std::size_t group_count() const { return groups.size(); }
  [[nodiscard]] std::optional<std::size_t> node_index(int id) const;
  [[nodiscard]] std::optional<std::size_t> task_index(const std::string& name) const;

  bool operator==(const NetworkSpec&) const = default;
};

/// One half-plane coeffs . x_i <= bound of a node's feasible set.
struct HalfPlane {
  std::vector<double> coeffs;
  double bound = 0.0;
};

/// Feasible set of one node: x_i >= 0 plus resource half-planes.
struct LocalDomain {
  std::size_t node = 0;
  std::size_t dimension = 0;
  std::vector<HalfPlane> rows;

  /// Largest amount by which x breaks a row or nonnegativity (0 when inside).
  [[nodiscard]] double max_violation(std::span<const double> x) const;
  [[nodiscard]] bool contains(std::span<const double> x, double tol = 1e-9) const {
    return max_violation(x) <= tol;
  }
};

/// Stacked decision vector x = [x_1; ...; x_N], node-major (index i*T + t).
class AllocationPolicy {
 public:
  AllocationPolicy() = default;
  AllocationPolicy(std::size_t nodes, std::size_t tasks)
      : nodes_(nodes), tasks_(tasks), values_(nodes * tasks, 0.0) {}

  [[nodiscard]] std::size_t nodes() const { return nodes_; }
  [[nodiscard]] std::size_t tasks() const { return tasks_; }

  double& operator()(std::size_t node, std::size_t task) { return values_[node * tasks_ + task]; }
  double operator()(std::size_t node, std::size_t task) const {
    return values_[node * tasks_ + task];
  }

  std::span<double> block(std::size_t node) {
    return {values_.data() + node * tasks_, tasks_};
  }
  [[nodiscard]] std::span<const double> block(std::size_t node) const {
    return {values_.data() + node * tasks_, tasks_};
  }

  std::span<double> stacked() { return values_; }
  [[nodiscard]] std::span<const double> stacked() const { return values_; }

  bool operator==(const AllocationPolicy&) const = default;

 private:
  std::size_t nodes_ = 0;
  std::size_t tasks_ = 0;
  std::vector<double> values_;
};

struct GroupMember {
  std::size_t node = 0;
  double weight = 0.0;
};

/// The stacked system G x >= q. Row m is (g_m kron e_{t_m})^T.
struct ConstraintSystem {
  std::size_t nodes = 0;
  std::size_t tasks = 0;
  std::vector<double> matrix;  // row-major, groups() x (nodes*tasks)
  std::vector<double> rhs;
  std::vector<std::size_t> group_task;
  std::vector<std::vector<GroupMember>> members;  // ascending node index

  [[nodiscard]] std::size_t groups() const { return rhs.size(); }
  [[nodiscard]] std::size_t columns() const { return nodes * tasks; }
  [[nodiscard]] double at(std::size_t row, std::size_t col) const {
    return matrix[row * columns() + col];
  }

  /// Dense product G x over every column in ascending order.
  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;

  /// Group totals sum_i g_m[i] * x_i[t_m], members visited by ascending node.
  [[nodiscard]] std::vector<double> group_totals(const AllocationPolicy& x) const;

  [[nodiscard]] double max_row_norm_squared() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  [[nodiscard]] bool ok() const { return violations.empty(); }
};

ConstraintSystem build_group_matrix(const NetworkSpec& net);

LocalDomain build_local_domain(const NodeSpec& node, std::span<const TaskSpec> tasks,
                               std::size_t node_index = 0);

std::vector<LocalDomain> build_local_domains(const NetworkSpec& net);

ValidationReport validate_network(const NetworkSpec& net);

/// Sum over nodes of u_i . x_i.
double linear_utility(const NetworkSpec& net, const AllocationPolicy& x);

/// Network, domains and group system prepared once for repeated solves.
struct Instance {
  NetworkSpec network;
  std::vector<LocalDomain> domains;
  ConstraintSystem constraints;

  /// Validates and builds; throws ValidationError listing every violation.
  static Instance build(NetworkSpec net);
};

}  // namespace edgealloc
