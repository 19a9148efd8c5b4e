#pragma once

#include <vector>

#include "edgealloc/model.hpp"

namespace edgealloc {

/// Problem (1) lifted to the stacked space as one LP:
/// maximize u . x  s.t. domain rows per node, G x >= q, x >= 0.
struct CentralizedProblem {
  std::size_t nodes = 0;
  std::size_t tasks = 0;
  std::vector<double> objective;  // stacked u, length N*T
  std::vector<std::vector<double>> domain_rows;  // each length N*T
  std::vector<double> domain_bounds;
  std::vector<std::vector<double>> group_rows;   // rows of G
  std::vector<double> group_bounds;              // q

  [[nodiscard]] std::size_t variables() const { return nodes * tasks; }
  [[nodiscard]] std::size_t constraint_count() const {
    return domain_rows.size() + group_rows.size();
  }
};

CentralizedProblem make_centralized_problem(const Instance& inst);

enum class OracleStatus { optimal, infeasible, unbounded };
const char* to_string(OracleStatus s);

struct OracleSolution {
  OracleStatus status = OracleStatus::infeasible;
  AllocationPolicy x;
  double value = 0.0;
};

/// Exact optimum by two-phase dense simplex (Bland's rule).
OracleSolution solve_centralized(const CentralizedProblem& prob);

struct SlaterCheck {
  bool strictly_feasible = false;
  double margin = 0.0;
};

/// Largest uniform slack s with G x >= q + s, domain rows <= b - s and x >= s.
SlaterCheck check_slater(const CentralizedProblem& prob);

}  // namespace edgealloc
