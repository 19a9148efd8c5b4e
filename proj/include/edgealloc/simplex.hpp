#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Small dense simplex shared by the node subproblems and the centralized oracle.
namespace edgealloc::lp {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

/// maximize objective . x  subject to  rows[r] . x <= rhs[r],  x >= 0.
struct LpProblem {
  std::size_t vars = 0;
  std::vector<double> objective;
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;

  explicit LpProblem(std::size_t n = 0) : vars(n), objective(n, 0.0) {}
  void add_row(std::vector<double> coeffs, double bound);
};

struct LpOptions {
  // Among optimal vertices return the lexicographically smallest x.
  bool lexicographic_ties = false;
  double optimality_tol = 1e-9;
  double feasibility_tol = 1e-9;
  double tie_tol = 1e-9;
  std::size_t max_pivots = 100000;
};

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;
  double value = 0.0;
  // More than one vertex attains the optimum (only computed with lexicographic_ties).
  bool tie = false;
  std::size_t pivots = 0;
};

/// Two-phase primal simplex with Bland's rule. Phase 1 is skipped when every
/// rhs is nonnegative (the origin is then a basic feasible solution).
LpResult solve(const LpProblem& problem, const LpOptions& options = {});

}  // namespace edgealloc::lp
