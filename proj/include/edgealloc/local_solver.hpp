#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "edgealloc/model.hpp"

namespace edgealloc {

enum class SolveStatus { optimal, degenerate_tie, infeasible };

const char* to_string(SolveStatus s);

struct LocalSolution {
  std::vector<double> x;
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::optimal;
};

/// A concave utility term with its gradient.
struct ConcaveTerm {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

/// linear_coeffs . x + concave_term(x).
struct LocalObjective {
  std::vector<double> linear_coeffs;
  std::optional<ConcaveTerm> concave_term;

  [[nodiscard]] double value(std::span<const double> x) const;
  [[nodiscard]] std::vector<double> gradient(std::span<const double> x) const;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, LocalSolution best)
      : std::runtime_error(what), best_(std::move(best)) {}
  [[nodiscard]] const LocalSolution& best_iterate() const { return best_; }

 private:
  LocalSolution best_;
};

/// Vertex maximizer of c . x over dom. Ties within 1e-9 resolve to the
/// lexicographically smallest optimal vertex and report degenerate_tie.
LocalSolution solve_local_lp(const LocalDomain& dom, std::span<const double> c);

/// Euclidean projection of y onto dom (primal active-set QP, exact up to rounding).
std::vector<double> project_onto_domain(const LocalDomain& dom, std::span<const double> y);

struct ConcaveOptions {
  std::size_t max_iterations = 20000;
  std::size_t gradient_checks = 4;  // random interior points verified before solving
  double gradient_check_tol = 1e-4;
  std::uint64_t seed = 7;
};

/// Projected-gradient ascent. Converged when ||x - P(x + grad f(x))||_inf <= tol * max(1, ||grad f(x)||_inf).
/// Throws ParameterError when the gradient fails the finite-difference check and
/// NonConvergenceError (with the best iterate) when the cap is reached.
LocalSolution solve_local_concave(const LocalDomain& dom, const LocalObjective& obj, double tol,
                                  const ConcaveOptions& options = {});

/// Largest relative error between term.gradient(x) and central differences of term.value.
double gradient_check_error(const ConcaveTerm& term, std::span<const double> x,
                            double step = 1e-6);

/// Exhaustive grid search over dom (T <= 3). Lexicographically first grid
/// point wins ties.
LocalSolution brute_force_local(const LocalDomain& dom, std::span<const double> c, double grid);

}  // namespace edgealloc
