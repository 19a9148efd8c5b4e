#include "edgealloc/local_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <functional>
#include <random>

#include "edgealloc/simplex.hpp"

namespace edgealloc {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::degenerate_tie: return "degenerate-tie";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

double LocalObjective::value(std::span<const double> x) const {
  double v = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) v += linear_coeffs[t] * x[t];
  if (concave_term) v += concave_term->value(x);
  return v;
}

std::vector<double> LocalObjective::gradient(std::span<const double> x) const {
  std::vector<double> g(linear_coeffs.begin(), linear_coeffs.end());
  if (concave_term) {
    const auto extra = concave_term->gradient(x);
    for (std::size_t t = 0; t < g.size(); ++t) g[t] += extra[t];
  }
  return g;
}

LocalSolution solve_local_lp(const LocalDomain& dom, std::span<const double> c) {
  lp::LpProblem problem(dom.dimension);
  std::copy(c.begin(), c.end(), problem.objective.begin());
  for (const auto& row : dom.rows) problem.add_row(row.coeffs, row.bound);

  lp::LpOptions options;
  options.lexicographic_ties = true;
  const auto res = lp::solve(problem, options);

  LocalSolution out;
  if (res.status != lp::LpStatus::optimal) {
    out.x.assign(dom.dimension, 0.0);
    out.status = SolveStatus::infeasible;
    return out;
  }
  out.x = res.x;
  out.objective_value = res.value;
  out.status = res.tie ? SolveStatus::degenerate_tie : SolveStatus::optimal;
  return out;
}

namespace {

std::string format_residual(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", r);
  return buf;
}

struct Constraint {
  std::vector<double> a;
  double b = 0.0;
};

std::vector<Constraint> stacked_constraints(const LocalDomain& dom) {
  std::vector<Constraint> cons;
  for (const auto& row : dom.rows) cons.push_back({row.coeffs, row.bound});
  for (std::size_t t = 0; t < dom.dimension; ++t) {
    Constraint c{std::vector<double>(dom.dimension, 0.0), 0.0};
    c.a[t] = -1.0;
    cons.push_back(std::move(c));
  }
  return cons;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Solves the k x k system M z = r in place (Gaussian elimination, partial pivoting).
std::vector<double> solve_dense(std::vector<double> m, std::vector<double> r, std::size_t k) {
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t row = col + 1; row < k; ++row) {
      if (std::abs(m[row * k + col]) > std::abs(m[piv * k + col])) piv = row;
    }
    if (piv != col) {
      for (std::size_t j = 0; j < k; ++j) std::swap(m[col * k + j], m[piv * k + j]);
      std::swap(r[col], r[piv]);
    }
    const double d = m[col * k + col];
    if (std::abs(d) < 1e-300) continue;
    for (std::size_t row = col + 1; row < k; ++row) {
      const double f = m[row * k + col] / d;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < k; ++j) m[row * k + j] -= f * m[col * k + j];
      r[row] -= f * r[col];
    }
  }
  std::vector<double> z(k, 0.0);
  for (std::size_t i = k; i-- > 0;) {
    double s = r[i];
    for (std::size_t j = i + 1; j < k; ++j) s -= m[i * k + j] * z[j];
    const double d = m[i * k + i];
    z[i] = std::abs(d) < 1e-300 ? 0.0 : s / d;
  }
  return z;
}

}  // namespace

std::vector<double> project_onto_domain(const LocalDomain& dom, std::span<const double> y) {
  const std::size_t n = dom.dimension;
  const auto cons = stacked_constraints(dom);
  double scale = 1.0;
  for (double v : y) scale = std::max(scale, std::abs(v));

  // Origin is always feasible (bounds >= 0).
  std::vector<double> x(n, 0.0);
  std::vector<std::size_t> working;
  const std::size_t max_iter = 50 * (cons.size() + 1);

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = x[i] - y[i];

    // nu = -(C_W C_W^T)^{-1} C_W g ; p = -g - C_W^T nu
    const std::size_t k = working.size();
    std::vector<double> nu;
    if (k > 0) {
      std::vector<double> m(k * k), r(k);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) m[a * k + b] = dot(cons[working[a]].a, cons[working[b]].a);
        r[a] = -dot(cons[working[a]].a, g);
      }
      nu = solve_dense(std::move(m), std::move(r), k);
    }
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = -g[i];
      for (std::size_t a = 0; a < k; ++a) v -= cons[working[a]].a[i] * nu[a];
      p[i] = v;
    }

    double pnorm = 0.0;
    for (double v : p) pnorm = std::max(pnorm, std::abs(v));
    if (pnorm <= 1e-13 * scale) {
      std::size_t drop = k;
      double most_negative = -1e-12 * scale;
      for (std::size_t a = 0; a < k; ++a) {
        if (nu[a] < most_negative) {
          most_negative = nu[a];
          drop = a;
        }
      }
      if (drop == k) break;
      working.erase(working.begin() + static_cast<std::ptrdiff_t>(drop));
      continue;
    }

    double alpha = 1.0;
    std::size_t blocking = cons.size();
    for (std::size_t c = 0; c < cons.size(); ++c) {
      if (std::find(working.begin(), working.end(), c) != working.end()) continue;
      const double cp = dot(cons[c].a, p);
      if (cp <= 1e-15 * scale) continue;
      const double slack = std::max(cons[c].b - dot(cons[c].a, x), 0.0);
      const double step = slack / cp;
      if (step < alpha) {
        alpha = step;
        blocking = c;
      }
    }
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
    if (blocking != cons.size()) working.push_back(blocking);
  }
  for (double& v : x) v = std::max(v, 0.0);
  return x;
}

double gradient_check_error(const ConcaveTerm& term, std::span<const double> x, double step) {
  const auto g = term.gradient(x);
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t t = 0; t < probe.size(); ++t) {
    const double h = step * std::max(1.0, std::abs(x[t]));
    const double orig = probe[t];
    probe[t] = orig + h;
    const double fp = term.value(probe);
    probe[t] = orig - h;
    const double fm = term.value(probe);
    probe[t] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(g[t]), 1.0});
    worst = std::max(worst, std::abs(fd - g[t]) / denom);
  }
  return worst;
}

namespace {

// Random point strictly inside dom, or nullopt when the interior is empty.
std::optional<std::vector<double>> interior_point(const LocalDomain& dom, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::uniform_real_distribution<double> shrink(0.1, 0.9);
  std::vector<double> d(dom.dimension);
  for (double& v : d) v = unit(rng);
  double t_max = std::numeric_limits<double>::infinity();
  for (const auto& row : dom.rows) {
    const double ad = dot(row.coeffs, d);
    if (ad > 0.0) t_max = std::min(t_max, row.bound / ad);
  }
  if (!(t_max > 0.0)) return std::nullopt;
  if (!std::isfinite(t_max)) t_max = 1.0;
  const double s = shrink(rng) * t_max;
  for (double& v : d) v *= s;
  return d;
}

double projected_residual(const LocalDomain& dom, std::span<const double> x,
                          std::span<const double> g) {
  std::vector<double> probe(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) probe[t] = x[t] + g[t];
  const auto proj = project_onto_domain(dom, probe);
  double r = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) r = std::max(r, std::abs(x[t] - proj[t]));
  return r;
}

}  // namespace

LocalSolution solve_local_concave(const LocalDomain& dom, const LocalObjective& obj, double tol,
                                  const ConcaveOptions& options) {
  if (!(tol > 0.0)) throw ParameterError("solve_local_concave: tol must be > 0");
  if (obj.linear_coeffs.size() != dom.dimension) {
    throw ParameterError("solve_local_concave: objective dimension mismatch");
  }
  if (obj.concave_term) {
    if (!obj.concave_term->value || !obj.concave_term->gradient) {
      throw ParameterError("solve_local_concave: concave term needs value and gradient");
    }
    std::mt19937_64 rng(options.seed);
    for (std::size_t k = 0; k < options.gradient_checks; ++k) {
      const auto p = interior_point(dom, rng);
      if (!p) break;
      const double err = gradient_check_error(*obj.concave_term, *p);
      if (err > options.gradient_check_tol) {
        throw ParameterError("solve_local_concave: gradient fails finite-difference check (rel err " +
                             std::to_string(err) + ")");
      }
    }
  }

  std::vector<double> x(dom.dimension, 0.0);
  double fx = obj.value(x);
  LocalSolution best{x, fx, SolveStatus::optimal};
  double step = 1.0;
  double residual = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const auto g = obj.gradient(x);
    residual = projected_residual(dom, x, g);
    double scale = 1.0;
    for (double v : g) scale = std::max(scale, std::abs(v));
    if (residual <= tol * scale) {
      return {x, fx, SolveStatus::optimal};
    }
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<double> trial(x.size());
      for (std::size_t t = 0; t < x.size(); ++t) trial[t] = x[t] + step * g[t];
      auto next = project_onto_domain(dom, trial);
      double ascent = 0.0;
      for (std::size_t t = 0; t < x.size(); ++t) ascent += g[t] * (next[t] - x[t]);
      const double fn = obj.value(next);
      if (fn >= fx + 1e-4 * ascent) {
        x = std::move(next);
        fx = fn;
        accepted = true;
        step = std::min(step * 2.0, 1e8);
        break;
      }
      step *= 0.5;
    }
    if (fx > best.objective_value) best = {x, fx, SolveStatus::optimal};
    if (!accepted) {
      // No Armijo step left in floating point; close enough counts as converged.
      if (residual <= 1e2 * tol * scale) return {x, fx, SolveStatus::optimal};
      break;
    }
  }
  throw NonConvergenceError("solve_local_concave: no convergence (residual " +
                                format_residual(residual) + ")",
                            std::move(best));
}

LocalSolution brute_force_local(const LocalDomain& dom, std::span<const double> c, double grid) {
  if (!(grid > 0.0)) throw ParameterError("brute_force_local: grid must be > 0");
  const std::size_t n = dom.dimension;
  if (n == 0 || n > 3) throw ParameterError("brute_force_local: supports 1 to 3 tasks");

  std::vector<std::size_t> steps(n);
  std::vector<bool> monotone(n, true);
  for (std::size_t t = 0; t < n; ++t) {
    double ub = std::numeric_limits<double>::infinity();
    for (const auto& row : dom.rows) {
      if (row.coeffs[t] > 0.0) ub = std::min(ub, row.bound / row.coeffs[t]);
      if (row.coeffs[t] < 0.0) monotone[t] = false;
    }
    if (!std::isfinite(ub)) throw ParameterError("brute_force_local: unbounded coordinate");
    steps[t] = static_cast<std::size_t>(std::floor(std::max(ub, 0.0) / grid + 1e-9));
  }

  LocalSolution best{std::vector<double>(n, 0.0), 0.0, SolveStatus::optimal};
  bool found = false;
  std::vector<double> x(n, 0.0);

  auto feasible = [&] {
    for (std::size_t r = 0; r < dom.rows.size(); ++r) {
      if (dot(dom.rows[r].coeffs, x) > dom.rows[r].bound + 1e-12) return false;
    }
    return true;
  };

  std::function<void(std::size_t)> walk = [&](std::size_t t) {
    for (std::size_t k = 0; k <= steps[t]; ++k) {
      x[t] = static_cast<double>(k) * grid;
      if (t + 1 < n) {
        // Prefix feasibility with later coordinates at zero.
        for (std::size_t u = t + 1; u < n; ++u) x[u] = 0.0;
        if (!feasible()) {
          if (monotone[t]) break;
          continue;
        }
        walk(t + 1);
        continue;
      }
      if (monotone[t]) {
        // Objective is linear in the last coordinate, so only the end of the
        // feasible grid run matters.
        x[t] = 0.0;
        if (!feasible()) return;
        std::size_t k_best = 0;
        if (c[t] > 0.0) {
          double room = std::numeric_limits<double>::infinity();
          for (const auto& row : dom.rows) {
            if (row.coeffs[t] > 0.0) room = std::min(room, (row.bound - dot(row.coeffs, x)) / row.coeffs[t]);
          }
          k_best = std::min(steps[t], static_cast<std::size_t>(std::floor(std::max(room, 0.0) / grid + 1e-9)));
          x[t] = static_cast<double>(k_best) * grid;
          while (k_best > 0 && !feasible()) x[t] = static_cast<double>(--k_best) * grid;
        }
        const double v = dot(c, x);
        if (!found || v > best.objective_value + 1e-12) {
          best.x = x;
          best.objective_value = v;
          found = true;
        }
        return;
      }
      if (!feasible()) continue;
      const double v = dot(c, x);
      if (!found || v > best.objective_value + 1e-12) {
        best.x = x;
        best.objective_value = v;
        found = true;
      }
    }
  };
  walk(0);
  if (!found) best.status = SolveStatus::infeasible;
  return best;
}

}  // namespace edgealloc
