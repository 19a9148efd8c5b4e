#include "edgealloc/simplex.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace edgealloc::lp {

void LpProblem::add_row(std::vector<double> coeffs, double bound) {
  coeffs.resize(vars, 0.0);
  rows.push_back(std::move(coeffs));
  rhs.push_back(bound);
}

namespace {

constexpr double kPivotEps = 1e-11;

enum class PhaseResult { optimal, unbounded, iteration_limit };

class Tableau {
 public:
  Tableau(const LpProblem& p, const LpOptions& opt) : opt_(opt) {
    m_ = p.rows.size();
    n_ = p.vars;
    std::size_t artificial = 0;
    for (double b : p.rhs) artificial += b < 0.0 ? 1 : 0;
    cols_ = n_ + m_ + artificial;
    width_ = cols_ + 1;
    data_.assign(m_ * width_, 0.0);
    basis_.resize(m_);
    allowed_.assign(cols_, true);
    std::size_t next_art = n_ + m_;
    for (std::size_t r = 0; r < m_; ++r) {
      const bool flip = p.rhs[r] < 0.0;
      const double sign = flip ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) at(r, j) = sign * p.rows[r][j];
      at(r, n_ + r) = sign;
      rhs(r) = sign * p.rhs[r];
      if (flip) {
        at(r, next_art) = 1.0;
        basis_[r] = next_art++;
      } else {
        basis_[r] = n_ + r;
      }
    }
    first_artificial_ = n_ + m_;
  }

  [[nodiscard]] bool has_artificials() const { return cols_ > first_artificial_; }

  double& at(std::size_t r, std::size_t j) { return data_[r * width_ + j]; }
  [[nodiscard]] double at(std::size_t r, std::size_t j) const { return data_[r * width_ + j]; }
  double& rhs(std::size_t r) { return data_[r * width_ + cols_]; }
  [[nodiscard]] double rhs(std::size_t r) const { return data_[r * width_ + cols_]; }

  [[nodiscard]] std::vector<bool> basic_mask() const {
    std::vector<bool> mask(cols_, false);
    for (auto b : basis_) mask[b] = true;
    return mask;
  }

  [[nodiscard]] std::vector<double> reduced_costs(std::span<const double> obj) const {
    std::vector<double> d(obj.begin(), obj.end());
    for (std::size_t r = 0; r < m_; ++r) {
      const double cb = obj[basis_[r]];
      if (cb == 0.0) continue;
      const double* row = &data_[r * width_];
      for (std::size_t j = 0; j < cols_; ++j) d[j] -= cb * row[j];
    }
    return d;
  }

  [[nodiscard]] double objective_value(std::span<const double> obj) const {
    double v = 0.0;
    for (std::size_t r = 0; r < m_; ++r) v += obj[basis_[r]] * rhs(r);
    return v;
  }

  // Ratio test for entering column j; returns m_ when the column is unbounded.
  [[nodiscard]] std::size_t leaving_row(std::size_t j, double* step = nullptr) const {
    std::size_t best = m_;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m_; ++r) {
      const double a = at(r, j);
      if (a <= kPivotEps) continue;
      const double ratio = std::max(rhs(r), 0.0) / a;
      if (best == m_ || ratio < best_ratio - 1e-13) {
        best = r;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + 1e-13 && basis_[r] < basis_[best]) {
        best = r;
        best_ratio = std::min(best_ratio, ratio);
      }
    }
    if (step) *step = best_ratio;
    return best;
  }

  void pivot(std::size_t r, std::size_t j) {
    double* prow = &data_[r * width_];
    const double inv = 1.0 / prow[j];
    for (std::size_t k = 0; k < width_; ++k) prow[k] *= inv;
    prow[j] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &data_[i * width_];
      const double f = row[j];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < width_; ++k) row[k] -= f * prow[k];
      row[j] = 0.0;
    }
    basis_[r] = j;
    ++pivots_;
  }

  PhaseResult run(std::span<const double> obj) {
    while (true) {
      if (pivots_ >= opt_.max_pivots) return PhaseResult::iteration_limit;
      const auto d = reduced_costs(obj);
      const auto basic = basic_mask();
      std::size_t entering = cols_;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (allowed_[j] && !basic[j] && d[j] > opt_.optimality_tol) {
          entering = j;  // Bland: lowest index
          break;
        }
      }
      if (entering == cols_) return PhaseResult::optimal;
      const std::size_t r = leaving_row(entering);
      if (r == m_) return PhaseResult::unbounded;
      pivot(r, entering);
    }
  }

  // Fixes at zero every nonbasic column whose reduced cost is strictly worsening.
  void restrict_to_optimal_face(std::span<const double> obj) {
    const auto d = reduced_costs(obj);
    const auto basic = basic_mask();
    for (std::size_t j = 0; j < cols_; ++j) {
      if (!basic[j] && d[j] < -opt_.tie_tol) allowed_[j] = false;
    }
  }

  // True when some zero-reduced-cost column leads to a different point in x.
  [[nodiscard]] bool has_alternative_vertex(std::span<const double> obj) const {
    const auto d = reduced_costs(obj);
    const auto basic = basic_mask();
    for (std::size_t j = 0; j < cols_; ++j) {
      if (!allowed_[j] || basic[j] || std::abs(d[j]) > opt_.tie_tol) continue;
      double step = 0.0;
      const std::size_t r = leaving_row(j, &step);
      if (r != m_ && step <= 1e-12) continue;
      bool moves_x = j < n_;
      for (std::size_t i = 0; i < m_ && !moves_x; ++i) {
        moves_x = basis_[i] < n_ && std::abs(at(i, j)) > kPivotEps;
      }
      if (moves_x) return true;
    }
    return false;
  }

  // Moves basic artificials out after phase 1 and bars them from re-entering.
  void retire_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < first_artificial_) continue;
      for (std::size_t j = 0; j < first_artificial_; ++j) {
        if (std::abs(at(r, j)) > 1e-9) {
          pivot(r, j);
          break;
        }
      }
    }
    for (std::size_t j = first_artificial_; j < cols_; ++j) allowed_[j] = false;
  }

  [[nodiscard]] std::vector<double> primal() const {
    std::vector<double> x(n_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < n_) x[basis_[r]] = std::max(rhs(r), 0.0);
    }
    return x;
  }

  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t first_artificial() const { return first_artificial_; }
  [[nodiscard]] std::size_t pivots() const { return pivots_; }

 private:
  const LpOptions& opt_;
  std::size_t m_ = 0, n_ = 0, cols_ = 0, width_ = 0, first_artificial_ = 0;
  std::size_t pivots_ = 0;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
  std::vector<bool> allowed_;
};

LpStatus to_status(PhaseResult r) {
  switch (r) {
    case PhaseResult::optimal: return LpStatus::optimal;
    case PhaseResult::unbounded: return LpStatus::unbounded;
    case PhaseResult::iteration_limit: return LpStatus::iteration_limit;
  }
  return LpStatus::iteration_limit;
}

}  // namespace

LpResult solve(const LpProblem& problem, const LpOptions& options) {
  assert(problem.objective.size() == problem.vars);
  Tableau tab(problem, options);
  LpResult result;

  if (tab.has_artificials()) {
    std::vector<double> phase1(tab.cols(), 0.0);
    for (std::size_t j = tab.first_artificial(); j < tab.cols(); ++j) phase1[j] = -1.0;
    const auto pr = tab.run(phase1);
    result.pivots = tab.pivots();
    if (pr == PhaseResult::iteration_limit) {
      result.status = LpStatus::iteration_limit;
      return result;
    }
    double scale = 1.0;
    for (double b : problem.rhs) scale = std::max(scale, std::abs(b));
    if (tab.objective_value(phase1) < -options.feasibility_tol * scale) {
      result.status = LpStatus::infeasible;
      return result;
    }
    tab.retire_artificials();
  }

  std::vector<double> obj(tab.cols(), 0.0);
  std::copy(problem.objective.begin(), problem.objective.end(), obj.begin());
  const auto pr = tab.run(obj);
  result.pivots = tab.pivots();
  if (pr != PhaseResult::optimal) {
    result.status = to_status(pr);
    return result;
  }

  if (options.lexicographic_ties) {
    tab.restrict_to_optimal_face(obj);
    if (tab.has_alternative_vertex(obj)) {
      result.tie = true;
      for (std::size_t t = 0; t < problem.vars; ++t) {
        std::vector<double> lex(tab.cols(), 0.0);
        lex[t] = -1.0;
        if (tab.run(lex) != PhaseResult::optimal) break;
        tab.restrict_to_optimal_face(lex);
      }
    }
  }

  result.status = LpStatus::optimal;
  result.x = tab.primal();
  result.value = 0.0;
  for (std::size_t j = 0; j < problem.vars; ++j) result.value += problem.objective[j] * result.x[j];
  result.pivots = tab.pivots();
  return result;
}

}  // namespace edgealloc::lp
