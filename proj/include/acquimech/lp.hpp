#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace acquimech::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Reported-solution guarantees.
inline constexpr double kFeasibilityTolerance = 1e-7;
inline constexpr double kBoundTolerance = 1e-9;
inline constexpr double kOptimalityTolerance = 1e-9;

enum class Sense { less_equal, greater_equal, equal };

struct Term {
  std::size_t index;
  double coef;
};

struct Constraint {
  std::vector<Term> terms;
  Sense sense = Sense::less_equal;
  double bound = 0.0;
};

/// maximize c'x subject to rows a'x (<=|>=|=) b and lo <= x <= hi.
///
/// Rows are stored sparsely. Variables default to [0, +inf).
class LpProblem {
 public:
  explicit LpProblem(std::size_t num_vars)
      : objective_(num_vars, 0.0), lower_(num_vars, 0.0), upper_(num_vars, kInfinity) {}

  std::size_t num_vars() const noexcept { return objective_.size(); }
  std::size_t num_constraints() const noexcept { return constraints_.size(); }

  void set_objective(std::size_t j, double c) { objective_.at(j) = c; }
  void set_objective(std::vector<double> c) {
    if (c.size() != objective_.size()) throw std::invalid_argument("objective length mismatch");
    objective_ = std::move(c);
  }

  void set_bounds(std::size_t j, double lo, double hi) {
    lower_.at(j) = lo;
    upper_.at(j) = hi;
  }
  void set_all_bounds(double lo, double hi) {
    std::fill(lower_.begin(), lower_.end(), lo);
    std::fill(upper_.begin(), upper_.end(), hi);
  }

  std::size_t add_constraint(std::vector<Term> terms, Sense sense, double bound) {
    constraints_.push_back(Constraint{std::move(terms), sense, bound});
    return constraints_.size() - 1;
  }

  /// Adds a'x <= b from a dense coefficient vector.
  std::size_t add_dense_constraint(std::span<const double> a, double bound,
                                   Sense sense = Sense::less_equal) {
    if (a.size() != num_vars()) throw std::invalid_argument("constraint length mismatch");
    std::vector<Term> terms;
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[j] != 0.0) terms.push_back({j, a[j]});
    }
    return add_constraint(std::move(terms), sense, bound);
  }

  const std::vector<double>& objective() const noexcept { return objective_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  const std::vector<Constraint>& constraints() const noexcept { return constraints_; }

  double row_activity(std::size_t row, std::span<const double> x) const {
    double sum = 0.0;
    for (const Term& t : constraints_[row].terms) sum += t.coef * x[t.index];
    return sum;
  }

  /// Largest violation of any row or bound at x (0 when feasible).
  double max_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < num_vars(); ++j) {
      worst = std::max({worst, lower_[j] - x[j], x[j] - upper_[j]});
    }
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      const double act = row_activity(i, x);
      const double b = constraints_[i].bound;
      switch (constraints_[i].sense) {
        case Sense::less_equal: worst = std::max(worst, act - b); break;
        case Sense::greater_equal: worst = std::max(worst, b - act); break;
        case Sense::equal: worst = std::max(worst, std::abs(act - b)); break;
      }
    }
    return worst;
  }

  /// Largest row violation at x, each divided by max(1, the row's largest |a|).
  double scaled_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      double amax = 1.0;
      for (const Term& t : constraints_[i].terms) amax = std::max(amax, std::abs(t.coef));
      const double act = row_activity(i, x);
      const double b = constraints_[i].bound;
      double v = 0.0;
      switch (constraints_[i].sense) {
        case Sense::less_equal: v = act - b; break;
        case Sense::greater_equal: v = b - act; break;
        case Sense::equal: v = std::abs(act - b); break;
      }
      worst = std::max(worst, v / amax);
    }
    return worst;
  }

  void validate() const {
    const std::size_t n = num_vars();
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(lower_[j]) || std::isnan(upper_[j]) || lower_[j] > upper_[j] ||
          lower_[j] == kInfinity || upper_[j] == -kInfinity) {
        throw std::invalid_argument("invalid bounds for variable " + std::to_string(j));
      }
      if (!std::isfinite(objective_[j])) {
        throw std::invalid_argument("non-finite objective coefficient");
      }
    }
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      const Constraint& c = constraints_[i];
      if (!std::isfinite(c.bound)) {
        throw std::invalid_argument("non-finite bound in constraint " + std::to_string(i));
      }
      for (const Term& t : c.terms) {
        if (t.index >= n || !std::isfinite(t.coef)) {
          throw std::invalid_argument("malformed term in constraint " + std::to_string(i));
        }
      }
    }
  }

 private:
  std::vector<double> objective_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<Constraint> constraints_;
};

enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> values;
  double objective_value = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

// Primal simplex for bounded variables on a dense tableau that keeps only the
// nonbasic columns (T = B^-1 N). Row i of the tableau expresses basic variable
// basis_[i] = beta_i - sum_j T(i,j) * nonbasic_[j].
class BoundedSimplex {
 public:
  explicit BoundedSimplex(const LpProblem& problem) : problem_(problem) {}

  LpSolution solve() {
    problem_.validate();
    const std::size_t n = problem_.num_vars();
    if (!build()) return LpSolution{LpStatus::infeasible, {}, 0.0, 0};

    if (num_artificial_ > 0) {
      phase_cost_.assign(total_vars_, 0.0);
      for (std::size_t v = first_artificial_; v < total_vars_; ++v) phase_cost_[v] = -1.0;
      reset_reduced_costs(phase_cost_);
      const Outcome outcome = iterate();
      if (outcome == Outcome::iteration_limit) throw_iteration_limit();
      double infeasibility = 0.0;
      for (std::size_t v = first_artificial_; v < total_vars_; ++v) infeasibility += value_[v];
      if (infeasibility > kPhaseOneTolerance) {
        return LpSolution{LpStatus::infeasible, {}, 0.0, iterations_};
      }
      for (std::size_t v = first_artificial_; v < total_vars_; ++v) {
        lower_[v] = 0.0;
        upper_[v] = 0.0;
        if (!is_basic_[v]) value_[v] = 0.0;
      }
    }

    phase_cost_ = cost_;
    reset_reduced_costs(phase_cost_);
    const Outcome outcome = iterate();
    if (outcome == Outcome::iteration_limit) throw_iteration_limit();
    if (outcome == Outcome::unbounded) {
      return LpSolution{LpStatus::unbounded, {}, 0.0, iterations_};
    }

    LpSolution sol;
    sol.status = LpStatus::optimal;
    sol.iterations = iterations_;
    sol.values.resize(n);
    const auto& lo = problem_.lower();
    const auto& hi = problem_.upper();
    for (std::size_t j = 0; j < n; ++j) {
      sol.values[j] = std::clamp(value_[j] * col_scale_[j], lo[j], hi[j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      sol.objective_value += problem_.objective()[j] * sol.values[j];
    }
    const double drift = problem_.scaled_violation(sol.values);
    if (drift > kAccuracyGuard) {
      throw std::runtime_error("simplex lost feasibility to round-off (scaled violation " +
                               std::to_string(drift) + ")");
    }
    return sol;
  }

 private:
  enum class Outcome { optimal, unbounded, iteration_limit };
  enum class Status { basic, at_lower, at_upper, free_zero };

  static constexpr double kPivotTolerance = 1e-7;
  static constexpr double kRefreshPivot = 1e-5;
  // Coefficients this small relative to their row's largest are dropped.
  static constexpr double kNegligibleRatio = 1e-12;
  static constexpr double kPrimalTolerance = 1e-9;
  static constexpr double kPhaseOneTolerance = 1e-8;
  static constexpr double kAccuracyGuard = 1e-6;
  static constexpr double kDegenerateStep = 1e-12;
  static constexpr std::size_t kStallLimit = 50;
  static constexpr double kBlandPivotShare = 0.1;
  static constexpr std::size_t kFinalRefreshLimit = 3;
  static constexpr int kEquilibrationPasses = 2;

  [[noreturn]] void throw_iteration_limit() const {
    throw std::runtime_error("simplex iteration limit exceeded after " +
                             std::to_string(iterations_) + " pivots");
  }

  // Scales rows and objective, adds slacks and (where the all-at-bound start
  // violates a row) artificials, and fills the initial tableau. Returns false
  // when an empty row is already infeasible.
  bool build() {
    const std::size_t n = problem_.num_vars();
    const auto& rows = problem_.constraints();

    struct ScaledRow {
      std::vector<Term> terms;
      bool equality;
      double rhs;
      double residual;
    };
    std::vector<ScaledRow> kept;
    kept.reserve(rows.size());
    for (const Constraint& c : rows) {
      std::vector<Term> terms = merged(c.terms, n);
      const double sign = c.sense == Sense::greater_equal ? -1.0 : 1.0;
      double amax = 0.0;
      for (const Term& t : terms) amax = std::max(amax, std::abs(t.coef));
      if (amax == 0.0) {
        const double b = sign * c.bound;
        const bool ok = c.sense == Sense::equal ? std::abs(b) <= kFeasibilityTolerance
                                                : b >= -kFeasibilityTolerance;
        if (!ok) return false;
        continue;
      }
      const double scale = sign / amax;
      for (Term& t : terms) t.coef *= scale;
      kept.push_back({std::move(terms), c.sense == Sense::equal, c.bound * scale, 0.0});
    }

    // Alternate column and row equilibration; structural j is stored as
    // x_j / col_scale_[j].
    col_scale_.assign(n, 1.0);
    for (int pass = 0; pass < kEquilibrationPasses; ++pass) {
      std::vector<double> cmax_col(n, 0.0);
      for (const ScaledRow& row : kept) {
        for (const Term& t : row.terms) {
          cmax_col[t.index] = std::max(cmax_col[t.index], std::abs(t.coef));
        }
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (cmax_col[j] > 0.0) {
          cmax_col[j] = 1.0 / cmax_col[j];
          col_scale_[j] *= cmax_col[j];
        } else {
          cmax_col[j] = 1.0;
        }
      }
      for (ScaledRow& row : kept) {
        double amax = 0.0;
        for (Term& t : row.terms) {
          t.coef *= cmax_col[t.index];
          amax = std::max(amax, std::abs(t.coef));
        }
        for (Term& t : row.terms) t.coef /= amax;
        row.rhs /= amax;
      }
    }

    std::vector<double> scaled_lower(n), scaled_upper(n), scaled_cost(n);
    double cmax = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      scaled_lower[j] = problem_.lower()[j] / col_scale_[j];
      scaled_upper[j] = problem_.upper()[j] / col_scale_[j];
      scaled_cost[j] = problem_.objective()[j] * col_scale_[j];
      cmax = std::max(cmax, std::abs(scaled_cost[j]));
    }
    const double cscale = cmax > 0.0 ? 1.0 / cmax : 1.0;

    // Start every structural at a finite bound (or zero when free).
    std::vector<double> start(n, 0.0);
    std::vector<Status> start_status(n, Status::at_lower);
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isfinite(scaled_lower[j])) {
        start[j] = scaled_lower[j];
      } else if (std::isfinite(scaled_upper[j])) {
        start[j] = scaled_upper[j];
        start_status[j] = Status::at_upper;
      } else {
        start_status[j] = Status::free_zero;
      }
    }
    for (ScaledRow& row : kept) {
      double activity = 0.0;
      for (const Term& t : row.terms) activity += t.coef * start[t.index];
      row.residual = row.rhs - activity;
    }

    rows_ = kept.size();
    columns_.assign(n, {});
    rhs_.assign(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      rhs_[i] = kept[i].rhs;
      for (const Term& t : kept[i].terms) columns_[t.index].push_back({i, t.coef});
    }
    std::vector<bool> needs_artificial(rows_, false);
    num_artificial_ = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
      const double r = kept[i].residual;
      needs_artificial[i] = kept[i].equality ? std::abs(r) > kPrimalTolerance
                                             : r < -kPrimalTolerance;
      if (needs_artificial[i]) ++num_artificial_;
    }

    first_artificial_ = n + rows_;
    total_vars_ = first_artificial_ + num_artificial_;
    lower_.assign(total_vars_, 0.0);
    upper_.assign(total_vars_, kInfinity);
    cost_.assign(total_vars_, 0.0);
    value_.assign(total_vars_, 0.0);
    status_.assign(total_vars_, Status::at_lower);
    is_basic_.assign(total_vars_, false);
    position_.assign(total_vars_, 0);
    for (std::size_t j = 0; j < n; ++j) {
      lower_[j] = scaled_lower[j];
      upper_[j] = scaled_upper[j];
      cost_[j] = scaled_cost[j] * cscale;
      value_[j] = start[j];
      status_[j] = start_status[j];
    }
    for (std::size_t i = 0; i < rows_; ++i) {
      if (kept[i].equality) upper_[n + i] = 0.0;
    }

    // Nonbasic columns: structurals first, then slacks of artificial rows.
    nonbasic_.clear();
    for (std::size_t j = 0; j < n; ++j) nonbasic_.push_back(j);
    basis_.assign(rows_, 0);
    std::size_t next_artificial = first_artificial_;
    std::vector<double> basic_sign(rows_, 1.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const std::size_t slack = n + i;
      if (needs_artificial[i]) {
        const std::size_t art = next_artificial++;
        basic_sign[i] = kept[i].residual >= 0.0 ? 1.0 : -1.0;
        artificial_row_.push_back(i);
        artificial_sign_.push_back(basic_sign[i]);
        basis_[i] = art;
        value_[art] = std::abs(kept[i].residual);
        value_[slack] = 0.0;
        status_[slack] = Status::at_lower;
        nonbasic_.push_back(slack);
      } else {
        basis_[i] = slack;
        value_[slack] = kept[i].residual;
      }
    }
    cols_ = nonbasic_.size();
    for (std::size_t i = 0; i < rows_; ++i) {
      is_basic_[basis_[i]] = true;
      status_[basis_[i]] = Status::basic;
      position_[basis_[i]] = i;
    }
    for (std::size_t p = 0; p < cols_; ++p) position_[nonbasic_[p]] = p;

    tableau_.assign(rows_ * cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double* row = &tableau_[i * cols_];
      for (const Term& t : kept[i].terms) row[position_[t.index]] = basic_sign[i] * t.coef;
      if (needs_artificial[i]) row[position_[n + i]] = basic_sign[i];
    }
    return true;
  }

  static std::vector<Term> merged(const std::vector<Term>& terms, std::size_t n) {
    std::vector<Term> sorted(terms);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Term& a, const Term& b) { return a.index < b.index; });
    std::vector<Term> out;
    for (const Term& t : sorted) {
      if (t.index >= n) throw std::invalid_argument("term index out of range");
      if (!out.empty() && out.back().index == t.index) {
        out.back().coef += t.coef;
      } else {
        out.push_back(t);
      }
    }
    double amax = 0.0;
    for (const Term& t : out) amax = std::max(amax, std::abs(t.coef));
    std::erase_if(out, [amax](const Term& t) { return std::abs(t.coef) <= kNegligibleRatio * amax; });
    return out;
  }

  // Calls f(row, coefficient) for the scaled constraint column of variable v.
  template <class F>
  void for_column(std::size_t v, F&& f) const {
    const std::size_t n = columns_.size();
    if (v < n) {
      for (const auto& [row, coef] : columns_[v]) f(row, coef);
    } else if (v < first_artificial_) {
      f(v - n, 1.0);
    } else {
      f(artificial_row_[v - first_artificial_], artificial_sign_[v - first_artificial_]);
    }
  }

  // Rebuilds the tableau, basic values and reduced costs from the original
  // rows and the current basis, discarding accumulated round-off.
  void reinvert() {
    const std::size_t r = rows_;
    if (r == 0) return;
    std::vector<double> b(r * r, 0.0);
    std::vector<double> inv(r * r, 0.0);
    for (std::size_t c = 0; c < r; ++c) {
      for_column(basis_[c], [&](std::size_t i, double a) { b[i * r + c] = a; });
      inv[c * r + c] = 1.0;
    }
    // Gauss-Jordan with partial pivoting, touching only nonzeros of the pivot row.
    std::vector<std::size_t> nz_b, nz_inv;
    for (std::size_t c = 0; c < r; ++c) {
      std::size_t p = c;
      for (std::size_t i = c + 1; i < r; ++i) {
        if (std::abs(b[i * r + c]) > std::abs(b[p * r + c])) p = i;
      }
      const double piv = b[p * r + c];
      if (std::abs(piv) < 1e-13) throw std::runtime_error("simplex basis became singular");
      if (p != c) {
        std::swap_ranges(b.begin() + static_cast<std::ptrdiff_t>(p * r),
                         b.begin() + static_cast<std::ptrdiff_t>((p + 1) * r),
                         b.begin() + static_cast<std::ptrdiff_t>(c * r));
        std::swap_ranges(inv.begin() + static_cast<std::ptrdiff_t>(p * r),
                         inv.begin() + static_cast<std::ptrdiff_t>((p + 1) * r),
                         inv.begin() + static_cast<std::ptrdiff_t>(c * r));
      }
      double* brow = &b[c * r];
      double* irow = &inv[c * r];
      nz_b.clear();
      nz_inv.clear();
      for (std::size_t j = c; j < r; ++j) {
        if (brow[j] != 0.0) {
          brow[j] /= piv;
          nz_b.push_back(j);
        }
      }
      for (std::size_t j = 0; j < r; ++j) {
        if (irow[j] != 0.0) {
          irow[j] /= piv;
          nz_inv.push_back(j);
        }
      }
      for (std::size_t i = 0; i < r; ++i) {
        if (i == c) continue;
        const double f = b[i * r + c];
        if (f == 0.0) continue;
        for (std::size_t j : nz_b) b[i * r + j] -= f * brow[j];
        for (std::size_t j : nz_inv) inv[i * r + j] -= f * irow[j];
        b[i * r + c] = 0.0;
      }
    }

    std::fill(tableau_.begin(), tableau_.end(), 0.0);
    std::vector<double> residual(rhs_);
    for (std::size_t p = 0; p < cols_; ++p) {
      const std::size_t v = nonbasic_[p];
      const double x = value_[v];
      for_column(v, [&](std::size_t k, double a) {
        for (std::size_t i = 0; i < r; ++i) {
          const double g = inv[i * r + k];
          if (g != 0.0) tableau_[i * cols_ + p] += g * a;
        }
        residual[k] -= a * x;
      });
    }
    for (std::size_t i = 0; i < r; ++i) {
      double x = 0.0;
      for (std::size_t k = 0; k < r; ++k) x += inv[i * r + k] * residual[k];
      value_[basis_[i]] = x;
    }
    reset_reduced_costs(phase_cost_);
  }

  void reset_reduced_costs(const std::vector<double>& cost) {
    reduced_.assign(cols_, 0.0);
    for (std::size_t p = 0; p < cols_; ++p) reduced_[p] = cost[nonbasic_[p]];
    for (std::size_t i = 0; i < rows_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &tableau_[i * cols_];
      for (std::size_t p = 0; p < cols_; ++p) reduced_[p] -= cb * row[p];
    }
  }

  bool eligible(std::size_t p, double& direction) const {
    const std::size_t v = nonbasic_[p];
    const double d = reduced_[p];
    if (lower_[v] == upper_[v]) return false;
    switch (status_[v]) {
      case Status::at_lower:
        direction = 1.0;
        return d > kOptimalityTolerance;
      case Status::at_upper:
        direction = -1.0;
        return d < -kOptimalityTolerance;
      case Status::free_zero:
        direction = d > 0.0 ? 1.0 : -1.0;
        return std::abs(d) > kOptimalityTolerance;
      case Status::basic: break;
    }
    return false;
  }

  // Dantzig pricing with smallest-variable-index tie-breaking; Bland's rule
  // (smallest eligible variable index) while degenerate pivots are stalling.
  bool price(std::size_t& entering, double& direction) const {
    bool found = false;
    double best = 0.0;
    std::size_t best_var = 0;
    for (std::size_t p = 0; p < cols_; ++p) {
      double dir = 0.0;
      if (!eligible(p, dir)) continue;
      const std::size_t v = nonbasic_[p];
      if (bland_) {
        if (!found || v < best_var) {
          found = true;
          best_var = v;
          entering = p;
          direction = dir;
        }
        continue;
      }
      const double score = std::abs(reduced_[p]);
      if (!found || score > best || (score == best && v < best_var)) {
        found = true;
        best = score;
        best_var = v;
        entering = p;
        direction = dir;
      }
    }
    return found;
  }

  double row_limit(std::size_t i, double g, double slack) const {
    const std::size_t v = basis_[i];
    if (g < 0.0) {
      if (!std::isfinite(lower_[v])) return kInfinity;
      return (value_[v] - lower_[v] + slack) / -g;
    }
    if (!std::isfinite(upper_[v])) return kInfinity;
    return (upper_[v] - value_[v] + slack) / g;
  }

  Outcome iterate() {
    const std::size_t limit = 200 * (rows_ + cols_) + 1000;
    const std::size_t refresh_interval = std::max<std::size_t>(500, 2 * rows_);
    std::size_t stalled = 0;
    std::size_t since_refresh = 0;
    std::size_t final_refreshes = 0;
    bland_ = false;
    std::vector<double> column(rows_);
    while (true) {
      if (iterations_ > limit) return Outcome::iteration_limit;
      if (since_refresh >= refresh_interval) {
        reinvert();
        since_refresh = 0;
      }
      std::size_t q = 0;
      double dir = 0.0;
      if (!price(q, dir)) {
        // Confirm optimality on a freshly computed tableau.
        if (since_refresh == 0 || final_refreshes >= kFinalRefreshLimit) return Outcome::optimal;
        reinvert();
        since_refresh = 0;
        ++final_refreshes;
        continue;
      }
      ++since_refresh;
      const std::size_t entering = nonbasic_[q];

      for (std::size_t i = 0; i < rows_; ++i) column[i] = tableau_[i * cols_ + q];

      // Basic variable i moves by g_i * theta where g_i = -T(i,q) * dir.
      const double range = upper_[entering] - lower_[entering];
      std::size_t leave = rows_;
      double theta = kInfinity;
      // Harris two-pass ratio test: bound the step with relaxed limits, then
      // pick among rows reaching their bound first. Dantzig mode takes the
      // largest pivot; Bland mode the smallest basic index among pivots that
      // are not tiny relative to the best one.
      double relaxed = kInfinity;
      double largest = 0.0;
      for (std::size_t i = 0; i < rows_; ++i) {
        if (std::abs(column[i]) <= kPivotTolerance) continue;
        relaxed = std::min(relaxed, row_limit(i, -column[i] * dir, kPrimalTolerance));
      }
      for (std::size_t i = 0; i < rows_; ++i) {
        const double a = std::abs(column[i]);
        if (a <= kPivotTolerance || row_limit(i, -column[i] * dir, 0.0) > relaxed) continue;
        largest = std::max(largest, a);
      }
      for (std::size_t i = 0; i < rows_; ++i) {
        const double a = std::abs(column[i]);
        if (a <= kPivotTolerance || row_limit(i, -column[i] * dir, 0.0) > relaxed) continue;
        if (leave == rows_) {
          if (!bland_ || a >= kBlandPivotShare * largest) leave = i;
          continue;
        }
        if (bland_) {
          if (a >= kBlandPivotShare * largest && basis_[i] < basis_[leave]) leave = i;
        } else {
          const double best = std::abs(column[leave]);
          if (a > best || (a == best && basis_[i] < basis_[leave])) leave = i;
        }
      }
      // A small pivot in an updated tableau may be accumulated round-off of a
      // true zero; recompute from the original rows and price again.
      if (leave < rows_ && std::abs(column[leave]) < kRefreshPivot && since_refresh > 1) {
        reinvert();
        since_refresh = 0;
        continue;
      }
      if (leave < rows_) theta = std::max(0.0, row_limit(leave, -column[leave] * dir, 0.0));

      const bool flip = range <= theta;
      if (flip) {
        theta = range;
        leave = rows_;
      }
      if (!std::isfinite(theta)) return Outcome::unbounded;

      ++iterations_;
      if (theta > kDegenerateStep) {
        stalled = 0;
        bland_ = false;
      } else if (++stalled >= kStallLimit) {
        bland_ = true;
      }

      if (theta != 0.0) {
        for (std::size_t i = 0; i < rows_; ++i) {
          if (column[i] != 0.0) value_[basis_[i]] -= column[i] * dir * theta;
        }
        value_[entering] += dir * theta;
      }

      if (flip) {
        status_[entering] = dir > 0.0 ? Status::at_upper : Status::at_lower;
        value_[entering] = dir > 0.0 ? upper_[entering] : lower_[entering];
        continue;
      }

      const std::size_t leaving = basis_[leave];
      const bool to_lower = -column[leave] * dir < 0.0;
      value_[leaving] = to_lower ? lower_[leaving] : upper_[leaving];
      pivot(leave, q);
      basis_[leave] = entering;
      nonbasic_[q] = leaving;
      is_basic_[entering] = true;
      is_basic_[leaving] = false;
      status_[entering] = Status::basic;
      status_[leaving] = to_lower ? Status::at_lower : Status::at_upper;
      if (leaving >= first_artificial_) {
        // An artificial that leaves the basis never re-enters.
        value_[leaving] = 0.0;
        upper_[leaving] = 0.0;
        status_[leaving] = Status::at_lower;
      }
      position_[entering] = leave;
      position_[leaving] = q;
    }
  }

  void pivot(std::size_t r, std::size_t q) {
    double* prow = &tableau_[r * cols_];
    const double inv = 1.0 / prow[q];
    // Only the pivot row's nonzeros can change other rows.
    support_.clear();
    for (std::size_t j = 0; j < cols_; ++j) {
      if (prow[j] == 0.0) continue;
      prow[j] *= inv;
      support_.push_back(j);
    }
    prow[q] = inv;

    auto eliminate = [&](double* row) {
      const double f = row[q];
      if (f == 0.0) return;
      row[q] = 0.0;
      for (std::size_t j : support_) row[j] -= f * prow[j];
    };
    for (std::size_t i = 0; i < rows_; ++i) {
      if (i != r) eliminate(&tableau_[i * cols_]);
    }
    eliminate(reduced_.data());
  }

  const LpProblem& problem_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t first_artificial_ = 0;
  std::size_t num_artificial_ = 0;
  std::size_t total_vars_ = 0;
  std::size_t iterations_ = 0;
  bool bland_ = false;

  std::vector<double> lower_, upper_, cost_, value_;
  std::vector<Status> status_;
  std::vector<bool> is_basic_;
  std::vector<std::size_t> position_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> nonbasic_;
  std::vector<double> tableau_;
  std::vector<double> reduced_;
  std::vector<std::size_t> support_;
  std::vector<double> phase_cost_;
  std::vector<double> rhs_;
  std::vector<double> col_scale_;
  std::vector<std::vector<std::pair<std::size_t, double>>> columns_;
  std::vector<std::size_t> artificial_row_;
  std::vector<double> artificial_sign_;
};

}  // namespace detail

/// Solves the problem to a basic optimal solution. Infeasible and unbounded
/// problems are reported through the status; malformed input throws.
inline LpSolution solve_lp(const LpProblem& problem) {
  return detail::BoundedSimplex(problem).solve();
}

}  // namespace acquimech::lp
