#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "acquimech/analysis.hpp"
#include "acquimech/core.hpp"
#include "acquimech/lp.hpp"

namespace acquimech {

/// A score threshold: either a score index or NEVER (no score qualifies).
/// NEVER orders after every score index.
class ScoreThreshold {
 public:
  static ScoreThreshold at(std::size_t index) { return ScoreThreshold(index); }
  static ScoreThreshold never() { return ScoreThreshold(); }

  bool is_never() const noexcept { return !index_.has_value(); }
  std::size_t index() const { return index_.value(); }
  /// Position in the extended order: the score index, or m for NEVER.
  std::size_t rank(std::size_t m) const noexcept { return index_.value_or(m); }
  bool admits(std::size_t score) const noexcept { return index_ && score >= *index_; }

  friend bool operator==(const ScoreThreshold&, const ScoreThreshold&) = default;

 private:
  ScoreThreshold() = default;
  explicit ScoreThreshold(std::size_t index) : index_(index) {}
  std::optional<std::size_t> index_;
};

namespace detail {

// sum_{s >= threshold} r(v, s); zero for NEVER.
inline double tail_mass(const Instance& instance, std::size_t v, ScoreThreshold threshold) {
  if (threshold.is_never()) return 0.0;
  double sum = 0.0;
  for (std::size_t s = threshold.index(); s < instance.m(); ++s) sum += instance.r(v, s);
  return sum;
}

// sum_v (v - t) d(v) r(v, s) for every score s.
inline std::vector<double> weighted_columns(const Instance& instance) {
  std::vector<double> cols(instance.m(), 0.0);
  for (std::size_t s = 0; s < instance.m(); ++s) {
    for (std::size_t v = 0; v < instance.n(); ++v) cols[s] += instance.weight(v) * instance.r(v, s);
  }
  return cols;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Score-Only Mechanism
// ---------------------------------------------------------------------------

/// Acquires on score s iff E[v | s] >= t, i.e. sum_v (v - t) d(v) r(v, s) >= 0.
/// Ignores the report, so every row is the same.
inline Mechanism solve_som(const Instance& instance) {
  const std::vector<double> cols = detail::weighted_columns(instance);
  Matrix x(instance.n(), instance.m(), 0.0);
  for (std::size_t s = 0; s < instance.m(); ++s) {
    if (cols[s] >= 0.0) {
      for (std::size_t v = 0; v < instance.n(); ++v) x(v, s) = 1.0;
    }
  }
  return Mechanism(std::move(x), "SOM");
}

struct ScoreDiagnostic {
  std::size_t score_index = 0;
  std::optional<double> posterior;
  bool score_clears_bar = false;
  bool violated = false;
};

struct ConsistencyReport {
  bool consistent = true;
  std::vector<ScoreDiagnostic> per_score;
  std::vector<std::size_t> unreachable;
};

/// Consistency holds when E[v | s] >= t exactly for the scores s >= t.
/// Unreachable scores are skipped and listed separately.
inline ConsistencyReport check_consistency(const Instance& instance) {
  ConsistencyReport report;
  for (std::size_t s = 0; s < instance.m(); ++s) {
    ScoreDiagnostic diag;
    diag.score_index = s;
    diag.posterior = posterior_mean(instance, s);
    diag.score_clears_bar = instance.score(s) >= instance.bar();
    if (!diag.posterior) {
      report.unreachable.push_back(s);
    } else {
      const bool posterior_clears = *diag.posterior >= instance.bar();
      diag.violated = posterior_clears != diag.score_clears_bar;
      if (diag.violated) report.consistent = false;
    }
    report.per_score.push_back(diag);
  }
  return report;
}

struct ThresholdMechanism {
  Mechanism mechanism;
  double reward = 0.0;
  ScoreThreshold threshold = ScoreThreshold::never();
};

/// Exhaustive search over the m + 1 single-threshold mechanisms
/// (acquire iff s >= threshold, including never acquiring). Earliest
/// threshold wins ties.
inline ThresholdMechanism best_threshold_mechanism(const Instance& instance) {
  const std::size_t m = instance.m();
  ThresholdMechanism best;
  bool have = false;
  for (std::size_t rank = 0; rank <= m; ++rank) {
    const ScoreThreshold th = rank == m ? ScoreThreshold::never() : ScoreThreshold::at(rank);
    Matrix x(instance.n(), m, 0.0);
    for (std::size_t v = 0; v < instance.n(); ++v) {
      for (std::size_t s = 0; s < m; ++s) x(v, s) = th.admits(s) ? 1.0 : 0.0;
    }
    Mechanism mech(std::move(x), "threshold");
    const double reward = expected_reward(instance, mech);
    if (!have || reward > best.reward) {
      best = ThresholdMechanism{std::move(mech), reward, th};
      have = true;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Two-Menu Mechanisms
// ---------------------------------------------------------------------------

struct TmmParams {
  ScoreThreshold b1 = ScoreThreshold::never();
  ScoreThreshold b2 = ScoreThreshold::never();
  double alpha = 0.0;
  /// Qualities that strictly prefer menu 1 (alpha from b1).
  std::vector<std::size_t> v1_set;
};

struct TmmResult {
  TmmParams params;
  Mechanism mechanism;
};

/// Materializes TMM(b1, b2, alpha). Quality v takes menu 1 iff
/// alpha * sum_{s>=b1} r(v,s) > sum_{s>=b2} r(v,s); indifferent owners take
/// menu 2.
inline TmmResult tmm_build(const Instance& instance, ScoreThreshold b1, ScoreThreshold b2,
                           double alpha) {
  const std::size_t m = instance.m();
  if ((!b1.is_never() && b1.index() >= m) || (!b2.is_never() && b2.index() >= m)) {
    throw std::out_of_range("TMM threshold index out of range");
  }
  if (b1.rank(m) > b2.rank(m)) throw std::invalid_argument("TMM requires b1 <= b2");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("TMM alpha must be in [0,1]");

  TmmParams params{b1, b2, alpha, {}};
  Matrix x(instance.n(), m, 0.0);
  for (std::size_t v = 0; v < instance.n(); ++v) {
    const bool menu1 =
        alpha * detail::tail_mass(instance, v, b1) > detail::tail_mass(instance, v, b2);
    if (menu1) params.v1_set.push_back(v);
    for (std::size_t s = 0; s < m; ++s) {
      if (menu1) {
        x(v, s) = b1.admits(s) ? alpha : 0.0;
      } else {
        x(v, s) = b2.admits(s) ? 1.0 : 0.0;
      }
    }
  }
  return TmmResult{std::move(params), Mechanism(std::move(x), "TMM")};
}

struct TmmOptimum {
  TmmParams params;
  Mechanism mechanism;
  double reward = 0.0;
};

/// Optimal Two-Menu Mechanism.
///
/// For each pair b1 <= b2 (NEVER included) the owner of quality v_i switches
/// to menu 1 once alpha passes alpha_i = B_i / A_i, where A_i and B_i are the
/// tail masses above b1 and b2. Between consecutive breakpoints the menu-1 set
/// is fixed and the reward is linear in alpha, so it is evaluated at both ends
/// of every interval with that interval's membership. Ties resolve to the
/// first (b1, b2, alpha) in ascending order.
inline TmmOptimum tmm_optimal(const Instance& instance) {
  const std::size_t n = instance.n();
  const std::size_t m = instance.m();
  auto threshold = [m](std::size_t rank) {
    return rank == m ? ScoreThreshold::never() : ScoreThreshold::at(rank);
  };

  bool have = false;
  double best_value = 0.0;
  std::size_t best_b1 = m, best_b2 = m;
  double best_alpha = 0.0;

  std::vector<double> a(n), b(n), weight(n);
  for (std::size_t v = 0; v < n; ++v) weight[v] = instance.weight(v);

  for (std::size_t r1 = 0; r1 <= m; ++r1) {
    for (std::size_t r2 = r1; r2 <= m; ++r2) {
      for (std::size_t v = 0; v < n; ++v) {
        a[v] = detail::tail_mass(instance, v, threshold(r1));
        b[v] = detail::tail_mass(instance, v, threshold(r2));
      }
      std::vector<double> points{0.0, 1.0};
      for (std::size_t v = 0; v < n; ++v) {
        if (a[v] > 0.0) {
          const double brk = b[v] / a[v];
          if (brk >= 0.0 && brk <= 1.0) points.push_back(brk);
        }
      }
      std::sort(points.begin(), points.end());
      points.erase(std::unique(points.begin(), points.end()), points.end());

      auto consider = [&](double alpha, double value) {
        if (!have || value > best_value) {
          have = true;
          best_value = value;
          best_b1 = r1;
          best_b2 = r2;
          best_alpha = alpha;
        }
      };

      if (points.size() == 1) {
        // Only possible when the interval collapses; evaluate directly.
        consider(points[0], expected_reward(instance,
                                            tmm_build(instance, threshold(r1), threshold(r2),
                                                      points[0]).mechanism));
        continue;
      }
      for (std::size_t j = 0; j + 1 < points.size(); ++j) {
        const double lo = points[j];
        const double hi = points[j + 1];
        const double mid = 0.5 * (lo + hi);
        // Reward on (lo, hi) is slope * alpha + intercept.
        double slope = 0.0, intercept = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
          if (mid * a[v] > b[v]) {
            slope += weight[v] * a[v];
          } else {
            intercept += weight[v] * b[v];
          }
        }
        consider(lo, slope * lo + intercept);
        consider(hi, slope * hi + intercept);
      }
    }
  }

  TmmResult built = tmm_build(instance, threshold(best_b1), threshold(best_b2), best_alpha);
  const double reward = expected_reward(instance, built.mechanism);
  return TmmOptimum{std::move(built.params), std::move(built.mechanism), reward};
}

// ---------------------------------------------------------------------------
// LP-optimal mechanism
// ---------------------------------------------------------------------------

/// The single-item LP over x(v, s) (variable v * m + s): truthful reporting
/// is a best response, rows are nondecreasing in s, entries lie in [0, 1].
inline lp::LpProblem build_om1_problem(const Instance& instance) {
  const std::size_t n = instance.n();
  const std::size_t m = instance.m();
  auto var = [m](std::size_t v, std::size_t s) { return v * m + s; };

  lp::LpProblem problem(n * m);
  problem.set_all_bounds(0.0, 1.0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t s = 0; s < m; ++s) problem.set_objective(var(v, s), instance.weight(v) * instance.r(v, s));
  }
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t lie = 0; lie < n; ++lie) {
      if (lie == v) continue;
      std::vector<lp::Term> terms;
      for (std::size_t s = 0; s < m; ++s) {
        const double r = instance.r(v, s);
        if (r == 0.0) continue;
        terms.push_back({var(lie, s), r});
        terms.push_back({var(v, s), -r});
      }
      problem.add_constraint(std::move(terms), lp::Sense::less_equal, 0.0);
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t s = 1; s < m; ++s) {
      problem.add_constraint({{var(v, s - 1), 1.0}, {var(v, s), -1.0}}, lp::Sense::less_equal, 0.0);
    }
  }
  return problem;
}

inline Mechanism solve_om1(const Instance& instance) {
  const lp::LpSolution sol = lp::solve_lp(build_om1_problem(instance));
  if (sol.status != lp::LpStatus::optimal) {
    throw std::runtime_error(std::string("OM1 linear program not optimal: ") +
                             lp::to_string(sol.status));
  }
  Matrix x(instance.n(), instance.m());
  for (std::size_t v = 0; v < instance.n(); ++v) {
    for (std::size_t s = 0; s < instance.m(); ++s) {
      x(v, s) = std::clamp(sol.values[v * instance.m() + s], 0.0, 1.0);
    }
  }
  return Mechanism(std::move(x), "OM1");
}

// ---------------------------------------------------------------------------
// Menus
// ---------------------------------------------------------------------------

/// Number of distinct rows, comparing entries within `tol`.
inline std::size_t menu_size(const Mechanism& mechanism, double tol = 1e-6) {
  std::vector<std::size_t> representatives;
  for (std::size_t r = 0; r < mechanism.rows(); ++r) {
    const bool seen = std::any_of(representatives.begin(), representatives.end(), [&](std::size_t q) {
      for (std::size_t c = 0; c < mechanism.cols(); ++c) {
        if (std::abs(mechanism(r, c) - mechanism(q, c)) > tol) return false;
      }
      return true;
    });
    if (!seen) representatives.push_back(r);
  }
  return representatives.size();
}

/// Replaces every row with v <= t by the above-bar row that type v likes best
/// (smallest such quality on ties). For an IC, monotone input the result is
/// IC, monotone, no worse for the collector, and has at most |{v > t}| menus.
/// With no quality above the bar the all-zero mechanism is returned.
inline Mechanism reduce_menu(const Instance& instance, const Mechanism& mechanism) {
  require_same_shape(instance, mechanism);
  std::vector<std::size_t> above;
  for (std::size_t v = 0; v < instance.n(); ++v) {
    if (instance.value(v) > instance.bar()) above.push_back(v);
  }
  if (above.empty()) return Mechanism::zeros(instance.n(), instance.m(), "reduced");

  Matrix x = mechanism.matrix();
  for (std::size_t v = 0; v < instance.n(); ++v) {
    if (instance.value(v) > instance.bar()) continue;
    std::size_t target = above.front();
    double best = acquire_probability(instance, mechanism, v, target);
    for (std::size_t candidate : above) {
      const double p = acquire_probability(instance, mechanism, v, candidate);
      if (p > best + 1e-12) {
        best = p;
        target = candidate;
      }
    }
    for (std::size_t s = 0; s < instance.m(); ++s) x(v, s) = mechanism(target, s);
  }
  return Mechanism(std::move(x), "reduced");
}

}  // namespace acquimech
