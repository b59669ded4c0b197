#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acquimech/analysis.hpp"
#include "acquimech/core.hpp"
#include "acquimech/lp.hpp"
#include "acquimech/single_item.hpp"

namespace acquimech {

inline constexpr std::size_t kDefaultSizeBudget = 1'000'000;

/// Thrown when a multi-item construction would need more LP variables (or
/// tensor cells) than the configured budget.
class SizeBudgetExceeded : public std::runtime_error {
 public:
  SizeBudgetExceeded(std::size_t requested, std::size_t budget)
      : std::runtime_error("problem needs " + std::to_string(requested) +
                           " variables, budget is " + std::to_string(budget)),
        requested_(requested),
        budget_(budget) {}

  std::size_t requested() const noexcept { return requested_; }
  std::size_t budget() const noexcept { return budget_; }

 private:
  std::size_t requested_;
  std::size_t budget_;
};

namespace detail {

inline std::size_t policy_variables(const MultiInstance& instance) {
  return instance.k() * instance.quality_profiles().size() * instance.score_profiles().size();
}

inline void require_budget(std::size_t requested, std::size_t budget) {
  if (requested > budget) throw SizeBudgetExceeded(requested, budget);
}

// Adds the single-item IC and monotonicity rows for a matrix stored at
// variables offset + v * m + s.
inline void add_single_item_rows(lp::LpProblem& problem, const Instance& instance,
                                 std::size_t offset) {
  const std::size_t n = instance.n();
  const std::size_t m = instance.m();
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t lie = 0; lie < n; ++lie) {
      if (lie == v) continue;
      std::vector<lp::Term> terms;
      for (std::size_t s = 0; s < m; ++s) {
        const double r = instance.r(v, s);
        if (r == 0.0) continue;
        terms.push_back({offset + lie * m + s, r});
        terms.push_back({offset + v * m + s, -r});
      }
      problem.add_constraint(std::move(terms), lp::Sense::less_equal, 0.0);
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t s = 1; s < m; ++s) {
      problem.add_constraint({{offset + v * m + s - 1, 1.0}, {offset + v * m + s, -1.0}},
                             lp::Sense::less_equal, 0.0);
    }
  }
}

inline std::string item_label(const char* stem, std::size_t k) {
  return std::string(stem) + std::to_string(k);
}

}  // namespace detail

/// Which LP a multi-item solver assembles. `literal` has one variable per
/// item, profile and score profile. `symmetric` stores only the first
/// item's tensor (items are exchangeable, so some optimum treats them alike),
/// merges constraints that coincide under item relabeling, and for OMk
/// writes each tensor entry as a sum of nonnegative score increments. Both
/// have the same optimal value.
enum class Formulation { symmetric, literal };

namespace detail {

// Parameterizes an item-exchangeable policy by the first item's tensor:
// x_i(a, b) = x_0(a, b with items 0 and i swapped), and x_0 is invariant under
// reordering items 1..k-1. Each invariant class of (a, b) gets one slot.
class SymmetricLayout {
 public:
  explicit SymmetricLayout(const MultiInstance& instance)
      : k_(instance.k()), qs_(instance.quality_profiles()), ss_(instance.score_profiles()) {
    const std::size_t sb = ss_.size();
    slot_.assign(qs_.size() * sb, kUnassigned);
    for (std::size_t a = 0; a < qs_.size(); ++a) {
      for (std::size_t b = 0; b < sb; ++b) {
        const std::size_t canon = canonical(a, b, 1);
        if (slot_[canon] == kUnassigned) slot_[canon] = slots_++;
        slot_[a * sb + b] = slot_[canon];
      }
    }
  }

  std::size_t slots() const noexcept { return slots_; }
  std::size_t slot(std::size_t a, std::size_t b) const { return slot_[a * ss_.size() + b]; }

  /// (a, b) with items 0 and i exchanged.
  std::pair<std::size_t, std::size_t> swapped(std::size_t a, std::size_t b, std::size_t i) const {
    if (i == 0) return {a, b};
    const std::size_t a0 = qs_.digit(a, 0), ai = qs_.digit(a, i);
    const std::size_t b0 = ss_.digit(b, 0), bi = ss_.digit(b, i);
    a = a + (ai - a0) * qs_.stride(0) + (a0 - ai) * qs_.stride(i);
    b = b + (bi - b0) * ss_.stride(0) + (b0 - bi) * ss_.stride(i);
    return {a, b};
  }

  /// Slot of item i's entry at (a, b).
  std::size_t item_slot(std::size_t i, std::size_t a, std::size_t b) const {
    const auto [sa, sbx] = swapped(a, b, i);
    return slot(sa, sbx);
  }

  /// Calls f(slot) for every increment summing to item i's entry at (a, b):
  /// the first item's cells with the same profile and own score 0..s_i.
  template <class F>
  void for_each_increment(std::size_t i, std::size_t a, std::size_t b, F&& f) const {
    const auto [sa, sbx] = swapped(a, b, i);
    const std::size_t own = ss_.digit(sbx, 0);
    const std::size_t base = sbx - own * ss_.stride(0);
    for (std::size_t s = 0; s <= own; ++s) f(slot(sa, base + s * ss_.stride(0)));
  }

  /// Canonical raw index of (a, b) under reordering items `first`..k-1.
  std::size_t canonical(std::size_t a, std::size_t b, std::size_t first) const {
    std::vector<std::pair<std::size_t, std::size_t>> items(k_);
    for (std::size_t j = 0; j < k_; ++j) items[j] = {qs_.digit(a, j), ss_.digit(b, j)};
    std::sort(items.begin() + static_cast<std::ptrdiff_t>(first), items.end());
    std::size_t ca = 0, cb = 0;
    for (std::size_t j = 0; j < k_; ++j) {
      ca += items[j].first * qs_.stride(j);
      cb += items[j].second * ss_.stride(j);
    }
    return ca * ss_.size() + cb;
  }

  /// Canonical (truth, report) quality-profile pair under reordering all items.
  std::pair<std::size_t, std::size_t> canonical_pair(std::size_t truth, std::size_t report) const {
    std::vector<std::pair<std::size_t, std::size_t>> items(k_);
    for (std::size_t j = 0; j < k_; ++j) items[j] = {qs_.digit(truth, j), qs_.digit(report, j)};
    std::sort(items.begin(), items.end());
    std::size_t ct = 0, cr = 0;
    for (std::size_t j = 0; j < k_; ++j) {
      ct += items[j].first * qs_.stride(j);
      cr += items[j].second * qs_.stride(j);
    }
    return {ct, cr};
  }

 private:
  static constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  std::size_t k_;
  TupleSpace qs_;
  TupleSpace ss_;
  std::size_t slots_ = 0;
  std::vector<std::size_t> slot_;
};

// Accumulates a sparse row and emits it with cancellation noise removed.
class RowBuilder {
 public:
  explicit RowBuilder(std::size_t width) : coef_(width, 0.0) {}

  void add(std::size_t j, double c) {
    if (coef_[j] == 0.0) touched_.push_back(j);
    coef_[j] += c;
  }

  std::vector<lp::Term> take() {
    std::sort(touched_.begin(), touched_.end());
    touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
    double scale = 0.0;
    for (std::size_t j : touched_) scale = std::max(scale, std::abs(coef_[j]));
    std::vector<lp::Term> out;
    for (std::size_t j : touched_) {
      if (std::abs(coef_[j]) > 1e-14 * scale) out.push_back({j, coef_[j]});
      coef_[j] = 0.0;
    }
    touched_.clear();
    return out;
  }

 private:
  std::vector<double> coef_;
  std::vector<std::size_t> touched_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// OM_k
// ---------------------------------------------------------------------------

/// The k-item LP. Variable i * cells + a * m^k + b holds x_i(a, b) for
/// quality profile a and score profile b. IC rows compare every ordered pair
/// of distinct report profiles; monotonicity is per item in its own score.
inline lp::LpProblem build_omk_problem(const MultiInstance& instance,
                                       std::size_t budget = kDefaultSizeBudget) {
  const std::size_t vars = detail::policy_variables(instance);
  detail::require_budget(vars, budget);

  const Instance& base = instance.base();
  const std::size_t k = instance.k();
  const TupleSpace qs = instance.quality_profiles();
  const TupleSpace ss = instance.score_profiles();
  const std::size_t qa = qs.size();
  const std::size_t sb = ss.size();
  const std::size_t cells = qa * sb;
  auto var = [&](std::size_t i, std::size_t a, std::size_t b) { return i * cells + a * sb + b; };

  const std::vector<double> lik = detail::profile_likelihoods(instance);

  lp::LpProblem problem(vars);
  problem.set_all_bounds(0.0, 1.0);
  for (std::size_t a = 0; a < qa; ++a) {
    const double pa = instance.prior_weight(a);
    for (std::size_t i = 0; i < k; ++i) {
      const double gain = base.value(qs.digit(a, i)) - base.bar();
      for (std::size_t b = 0; b < sb; ++b) problem.set_objective(var(i, a, b), pa * lik[a * sb + b] * gain);
    }
  }

  for (std::size_t truth = 0; truth < qa; ++truth) {
    for (std::size_t lie = 0; lie < qa; ++lie) {
      if (lie == truth) continue;
      std::vector<lp::Term> terms;
      for (std::size_t b = 0; b < sb; ++b) {
        const double w = lik[truth * sb + b];
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < k; ++i) {
          terms.push_back({var(i, lie, b), w});
          terms.push_back({var(i, truth, b), -w});
        }
      }
      problem.add_constraint(std::move(terms), lp::Sense::less_equal, 0.0);
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t stride = ss.stride(i);
    for (std::size_t a = 0; a < qa; ++a) {
      for (std::size_t b = 0; b < sb; ++b) {
        if (ss.digit(b, i) == 0) continue;
        problem.add_constraint({{var(i, a, b - stride), 1.0}, {var(i, a, b), -1.0}},
                               lp::Sense::less_equal, 0.0);
      }
    }
  }
  return problem;
}

namespace detail {

inline lp::LpProblem build_symmetric_omk_problem(const MultiInstance& instance,
                                                 const SymmetricLayout& layout) {
  const Instance& base = instance.base();
  const std::size_t k = instance.k();
  const TupleSpace qs = instance.quality_profiles();
  const TupleSpace ss = instance.score_profiles();
  const std::size_t qa = qs.size();
  const std::size_t sb = ss.size();
  const std::vector<double> lik = profile_likelihoods(instance);

  lp::LpProblem problem(layout.slots());
  problem.set_all_bounds(0.0, 1.0);
  std::vector<double> objective(layout.slots(), 0.0);
  for (std::size_t a = 0; a < qa; ++a) {
    const double pa = instance.prior_weight(a);
    for (std::size_t i = 0; i < k; ++i) {
      const double gain = pa * (base.value(qs.digit(a, i)) - base.bar());
      for (std::size_t b = 0; b < sb; ++b) {
        const double c = gain * lik[a * sb + b];
        if (c != 0.0) layout.for_each_increment(i, a, b, [&](std::size_t j) { objective[j] += c; });
      }
    }
  }
  problem.set_objective(std::move(objective));

  RowBuilder row(layout.slots());
  std::vector<bool> seen(qa * qa, false);
  for (std::size_t truth = 0; truth < qa; ++truth) {
    for (std::size_t lie = 0; lie < qa; ++lie) {
      if (lie == truth) continue;
      const auto [ct, cl] = layout.canonical_pair(truth, lie);
      if (seen[ct * qa + cl]) continue;
      seen[ct * qa + cl] = true;
      for (std::size_t b = 0; b < sb; ++b) {
        const double w = lik[truth * sb + b];
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < k; ++i) {
          layout.for_each_increment(i, lie, b, [&](std::size_t j) { row.add(j, w); });
          layout.for_each_increment(i, truth, b, [&](std::size_t j) { row.add(j, -w); });
        }
      }
      problem.add_constraint(row.take(), lp::Sense::less_equal, 0.0);
    }
  }

  // The increments along one score chain add up to at most 1.
  std::vector<bool> chained(layout.slots(), false);
  const std::size_t stride = ss.stride(0);
  const std::size_t m = base.m();
  for (std::size_t a = 0; a < qa; ++a) {
    for (std::size_t b = 0; b < sb; ++b) {
      if (ss.digit(b, 0) != 0 || chained[layout.slot(a, b)]) continue;
      chained[layout.slot(a, b)] = true;
      std::vector<lp::Term> terms;
      for (std::size_t s = 0; s < m; ++s) terms.push_back({layout.slot(a, b + s * stride), 1.0});
      problem.add_constraint(std::move(terms), lp::Sense::less_equal, 1.0);
    }
  }
  return problem;
}

inline lp::LpSolution require_optimal(lp::LpSolution sol, const char* what) {
  if (sol.status != lp::LpStatus::optimal) {
    throw std::runtime_error(std::string(what) + " linear program not optimal: " +
                             lp::to_string(sol.status));
  }
  return sol;
}

}  // namespace detail

/// Optimal k-item mechanism. The budget applies to the literal LP size
/// k * n^k * m^k whichever formulation is solved.
inline MultiPolicy solve_omk(const MultiInstance& instance, std::size_t budget = kDefaultSizeBudget,
                             Formulation formulation = Formulation::symmetric) {
  detail::require_budget(detail::policy_variables(instance), budget);
  const std::size_t k = instance.k();
  const std::size_t n = instance.base().n();
  const std::size_t m = instance.base().m();
  MultiPolicy policy(k, n, m, detail::item_label("OM", k));
  const std::size_t qa = policy.quality_profiles().size();
  const std::size_t sb = policy.score_profiles().size();

  if (formulation == Formulation::literal) {
    const lp::LpSolution sol =
        detail::require_optimal(lp::solve_lp(build_omk_problem(instance, budget)), "OMk");
    const std::size_t cells = policy.cells();
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t c = 0; c < cells; ++c) {
        policy.at(i, c / sb, c % sb) = std::clamp(sol.values[i * cells + c], 0.0, 1.0);
      }
    }
    return policy;
  }

  const detail::SymmetricLayout layout(instance);
  const lp::LpSolution sol = detail::require_optimal(
      lp::solve_lp(detail::build_symmetric_omk_problem(instance, layout)), "OMk");
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t a = 0; a < qa; ++a) {
      for (std::size_t b = 0; b < sb; ++b) {
        double x = 0.0;
        layout.for_each_increment(i, a, b, [&](std::size_t j) { x += sol.values[j]; });
        policy.at(i, a, b) = std::clamp(x, 0.0, 1.0);
      }
    }
  }
  return policy;
}

// ---------------------------------------------------------------------------
// Ranking Mechanism (two items)
// ---------------------------------------------------------------------------

/// Reported order of the two qualities: v1 > v2, v1 == v2, v1 < v2.
enum class RankClass { greater = 0, equal = 1, smaller = 2 };

inline constexpr std::array<RankClass, 3> kRankClasses{RankClass::greater, RankClass::equal,
                                                       RankClass::smaller};

inline const char* to_string(RankClass rank) {
  switch (rank) {
    case RankClass::greater: return "greater";
    case RankClass::equal: return "equal";
    case RankClass::smaller: return "smaller";
  }
  return "unknown";
}

inline RankClass rank_of(std::size_t v1, std::size_t v2) noexcept {
  if (v1 > v2) return RankClass::greater;
  if (v1 == v2) return RankClass::equal;
  return RankClass::smaller;
}

struct RankPolicy {
  /// accept[rank][item](s1, s2) in {0, 1}.
  std::array<std::array<Matrix, 2>, 3> accept;
  /// aggregate[rank](v1, v2): expected number of acquired items when the true
  /// qualities are (v1, v2) and the owner claims `rank`.
  std::array<Matrix, 3> aggregate;

  const Matrix& accepts(RankClass rank, std::size_t item) const {
    return accept[static_cast<std::size_t>(rank)].at(item);
  }
  const Matrix& aggregated(RankClass rank) const {
    return aggregate[static_cast<std::size_t>(rank)];
  }
};

/// Accepts item i on scores (s1, s2) under claimed order rho iff
/// E[v_i | s1, s2, rho] >= t. Cells the order class cannot reach reject.
inline RankPolicy ranking_mechanism(const MultiInstance& instance) {
  if (instance.k() != 2) throw std::invalid_argument("the ranking mechanism needs exactly two items");
  const Instance& base = instance.base();
  const std::size_t n = base.n();
  const std::size_t m = base.m();

  RankPolicy policy;
  for (RankClass rank : kRankClasses) {
    const auto ri = static_cast<std::size_t>(rank);
    Matrix acc1(m, m, 0.0), acc2(m, m, 0.0);
    for (std::size_t s1 = 0; s1 < m; ++s1) {
      for (std::size_t s2 = 0; s2 < m; ++s2) {
        double mass = 0.0, first = 0.0, second = 0.0;
        for (std::size_t v1 = 0; v1 < n; ++v1) {
          for (std::size_t v2 = 0; v2 < n; ++v2) {
            if (rank_of(v1, v2) != rank) continue;
            const double w = base.prior()[v1] * base.prior()[v2] * base.r(v1, s1) * base.r(v2, s2);
            mass += w;
            first += w * base.value(v1);
            second += w * base.value(v2);
          }
        }
        if (mass <= 0.0) continue;
        acc1(s1, s2) = first / mass >= base.bar() ? 1.0 : 0.0;
        acc2(s1, s2) = second / mass >= base.bar() ? 1.0 : 0.0;
      }
    }
    Matrix agg(n, n, 0.0);
    for (std::size_t v1 = 0; v1 < n; ++v1) {
      for (std::size_t v2 = 0; v2 < n; ++v2) {
        double total = 0.0;
        for (std::size_t s1 = 0; s1 < m; ++s1) {
          for (std::size_t s2 = 0; s2 < m; ++s2) {
            total += base.r(v1, s1) * base.r(v2, s2) * (acc1(s1, s2) + acc2(s1, s2));
          }
        }
        agg(v1, v2) = total;
      }
    }
    policy.accept[ri] = {std::move(acc1), std::move(acc2)};
    policy.aggregate[ri] = std::move(agg);
  }
  return policy;
}

struct RankViolation {
  std::size_t v1 = 0;
  std::size_t v2 = 0;
  RankClass truthful = RankClass::equal;
  RankClass better = RankClass::equal;
  double gain = 0.0;
};

/// Every (v1, v2) where claiming a false order acquires more items in
/// expectation than the true order, by more than `tol`.
inline std::vector<RankViolation> rm_ic_audit(const RankPolicy& policy, double tol = 1e-9) {
  std::vector<RankViolation> out;
  const Matrix& any = policy.aggregated(RankClass::greater);
  for (std::size_t v1 = 0; v1 < any.rows(); ++v1) {
    for (std::size_t v2 = 0; v2 < any.cols(); ++v2) {
      const RankClass truth = rank_of(v1, v2);
      const double honest = policy.aggregated(truth)(v1, v2);
      for (RankClass other : kRankClasses) {
        if (other == truth) continue;
        const double gain = policy.aggregated(other)(v1, v2) - honest;
        if (gain > tol) out.push_back({v1, v2, truth, other, gain});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Union Mechanisms
// ---------------------------------------------------------------------------

struct UnionInputs {
  std::vector<Mechanism> components;
};

/// Splits acquisition mass `gamma` over items, highest quality first: items
/// strictly above the threshold quality get 1, items at it share the rest
/// evenly, items below get 0. `qualities` are grid indices (ordered like
/// their values). Mass at or below 1e-12 allocates nothing.
inline std::vector<double> allocate_union_mass(std::span<const std::size_t> qualities, double gamma) {
  const std::size_t k = qualities.size();
  std::vector<double> x(k, 0.0);
  gamma = std::clamp(gamma, 0.0, static_cast<double>(k));
  if (gamma <= 1e-12) return x;

  std::vector<std::size_t> levels(qualities.begin(), qualities.end());
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::size_t above = 0;
  for (std::size_t level : levels) {
    const auto tied = static_cast<std::size_t>(std::count(qualities.begin(), qualities.end(), level));
    const std::size_t at_least = above + tied;
    if (gamma <= static_cast<double>(at_least) || at_least == k) {
      const double share = (gamma - static_cast<double>(above)) / static_cast<double>(tied);
      for (std::size_t i = 0; i < k; ++i) {
        if (qualities[i] > level) {
          x[i] = 1.0;
        } else if (qualities[i] == level) {
          x[i] = std::clamp(share, 0.0, 1.0);
        }
      }
      break;
    }
    above = at_least;
  }
  return x;
}

namespace detail {

inline void require_union_shape(const MultiInstance& instance, const UnionInputs& inputs) {
  if (inputs.components.size() != instance.k()) {
    throw std::invalid_argument("union needs one component mechanism per item");
  }
  for (const Mechanism& y : inputs.components) require_same_shape(instance.base(), y);
}

}  // namespace detail

/// Per-item acquiring probabilities at one (quality profile, score profile).
inline std::vector<double> union_compose(const MultiInstance& instance, const UnionInputs& inputs,
                                         std::span<const std::size_t> qualities,
                                         std::span<const std::size_t> scores) {
  detail::require_union_shape(instance, inputs);
  if (qualities.size() != instance.k() || scores.size() != instance.k()) {
    throw std::invalid_argument("profile length must equal the item count");
  }
  double gamma = 0.0;
  for (std::size_t i = 0; i < instance.k(); ++i) {
    if (qualities[i] >= instance.base().n() || scores[i] >= instance.base().m()) {
      throw std::out_of_range("profile index out of range");
    }
    gamma += inputs.components[i](qualities[i], scores[i]);
  }
  return allocate_union_mass(qualities, gamma);
}

inline MultiPolicy union_policy(const MultiInstance& instance, const UnionInputs& inputs,
                                std::size_t budget = kDefaultSizeBudget) {
  detail::require_union_shape(instance, inputs);
  detail::require_budget(detail::policy_variables(instance), budget);
  const std::size_t k = instance.k();
  const TupleSpace qs = instance.quality_profiles();
  const TupleSpace ss = instance.score_profiles();
  MultiPolicy policy(k, instance.base().n(), instance.base().m(), "UM");
  for (std::size_t a = 0; a < qs.size(); ++a) {
    const std::vector<std::size_t> qualities = qs.decode(a);
    for (std::size_t b = 0; b < ss.size(); ++b) {
      const std::vector<std::size_t> scores = ss.decode(b);
      const std::vector<double> x = union_compose(instance, inputs, qualities, scores);
      for (std::size_t i = 0; i < k; ++i) policy.at(i, a, b) = x[i];
    }
  }
  return policy;
}

/// k copies of one single-item mechanism.
inline UnionInputs replicate(const Mechanism& mechanism, std::size_t k) {
  return UnionInputs{std::vector<Mechanism>(k, mechanism)};
}

struct UmoptResult {
  UnionInputs inputs;
  MultiPolicy policy;
  double lp_objective = 0.0;
};

/// The literal UMOPT LP: component matrices y_i(v, s) at i * n * m + v * m + s,
/// each IC and monotone, then tensors x_i(a, b) whose per-profile total
/// equals sum_i y_i(v_i, s_i).
inline lp::LpProblem build_umopt_problem(const MultiInstance& instance,
                                         std::size_t budget = kDefaultSizeBudget) {
  const Instance& base = instance.base();
  const std::size_t k = instance.k();
  const std::size_t nm = base.n() * base.m();
  const std::size_t tensor_vars = detail::policy_variables(instance);
  detail::require_budget(k * nm + tensor_vars, budget);

  const TupleSpace qs = instance.quality_profiles();
  const TupleSpace ss = instance.score_profiles();
  const std::size_t qa = qs.size();
  const std::size_t sb = ss.size();
  const std::size_t cells = qa * sb;
  const std::size_t x0 = k * nm;
  auto xvar = [&](std::size_t i, std::size_t a, std::size_t b) { return x0 + i * cells + a * sb + b; };

  lp::LpProblem problem(x0 + tensor_vars);
  problem.set_all_bounds(0.0, 1.0);
  for (std::size_t i = 0; i < k; ++i) detail::add_single_item_rows(problem, base, i * nm);

  const std::vector<double> lik = detail::profile_likelihoods(instance);
  for (std::size_t a = 0; a < qa; ++a) {
    const double pa = instance.prior_weight(a);
    for (std::size_t b = 0; b < sb; ++b) {
      std::vector<lp::Term> coupling;
      for (std::size_t i = 0; i < k; ++i) {
        const double gain = base.value(qs.digit(a, i)) - base.bar();
        problem.set_objective(xvar(i, a, b), pa * lik[a * sb + b] * gain);
        coupling.push_back({xvar(i, a, b), 1.0});
        coupling.push_back({i * nm + qs.digit(a, i) * base.m() + ss.digit(b, i), -1.0});
      }
      problem.add_constraint(std::move(coupling), lp::Sense::equal, 0.0);
    }
  }
  return problem;
}

namespace detail {

// One shared component y (variables v * m + s) and the first item's tensor by
// slot; one coupling row per profile up to item relabeling.
inline lp::LpProblem build_symmetric_umopt_problem(const MultiInstance& instance,
                                                   const SymmetricLayout& layout) {
  const Instance& base = instance.base();
  const std::size_t k = instance.k();
  const std::size_t m = base.m();
  const std::size_t nm = base.n() * m;
  const TupleSpace qs = instance.quality_profiles();
  const TupleSpace ss = instance.score_profiles();
  const std::size_t qa = qs.size();
  const std::size_t sb = ss.size();
  const std::vector<double> lik = profile_likelihoods(instance);

  lp::LpProblem problem(nm + layout.slots());
  problem.set_all_bounds(0.0, 1.0);
  add_single_item_rows(problem, base, 0);

  std::vector<double> objective(nm + layout.slots(), 0.0);
  std::vector<bool> coupled(qa * sb, false);
  for (std::size_t a = 0; a < qa; ++a) {
    const double pa = instance.prior_weight(a);
    for (std::size_t b = 0; b < sb; ++b) {
      for (std::size_t i = 0; i < k; ++i) {
        objective[nm + layout.item_slot(i, a, b)] +=
            pa * lik[a * sb + b] * (base.value(qs.digit(a, i)) - base.bar());
      }
      const std::size_t canon = layout.canonical(a, b, 0);
      if (coupled[canon]) continue;
      coupled[canon] = true;
      std::vector<lp::Term> terms;
      for (std::size_t i = 0; i < k; ++i) {
        terms.push_back({nm + layout.item_slot(i, a, b), 1.0});
        terms.push_back({qs.digit(a, i) * m + ss.digit(b, i), -1.0});
      }
      problem.add_constraint(std::move(terms), lp::Sense::equal, 0.0);
    }
  }
  problem.set_objective(std::move(objective));
  return problem;
}

}  // namespace detail

/// Best Union Mechanism: IC, monotone components chosen jointly with the
/// allocation of each profile's total mass. The returned policy re-derives
/// the allocation from the optimal components by union_compose.
inline UmoptResult solve_umopt(const MultiInstance& instance, std::size_t budget = kDefaultSizeBudget,
                               Formulation formulation = Formulation::symmetric) {
  const Instance& base = instance.base();
  const std::size_t k = instance.k();
  const std::size_t n = base.n();
  const std::size_t m = base.m();
  const std::size_t nm = n * m;
  detail::require_budget(k * nm + detail::policy_variables(instance), budget);

  auto component = [&](const std::vector<double>& values, std::size_t offset, std::size_t i) {
    Matrix y(n, m);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t s = 0; s < m; ++s) y(v, s) = std::clamp(values[offset + v * m + s], 0.0, 1.0);
    }
    return Mechanism(std::move(y), "UMOPT component " + std::to_string(i));
  };

  UnionInputs inputs;
  double objective = 0.0;
  if (formulation == Formulation::literal) {
    const lp::LpSolution sol =
        detail::require_optimal(lp::solve_lp(build_umopt_problem(instance, budget)), "UMOPT");
    for (std::size_t i = 0; i < k; ++i) inputs.components.push_back(component(sol.values, i * nm, i));
    objective = sol.objective_value;
  } else {
    const detail::SymmetricLayout layout(instance);
    const lp::LpSolution sol = detail::require_optimal(
        lp::solve_lp(detail::build_symmetric_umopt_problem(instance, layout)), "UMOPT");
    for (std::size_t i = 0; i < k; ++i) inputs.components.push_back(component(sol.values, 0, i));
    objective = sol.objective_value;
  }
  MultiPolicy policy = union_policy(instance, inputs, budget);
  policy.set_label("UMOPT");
  return UmoptResult{std::move(inputs), std::move(policy), objective};
}

}  // namespace acquimech
