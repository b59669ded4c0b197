#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "acquimech/core.hpp"

namespace acquimech {

inline constexpr double kDefaultIcTolerance = 1e-7;
inline constexpr double kDefaultMonotoneTolerance = 1e-9;

struct Violation {
  std::string description;
  std::vector<std::size_t> indices;
  double magnitude = 0.0;
};

/// Outcome of a property check. `passed` holds exactly when no violations
/// were recorded; every failing index set is listed.
struct VerificationReport {
  bool passed = true;
  std::vector<Violation> violations;
  double tolerance = 0.0;

  void add(std::string description, std::vector<std::size_t> indices, double magnitude) {
    violations.push_back({std::move(description), std::move(indices), magnitude});
    passed = false;
  }
};

// ---------------------------------------------------------------------------
// Single item
// ---------------------------------------------------------------------------

/// Collector's expected reward under truthful reporting:
/// sum over v, s of (v - t) d(v) x(v, s) r(v, s).
inline double expected_reward(const Instance& instance, const Mechanism& mechanism) {
  require_same_shape(instance, mechanism);
  double total = 0.0;
  for (std::size_t v = 0; v < instance.n(); ++v) {
    double acquired = 0.0;
    for (std::size_t s = 0; s < instance.m(); ++s) acquired += mechanism(v, s) * instance.r(v, s);
    total += instance.weight(v) * acquired;
  }
  return total;
}

inline VerificationReport check_ic(const Instance& instance, const Mechanism& mechanism,
                                   double tol = kDefaultIcTolerance) {
  require_same_shape(instance, mechanism);
  VerificationReport report;
  report.tolerance = tol;
  for (std::size_t v = 0; v < instance.n(); ++v) {
    const double truthful = acquire_probability(instance, mechanism, v, v);
    for (std::size_t lie = 0; lie < instance.n(); ++lie) {
      if (lie == v) continue;
      const double gain = acquire_probability(instance, mechanism, v, lie) - truthful;
      if (gain > tol) {
        report.add("quality " + std::to_string(v) + " gains by reporting " + std::to_string(lie),
                   {v, lie}, gain);
      }
    }
  }
  return report;
}

inline VerificationReport check_monotone(const Mechanism& mechanism,
                                         double tol = kDefaultMonotoneTolerance) {
  VerificationReport report;
  report.tolerance = tol;
  for (std::size_t v = 0; v < mechanism.rows(); ++v) {
    for (std::size_t s = 1; s < mechanism.cols(); ++s) {
      const double drop = mechanism(v, s - 1) - mechanism(v, s);
      if (drop > tol) {
        report.add("row " + std::to_string(v) + " decreases from score " + std::to_string(s - 1) +
                       " to " + std::to_string(s),
                   {v, s - 1, s}, drop);
      }
    }
  }
  return report;
}

/// Reward of acquiring exactly the items with v >= t.
inline double omniscient_reward(const Instance& instance) {
  double total = 0.0;
  for (std::size_t v = 0; v < instance.n(); ++v) {
    if (instance.value(v) >= instance.bar()) total += instance.weight(v);
  }
  return total;
}

/// Expected absolute appraiser error: sum of |s - v| d(v) r(v, s).
inline double total_bias(const Instance& instance) {
  double total = 0.0;
  for (std::size_t v = 0; v < instance.n(); ++v) {
    for (std::size_t s = 0; s < instance.m(); ++s) {
      total += std::abs(instance.score(s) - instance.value(v)) * instance.prior()[v] *
               instance.r(v, s);
    }
  }
  return total;
}

inline double reward_gap_vs_omniscient(const Instance& instance, const Mechanism& mechanism) {
  return omniscient_reward(instance) - expected_reward(instance, mechanism);
}

struct AcquiringRate {
  std::vector<double> per_quality;
  double overall = 0.0;
};

inline AcquiringRate acquiring_rate(const Instance& instance, const Mechanism& mechanism) {
  require_same_shape(instance, mechanism);
  AcquiringRate rate;
  rate.per_quality.resize(instance.n());
  for (std::size_t v = 0; v < instance.n(); ++v) {
    rate.per_quality[v] = acquire_probability(instance, mechanism, v, v);
    rate.overall += instance.prior()[v] * rate.per_quality[v];
  }
  return rate;
}

// ---------------------------------------------------------------------------
// Multiple items
// ---------------------------------------------------------------------------

namespace detail {

// likelihood[a * m^k + b] = prod_j r(v_{a_j}, s_{b_j}).
inline std::vector<double> profile_likelihoods(const MultiInstance& instance) {
  const std::size_t qa = instance.quality_profiles().size();
  const std::size_t sb = instance.score_profiles().size();
  std::vector<double> out(qa * sb);
  for (std::size_t a = 0; a < qa; ++a) {
    for (std::size_t b = 0; b < sb; ++b) out[a * sb + b] = instance.score_likelihood(a, b);
  }
  return out;
}

}  // namespace detail

inline double multi_expected_reward(const MultiInstance& instance, const MultiPolicy& policy) {
  require_same_shape(instance, policy);
  const TupleSpace qs = instance.quality_profiles();
  const std::size_t sb = instance.score_profiles().size();
  const Instance& base = instance.base();
  double total = 0.0;
  for (std::size_t a = 0; a < qs.size(); ++a) {
    const double pa = instance.prior_weight(a);
    if (pa == 0.0) continue;
    double profile = 0.0;
    for (std::size_t b = 0; b < sb; ++b) {
      const double lik = instance.score_likelihood(a, b);
      if (lik == 0.0) continue;
      double gain = 0.0;
      for (std::size_t i = 0; i < instance.k(); ++i) {
        gain += (base.value(qs.digit(a, i)) - base.bar()) * policy.at(i, a, b);
      }
      profile += lik * gain;
    }
    total += pa * profile;
  }
  return total;
}

/// Expected number of acquired items when the true profile is `truth` and
/// the owner reports `report`.
inline double multi_acquire_count(const MultiInstance& instance, const MultiPolicy& policy,
                                  std::size_t truth, std::size_t report) {
  const std::size_t sb = instance.score_profiles().size();
  double total = 0.0;
  for (std::size_t b = 0; b < sb; ++b) {
    double mass = 0.0;
    for (std::size_t i = 0; i < instance.k(); ++i) mass += policy.at(i, report, b);
    total += mass * instance.score_likelihood(truth, b);
  }
  return total;
}

inline VerificationReport multi_check_ic(const MultiInstance& instance, const MultiPolicy& policy,
                                         double tol = kDefaultIcTolerance) {
  require_same_shape(instance, policy);
  const std::size_t qa = instance.quality_profiles().size();
  const std::size_t sb = instance.score_profiles().size();
  const std::vector<double> lik = detail::profile_likelihoods(instance);

  std::vector<double> mass(qa * sb, 0.0);
  for (std::size_t a = 0; a < qa; ++a) {
    for (std::size_t b = 0; b < sb; ++b) {
      for (std::size_t i = 0; i < instance.k(); ++i) mass[a * sb + b] += policy.at(i, a, b);
    }
  }
  VerificationReport report;
  report.tolerance = tol;
  for (std::size_t truth = 0; truth < qa; ++truth) {
    std::vector<double> utility(qa, 0.0);
    for (std::size_t rep = 0; rep < qa; ++rep) {
      double u = 0.0;
      for (std::size_t b = 0; b < sb; ++b) u += mass[rep * sb + b] * lik[truth * sb + b];
      utility[rep] = u;
    }
    for (std::size_t rep = 0; rep < qa; ++rep) {
      if (rep == truth) continue;
      const double gain = utility[rep] - utility[truth];
      if (gain > tol) {
        report.add("profile " + std::to_string(truth) + " gains by reporting " +
                       std::to_string(rep),
                   {truth, rep}, gain);
      }
    }
  }
  return report;
}

inline VerificationReport multi_check_monotone(const MultiInstance& instance,
                                               const MultiPolicy& policy,
                                               double tol = kDefaultMonotoneTolerance) {
  require_same_shape(instance, policy);
  const TupleSpace qs = instance.quality_profiles();
  const TupleSpace ss = instance.score_profiles();
  VerificationReport report;
  report.tolerance = tol;
  for (std::size_t i = 0; i < instance.k(); ++i) {
    const std::size_t stride = ss.stride(i);
    for (std::size_t a = 0; a < qs.size(); ++a) {
      for (std::size_t b = 0; b < ss.size(); ++b) {
        if (ss.digit(b, i) == 0) continue;
        const double drop = policy.at(i, a, b - stride) - policy.at(i, a, b);
        if (drop > tol) {
          report.add("item " + std::to_string(i) + " decreases in its own score", {i, a, b}, drop);
        }
      }
    }
  }
  return report;
}

/// k times the single-item omniscient reward (items are i.i.d.).
inline double multi_omniscient_reward(const MultiInstance& instance) {
  return static_cast<double>(instance.k()) * omniscient_reward(instance.base());
}

/// Per-quality probability that an item is acquired, averaged over items,
/// and the expected fraction of items acquired.
inline AcquiringRate multi_acquiring_rate(const MultiInstance& instance,
                                          const MultiPolicy& policy) {
  require_same_shape(instance, policy);
  const Instance& base = instance.base();
  const TupleSpace qs = instance.quality_profiles();
  const std::size_t sb = instance.score_profiles().size();
  const double k = static_cast<double>(instance.k());

  AcquiringRate rate;
  rate.per_quality.assign(base.n(), 0.0);
  for (std::size_t a = 0; a < qs.size(); ++a) {
    for (std::size_t i = 0; i < instance.k(); ++i) {
      const std::size_t vi = qs.digit(a, i);
      double others = 1.0;
      for (std::size_t j = 0; j < instance.k(); ++j) {
        if (j != i) others *= base.prior()[qs.digit(a, j)];
      }
      if (others == 0.0) continue;
      double acquired = 0.0;
      for (std::size_t b = 0; b < sb; ++b) {
        acquired += policy.at(i, a, b) * instance.score_likelihood(a, b);
      }
      rate.per_quality[vi] += others * acquired / k;
    }
  }
  for (std::size_t v = 0; v < base.n(); ++v) rate.overall += base.prior()[v] * rate.per_quality[v];
  return rate;
}

}  // namespace acquimech
