#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "acquimech/analysis.hpp"
#include "acquimech/core.hpp"
#include "acquimech/multi_item.hpp"
#include "acquimech/single_item.hpp"

namespace acquimech {

// ---------------------------------------------------------------------------
// Discretized distributions
// ---------------------------------------------------------------------------

enum class Family { normal, lognormal };

/// How a continuous density becomes a vector over grid points.
///  point_density: density sampled at each grid point, then normalized.
///  cell_mass: probability of the cell around each grid point, with cell
///             boundaries at midpoints and open outer cells.
enum class Discretization { point_density, cell_mass };

inline const char* to_string(Family f) { return f == Family::normal ? "normal" : "lognormal"; }

inline Family parse_family(const std::string& name) {
  if (name == "normal") return Family::normal;
  if (name == "lognormal") return Family::lognormal;
  throw std::invalid_argument("unknown distribution family '" + name + "'");
}

inline const char* to_string(Discretization d) {
  return d == Discretization::point_density ? "point_density" : "cell_mass";
}

inline Discretization parse_discretization(const std::string& name) {
  if (name == "point_density") return Discretization::point_density;
  if (name == "cell_mass") return Discretization::cell_mass;
  throw std::invalid_argument("unknown discretization '" + name + "'");
}

/// Log-normal has no zero density at 0 to sample, so it bins by cell mass.
inline Discretization default_discretization(Family f) {
  return f == Family::normal ? Discretization::point_density : Discretization::cell_mass;
}

/// Target mean substituted when a log-normal is asked for mean <= 0.
inline constexpr double kLognormalMeanFloor = 1e-3;

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Underlying (mu, sigma) of the log-normal with the given mean and sd.
inline std::pair<double, double> lognormal_parameters(double mean, double sd) {
  mean = std::max(mean, kLognormalMeanFloor);
  const double sigma2 = std::log1p(sd * sd / (mean * mean));
  return {std::log(mean) - 0.5 * sigma2, std::sqrt(sigma2)};
}

// Index of the midpoint cell containing x; boundary ties go to the lower cell.
inline std::size_t containing_cell(const std::vector<double>& grid, double x) {
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (x <= 0.5 * (grid[i] + grid[i + 1])) return i;
  }
  return grid.size() - 1;
}

inline std::vector<double> point_mass(const std::vector<double>& grid, double x) {
  std::vector<double> out(grid.size(), 0.0);
  out[containing_cell(grid, x)] = 1.0;
  return out;
}

inline std::vector<double> sampled_density(Family family, double mean, double sd,
                                           const std::vector<double>& grid) {
  std::vector<double> logs(grid.size(), -std::numeric_limits<double>::infinity());
  if (family == Family::normal) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double z = (grid[i] - mean) / sd;
      logs[i] = -0.5 * z * z;
    }
  } else {
    const auto [mu, sigma] = lognormal_parameters(mean, sd);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] <= 0.0) continue;
      const double z = (std::log(grid[i]) - mu) / sigma;
      logs[i] = -std::log(grid[i]) - 0.5 * z * z;
    }
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  if (!std::isfinite(top)) return point_mass(grid, mean);
  std::vector<double> out(grid.size());
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) total += out[i] = std::exp(logs[i] - top);
  for (double& p : out) p /= total;
  return out;
}

inline std::vector<double> cell_masses(Family family, double mean, double sd,
                                       const std::vector<double>& grid) {
  auto cdf = [&](double x) {
    if (family == Family::normal) return normal_cdf((x - mean) / sd);
    if (x <= 0.0) return 0.0;
    const auto [mu, sigma] = lognormal_parameters(mean, sd);
    return normal_cdf((std::log(x) - mu) / sigma);
  };
  std::vector<double> out(grid.size());
  double below = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double upper = i + 1 < grid.size() ? cdf(0.5 * (grid[i] + grid[i + 1])) : 1.0;
    out[i] = std::max(0.0, upper - below);
    total += out[i];
    below = upper;
  }
  if (!(total > 0.0)) return point_mass(grid, mean);
  for (double& p : out) p /= total;
  return out;
}

}  // namespace detail

/// Probability vector over `grid` for the given family. sd == 0 yields a
/// point mass on the cell containing the mean.
inline std::vector<double> discretize_prior(Family family, double mean, double sd,
                                            const std::vector<double>& grid,
                                            Discretization method) {
  detail::require_ascending(grid, "discretization");
  if (!std::isfinite(mean) || !std::isfinite(sd) || sd < 0.0) {
    throw std::invalid_argument("distribution needs a finite mean and sd >= 0");
  }
  if (family == Family::lognormal) mean = std::max(mean, kLognormalMeanFloor);
  if (sd == 0.0) return detail::point_mass(grid, mean);
  return method == Discretization::point_density ? detail::sampled_density(family, mean, sd, grid)
                                                 : detail::cell_masses(family, mean, sd, grid);
}

inline std::vector<double> discretize_prior(Family family, double mean, double sd,
                                            const std::vector<double>& grid) {
  return discretize_prior(family, mean, sd, grid, default_discretization(family));
}

/// Row v is the family centered at value v with the given variance, over the
/// score grid.
inline Matrix build_score_model(Family family, double variance, const QualityGrid& grid,
                                Discretization method) {
  if (!std::isfinite(variance) || variance < 0.0) {
    throw std::invalid_argument("score variance must be finite and >= 0");
  }
  const double sd = std::sqrt(variance);
  Matrix out(grid.n(), grid.m());
  for (std::size_t v = 0; v < grid.n(); ++v) {
    const std::vector<double> row = discretize_prior(family, grid.values[v], sd, grid.scores, method);
    std::copy(row.begin(), row.end(), out.row(v).begin());
  }
  return out;
}

inline Matrix build_score_model(Family family, double variance, const QualityGrid& grid) {
  return build_score_model(family, variance, grid, default_discretization(family));
}

/// n equally spaced levels from 0 to 1.
inline std::vector<double> unit_grid(std::size_t levels) {
  if (levels < 2) throw std::invalid_argument("a unit grid needs at least two levels");
  std::vector<double> out(levels);
  for (std::size_t i = 0; i < levels; ++i) {
    out[i] = static_cast<double>(i) / static_cast<double>(levels - 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepMechanism { som, tmm, om1, omk, um_tmm, umopt, kx_om1 };

inline const char* to_string(SweepMechanism m) {
  switch (m) {
    case SweepMechanism::som: return "SOM";
    case SweepMechanism::tmm: return "TMM";
    case SweepMechanism::om1: return "OM1";
    case SweepMechanism::omk: return "OMk";
    case SweepMechanism::um_tmm: return "UM_TMM";
    case SweepMechanism::umopt: return "UMOPT";
    case SweepMechanism::kx_om1: return "kxOM1";
  }
  return "unknown";
}

inline SweepMechanism parse_sweep_mechanism(const std::string& name) {
  for (SweepMechanism m : {SweepMechanism::som, SweepMechanism::tmm, SweepMechanism::om1,
                           SweepMechanism::omk, SweepMechanism::um_tmm, SweepMechanism::umopt,
                           SweepMechanism::kx_om1}) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown sweep mechanism '" + name + "'");
}

struct SweepConfig {
  Family family = Family::normal;
  Discretization discretization = Discretization::point_density;
  double prior_mean = 0.3;
  double prior_sd = 0.25;
  std::vector<double> variance_grid;
  QualityGrid grid;
  double bar = 0.25;
  std::vector<SweepMechanism> mechanisms;
  std::size_t item_count = 2;
  /// Recorded with the config; the sweep itself has no randomness.
  std::uint64_t seed = 0;
  std::size_t size_budget = kDefaultSizeBudget;
};

/// The 7-level normal configuration used for the reward-vs-noise figures.
inline SweepConfig figure_config(Family family, std::vector<double> variances) {
  SweepConfig config;
  config.family = family;
  config.discretization = default_discretization(family);
  config.variance_grid = std::move(variances);
  config.grid = QualityGrid{unit_grid(7), unit_grid(7)};
  config.mechanisms = {SweepMechanism::som, SweepMechanism::tmm, SweepMechanism::om1,
                       SweepMechanism::um_tmm, SweepMechanism::kx_om1};
  return config;
}

inline void validate_sweep_config(const SweepConfig& config) {
  if (config.mechanisms.empty()) throw std::invalid_argument("sweep needs at least one mechanism");
  if (config.variance_grid.empty()) throw std::invalid_argument("sweep needs at least one variance");
  for (std::size_t i = 0; i < config.variance_grid.size(); ++i) {
    const double v = config.variance_grid[i];
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("variances must be finite and >= 0");
    if (i > 0 && v < config.variance_grid[i - 1]) {
      throw std::invalid_argument("variance grid must be ascending");
    }
  }
  if (config.item_count < 1) throw std::invalid_argument("item count must be at least 1");
  detail::require_ascending(config.grid.values, "quality");
  detail::require_ascending(config.grid.scores, "score");
}

struct SweepRecord {
  Family family = Family::normal;
  double variance = 0.0;
  std::string mechanism;
  double per_item_reward = 0.0;
  double overall_rate = 0.0;
  std::vector<double> per_quality_rates;
};

inline Instance sweep_instance(const SweepConfig& config, double variance) {
  std::vector<double> prior = discretize_prior(config.family, config.prior_mean, config.prior_sd,
                                               config.grid.values, config.discretization);
  Matrix scores = build_score_model(config.family, variance, config.grid, config.discretization);
  return Instance(config.grid, std::move(prior), std::move(scores), config.bar);
}

namespace detail {

inline SweepRecord single_record(const SweepConfig& config, double variance, SweepMechanism which,
                                 const Instance& instance, const Mechanism& mechanism) {
  const AcquiringRate rate = acquiring_rate(instance, mechanism);
  return SweepRecord{config.family, variance, to_string(which), expected_reward(instance, mechanism),
                     rate.overall, rate.per_quality};
}

inline SweepRecord multi_record(const SweepConfig& config, double variance, SweepMechanism which,
                                const MultiInstance& instance, const MultiPolicy& policy) {
  const AcquiringRate rate = multi_acquiring_rate(instance, policy);
  return SweepRecord{config.family, variance, to_string(which),
                     multi_expected_reward(instance, policy) / static_cast<double>(instance.k()),
                     rate.overall, rate.per_quality};
}

}  // namespace detail

/// One record per (variance, mechanism), in grid order then config order.
/// Multi-item rewards are divided by the item count.
inline std::vector<SweepRecord> run_sweep(const SweepConfig& config) {
  validate_sweep_config(config);
  std::vector<SweepRecord> records;
  for (double variance : config.variance_grid) {
    const Instance instance = sweep_instance(config, variance);
    const MultiInstance multi(instance, config.item_count);
    std::optional<Mechanism> om1;
    std::optional<Mechanism> tmm;
    auto get_om1 = [&]() -> const Mechanism& {
      if (!om1) om1 = solve_om1(instance);
      return *om1;
    };
    auto get_tmm = [&]() -> const Mechanism& {
      if (!tmm) tmm = tmm_optimal(instance).mechanism;
      return *tmm;
    };
    for (SweepMechanism which : config.mechanisms) {
      switch (which) {
        case SweepMechanism::som:
          records.push_back(detail::single_record(config, variance, which, instance, solve_som(instance)));
          break;
        case SweepMechanism::tmm:
          records.push_back(detail::single_record(config, variance, which, instance, get_tmm()));
          break;
        case SweepMechanism::om1:
        case SweepMechanism::kx_om1:
          // k independent copies earn k times the single-item reward.
          records.push_back(detail::single_record(config, variance, which, instance, get_om1()));
          break;
        case SweepMechanism::omk:
          records.push_back(detail::multi_record(config, variance, which, multi,
                                                 solve_omk(multi, config.size_budget)));
          break;
        case SweepMechanism::um_tmm:
          records.push_back(detail::multi_record(
              config, variance, which, multi,
              union_policy(multi, replicate(get_tmm(), config.item_count), config.size_budget)));
          break;
        case SweepMechanism::umopt:
          records.push_back(detail::multi_record(config, variance, which, multi,
                                                 solve_umopt(multi, config.size_budget).policy));
          break;
      }
    }
  }
  return records;
}

inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records,
                            std::size_t quality_levels) {
  out << "family,variance,mechanism,per_item_reward,overall_rate";
  for (std::size_t v = 0; v < quality_levels; ++v) out << ",rate_v" << v;
  out << '\n';
  for (const SweepRecord& r : records) {
    out << to_string(r.family) << ',' << format_number(r.variance) << ',' << r.mechanism << ','
        << format_number(r.per_item_reward) << ',' << format_number(r.overall_rate);
    for (double rate : r.per_quality_rates) out << ',' << format_number(rate);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Registered instances
// ---------------------------------------------------------------------------

inline const std::vector<double>& thirds() {
  static const std::vector<double> grid{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  return grid;
}

/// Counterexample and illustration instances on the four-level grid with t = 0.5.
inline std::map<std::string, Instance> paper_registry() {
  auto make = [](std::vector<double> prior, std::vector<std::vector<double>> r) {
    return validate_instance(thirds(), thirds(), std::move(prior), r, 0.5);
  };
  const std::vector<double> base_prior{0.262, 0.535, 0.191, 0.012};
  const std::vector<double> sparse_high{0.2645, 0.5386, 0.1861, 0.0109};

  std::map<std::string, Instance> out;
  out.emplace("example1", make({0.264, 0.539, 0.186, 0.012}, {{0.762, 0.122, 0.072, 0.044},
                                                                {0.009, 0.792, 0.136, 0.063},
                                                                {0.038, 0.127, 0.825, 0.010},
                                                                {0.031, 0.052, 0.171, 0.746}}));
  out.emplace("thm6_tmm_vs_som", make(base_prior, {{0.754, 0.133, 0.077, 0.036},
                                                   {0.013, 0.701, 0.261, 0.025},
                                                   {0.008, 0.173, 0.814, 0.005},
                                                   {0.017, 0.030, 0.037, 0.916}}));
  out.emplace("thm6_om1_vs_tmm", make(base_prior, {{0.71, 0.13, 0.11, 0.05},
                                                   {0.03, 0.82, 0.09, 0.06},
                                                   {0.11, 0.13, 0.72, 0.04},
                                                   {0.01, 0.08, 0.15, 0.76}}));
  out.emplace("thm7_ranking", make(base_prior, {{0.84, 0.12, 0.02, 0.02},
                                                {0.14, 0.80, 0.05, 0.01},
                                                {0.07, 0.18, 0.72, 0.03},
                                                {0.06, 0.08, 0.14, 0.72}}));
  out.emplace("thm9_omk_vs_um", make(sparse_high, {{0.522, 0.232, 0.145, 0.101},
                                                   {0.022, 0.708, 0.221, 0.049},
                                                   {0.004, 0.427, 0.515, 0.054},
                                                   {0.066, 0.113, 0.270, 0.551}}));
  out.emplace("thm9_um_vs_kxom1", make(sparse_high, {{0.749, 0.128, 0.074, 0.049},
                                                     {0.057, 0.737, 0.190, 0.016},
                                                     {0.018, 0.086, 0.834, 0.062},
                                                     {0.144, 0.147, 0.209, 0.500}}));
  return out;
}

inline Instance registered_instance(const std::string& name) {
  auto registry = paper_registry();
  auto it = registry.find(name);
  if (it == registry.end()) throw std::invalid_argument("unknown registered instance '" + name + "'");
  return it->second;
}

/// The acquiring matrix printed alongside example1 (an optimal mechanism).
inline Mechanism example1_printed_mechanism() {
  return Mechanism(Matrix::from_rows({{0.044, 0.044, 0.044, 0.044},
                                      {0.0, 0.0, 0.37931, 0.37931},
                                      {0.0, 0.0, 0.37931, 0.37931},
                                      {0.0, 0.0, 0.0, 1.0}}),
                   "example1 printed");
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

struct RandomInstanceOptions {
  std::size_t min_levels = 2;
  std::size_t max_levels = 5;
  /// Larger values concentrate each score row around the true quality.
  double concentration = 4.0;
};

/// Unit grids with random sizes, a random prior, score rows that decay away
/// from the true quality, and a bar drawn from (0.05, 0.95).
inline Instance random_instance(std::mt19937_64& rng, const RandomInstanceOptions& options = {}) {
  if (options.min_levels < 2 || options.max_levels < options.min_levels) {
    throw std::invalid_argument("random instance needs 2 <= min_levels <= max_levels");
  }
  std::uniform_int_distribution<std::size_t> levels(options.min_levels, options.max_levels);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = levels(rng);
  const std::size_t m = levels(rng);
  QualityGrid grid{unit_grid(n), unit_grid(m)};

  std::vector<double> prior(n);
  double total = 0.0;
  for (double& p : prior) total += p = 0.05 + unit(rng);
  for (double& p : prior) p /= total;

  Matrix r(n, m);
  for (std::size_t v = 0; v < n; ++v) {
    double row_total = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
      const double distance = std::abs(grid.scores[s] - grid.values[v]);
      row_total += r(v, s) = (0.05 + unit(rng)) * std::exp(-options.concentration * distance * m);
    }
    for (std::size_t s = 0; s < m; ++s) r(v, s) /= row_total;
  }
  const double bar = 0.05 + 0.9 * unit(rng);
  return Instance(std::move(grid), std::move(prior), std::move(r), bar);
}

/// Draws random instances until one is consistent (posterior mean clears the
/// bar exactly on the scores that do).
inline Instance random_consistent_instance(std::mt19937_64& rng,
                                           const RandomInstanceOptions& options = {},
                                           std::size_t max_draws = 100000) {
  for (std::size_t draw = 0; draw < max_draws; ++draw) {
    Instance candidate = random_instance(rng, options);
    const ConsistencyReport report = check_consistency(candidate);
    if (report.consistent && report.unreachable.empty()) return candidate;
  }
  throw std::runtime_error("no consistent instance found within the draw limit");
}

}  // namespace acquimech
