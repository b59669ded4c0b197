#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "acquimech/experiments.hpp"
#include "oracles.hpp"

using namespace acquimech;

namespace {

const std::vector<double> kSevenLevels = unit_grid(7);

double sum(const std::vector<double>& xs) {
  double total = 0.0;
  for (double x : xs) total += x;
  return total;
}

// Log-normal mass below `upper`, integrated over log-space with Simpson's rule.
double lognormal_mass_below(double mean, double sd, double upper) {
  const double sigma2 = std::log(1.0 + sd * sd / (mean * mean));
  const double sigma = std::sqrt(sigma2);
  const double mu = std::log(mean) - sigma2 / 2.0;
  const auto density = [&](double u) {
    const double z = (u - mu) / sigma;
    return std::exp(-z * z / 2.0) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  };
  const double lo = mu - 12.0 * sigma;
  const double hi = std::log(upper);
  if (hi <= lo) return 0.0;
  return oracle::simpson(density, lo, hi, 200000);
}

}  // namespace

TEST(DiscretizePrior, ReproducesReferenceSevenLevelVector) {
  const std::vector<double> expected{0.1377, 0.245, 0.2804, 0.2054, 0.0968, 0.0291, 0.0057};
  const std::vector<double> d = discretize_prior(Family::normal, 0.3, 0.25, kSevenLevels);
  ASSERT_EQ(d.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(d[i], expected[i], 5e-4) << "entry " << i;
}

TEST(DiscretizePrior, CellMassAgreesWithCdfDifferences) {
  const std::vector<double> d =
      discretize_prior(Family::normal, 0.3, 0.25, kSevenLevels, Discretization::cell_mass);
  const auto cdf = [](double x) { return 0.5 * std::erfc(-(x - 0.3) / (0.25 * std::sqrt(2.0))); };
  double below = 0.0;
  for (std::size_t i = 0; i < 7; ++i) {
    const double upper = i + 1 < 7 ? cdf((kSevenLevels[i] + kSevenLevels[i + 1]) / 2.0) : 1.0;
    EXPECT_NEAR(d[i], upper - below, 1e-15);
    below = upper;
  }
}

TEST(DiscretizePrior, ZeroSpreadIsAPointMass) {
  for (std::size_t v = 0; v < 7; ++v) {
    const std::vector<double> d = discretize_prior(Family::normal, kSevenLevels[v], 0.0, kSevenLevels);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(d[i], i == v ? 1.0 : 0.0);
  }
  // A boundary tie goes to the lower cell.
  const std::vector<double> tie = discretize_prior(Family::normal, 1.0 / 12.0, 0.0, kSevenLevels);
  EXPECT_EQ(tie[0], 1.0);
}

TEST(DiscretizePrior, SymmetricCaseIsPalindromic) {
  for (Discretization method : {Discretization::point_density, Discretization::cell_mass}) {
    const std::vector<double> d = discretize_prior(Family::normal, 0.5, 0.2, kSevenLevels, method);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(d[i], d[6 - i], 1e-14);
  }
}

TEST(DiscretizePrior, SumsToOne) {
  for (Family family : {Family::normal, Family::lognormal}) {
    for (double mean : {0.0, 0.2, 0.9}) {
      for (double sd : {0.01, 0.3, 2.0}) {
        EXPECT_NEAR(sum(discretize_prior(family, mean, sd, kSevenLevels)), 1.0, 1e-14);
      }
    }
  }
}

TEST(DiscretizePrior, RejectsBadParameters) {
  EXPECT_THROW(discretize_prior(Family::normal, 0.3, -0.1, kSevenLevels), std::invalid_argument);
  EXPECT_THROW(discretize_prior(Family::normal, std::nan(""), 0.1, kSevenLevels), std::invalid_argument);
  EXPECT_THROW(discretize_prior(Family::normal, 0.3, 0.1, {0.5, 0.2}), std::invalid_argument);
}

TEST(DiscretizePrior, LognormalCellsMatchQuadrature) {
  for (double mean : {0.0, 1.0 / 6.0, 0.5}) {
    for (double sd : {0.1, 0.4}) {
      const std::vector<double> d =
          discretize_prior(Family::lognormal, mean, sd, kSevenLevels, Discretization::cell_mass);
      const double target = std::max(mean, kLognormalMeanFloor);
      double below = 0.0;
      for (std::size_t i = 0; i < 7; ++i) {
        const double upper =
            i + 1 < 7 ? lognormal_mass_below(target, sd, (kSevenLevels[i] + kSevenLevels[i + 1]) / 2.0) : 1.0;
        EXPECT_NEAR(d[i], upper - below, 1e-9) << "mean " << mean << " sd " << sd << " cell " << i;
        below = upper;
      }
    }
  }
}

TEST(DiscretizePrior, LognormalZeroMeanUsesTheFloor) {
  const std::vector<double> at_zero = discretize_prior(Family::lognormal, 0.0, 0.2, kSevenLevels);
  const std::vector<double> at_floor = discretize_prior(Family::lognormal, kLognormalMeanFloor, 0.2, kSevenLevels);
  EXPECT_EQ(at_zero, at_floor);
  // Nearly all mass sits just above zero.
  EXPECT_GT(at_zero[0], 0.9);
}

TEST(ScoreModel, ZeroVarianceIsIdentity) {
  const QualityGrid grid{kSevenLevels, kSevenLevels};
  for (Family family : {Family::normal, Family::lognormal}) {
    const Matrix r = build_score_model(family, 0.0, grid);
    for (std::size_t v = 0; v < 7; ++v) {
      for (std::size_t s = 0; s < 7; ++s) EXPECT_EQ(r(v, s), v == s ? 1.0 : 0.0);
    }
  }
}

TEST(ScoreModel, RowsAreDiscretizedFamiliesCenteredOnTheQuality) {
  const QualityGrid grid{kSevenLevels, unit_grid(5)};
  const Matrix r = build_score_model(Family::normal, 0.04, grid);
  ASSERT_EQ(r.rows(), 7u);
  ASSERT_EQ(r.cols(), 5u);
  for (std::size_t v = 0; v < 7; ++v) {
    const std::vector<double> row = discretize_prior(Family::normal, kSevenLevels[v], 0.2, unit_grid(5));
    double total = 0.0;
    for (std::size_t s = 0; s < 5; ++s) {
      EXPECT_EQ(r(v, s), row[s]);
      total += r(v, s);
    }
    EXPECT_NEAR(total, 1.0, 1e-15);
  }
  EXPECT_THROW(build_score_model(Family::normal, -0.1, grid), std::invalid_argument);
}

TEST(Registry, HoldsTheSixInstances) {
  const auto registry = paper_registry();
  EXPECT_EQ(registry.size(), 6u);
  for (const char* name : {"example1", "thm6_tmm_vs_som", "thm6_om1_vs_tmm", "thm7_ranking",
                           "thm9_omk_vs_um", "thm9_um_vs_kxom1"}) {
    ASSERT_TRUE(registry.contains(name)) << name;
    EXPECT_DOUBLE_EQ(registry.at(name).bar(), 0.5);
    EXPECT_EQ(registry.at(name).n(), 4u);
  }
  const Instance& in = registry.at("thm6_tmm_vs_som");
  EXPECT_NEAR(in.r(3, 0), 0.017, 1e-15);
  EXPECT_NEAR(in.r(3, 3), 0.916, 1e-15);
  EXPECT_DOUBLE_EQ(in.value(1), 1.0 / 3.0);
  EXPECT_THROW(registered_instance("nonexistent"), std::invalid_argument);
}

TEST(Sweep, PerfectAppraiserEarnsTheOmniscientReward) {
  SweepConfig config = figure_config(Family::normal, {0.0});
  config.mechanisms = {SweepMechanism::som, SweepMechanism::om1};
  const std::vector<SweepRecord> records = run_sweep(config);
  const double omniscient = omniscient_reward(sweep_instance(config, 0.0));
  ASSERT_EQ(records.size(), 2u);
  for (const SweepRecord& r : records) EXPECT_NEAR(r.per_item_reward, omniscient, 1e-12);
}

TEST(Sweep, RecordsAreRecomputableAndOrdered) {
  SweepConfig config = figure_config(Family::normal, {0.0, 0.1, 0.2});
  config.mechanisms = {SweepMechanism::tmm, SweepMechanism::som};
  const std::vector<SweepRecord> records = run_sweep(config);
  ASSERT_EQ(records.size(), 6u);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SweepRecord& r = records[i];
    EXPECT_EQ(r.variance, config.variance_grid[i / 2]);
    EXPECT_EQ(r.mechanism, i % 2 == 0 ? "TMM" : "SOM");
    const Instance in = sweep_instance(config, r.variance);
    const Mechanism m = i % 2 == 0 ? tmm_optimal(in).mechanism : solve_som(in);
    EXPECT_EQ(r.per_item_reward, expected_reward(in, m));
    EXPECT_EQ(r.per_quality_rates.size(), 7u);
  }
}

TEST(Sweep, UnionOfTwoMenuCopiesDominatesPerItem) {
  SweepConfig config = figure_config(Family::normal, {0.0, 0.15, 0.3, 0.45, 0.6});
  config.mechanisms = {SweepMechanism::tmm, SweepMechanism::um_tmm};
  const std::vector<SweepRecord> records = run_sweep(config);
  for (std::size_t i = 0; i < records.size(); i += 2) {
    EXPECT_GE(records[i + 1].per_item_reward, records[i].per_item_reward - 1e-9);
  }
}

TEST(Sweep, BitIdenticalAcrossRuns) {
  SweepConfig config = figure_config(Family::lognormal, {0.05, 0.2});
  config.mechanisms = {SweepMechanism::om1, SweepMechanism::um_tmm, SweepMechanism::kx_om1};
  std::ostringstream first, second;
  write_sweep_csv(first, run_sweep(config), 7);
  write_sweep_csv(second, run_sweep(config), 7);
  EXPECT_EQ(first.str(), second.str());
}

TEST(Sweep, RejectsBadConfigs) {
  SweepConfig config = figure_config(Family::normal, {0.1, 0.0});
  EXPECT_THROW(run_sweep(config), std::invalid_argument);
  config.variance_grid = {-0.1};
  EXPECT_THROW(run_sweep(config), std::invalid_argument);
  config.variance_grid = {0.1};
  config.mechanisms.clear();
  EXPECT_THROW(run_sweep(config), std::invalid_argument);
}

TEST(Sweep, BudgetErrorsPropagate) {
  SweepConfig config = figure_config(Family::normal, {0.1});
  config.mechanisms = {SweepMechanism::omk};
  config.size_budget = 1000;
  EXPECT_THROW(run_sweep(config), SizeBudgetExceeded);
}

TEST(SweepCsv, Schema) {
  SweepConfig config = figure_config(Family::lognormal, {0.1});
  config.mechanisms = {SweepMechanism::som};
  std::ostringstream out;
  write_sweep_csv(out, run_sweep(config), 7);
  std::istringstream lines(out.str());
  std::string header, row, extra;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_FALSE(std::getline(lines, extra));
  EXPECT_EQ(header,
            "family,variance,mechanism,per_item_reward,overall_rate,rate_v0,rate_v1,rate_v2,rate_v3,"
            "rate_v4,rate_v5,rate_v6");
  EXPECT_EQ(row.rfind("lognormal,0.1,SOM,", 0), 0u);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 11);
}

TEST(SweepCsv, NineSignificantDigits) {
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(123456789012.0), "1.23456789e+11");
}
