#include <gtest/gtest.h>

#include <random>

#include "acquimech/analysis.hpp"
#include "acquimech/experiments.hpp"
#include "acquimech/single_item.hpp"
#include "oracles.hpp"

using namespace acquimech;

namespace {

Instance example1() { return registered_instance("example1"); }

RandomInstanceOptions tiny() {
  RandomInstanceOptions options;
  options.max_levels = 3;
  return options;
}

}  // namespace

TEST(Som, ExampleOneAcquiresOnlyAtScoreTwoThirds) {
  const Mechanism som = solve_som(example1());
  for (std::size_t v = 0; v < 4; ++v) {
    EXPECT_EQ(som(v, 0), 0.0);
    EXPECT_EQ(som(v, 1), 0.0);
    EXPECT_EQ(som(v, 2), 1.0);
    EXPECT_EQ(som(v, 3), 0.0);
  }
  EXPECT_EQ(menu_size(som), 1u);
  EXPECT_TRUE(check_ic(example1(), som).passed);
}

TEST(Som, RegisteredInstanceRewards) {
  EXPECT_NEAR(expected_reward(registered_instance("thm6_tmm_vs_som"),
                              solve_som(registered_instance("thm6_tmm_vs_som"))),
              0.0, 1e-12);
  EXPECT_NEAR(expected_reward(registered_instance("thm6_om1_vs_tmm"),
                              solve_som(registered_instance("thm6_om1_vs_tmm"))),
              0.001385, 1e-9);
}

TEST(Som, DominatesEveryScoreOnlyRule) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance in = random_instance(rng);
    const double som = expected_reward(in, solve_som(in));
    // Every 0/1 column pattern is a score-only mechanism.
    for (std::size_t mask = 0; mask < (std::size_t{1} << in.m()); ++mask) {
      Matrix x(in.n(), in.m(), 0.0);
      for (std::size_t v = 0; v < in.n(); ++v) {
        for (std::size_t s = 0; s < in.m(); ++s) x(v, s) = (mask >> s) & 1 ? 1.0 : 0.0;
      }
      EXPECT_GE(som + 1e-15, oracle::reward(in, Mechanism(std::move(x))));
    }
  }
}

TEST(Consistency, ExampleOneIsInconsistentAtTopScore) {
  const ConsistencyReport report = check_consistency(example1());
  EXPECT_FALSE(report.consistent);
  EXPECT_TRUE(report.unreachable.empty());
  ASSERT_EQ(report.per_score.size(), 4u);
  EXPECT_FALSE(report.per_score[0].violated);
  EXPECT_FALSE(report.per_score[1].violated);
  EXPECT_FALSE(report.per_score[2].violated);
  EXPECT_TRUE(report.per_score[3].violated);
  EXPECT_TRUE(report.per_score[3].score_clears_bar);
}

TEST(Consistency, ExactAppraiserIsConsistent) {
  const Instance in = validate_instance({0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}, {0.2, 0.3, 0.5},
                                        {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, 0.4);
  EXPECT_TRUE(check_consistency(in).consistent);
}

TEST(Consistency, UnreachableScoresAreListed) {
  const Instance in = validate_instance({0.0, 1.0}, {0.0, 0.5, 1.0}, {0.5, 0.5},
                                        {{1, 0, 0}, {0, 0, 1}}, 0.5);
  const ConsistencyReport report = check_consistency(in);
  EXPECT_TRUE(report.consistent);
  EXPECT_EQ(report.unreachable, std::vector<std::size_t>{1});
}

TEST(Consistency, ThresholdBruteForceMatchesScoreOnlyOnConsistentInstances) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    const Instance in = random_consistent_instance(rng);
    const ThresholdMechanism best = best_threshold_mechanism(in);
    EXPECT_NEAR(best.reward, expected_reward(in, solve_som(in)), 1e-14);
  }
}

TEST(ThresholdMechanism, NeverIsAllowed) {
  const Instance in = validate_instance({0.0, 0.5}, {0.0, 1.0}, {0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}, 0.9);
  const ThresholdMechanism best = best_threshold_mechanism(in);
  EXPECT_TRUE(best.threshold.is_never());
  EXPECT_EQ(best.reward, 0.0);
}

TEST(ScoreThreshold, OrderAndAdmission) {
  EXPECT_EQ(ScoreThreshold::never().rank(4), 4u);
  EXPECT_EQ(ScoreThreshold::at(2).rank(4), 2u);
  EXPECT_TRUE(ScoreThreshold::at(2).admits(3));
  EXPECT_FALSE(ScoreThreshold::at(2).admits(1));
  EXPECT_FALSE(ScoreThreshold::never().admits(0));
}

TEST(TmmBuild, MenuOneIsStrict) {
  const Instance in = example1();
  // alpha = 0 makes every owner indifferent or prefer menu 2.
  const TmmResult zero = tmm_build(in, ScoreThreshold::at(1), ScoreThreshold::at(2), 0.0);
  EXPECT_TRUE(zero.params.v1_set.empty());
  // Same thresholds and alpha = 1: tails tie only where the gap is empty.
  const TmmResult same = tmm_build(in, ScoreThreshold::at(2), ScoreThreshold::at(2), 1.0);
  EXPECT_TRUE(same.params.v1_set.empty());
  EXPECT_EQ(menu_size(same.mechanism), 1u);
}

TEST(TmmBuild, RejectsBadParameters) {
  const Instance in = example1();
  EXPECT_THROW(tmm_build(in, ScoreThreshold::at(3), ScoreThreshold::at(1), 0.5), std::invalid_argument);
  EXPECT_THROW(tmm_build(in, ScoreThreshold::never(), ScoreThreshold::at(1), 0.5), std::invalid_argument);
  EXPECT_THROW(tmm_build(in, ScoreThreshold::at(0), ScoreThreshold::at(1), 1.5), std::invalid_argument);
  EXPECT_THROW(tmm_build(in, ScoreThreshold::at(4), ScoreThreshold::never(), 0.5), std::out_of_range);
}

TEST(TmmBuild, RandomParametersGiveTruthfulMonotoneMechanisms) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = random_instance(rng);
    std::uniform_int_distribution<std::size_t> rank(0, in.m());
    std::size_t r1 = rank(rng), r2 = rank(rng);
    if (r1 > r2) std::swap(r1, r2);
    auto th = [&](std::size_t r) { return r == in.m() ? ScoreThreshold::never() : ScoreThreshold::at(r); };
    const TmmResult built = tmm_build(in, th(r1), th(r2), unit(rng));
    EXPECT_TRUE(check_ic(in, built.mechanism).passed) << "trial " << trial;
    EXPECT_TRUE(check_monotone(built.mechanism).passed) << "trial " << trial;
    EXPECT_LE(menu_size(built.mechanism), 2u);
  }
}

TEST(TmmOptimal, RegisteredInstanceValues) {
  // Frozen from the breakpoint search, confirmed by a 1e-3 alpha grid.
  const TmmOptimum first = tmm_optimal(registered_instance("thm6_tmm_vs_som"));
  EXPECT_NEAR(first.reward, 0.000961539823, 1e-11);
  EXPECT_EQ(first.params.b1, ScoreThreshold::at(2));
  EXPECT_EQ(first.params.b2, ScoreThreshold::at(3));
  EXPECT_EQ(first.params.v1_set, (std::vector<std::size_t>{1, 2}));

  const TmmOptimum second = tmm_optimal(registered_instance("thm6_om1_vs_tmm"));
  EXPECT_NEAR(second.reward, 0.000503333333, 1e-10);
  EXPECT_NEAR(second.params.alpha, 0.4, 1e-12);
}

TEST(TmmOptimal, NeverBelowDenseAlphaGrid) {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 60; ++trial) {
    const Instance in = random_instance(rng, tiny());
    const TmmOptimum best = tmm_optimal(in);
    EXPECT_GE(best.reward + 1e-12, oracle::tmm_grid_search(in, 1e-3)) << "trial " << trial;
    EXPECT_NEAR(best.reward, expected_reward(in, best.mechanism), 1e-15);
    EXPECT_TRUE(check_ic(in, best.mechanism).passed);
  }
}

TEST(TmmOptimal, SitsBetweenThresholdsAndLpOptimum) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 80; ++trial) {
    const Instance in = random_instance(rng);
    const double tmm = tmm_optimal(in).reward;
    EXPECT_GE(tmm + 1e-12, best_threshold_mechanism(in).reward);
    // Some draws have score rows spanning nine orders of magnitude; the LP
    // is then only accurate to a few 1e-9.
    EXPECT_LE(tmm, expected_reward(in, solve_om1(in)) + 1e-8);
  }
}

TEST(Om1, ExampleOneObjective) {
  const Instance in = example1();
  const Mechanism om1 = solve_om1(in);
  EXPECT_NEAR(expected_reward(in, om1), 0.001703876583, 1e-11);
  EXPECT_NEAR(expected_reward(in, om1), expected_reward(in, example1_printed_mechanism()), 1e-6);
  EXPECT_TRUE(check_ic(in, om1).passed);
  EXPECT_TRUE(check_monotone(om1).passed);
}

TEST(Om1, MatchesVertexEnumerationOnTinyInstances) {
  std::mt19937_64 rng(67);
  RandomInstanceOptions options;
  options.max_levels = 2;
  for (int trial = 0; trial < 40; ++trial) {
    const Instance in = random_instance(rng, options);
    const oracle::VertexResult expected = oracle::vertex_enumeration(oracle::dense_om1_problem(in));
    ASSERT_TRUE(expected.feasible);
    EXPECT_NEAR(expected_reward(in, solve_om1(in)), expected.objective, 1e-10) << "trial " << trial;
  }
}

TEST(Om1, MatchesDenseFormulation) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 60; ++trial) {
    const Instance in = random_instance(rng);
    const lp::LpSolution dense = lp::solve_lp(oracle::dense_om1_problem(in));
    ASSERT_EQ(dense.status, lp::LpStatus::optimal);
    EXPECT_NEAR(expected_reward(in, solve_om1(in)), dense.objective_value, 1e-10);
  }
}

TEST(Om1, BoundsAndTruthfulness) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 80; ++trial) {
    const Instance in = random_instance(rng);
    const Mechanism om1 = solve_om1(in);
    const double reward = expected_reward(in, om1);
    EXPECT_GE(reward, -1e-12);
    EXPECT_GE(reward + 1e-12, expected_reward(in, solve_som(in)));
    EXPECT_LE(reward, omniscient_reward(in) + 1e-12);
    EXPECT_TRUE(check_ic(in, om1).passed);
    EXPECT_TRUE(check_monotone(om1).passed);
  }
}

TEST(Om1, FeasibleSetIsConvex) {
  // Midpoints of two IC monotone mechanisms stay IC and monotone, and the
  // reward is linear along the segment.
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance in = random_instance(rng);
    const Mechanism a = solve_om1(in);
    const Mechanism b = tmm_optimal(in).mechanism;
    Matrix mid(in.n(), in.m());
    for (std::size_t v = 0; v < in.n(); ++v) {
      for (std::size_t s = 0; s < in.m(); ++s) mid(v, s) = 0.5 * (a(v, s) + b(v, s));
    }
    const Mechanism c(std::move(mid));
    EXPECT_TRUE(check_ic(in, c).passed);
    EXPECT_TRUE(check_monotone(c).passed);
    EXPECT_NEAR(expected_reward(in, c), 0.5 * (expected_reward(in, a) + expected_reward(in, b)), 1e-14);
  }
}

TEST(MenuSize, CountsDistinctRowsWithinTolerance) {
  const Mechanism x(Matrix::from_rows({{0.0, 0.5}, {0.0, 0.5 + 1e-8}, {0.2, 0.5}, {1.0, 1.0}}));
  EXPECT_EQ(menu_size(x), 3u);
  EXPECT_EQ(menu_size(x, 0.0), 4u);
  EXPECT_EQ(menu_size(example1_printed_mechanism()), 3u);
}

TEST(ReduceMenu, KeepsTruthfulnessAndReward) {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 80; ++trial) {
    const Instance in = random_instance(rng);
    const Mechanism om1 = solve_om1(in);
    const Mechanism reduced = reduce_menu(in, om1);
    std::size_t above = 0;
    for (std::size_t v = 0; v < in.n(); ++v) above += in.value(v) > in.bar() ? 1 : 0;
    EXPECT_TRUE(check_ic(in, reduced).passed) << "trial " << trial;
    EXPECT_TRUE(check_monotone(reduced).passed);
    EXPECT_GE(expected_reward(in, reduced) + 1e-12, expected_reward(in, om1));
    EXPECT_LE(menu_size(reduced), std::max<std::size_t>(above, 1));
  }
}

TEST(ReduceMenu, ExampleOne) {
  const Instance in = example1();
  const Mechanism reduced = reduce_menu(in, solve_om1(in));
  EXPECT_LE(menu_size(reduced), 2u);
  EXPECT_NEAR(expected_reward(in, reduced), 0.001703876583, 1e-9);
}

TEST(ReduceMenu, NothingAboveBarGivesZero) {
  const Instance in = validate_instance({0.0, 0.5}, {0.0, 1.0}, {0.5, 0.5}, {{0.7, 0.3}, {0.2, 0.8}}, 0.9);
  const Mechanism reduced = reduce_menu(in, Mechanism::ones(2, 2));
  EXPECT_EQ(menu_size(reduced), 1u);
  EXPECT_EQ(reduced(1, 1), 0.0);
}
