#include <gtest/gtest.h>

#include <random>

#include "acquimech/analysis.hpp"
#include "acquimech/experiments.hpp"
#include "acquimech/multi_item.hpp"
#include "acquimech/reproduction.hpp"
#include "acquimech/single_item.hpp"
#include "oracles.hpp"

using namespace acquimech;

namespace {

RandomInstanceOptions levels(std::size_t lo, std::size_t hi) {
  RandomInstanceOptions options;
  options.min_levels = lo;
  options.max_levels = hi;
  return options;
}

double per_item(const MultiInstance& multi, const MultiPolicy& policy) {
  return multi_expected_reward(multi, policy) / static_cast<double>(multi.k());
}

}  // namespace

TEST(Omk, SingleItemCaseEqualsOm1) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance in = random_instance(rng);
    const MultiInstance multi(in, 1);
    const double om1 = expected_reward(in, solve_om1(in));
    EXPECT_NEAR(multi_expected_reward(multi, solve_omk(multi)), om1, 1e-10);
    EXPECT_NEAR(multi_expected_reward(multi, solve_omk(multi, kDefaultSizeBudget, Formulation::literal)),
                om1, 1e-10);
  }
}

TEST(Omk, SymmetricMatchesLiteral) {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 12; ++trial) {
    const Instance in = random_instance(rng, levels(2, 3));
    for (std::size_t k : {2u, 3u}) {
      if (k == 3 && in.n() * in.m() > 6) continue;
      const MultiInstance multi(in, k);
      const MultiPolicy sym = solve_omk(multi);
      const MultiPolicy lit = solve_omk(multi, kDefaultSizeBudget, Formulation::literal);
      EXPECT_NEAR(multi_expected_reward(multi, sym), multi_expected_reward(multi, lit), 1e-9)
          << "trial " << trial << " k " << k;
    }
  }
}

TEST(Omk, PolicyIsTruthfulAndMonotone) {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 10; ++trial) {
    const MultiInstance multi(random_instance(rng, levels(2, 4)), 2);
    const MultiPolicy policy = solve_omk(multi);
    EXPECT_TRUE(multi_check_ic(multi, policy).passed) << "trial " << trial;
    EXPECT_TRUE(multi_check_monotone(multi, policy).passed) << "trial " << trial;
  }
}

TEST(Omk, RegisteredInstanceValues) {
  // Frozen; the literal LP for the first value was confirmed by an external solver.
  const MultiInstance first(registered_instance("thm9_omk_vs_um"), 2);
  EXPECT_NEAR(multi_expected_reward(first, solve_omk(first)), 0.008630022944, 1e-10);
  const MultiInstance second(registered_instance("thm9_um_vs_kxom1"), 2);
  EXPECT_NEAR(multi_expected_reward(second, solve_omk(second)), 0.03873676876, 1e-10);
}

TEST(Omk, BudgetIsEnforced) {
  const MultiInstance multi(registered_instance("example1"), 2);
  // 2 * 16 * 16 = 512 literal variables.
  EXPECT_THROW(solve_omk(multi, 511), SizeBudgetExceeded);
  EXPECT_NO_THROW(solve_omk(multi, 512));
  try {
    solve_omk(multi, 100);
  } catch (const SizeBudgetExceeded& e) {
    EXPECT_EQ(e.requested(), 512u);
    EXPECT_EQ(e.budget(), 100u);
  }
}

TEST(RankingMechanism, RequiresTwoItems) {
  EXPECT_THROW(ranking_mechanism(MultiInstance(registered_instance("example1"), 3)), std::invalid_argument);
}

TEST(RankingMechanism, ReproducesReferenceAggregates) {
  const RankPolicy policy = ranking_mechanism(MultiInstance(registered_instance("thm7_ranking"), 2));
  const auto& expected = reference_rank_aggregates();
  for (std::size_t r = 0; r < 3; ++r) {
    const Matrix& got = policy.aggregate[r];
    for (std::size_t v1 = 0; v1 < 4; ++v1) {
      for (std::size_t v2 = 0; v2 < 4; ++v2) EXPECT_NEAR(got(v1, v2), expected[r](v1, v2), 1e-3);
    }
  }
}

TEST(RankingMechanism, AuditFindsTheKnownProfitableLie) {
  const RankPolicy policy = ranking_mechanism(MultiInstance(registered_instance("thm7_ranking"), 2));
  const std::vector<RankViolation> audit = rm_ic_audit(policy);
  ASSERT_FALSE(audit.empty());
  bool found = false;
  for (const RankViolation& v : audit) {
    EXPECT_NE(v.truthful, v.better);
    EXPECT_GT(v.gain, 1e-9);
    if (v.v1 == 2 && v.v2 == 0 && v.truthful == RankClass::greater && v.better == RankClass::smaller) {
      found = true;
      EXPECT_NEAR(v.gain, 0.05, 1e-3);
    }
  }
  EXPECT_TRUE(found);
}

TEST(RankingMechanism, MirrorSymmetry) {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance in = random_instance(rng);
    const RankPolicy policy = ranking_mechanism(MultiInstance(in, 2));
    const std::size_t m = in.m(), n = in.n();
    for (std::size_t s1 = 0; s1 < m; ++s1) {
      for (std::size_t s2 = 0; s2 < m; ++s2) {
        EXPECT_EQ(policy.accepts(RankClass::greater, 0)(s1, s2), policy.accepts(RankClass::smaller, 1)(s2, s1));
        EXPECT_EQ(policy.accepts(RankClass::equal, 0)(s1, s2), policy.accepts(RankClass::equal, 1)(s2, s1));
      }
    }
    for (std::size_t v1 = 0; v1 < n; ++v1) {
      for (std::size_t v2 = 0; v2 < n; ++v2) {
        EXPECT_NEAR(policy.aggregated(RankClass::greater)(v1, v2),
                    policy.aggregated(RankClass::smaller)(v2, v1), 1e-14);
      }
    }
  }
}

TEST(RankingMechanism, AcceptsMatchBruteForcePosterior) {
  std::mt19937_64 rng(113);
  const Instance in = random_instance(rng, levels(3, 4));
  const RankPolicy policy = ranking_mechanism(MultiInstance(in, 2));
  for (RankClass rank : kRankClasses) {
    for (std::size_t s1 = 0; s1 < in.m(); ++s1) {
      for (std::size_t s2 = 0; s2 < in.m(); ++s2) {
        double mass = 0.0, first = 0.0;
        for (std::size_t v1 = 0; v1 < in.n(); ++v1) {
          for (std::size_t v2 = 0; v2 < in.n(); ++v2) {
            const bool in_class = (rank == RankClass::greater && v1 > v2) ||
                                  (rank == RankClass::equal && v1 == v2) ||
                                  (rank == RankClass::smaller && v1 < v2);
            if (!in_class) continue;
            const double w = in.prior()[v1] * in.prior()[v2] * in.r(v1, s1) * in.r(v2, s2);
            mass += w;
            first += w * in.value(v1);
          }
        }
        const double expected = mass > 0.0 && first / mass >= in.bar() ? 1.0 : 0.0;
        EXPECT_EQ(policy.accepts(rank, 0)(s1, s2), expected);
      }
    }
  }
}

TEST(AllocateUnionMass, MatchesGreedyOracle) {
  std::mt19937_64 rng(127);
  std::uniform_int_distribution<std::size_t> size(1, 5), level(0, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::size_t> q(size(rng));
    for (auto& v : q) v = level(rng);
    const double gamma = unit(rng) * static_cast<double>(q.size());
    const std::vector<double> got = allocate_union_mass(q, gamma);
    const std::vector<double> want = oracle::greedy_allocation(q, gamma);
    double total = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_NEAR(got[i], want[i], 1e-12);
      total += got[i];
    }
    EXPECT_NEAR(total, gamma, 1e-12);
  }
}

TEST(AllocateUnionMass, EdgeCases) {
  const std::vector<std::size_t> q{2, 0, 2};
  EXPECT_EQ(allocate_union_mass(q, 0.0), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(allocate_union_mass(q, 5e-13), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(allocate_union_mass(q, 1.0), (std::vector<double>{0.5, 0, 0.5}));
  EXPECT_EQ(allocate_union_mass(q, 2.5), (std::vector<double>{1, 0.5, 1}));
  EXPECT_EQ(allocate_union_mass(q, 3.0), (std::vector<double>{1, 1, 1}));
}

TEST(UnionCompose, ValidatesInputs) {
  const MultiInstance multi(registered_instance("example1"), 2);
  const UnionInputs inputs = replicate(Mechanism::ones(4, 4), 2);
  const std::vector<std::size_t> ok{1, 2}, bad{1, 4}, short_profile{1};
  EXPECT_EQ(union_compose(multi, inputs, ok, ok), (std::vector<double>{1, 1}));
  EXPECT_THROW(union_compose(multi, inputs, bad, ok), std::out_of_range);
  EXPECT_THROW(union_compose(multi, inputs, short_profile, short_profile), std::invalid_argument);
  EXPECT_THROW(union_compose(multi, replicate(Mechanism::ones(4, 4), 3), ok, ok), std::invalid_argument);
}

TEST(UnionPolicy, TruthfulComponentsGiveTruthfulUnion) {
  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 15; ++trial) {
    const Instance in = random_instance(rng, levels(2, 4));
    const MultiInstance multi(in, 2);
    for (const Mechanism& y : {solve_om1(in), tmm_optimal(in).mechanism}) {
      const MultiPolicy um = union_policy(multi, replicate(y, 2));
      EXPECT_TRUE(multi_check_ic(multi, um).passed) << "trial " << trial;
      EXPECT_TRUE(multi_check_monotone(multi, um).passed) << "trial " << trial;
      EXPECT_GE(multi_expected_reward(multi, um) + 1e-12, 2.0 * expected_reward(in, y));
    }
  }
}

TEST(UnionPolicy, ThreeItems) {
  std::mt19937_64 rng(137);
  const Instance in = random_instance(rng, levels(3, 3));
  const MultiInstance multi(in, 3);
  const Mechanism y = solve_om1(in);
  const MultiPolicy um = union_policy(multi, replicate(y, 3));
  EXPECT_TRUE(multi_check_ic(multi, um).passed);
  EXPECT_GE(multi_expected_reward(multi, um) + 1e-12, 3.0 * expected_reward(in, y));
}

TEST(Umopt, SingleItemCaseEqualsOm1) {
  std::mt19937_64 rng(139);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng);
    const MultiInstance multi(in, 1);
    const UmoptResult result = solve_umopt(multi);
    EXPECT_NEAR(result.lp_objective, expected_reward(in, solve_om1(in)), 1e-10);
  }
}

TEST(Umopt, SymmetricMatchesLiteral) {
  std::mt19937_64 rng(149);
  for (int trial = 0; trial < 12; ++trial) {
    const MultiInstance multi(random_instance(rng, levels(2, 3)), 2);
    const UmoptResult sym = solve_umopt(multi);
    const UmoptResult lit = solve_umopt(multi, kDefaultSizeBudget, Formulation::literal);
    EXPECT_NEAR(sym.lp_objective, lit.lp_objective, 1e-9) << "trial " << trial;
  }
}

TEST(Umopt, RegisteredInstanceValue) {
  const MultiInstance multi(registered_instance("thm9_um_vs_kxom1"), 2);
  const UmoptResult result = solve_umopt(multi);
  EXPECT_NEAR(multi_expected_reward(multi, result.policy), 0.02486967493, 1e-9);
}

TEST(Umopt, ReportedPolicyIsNoWorseThanLpObjective) {
  std::mt19937_64 rng(151);
  for (int trial = 0; trial < 15; ++trial) {
    const MultiInstance multi(random_instance(rng, levels(2, 4)), 2);
    const UmoptResult result = solve_umopt(multi);
    EXPECT_GE(multi_expected_reward(multi, result.policy) + 1e-9, result.lp_objective);
    EXPECT_TRUE(multi_check_ic(multi, result.policy).passed);
    EXPECT_TRUE(multi_check_monotone(multi, result.policy).passed);
    for (const Mechanism& y : result.inputs.components) {
      EXPECT_TRUE(check_ic(multi.base(), y).passed);
      EXPECT_TRUE(check_monotone(y).passed);
    }
  }
}

TEST(RewardChain, OrderedOnRandomInstances) {
  std::mt19937_64 rng(157);
  for (int trial = 0; trial < 15; ++trial) {
    const Instance in = random_instance(rng, levels(2, 4));
    const MultiInstance multi(in, 2);
    const double om1 = expected_reward(in, solve_om1(in));
    const double um_om1 = per_item(multi, union_policy(multi, replicate(solve_om1(in), 2)));
    const double umopt = per_item(multi, solve_umopt(multi).policy);
    const double omk = per_item(multi, solve_omk(multi));
    EXPECT_GE(um_om1 + 1e-10, om1) << "trial " << trial;
    EXPECT_GE(umopt + 1e-9, um_om1) << "trial " << trial;
    EXPECT_GE(omk + 1e-9, umopt) << "trial " << trial;
    EXPECT_LE(omk, omniscient_reward(in) + 1e-9) << "trial " << trial;
  }
}
