#include <gtest/gtest.h>

#include "rplab/experiment.hpp"
#include "rplab/oracle.hpp"

using namespace rplab;

namespace {

LearnerConfig fast_tabular() {
  TabularQConfig q;
  q.epsilon_decay_steps = 20000;
  return q;
}

TargetOptions pinned_options() {
  TargetOptions o;
  o.T = 20000;
  o.snapshot_every = 100;
  return o;
}

// one decision, a0 pays -1 and a1 pays +1, then a terminal state
TabularMdp one_shot() {
  TabularMdp m = TabularMdp::discrete(2, 2, 1);
  m.transitions[0][0] = {{1, 1.0}};
  m.transitions[0][1] = {{1, 1.0}};
  m.transitions[1][0] = {{1, 1.0}};
  m.transitions[1][1] = {{1, 1.0}};
  m.rewards[0] = {-1.0, 1.0};
  m.initial = {1.0, 0.0};
  m.terminal = {false, true};
  return m;
}

RunSpec gridworld_spec(const Policy& target, std::int64_t T) {
  return RunSpec{GridWorldSpec{}, fast_tabular(), AttackConfig{}, target, T, 4000};
}

}  // namespace

TEST(Targets, PinnedGridWorldTiers) {
  const TargetSet ts = generate_targets(GridWorldSpec{}, fast_tabular(), 7, pinned_options());
  ASSERT_EQ(ts.tiers.size(), 3u);
  EXPECT_EQ(ts.get(Tier::random).value, -50.0);
  EXPECT_EQ(ts.get(Tier::medium).value, -1.0);
  EXPECT_EQ(ts.get(Tier::medium).snapshot_step, 400);
  EXPECT_EQ(ts.get(Tier::expert).value, 3.0);
  EXPECT_EQ(ts.get(Tier::expert).snapshot_step, 1400);
  EXPECT_EQ(ts.snapshots.size(), 200u);
}

TEST(Targets, TierOrderingAndDeterminism) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TargetSet a = generate_targets(GridWorldSpec{}, fast_tabular(), seed, pinned_options());
    const TargetSet b = generate_targets(GridWorldSpec{}, fast_tabular(), seed, pinned_options());
    EXPECT_LE(a.get(Tier::random).value, a.get(Tier::medium).value);
    EXPECT_LE(a.get(Tier::medium).value, a.get(Tier::expert).value);
    for (Tier t : {Tier::random, Tier::medium, Tier::expert}) {
      EXPECT_EQ(a.get(t).policy, b.get(t).policy);
      EXPECT_EQ(a.get(t).value, b.get(t).value);
    }
  }
}

TEST(Targets, ReportedValuesMatchExactEvaluation) {
  // with no slip the environment is deterministic, so a rollout equals the DP value
  const TargetSet ts = generate_targets(GridWorldSpec{}, fast_tabular(), 7, pinned_options());
  const TabularMdp mdp = GridWorld(GridWorldSpec{}).tabular();
  for (const auto& tier : ts.tiers)
    EXPECT_NEAR(evaluate_policy(mdp, policy_table(mdp, tier.policy)).overall, tier.value, 1e-9);
}

TEST(Targets, NoQualifyingSnapshotIsReported) {
  TabularQConfig frozen;
  frozen.alpha = 0.0;
  TargetOptions o;
  o.T = 50;
  o.snapshot_every = 10;
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    try {
      const TargetSet ts = generate_targets(one_shot(), frozen, seed, o);
      EXPECT_EQ(ts.get(Tier::random).value, -1.0);
    } catch (const TargetGenerationError& e) {
      ++failures;
      const std::string msg = e.what();
      EXPECT_NE(msg.find("snapshot returns: 10:-1 20:-1 30:-1 40:-1 50:-1"), std::string::npos) << msg;
    }
  }
  EXPECT_GT(failures, 0);
}

TEST(Targets, RejectsBadOptions) {
  TargetOptions o;
  o.medium_fraction = 1.0;
  EXPECT_THROW(generate_targets(GridWorldSpec{}, fast_tabular(), 0, o), ConfigError);
  o = TargetOptions{};
  o.snapshot_every = 0;
  EXPECT_THROW(generate_targets(GridWorldSpec{}, fast_tabular(), 0, o), ConfigError);
}

TEST(Scenarios, NoAttackSpendsNothing) {
  const Policy target = Policy::constant(ActionSpace::discrete(4), Action::discrete(GridWorld::up));
  const ScenarioResult r = run_scenario(Scenario::unbounded, gridworld_spec(target, 5000), 2, 3);
  for (const auto& rep : r.reports) {
    EXPECT_EQ(rep.C_total, 0.0);
    EXPECT_EQ(rep.B_realized, 0.0);
  }
}

TEST(Scenarios, ZeroDeltaMatchesClean) {
  const Policy target = Policy::constant(ActionSpace::discrete(4), Action::discrete(GridWorld::up));
  RunSpec clean = gridworld_spec(target, 5000);
  RunSpec zero = clean;
  zero.attack.kind = AttackKind::adaptive;
  zero.attack.delta = 0.0;
  const ScenarioResult a = run_scenario(Scenario::unbounded, clean, 2, 3);
  const ScenarioResult b = run_scenario(Scenario::unbounded, zero, 2, 3);
  ASSERT_EQ(a.reports.size(), b.reports.size());
  for (std::size_t i = 0; i < a.reports.size(); ++i) EXPECT_EQ(a.reports[i], b.reports[i]);
}

TEST(Scenarios, SufficientAdaptiveAttackHalvesDivergence) {
  const TargetSet ts = generate_targets(GridWorldSpec{}, fast_tabular(), 7, pinned_options());
  const Policy& target = ts.get(Tier::medium).policy;
  const TabularMdp mdp = GridWorld(GridWorldSpec{}).tabular();
  const double need = dp_sufficient_delta(mdp, policy_table(mdp, target));
  RunSpec spec = gridworld_spec(target, 100000);
  const ScenarioResult clean = run_scenario(Scenario::unbounded, spec, 2, 100);
  spec.attack = {AttackKind::adaptive, need * 1.5 + 1.0, std::nullopt, std::nullopt, std::nullopt};
  const ScenarioResult attacked = run_scenario(Scenario::unbounded, spec, 2, 100);
  EXPECT_LT(attacked.aggregate.epsilon.mean, clean.aggregate.epsilon.mean / 2.0);
}

TEST(Scenarios, HardCapIsHonoured) {
  const Policy target = Policy::constant(ActionSpace::discrete(4), Action::discrete(GridWorld::up));
  RunSpec spec = gridworld_spec(target, 20000);
  spec.attack = {AttackKind::adaptive, 5.0, std::nullopt, 5.0, 0.3 * 20000};
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const TrainingResult r = run_single(spec, seed);
    EXPECT_LE(r.report.C_total, 6000.0 + 1e-9);
    EXPECT_LE(r.report.B_realized, 5.0);
    ASSERT_TRUE(r.report.exhausted_at.has_value());
    for (auto t = static_cast<std::size_t>(*r.report.exhausted_at); t < r.log.size(); ++t)
      ASSERT_EQ(r.log[t].delta, 0.0);
  }
  spec.attack.cap_C.reset();
  EXPECT_THROW(run_scenario(Scenario::hard_capped, spec, 1, 0), ConfigError);
}

TEST(Scenarios, UnboundedGreedySpendsDeltaEveryStep) {
  const Policy target = Policy::constant(ActionSpace::discrete(4), Action::discrete(GridWorld::up));
  RunSpec spec = gridworld_spec(target, 3000);
  spec.attack = {AttackKind::greedy, 2.0, std::nullopt, std::nullopt, 100.0};
  const ScenarioResult r = run_scenario(Scenario::unbounded, spec, 2, 0);
  for (const auto& rep : r.reports) {
    EXPECT_EQ(rep.C_total, 2.0 * 3000);
    EXPECT_EQ(rep.B_realized, 2.0);
  }
}

TEST(Scenarios, SeedsAndJobsDoNotChangeResults) {
  const Policy target = Policy::constant(ActionSpace::discrete(4), Action::discrete(GridWorld::left));
  RunSpec spec = gridworld_spec(target, 4000);
  spec.attack = {AttackKind::adaptive, 3.0, std::nullopt, std::nullopt, std::nullopt};
  const ScenarioResult serial = run_scenario(Scenario::unbounded, spec, 4, 50, 1);
  const ScenarioResult threaded = run_scenario(Scenario::unbounded, spec, 4, 50, 3);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(serial.reports[i], threaded.reports[i]);
    EXPECT_EQ(serial.reports[i].seed, 50 + i);
    EXPECT_EQ(serial.reports[i], run_single(spec, 50 + i).report);
  }
}

TEST(ParallelFor, RethrowsFirstFailureByIndex) {
  std::vector<int> hits(10, 0);
  try {
    parallel_for(10, 3, [&](std::size_t i) {
      hits[i] = 1;
      if (i == 4 || i == 7) throw std::runtime_error("task " + std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "task 4");
  }
}

TEST(Names, RoundTrip) {
  for (Tier t : {Tier::random, Tier::medium, Tier::expert}) EXPECT_EQ(parse_tier(to_string(t)), t);
  for (Scenario s : {Scenario::unbounded, Scenario::hard_capped}) EXPECT_EQ(parse_scenario(to_string(s)), s);
  EXPECT_THROW(parse_tier("novice"), ConfigError);
}
