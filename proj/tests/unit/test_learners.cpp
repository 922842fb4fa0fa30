#include <gtest/gtest.h>

#include <cmath>

#include "rplab/envs.hpp"
#include "rplab/learners.hpp"
#include "rplab/oracle.hpp"
#include "rplab/training.hpp"

using namespace rplab;

namespace {

template <class T>
concept SeesTrueReward = requires(T t) { t.r_true; };
template <class T>
concept SeesPerturbation = requires(T t) { t.delta; };
static_assert(!SeesTrueReward<ObservedTransition> && !SeesPerturbation<ObservedTransition>);

ObservedTransition tr(int s, int a, double r, int s2, bool done) {
  return {{static_cast<double>(s)}, Action::discrete(a), r, {static_cast<double>(s2)}, done};
}

}  // namespace

TEST(TabularQ, RateOneMyopicUpdate) {
  TabularQConfig cfg;
  cfg.alpha = 1.0;
  cfg.gamma = 0.0;
  TabularQLearner q(cfg, 3, 2, 100);
  Rng rng(1);
  q.observe(tr(0, 1, -6.0, 1, false), rng);
  EXPECT_EQ(q.q(0, 1), -6.0);
}

TEST(TabularQ, FrozenLearner) {
  TabularQConfig cfg;
  cfg.alpha = 0.0;
  TabularQLearner q(cfg, 3, 2, 100);
  Rng rng(1);
  q.observe(tr(0, 1, -6.0, 1, false), rng);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) EXPECT_EQ(q.q(s, a), 0.0);
}

TEST(TabularQ, BootstrapsExceptAtTerminal) {
  TabularQConfig cfg;
  cfg.alpha = 1.0;
  cfg.gamma = 0.5;
  TabularQLearner q(cfg, 3, 2, 100);
  Rng rng(1);
  q.observe(tr(1, 0, 4.0, 2, true), rng);
  EXPECT_EQ(q.q(1, 0), 4.0);
  q.observe(tr(0, 1, 1.0, 1, false), rng);
  EXPECT_EQ(q.q(0, 1), 1.0 + 0.5 * 4.0);
}

TEST(TabularQ, FullExplorationIsUniform) {
  TabularQConfig cfg;
  cfg.epsilon_start = cfg.epsilon_end = 1.0;
  TabularQLearner q(cfg, 1, 4, 100);
  Rng rng(2);
  q.observe(tr(0, 2, 5.0, 0, true), rng);  // a clear greedy action that must not dominate
  std::vector<int> counts(4, 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(q.select_action({0}, i, rng).index())];
  const double sd = std::sqrt(n * 0.25 * 0.75);
  for (int c : counts) EXPECT_NEAR(c, n / 4.0, 4 * sd);
}

TEST(TabularQ, PureExploitationIsArgmax) {
  TabularQConfig cfg;
  cfg.epsilon_start = cfg.epsilon_end = 0.0;
  cfg.alpha = 1.0;
  TabularQLearner q(cfg, 1, 4, 100);
  Rng rng(2);
  q.observe(tr(0, 2, 5.0, 0, true), rng);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(q.select_action({0}, i, rng).index(), 2);
}

TEST(TabularQ, UntouchedSnapshotTiesToLowestIndex) {
  TabularQLearner q(TabularQConfig{}, 5, 3, 100);
  const Policy p = q.snapshot_policy();
  EXPECT_EQ(p.table(), std::vector<int>(5, 0));
}

TEST(TabularQ, SnapshotIsIndependentOfLaterTraining) {
  TabularQConfig cfg;
  cfg.alpha = 1.0;
  TabularQLearner q(cfg, 2, 2, 100);
  const Policy before = q.snapshot_policy();
  Rng rng(1);
  q.observe(tr(0, 1, 3.0, 1, true), rng);
  EXPECT_EQ(before.act({0}).index(), 0);
  EXPECT_EQ(q.snapshot_policy().act({0}).index(), 1);
}

TEST(TabularQ, DefaultScheduleDecaysOverHalfTheRun) {
  TabularQLearner q(TabularQConfig{}, 2, 2, 1000);
  EXPECT_EQ(q.exploration().at(0), 1.0);
  EXPECT_NEAR(q.exploration().at(250), 0.525, 1e-12);
  EXPECT_NEAR(q.exploration().at(500), 0.05, 1e-12);
  EXPECT_NEAR(q.exploration().at(900), 0.05, 1e-12);
}

TEST(Dqn, WarmupLeavesWeightsUnchanged) {
  DqnConfig cfg;
  cfg.hidden = {8, 8};
  cfg.warmup = 50;
  cfg.batch_size = 8;
  cfg.sync_every = 20;
  Rng init(1), rng(2);
  DqnLearner dqn(cfg, 3, {{-1, -1}, {1, 1}}, 1000, init);
  const MlpNet start = dqn.online();
  for (int i = 0; i < 49; ++i)
    dqn.observe({{rng.uniform(-1, 1), rng.uniform(-1, 1)}, Action::discrete(i % 3), -1.0, {0, 0}, false}, rng);
  EXPECT_EQ(dqn.buffer().size(), 49u);
  EXPECT_EQ(dqn.online(), start);
  EXPECT_EQ(dqn.updates(), 0);
  dqn.observe({{0.1, 0.2}, Action::discrete(0), -1.0, {0, 0}, false}, rng);
  EXPECT_FALSE(dqn.online() == start);
  EXPECT_EQ(dqn.updates(), 1);
}

TEST(Dqn, TargetNetworkChangesOnlyAtSyncEvents) {
  DqnConfig cfg;
  cfg.hidden = {8};
  cfg.warmup = 10;
  cfg.batch_size = 4;
  cfg.sync_every = 25;
  Rng init(1), rng(2);
  DqnLearner dqn(cfg, 2, {{-1}, {1}}, 1000, init);
  MlpNet last = dqn.target();
  for (int i = 1; i <= 100; ++i) {
    dqn.observe({{rng.uniform(-1, 1)}, Action::discrete(i % 2), rng.uniform(-1, 1), {0}, i % 7 == 0}, rng);
    if (i % 25 == 0) {
      EXPECT_EQ(dqn.target(), dqn.online());
      last = dqn.target();
    } else {
      EXPECT_EQ(dqn.target(), last);
    }
  }
  EXPECT_EQ(dqn.syncs(), 4);
}

TEST(Ddpg, NoiselessActionIsActorOutput) {
  DdpgConfig cfg;
  cfg.hidden = {8, 8};
  Rng init(1), rng(2);
  const auto space = ActionSpace::box({-1, -2}, {1, 2});
  DdpgLearner ddpg(cfg, space, {{-1, -1, -1, -1}, {1, 1, 1, 1}}, 1000, init);
  ddpg.set_noise({0.0, 0.0, 1});
  const Policy snap = ddpg.snapshot_policy();
  for (int i = 0; i < 20; ++i) {
    const State s{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    EXPECT_EQ(ddpg.select_action(s, i, rng), snap.act(s));
  }
}

TEST(Ddpg, NoisyActionsStayInBox) {
  DdpgConfig cfg;
  cfg.hidden = {8};
  cfg.noise_start = cfg.noise_end = 5.0;
  Rng init(1), rng(2);
  const auto space = ActionSpace::box({-1, -1}, {1, 1});
  DdpgLearner ddpg(cfg, space, {{-1, -1}, {1, 1}}, 1000, init);
  for (int i = 0; i < 200; ++i) EXPECT_TRUE(space.contains(ddpg.select_action({0.3, -0.2}, i, rng)));
}

TEST(Ddpg, SnapshotUnaffectedByTraining) {
  DdpgConfig cfg;
  cfg.hidden = {8};
  cfg.warmup = 5;
  cfg.batch_size = 4;
  Rng init(1), rng(2);
  const auto space = ActionSpace::box({-1}, {1});
  DdpgLearner ddpg(cfg, space, {{-1}, {1}}, 1000, init);
  const Policy snap = ddpg.snapshot_policy();
  const Policy copy = snap;
  for (int i = 0; i < 50; ++i)
    ddpg.observe({{rng.uniform(-1, 1)}, Action::continuous({rng.uniform(-1, 1)}), rng.uniform(-1, 1), {0}, false}, rng);
  EXPECT_EQ(snap, copy);
  EXPECT_FALSE(ddpg.snapshot_policy() == snap);
}

namespace {

// Records everything a learner is handed, to check the threat model.
class Spy : public Learner {
 public:
  explicit Spy(std::unique_ptr<Learner> inner) : inner_(std::move(inner)) {}
  std::string name() const override { return "spy"; }
  Action select_action(const State& s, std::int64_t step, Rng& rng) override {
    return inner_->select_action(s, step, rng);
  }
  void observe(const ObservedTransition& t, Rng& rng) override {
    seen.push_back(t.reward);
    inner_->observe(t, rng);
  }
  Policy snapshot_policy() const override { return inner_->snapshot_policy(); }
  std::vector<double> seen;

 private:
  std::unique_ptr<Learner> inner_;
};

}  // namespace

TEST(ThreatModel, LearnerSeesOnlyObservedRewards) {
  GridWorld env(GridWorldSpec{});
  Rng init(0);
  Spy spy(make_learner(TabularQConfig{}, env, 5000, init));
  const Policy target = Policy::constant(env.action_space(), Action::discrete(GridWorld::up));
  RewardAttack attack({AttackKind::adaptive, 3.0, std::nullopt, std::nullopt, std::nullopt}, target);
  const TrainingResult r = run_training(env, spy, attack, target, 5000, 11);
  ASSERT_EQ(spy.seen.size(), r.log.size());
  int differing = 0;
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    EXPECT_EQ(spy.seen[i], r.log[i].r_observed);
    differing += spy.seen[i] != r.log[i].r_true;
  }
  EXPECT_GT(differing, 0);
}

TEST(CleanLearning, TabularQConvergesOnGridWorld) {
  GridWorldSpec spec;
  GridWorld env(spec);
  const TabularMdp mdp = env.tabular();
  // optimal action sets from the finite-horizon DP (ties are common on a grid)
  TabularMdp shorter = mdp;
  shorter.horizon = mdp.horizon - 1;
  const PolicyValue v = optimal_value(shorter, mdp.rewards);
  std::vector<std::vector<bool>> optimal(25, std::vector<bool>(4, false));
  for (std::size_t s = 0; s < 25; ++s) {
    double best = -1e300;
    std::vector<double> q(4);
    for (std::size_t a = 0; a < 4; ++a) {
      q[a] = mdp.rewards[s][a];
      for (const auto& succ : mdp.transitions[s][a]) q[a] += succ.prob * v.per_state[static_cast<std::size_t>(succ.state)];
      best = std::max(best, q[a]);
    }
    for (std::size_t a = 0; a < 4; ++a) optimal[s][a] = q[a] >= best - 1e-9;
  }
  const std::int64_t T = 200000;
  Rng init(0);
  auto learner = make_learner(TabularQConfig{}, env, T, init);
  const Policy target = Policy::constant(env.action_space(), Action::discrete(0));
  RewardAttack none(AttackConfig{}, target);
  const TrainingResult r = run_training(env, *learner, none, target, T, 3);
  double off = 0.0;
  std::int64_t n = 0;
  for (std::int64_t t = T - T / 4; t < T; ++t, ++n) {
    const auto& rec = r.log[static_cast<std::size_t>(t)];
    off += optimal[static_cast<std::size_t>(rec.s[0])][static_cast<std::size_t>(rec.a.index())] ? 0.0 : 1.0;
  }
  EXPECT_LE(off / static_cast<double>(n), 0.1);
}

TEST(ReplayBuffer, RingOverwritesOldest) {
  ReplayBuffer buf(3, 1, 1);
  for (int i = 0; i < 5; ++i) buf.push({{double(i)}, Action::discrete(0), double(i), {0}, false});
  EXPECT_EQ(buf.size(), 3u);
  Rng rng(1);
  const auto batch = buf.sample(200, rng);
  for (Eigen::Index i = 0; i < batch.r.size(); ++i) EXPECT_GE(batch.r(i), 2.0);
}
