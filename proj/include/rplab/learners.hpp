#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rplab/core.hpp"
#include "rplab/mlp.hpp"
#include "rplab/policy.hpp"

namespace rplab {

// Linear decay from `start` to `end` over `decay_steps`, constant after.
struct LinearSchedule {
  double start = 1.0;
  double end = 0.05;
  std::int64_t decay_steps = 1;
  double at(std::int64_t step) const;
};

// A learning agent. It only ever receives ObservedTransition, which carries
// the poisoned reward and nothing else about the attack.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string name() const = 0;
  virtual Action select_action(const State& s, std::int64_t step, Rng& rng) = 0;
  virtual void observe(const ObservedTransition& tr, Rng& rng) = 0;
  // Frozen copy of the current greedy / actor policy.
  virtual Policy snapshot_policy() const = 0;
};

struct TabularQConfig {
  double alpha = 0.1;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::optional<std::int64_t> epsilon_decay_steps;  // default: half the run
};

struct DqnConfig {
  std::vector<int> hidden{64, 64};
  double learning_rate = 1e-3;
  double gamma = 0.99;
  std::size_t buffer_capacity = 50000;
  std::size_t batch_size = 64;
  std::int64_t warmup = 1000;
  std::int64_t sync_every = 1000;
  bool double_q = true;
  bool dueling = true;
  bool huber = true;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::optional<std::int64_t> epsilon_decay_steps;
};

struct DdpgConfig {
  std::vector<int> hidden{64, 64};
  double actor_learning_rate = 1e-4;
  double critic_learning_rate = 1e-3;
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t buffer_capacity = 100000;
  std::size_t batch_size = 64;
  std::int64_t warmup = 1000;
  double noise_start = 0.2;  // fraction of the box half-width
  double noise_end = 0.05;
  std::optional<std::int64_t> noise_decay_steps;
  bool twin_critics = false;
  int policy_delay = 1;
  double target_noise = 0.2;
  double target_noise_clip = 0.5;
};

using LearnerConfig = std::variant<TabularQConfig, DqnConfig, DdpgConfig>;
std::string learner_name(const LearnerConfig& cfg);

// Uniform-sampling ring buffer of observed transitions. Rewards stored are
// the observed (possibly poisoned) ones; there is no field for anything else.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim);

  void push(const ObservedTransition& tr);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  struct Batch {
    MlpNet::Matrix s;       // state_dim x n
    MlpNet::Matrix a;       // action_dim x n (discrete: the index)
    Eigen::VectorXd r;
    MlpNet::Matrix s_next;
    Eigen::VectorXd done;   // 1.0 when the episode ended
  };
  Batch sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_, state_dim_, action_dim_;
  std::size_t size_ = 0, head_ = 0;
  std::vector<double> s_, a_, r_, s_next_, done_;
};

class TabularQLearner : public Learner {
 public:
  TabularQLearner(TabularQConfig cfg, int num_states, int num_actions, std::int64_t total_steps);

  std::string name() const override { return "tabular"; }
  Action select_action(const State& s, std::int64_t step, Rng& rng) override;
  void observe(const ObservedTransition& tr, Rng& rng) override;
  Policy snapshot_policy() const override;

  double q(int s, int a) const { return q_[index(s, a)]; }
  int greedy(int s) const;
  const LinearSchedule& exploration() const { return schedule_; }

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(num_actions_) + static_cast<std::size_t>(a);
  }
  TabularQConfig cfg_;
  int num_states_, num_actions_;
  LinearSchedule schedule_;
  std::vector<double> q_;
};

class DqnLearner : public Learner {
 public:
  DqnLearner(DqnConfig cfg, int num_actions, const ObservationBounds& bounds, std::int64_t total_steps,
             Rng& init_rng);

  std::string name() const override { return "dqn"; }
  Action select_action(const State& s, std::int64_t step, Rng& rng) override;
  void observe(const ObservedTransition& tr, Rng& rng) override;
  Policy snapshot_policy() const override;

  const MlpNet& online() const { return online_.net; }
  const MlpNet& target() const { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::int64_t updates() const { return updates_; }
  std::int64_t syncs() const { return syncs_; }

 private:
  void train_step(Rng& rng);

  DqnConfig cfg_;
  int num_actions_;
  LinearSchedule schedule_;
  NetworkPolicy online_;
  MlpNet target_;
  AdamOptimizer adam_;
  ReplayBuffer buffer_;
  std::int64_t observed_ = 0, updates_ = 0, syncs_ = 0;
};

class DdpgLearner : public Learner {
 public:
  DdpgLearner(DdpgConfig cfg, ActionSpace space, const ObservationBounds& bounds, std::int64_t total_steps,
              Rng& init_rng);

  std::string name() const override { return "ddpg"; }
  Action select_action(const State& s, std::int64_t step, Rng& rng) override;
  void observe(const ObservedTransition& tr, Rng& rng) override;
  Policy snapshot_policy() const override;

  const MlpNet& actor() const { return actor_.net; }
  const MlpNet& critic() const { return critic_[0]; }
  const MlpNet& target_actor() const { return actor_target_; }
  std::int64_t updates() const { return updates_; }
  // Overrides the exploration noise schedule (fraction of half-width).
  void set_noise(LinearSchedule s) { noise_ = s; }

 private:
  void train_step(Rng& rng);
  MlpNet::Matrix critic_input(const MlpNet::Matrix& s_norm, const MlpNet::Matrix& a_unit) const;

  DdpgConfig cfg_;
  ActionSpace space_;
  LinearSchedule noise_;
  NetworkPolicy actor_;
  MlpNet actor_target_;
  std::vector<MlpNet> critic_, critic_target_;
  AdamOptimizer actor_adam_;
  std::vector<AdamOptimizer> critic_adam_;
  ReplayBuffer buffer_;
  std::int64_t updates_ = 0;
};

// Builds the learner named by `cfg` for `env`. Network weights are drawn
// from `init_rng`; schedules without an explicit length use total_steps / 2.
std::unique_ptr<Learner> make_learner(const LearnerConfig& cfg, const Environment& env,
                                      std::int64_t total_steps, Rng& init_rng);

// Seeded random target of the same representation the learner produces:
// a random table for tabular learners, random weights otherwise.
Policy random_policy(const LearnerConfig& cfg, const Environment& env, Rng& rng);

}  // namespace rplab
