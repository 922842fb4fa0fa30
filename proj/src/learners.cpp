#include "rplab/learners.hpp"

#include <algorithm>
#include <cmath>

namespace rplab {

namespace {

std::int64_t half_or(std::optional<std::int64_t> v, std::int64_t total_steps) {
  return std::max<std::int64_t>(1, v.value_or(total_steps / 2));
}

int state_index(const State& s) {
  if (s.size() != 1) throw DomainError("tabular learner expects an indexed state");
  return static_cast<int>(std::lround(s[0]));
}

MlpNet::Matrix normalised_batch(const NetworkPolicy& p, const MlpNet::Matrix& states) {
  MlpNet::Matrix x = states;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    x.row(i) = (x.row(i).array() - p.input_offset[k]) * p.input_scale[k];
  }
  return x;
}

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

double LinearSchedule::at(std::int64_t step) const {
  if (step >= decay_steps) return end;
  const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

std::string learner_name(const LearnerConfig& cfg) {
  static const char* names[] = {"tabular", "dqn", "ddpg"};
  return names[cfg.index()];
}

// ------------------------------------------------------------ ReplayBuffer

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
  s_.resize(capacity * state_dim);
  s_next_.resize(capacity * state_dim);
  a_.resize(capacity * action_dim);
  r_.resize(capacity);
  done_.resize(capacity);
}

void ReplayBuffer::push(const ObservedTransition& tr) {
  if (tr.s.size() != state_dim_ || tr.s_next.size() != state_dim_)
    throw DomainError("replay buffer: state dimension mismatch");
  std::copy(tr.s.begin(), tr.s.end(), s_.begin() + static_cast<std::ptrdiff_t>(head_ * state_dim_));
  std::copy(tr.s_next.begin(), tr.s_next.end(), s_next_.begin() + static_cast<std::ptrdiff_t>(head_ * state_dim_));
  if (tr.a.is_discrete()) {
    a_[head_ * action_dim_] = tr.a.index();
  } else {
    const auto& v = tr.a.values();
    if (v.size() != action_dim_) throw DomainError("replay buffer: action dimension mismatch");
    std::copy(v.begin(), v.end(), a_.begin() + static_cast<std::ptrdiff_t>(head_ * action_dim_));
  }
  r_[head_] = tr.reward;
  done_[head_] = tr.done ? 1.0 : 0.0;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

ReplayBuffer::Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (size_ == 0) throw std::logic_error("sampling an empty replay buffer");
  const auto sd = static_cast<Eigen::Index>(state_dim_);
  const auto ad = static_cast<Eigen::Index>(action_dim_);
  const auto cols = static_cast<Eigen::Index>(n);
  Batch b{MlpNet::Matrix(sd, cols), MlpNet::Matrix(ad, cols), Eigen::VectorXd(cols), MlpNet::Matrix(sd, cols),
          Eigen::VectorXd(cols)};
  for (Eigen::Index c = 0; c < cols; ++c) {
    const auto i = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(size_)));
    for (Eigen::Index k = 0; k < sd; ++k) {
      b.s(k, c) = s_[i * state_dim_ + static_cast<std::size_t>(k)];
      b.s_next(k, c) = s_next_[i * state_dim_ + static_cast<std::size_t>(k)];
    }
    for (Eigen::Index k = 0; k < ad; ++k) b.a(k, c) = a_[i * action_dim_ + static_cast<std::size_t>(k)];
    b.r(c) = r_[i];
    b.done(c) = done_[i];
  }
  return b;
}

// -------------------------------------------------------------- Tabular Q

TabularQLearner::TabularQLearner(TabularQConfig cfg, int num_states, int num_actions,
                                 std::int64_t total_steps)
    : cfg_(cfg),
      num_states_(num_states),
      num_actions_(num_actions),
      schedule_{cfg.epsilon_start, cfg.epsilon_end, half_or(cfg.epsilon_decay_steps, total_steps)},
      q_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions), 0.0) {
  if (num_states <= 0 || num_actions < 2) throw ConfigError("tabular learner: bad table shape");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("tabular learner: alpha must be in [0, 1]");
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ConfigError("tabular learner: gamma must be in [0, 1]");
}

int TabularQLearner::greedy(int s) const {
  return argmax_lowest(std::span<const double>(q_.data() + index(s, 0), static_cast<std::size_t>(num_actions_)));
}

Action TabularQLearner::select_action(const State& s, std::int64_t step, Rng& rng) {
  if (rng.uniform() < schedule_.at(step)) return Action::discrete(rng.uniform_int(num_actions_));
  return Action::discrete(greedy(state_index(s)));
}

void TabularQLearner::observe(const ObservedTransition& tr, Rng&) {
  const int s = state_index(tr.s);
  const int a = tr.a.index();
  double target = tr.reward;
  if (!tr.done) {
    const int s2 = state_index(tr.s_next);
    target += cfg_.gamma * q_[index(s2, greedy(s2))];
  }
  double& q = q_[index(s, a)];
  q += cfg_.alpha * (target - q);
}

Policy TabularQLearner::snapshot_policy() const {
  std::vector<int> table(static_cast<std::size_t>(num_states_));
  for (int s = 0; s < num_states_; ++s) table[static_cast<std::size_t>(s)] = greedy(s);
  return Policy::tabular(ActionSpace::discrete(num_actions_), std::move(table));
}

// -------------------------------------------------------------------- DQN

DqnLearner::DqnLearner(DqnConfig cfg, int num_actions, const ObservationBounds& bounds,
                       std::int64_t total_steps, Rng& init_rng)
    : cfg_(std::move(cfg)),
      num_actions_(num_actions),
      schedule_{cfg_.epsilon_start, cfg_.epsilon_end, half_or(cfg_.epsilon_decay_steps, total_steps)},
      online_(make_network_policy(
          MlpNet(layer_sizes(static_cast<int>(bounds.low.size()), cfg_.hidden, num_actions),
                 cfg_.dueling ? OutputHead::dueling : OutputHead::linear, init_rng),
          bounds)),
      target_(online_.net),
      adam_(online_.net, cfg_.learning_rate),
      buffer_(cfg_.buffer_capacity, bounds.low.size(), 1) {
  if (cfg_.batch_size == 0 || cfg_.sync_every <= 0) throw ConfigError("dqn: batch_size and sync_every must be positive");
}

Action DqnLearner::select_action(const State& s, std::int64_t step, Rng& rng) {
  if (rng.uniform() < schedule_.at(step)) return Action::discrete(rng.uniform_int(num_actions_));
  return Action::discrete(argmax_lowest(online_.net.predict(normalise(online_, s))));
}

void DqnLearner::observe(const ObservedTransition& tr, Rng& rng) {
  buffer_.push(tr);
  ++observed_;
  if (observed_ < cfg_.warmup) return;
  train_step(rng);
  if (observed_ % cfg_.sync_every == 0) {
    target_ = online_.net;
    ++syncs_;
  }
}

void DqnLearner::train_step(Rng& rng) {
  const auto batch = buffer_.sample(cfg_.batch_size, rng);
  const auto n = static_cast<Eigen::Index>(cfg_.batch_size);
  const MlpNet::Matrix x = normalised_batch(online_, batch.s);
  const MlpNet::Matrix x_next = normalised_batch(online_, batch.s_next);

  const MlpNet::Matrix q_next_target = target_.predict(x_next);
  Eigen::VectorXd y(n);
  if (cfg_.double_q) {
    const MlpNet::Matrix q_next_online = online_.net.predict(x_next);
    for (Eigen::Index c = 0; c < n; ++c) {
      Eigen::Index best;
      q_next_online.col(c).maxCoeff(&best);
      y(c) = q_next_target(best, c);
    }
  } else {
    y = q_next_target.colwise().maxCoeff().transpose();
  }
  y = batch.r.array() + cfg_.gamma * (1.0 - batch.done.array()) * y.array();

  online_.net.zero_grad();
  const MlpNet::Matrix& q = online_.net.forward(x);
  MlpNet::Matrix grad = MlpNet::Matrix::Zero(q.rows(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto a = static_cast<Eigen::Index>(batch.a(0, c));
    double err = q(a, c) - y(c);
    if (!std::isfinite(err)) throw NumericError("dqn: non-finite TD error");
    if (cfg_.huber) err = std::clamp(err, -1.0, 1.0);
    grad(a, c) = 2.0 * err / static_cast<double>(n);
  }
  online_.net.backward(grad);
  adam_.step(online_.net);
  ++updates_;
}

Policy DqnLearner::snapshot_policy() const {
  return Policy::network(ActionSpace::discrete(num_actions_), online_);
}

// ------------------------------------------------------------------- DDPG

DdpgLearner::DdpgLearner(DdpgConfig cfg, ActionSpace space, const ObservationBounds& bounds,
                         std::int64_t total_steps, Rng& init_rng)
    : cfg_(std::move(cfg)),
      space_(std::move(space)),
      noise_{cfg_.noise_start, cfg_.noise_end, half_or(cfg_.noise_decay_steps, total_steps)},
      buffer_(cfg_.buffer_capacity, bounds.low.size(), space_.dimension()) {
  if (space_.is_discrete()) throw ConfigError("ddpg needs a continuous action space");
  if (cfg_.policy_delay < 1) throw ConfigError("ddpg: policy_delay must be >= 1");
  const int sd = static_cast<int>(bounds.low.size());
  const int ad = static_cast<int>(space_.dimension());
  actor_ = make_network_policy(MlpNet(layer_sizes(sd, cfg_.hidden, ad), OutputHead::tanh, init_rng), bounds);
  actor_target_ = actor_.net;
  const int critics = cfg_.twin_critics ? 2 : 1;
  for (int i = 0; i < critics; ++i) {
    critic_.emplace_back(layer_sizes(sd + ad, cfg_.hidden, 1), OutputHead::linear, init_rng);
    critic_target_.push_back(critic_.back());
    critic_adam_.emplace_back(critic_.back(), cfg_.critic_learning_rate);
  }
  actor_adam_ = AdamOptimizer(actor_.net, cfg_.actor_learning_rate);
}

Action DdpgLearner::select_action(const State& s, std::int64_t step, Rng& rng) {
  const std::vector<double> u = actor_.net.predict(normalise(actor_, s));
  const double scale = noise_.at(step);
  std::vector<double> a(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double lo = space_.lower()[i], hi = space_.upper()[i];
    const double half = 0.5 * (hi - lo);
    double v = lo + (u[i] + 1.0) * half;
    if (scale > 0.0) v += scale * half * rng.normal();
    a[i] = std::clamp(v, lo, hi);
  }
  return Action::continuous(std::move(a));
}

MlpNet::Matrix DdpgLearner::critic_input(const MlpNet::Matrix& s_norm, const MlpNet::Matrix& a_unit) const {
  MlpNet::Matrix in(s_norm.rows() + a_unit.rows(), s_norm.cols());
  in.topRows(s_norm.rows()) = s_norm;
  in.bottomRows(a_unit.rows()) = a_unit;
  return in;
}

void DdpgLearner::observe(const ObservedTransition& tr, Rng& rng) {
  buffer_.push(tr);
  if (static_cast<std::int64_t>(buffer_.size()) < cfg_.warmup && buffer_.size() < buffer_.capacity()) return;
  train_step(rng);
}

void DdpgLearner::train_step(Rng& rng) {
  const auto batch = buffer_.sample(cfg_.batch_size, rng);
  const auto n = static_cast<Eigen::Index>(cfg_.batch_size);
  const auto ad = static_cast<Eigen::Index>(space_.dimension());
  const MlpNet::Matrix x = normalised_batch(actor_, batch.s);
  const MlpNet::Matrix x_next = normalised_batch(actor_, batch.s_next);

  // stored actions in box units -> [-1, 1]
  MlpNet::Matrix a_unit(ad, n);
  for (Eigen::Index k = 0; k < ad; ++k) {
    const double lo = space_.lower()[static_cast<std::size_t>(k)], hi = space_.upper()[static_cast<std::size_t>(k)];
    a_unit.row(k) = (2.0 * (batch.a.row(k).array() - lo) / (hi - lo) - 1.0).matrix();
  }

  MlpNet::Matrix next_a = actor_target_.predict(x_next);
  if (cfg_.twin_critics) {
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index k = 0; k < ad; ++k) {
        const double eps = std::clamp(cfg_.target_noise * rng.normal(), -cfg_.target_noise_clip, cfg_.target_noise_clip);
        next_a(k, c) = std::clamp(next_a(k, c) + eps, -1.0, 1.0);
      }
  }
  const MlpNet::Matrix next_in = critic_input(x_next, next_a);
  Eigen::RowVectorXd q_next = critic_target_[0].predict(next_in).row(0);
  for (std::size_t i = 1; i < critic_target_.size(); ++i)
    q_next = q_next.cwiseMin(critic_target_[i].predict(next_in).row(0));
  const MlpNet::Matrix y =
      (batch.r.transpose().array() + cfg_.gamma * (1.0 - batch.done.transpose().array()) * q_next.array()).matrix();

  const MlpNet::Matrix in = critic_input(x, a_unit);
  for (std::size_t i = 0; i < critic_.size(); ++i) {
    critic_[i].mse_backprop(in, y);
    critic_adam_[i].step(critic_[i]);
  }
  ++updates_;

  if (updates_ % cfg_.policy_delay == 0) {
    // ascend Q(s, actor(s)): push dQ/da back through the actor
    actor_.net.zero_grad();
    const MlpNet::Matrix u = actor_.net.forward(x);
    critic_[0].zero_grad();
    critic_[0].forward(critic_input(x, u));
    const MlpNet::Matrix d_in =
        critic_[0].backward(MlpNet::Matrix::Constant(1, n, -1.0 / static_cast<double>(n)));
    critic_[0].zero_grad();
    actor_.net.backward(d_in.bottomRows(ad));
    actor_adam_.step(actor_.net);

    actor_target_.blend_from(actor_.net, cfg_.tau);
    for (std::size_t i = 0; i < critic_.size(); ++i) critic_target_[i].blend_from(critic_[i], cfg_.tau);
  }
}

Policy DdpgLearner::snapshot_policy() const { return Policy::network(space_, actor_); }

// ---------------------------------------------------------------- factory

std::unique_ptr<Learner> make_learner(const LearnerConfig& cfg, const Environment& env,
                                      std::int64_t total_steps, Rng& init_rng) {
  const ActionSpace& space = env.action_space();
  return std::visit(
      [&](const auto& c) -> std::unique_ptr<Learner> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, TabularQConfig>) {
          if (!env.enumerable() || !space.is_discrete())
            throw ConfigError("the tabular learner needs an enumerable environment with discrete actions");
          return std::make_unique<TabularQLearner>(c, env.num_states(), space.count(), total_steps);
        } else if constexpr (std::is_same_v<T, DqnConfig>) {
          if (!space.is_discrete()) throw ConfigError("dqn needs a discrete action space");
          return std::make_unique<DqnLearner>(c, space.count(), env.observation_bounds(), total_steps, init_rng);
        } else {
          if (space.is_discrete()) throw ConfigError("ddpg needs a continuous action space");
          return std::make_unique<DdpgLearner>(c, space, env.observation_bounds(), total_steps, init_rng);
        }
      },
      cfg);
}

Policy random_policy(const LearnerConfig& cfg, const Environment& env, Rng& rng) {
  const ActionSpace& space = env.action_space();
  if (std::holds_alternative<TabularQConfig>(cfg)) {
    std::vector<int> table(static_cast<std::size_t>(env.num_states()));
    for (auto& a : table) a = rng.uniform_int(space.count());
    return Policy::tabular(space, std::move(table));
  }
  const auto bounds = env.observation_bounds();
  const int sd = static_cast<int>(bounds.low.size());
  if (const auto* d = std::get_if<DqnConfig>(&cfg)) {
    MlpNet net(layer_sizes(sd, d->hidden, space.count()), OutputHead::linear, rng);
    return Policy::network(space, make_network_policy(std::move(net), bounds));
  }
  const auto& dd = std::get<DdpgConfig>(cfg);
  MlpNet net(layer_sizes(sd, dd.hidden, static_cast<int>(space.dimension())), OutputHead::tanh, rng);
  // the default init keeps tanh near 0; He-uniform scale spreads actions over the box
  for (auto& layer : net.mutable_layers()) {
    layer.weight *= std::sqrt(6.0);
    layer.bias *= std::sqrt(6.0);
  }
  return Policy::network(space, make_network_policy(std::move(net), bounds));
}

}  // namespace rplab
