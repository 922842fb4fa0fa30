#include "rplab/envs.hpp"

#include <algorithm>
#include <cmath>

namespace rplab {

// ---------------------------------------------------------------- GridWorld

void GridWorldSpec::validate() const {
  auto inside = [&](Cell c) { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; };
  if (width <= 0 || height <= 0) throw ConfigError("gridworld: width and height must be positive");
  if (!inside(start) || !inside(goal)) throw ConfigError("gridworld: start and goal must lie inside the grid");
  if (start == goal) throw ConfigError("gridworld: start must differ from goal");
  if (!(slip_prob >= 0.0 && slip_prob < 1.0)) throw ConfigError("gridworld: slip_prob must be in [0, 1)");
  if (horizon <= 0) throw ConfigError("gridworld: horizon must be positive");
  if (!std::isfinite(step_reward) || !std::isfinite(goal_reward))
    throw ConfigError("gridworld: rewards must be finite");
}

GridWorld::GridWorld(GridWorldSpec spec) : spec_(spec), space_(ActionSpace::discrete(4)) {
  spec_.validate();
}

ObservationBounds GridWorld::observation_bounds() const {
  return {{0.0}, {static_cast<double>(num_states() - 1)}};
}

std::unique_ptr<Environment> GridWorld::clone() const { return std::make_unique<GridWorld>(spec_); }

std::vector<State> GridWorld::enumerate_states() const {
  std::vector<State> out;
  out.reserve(static_cast<std::size_t>(num_states()));
  for (int i = 0; i < num_states(); ++i) out.push_back({static_cast<double>(i)});
  return out;
}

Cell GridWorld::moved(Cell c, int move) const {
  Cell n = c;
  switch (move) {
    case up: ++n.y; break;
    case right: ++n.x; break;
    case down: --n.y; break;
    case left: --n.x; break;
    default: throw DomainError("gridworld: unknown move");
  }
  if (n.x < 0 || n.y < 0 || n.x >= spec_.width || n.y >= spec_.height) return c;
  return n;
}

State GridWorld::sample_initial(Rng&) { return {static_cast<double>(index_of(spec_.start))}; }

Environment::Outcome GridWorld::advance(const State& s, const Action& a, Rng& rng) {
  int move = a.index();
  if (spec_.slip_prob > 0.0 && rng.uniform() < spec_.slip_prob) move = rng.uniform_int(4);
  const Cell next = moved(cell_of(static_cast<int>(std::lround(s[0]))), move);
  const bool at_goal = next == spec_.goal;
  return {{static_cast<double>(index_of(next))}, at_goal ? spec_.goal_reward : spec_.step_reward, at_goal};
}

TabularMdp GridWorld::tabular() const {
  const int n = num_states();
  TabularMdp m = TabularMdp::discrete(n, 4, spec_.horizon);
  const int goal = index_of(spec_.goal);
  m.initial[static_cast<std::size_t>(index_of(spec_.start))] = 1.0;
  m.terminal[static_cast<std::size_t>(goal)] = true;
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < 4; ++a) {
      // Outcome distribution: intended move, or a uniform replacement move.
      std::vector<double> mass(static_cast<std::size_t>(n), 0.0);
      mass[static_cast<std::size_t>(index_of(moved(cell_of(s), a)))] += 1.0 - spec_.slip_prob;
      for (int b = 0; b < 4; ++b)
        mass[static_cast<std::size_t>(index_of(moved(cell_of(s), b)))] += spec_.slip_prob / 4.0;
      double reward = 0.0;
      auto& row = m.transitions[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
      for (int t = 0; t < n; ++t) {
        const double p = mass[static_cast<std::size_t>(t)];
        if (p <= 0.0) continue;
        row.push_back({t, p});
        reward += p * (t == goal ? spec_.goal_reward : spec_.step_reward);
      }
      m.rewards[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] =
          s == goal ? 0.0 : reward;
    }
  }
  return m;
}

// -------------------------------------------------------------- MountainCar

void MountainCarSpec::validate() const {
  if (!(min_position < goal_position && goal_position <= max_position))
    throw ConfigError("mountaincar: need min_position < goal_position <= max_position");
  if (!(max_speed > 0.0)) throw ConfigError("mountaincar: max_speed must be positive");
  if (horizon <= 0) throw ConfigError("mountaincar: horizon must be positive");
}

MountainCar::MountainCar(MountainCarSpec spec) : spec_(spec), space_(ActionSpace::discrete(3)) {
  spec_.validate();
}

ObservationBounds MountainCar::observation_bounds() const {
  return {{spec_.min_position, -spec_.max_speed}, {spec_.max_position, spec_.max_speed}};
}

std::unique_ptr<Environment> MountainCar::clone() const { return std::make_unique<MountainCar>(spec_); }

std::array<double, 2> MountainCar::dynamics(const MountainCarSpec& spec, double position,
                                            double velocity, int action) {
  velocity += (action - 1) * spec.force - std::cos(3.0 * position) * spec.gravity;
  velocity = std::clamp(velocity, -spec.max_speed, spec.max_speed);
  position += velocity;
  position = std::clamp(position, spec.min_position, spec.max_position);
  if (position == spec.min_position && velocity < 0.0) velocity = 0.0;
  return {position, velocity};
}

State MountainCar::sample_initial(Rng& rng) { return {rng.uniform(-0.6, -0.4), 0.0}; }

Environment::Outcome MountainCar::advance(const State& s, const Action& a, Rng&) {
  const auto [p, v] = dynamics(spec_, s[0], s[1], a.index());
  return {{p, v}, spec_.step_reward, p >= spec_.goal_position};
}

// ----------------------------------------------------------------- CartPole

void CartPoleSpec::validate() const {
  if (!(mass_cart > 0.0 && mass_pole > 0.0 && half_length > 0.0 && tau > 0.0))
    throw ConfigError("cartpole: masses, length and tau must be positive");
  if (horizon <= 0) throw ConfigError("cartpole: horizon must be positive");
}

CartPole::CartPole(CartPoleSpec spec) : spec_(spec), space_(ActionSpace::discrete(2)) {
  spec_.validate();
}

ObservationBounds CartPole::observation_bounds() const {
  return {{-spec_.x_limit, -3.0, -spec_.theta_limit, -3.5},
          {spec_.x_limit, 3.0, spec_.theta_limit, 3.5}};
}

std::unique_ptr<Environment> CartPole::clone() const { return std::make_unique<CartPole>(spec_); }

State CartPole::sample_initial(Rng& rng) {
  State s(4);
  for (auto& x : s) x = rng.uniform(-0.05, 0.05);
  return s;
}

Environment::Outcome CartPole::advance(const State& s, const Action& a, Rng&) {
  double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
  const double total_mass = spec_.mass_cart + spec_.mass_pole;
  const double pole_ml = spec_.mass_pole * spec_.half_length;
  const double force = a.index() == 1 ? spec_.force : -spec_.force;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double temp = (force + pole_ml * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (spec_.gravity * sin_t - cos_t * temp) /
      (spec_.half_length * (4.0 / 3.0 - spec_.mass_pole * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_ml * theta_acc * cos_t / total_mass;
  x += spec_.tau * x_dot;
  x_dot += spec_.tau * x_acc;
  theta += spec_.tau * theta_dot;
  theta_dot += spec_.tau * theta_acc;
  const bool fallen = x < -spec_.x_limit || x > spec_.x_limit || theta < -spec_.theta_limit ||
                      theta > spec_.theta_limit;
  return {{x, x_dot, theta, theta_dot}, 1.0, fallen};
}

// ---------------------------------------------------------------- PointMass

void PointMassSpec::validate() const {
  if (std::abs(target_x) > 1.0 || std::abs(target_y) > 1.0)
    throw ConfigError("pointmass: target must lie inside [-1, 1]^2");
  if (!(dt > 0.0 && max_speed > 0.0 && action_penalty >= 0.0))
    throw ConfigError("pointmass: dt and max_speed must be positive, action_penalty nonnegative");
  if (horizon <= 0) throw ConfigError("pointmass: horizon must be positive");
}

PointMass::PointMass(PointMassSpec spec)
    : spec_(spec), space_(ActionSpace::box({-1.0, -1.0}, {1.0, 1.0})) {
  spec_.validate();
}

ObservationBounds PointMass::observation_bounds() const {
  return {{-1.0, -1.0, -spec_.max_speed, -spec_.max_speed},
          {1.0, 1.0, spec_.max_speed, spec_.max_speed}};
}

std::unique_ptr<Environment> PointMass::clone() const { return std::make_unique<PointMass>(spec_); }

double PointMass::reward_range() const {
  // farthest wall corner from the target plus the largest action penalty
  const double dx = 1.0 + std::abs(spec_.target_x);
  const double dy = 1.0 + std::abs(spec_.target_y);
  return std::hypot(dx, dy) + 2.0 * spec_.action_penalty;
}

double PointMass::reward(const PointMassSpec& spec, const State& s, const Action& a) {
  const auto& f = a.values();
  const double dist = std::hypot(s[0] - spec.target_x, s[1] - spec.target_y);
  return -dist - spec.action_penalty * (f[0] * f[0] + f[1] * f[1]);
}

State PointMass::sample_initial(Rng& rng) {
  if (next_start_) {
    State s = std::move(*next_start_);
    next_start_.reset();
    return s;
  }
  return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0, 0.0};
}

Environment::Outcome PointMass::advance(const State& s, const Action& a, Rng&) {
  const auto& f = a.values();
  State n = s;
  for (int i = 0; i < 2; ++i) {
    const auto p = static_cast<std::size_t>(i), v = static_cast<std::size_t>(i + 2);
    n[v] = std::clamp(s[v] + spec_.dt * f[p], -spec_.max_speed, spec_.max_speed);
    n[p] = s[p] + spec_.dt * n[v];
    if (n[p] > 1.0 || n[p] < -1.0) {
      n[p] = std::clamp(n[p], -1.0, 1.0);
      n[v] = 0.0;
    }
  }
  return {std::move(n), reward(spec_, s, a), false};
}

// ------------------------------------------------------------------ factory

std::unique_ptr<Environment> make_environment(const EnvConfig& config) {
  return std::visit(
      [](const auto& spec) -> std::unique_ptr<Environment> {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, GridWorldSpec>) return std::make_unique<GridWorld>(spec);
        else if constexpr (std::is_same_v<T, MountainCarSpec>) return std::make_unique<MountainCar>(spec);
        else if constexpr (std::is_same_v<T, CartPoleSpec>) return std::make_unique<CartPole>(spec);
        else if constexpr (std::is_same_v<T, PointMassSpec>) return std::make_unique<PointMass>(spec);
        else return std::make_unique<TabularEnv>(spec);
      },
      config);
}

std::string environment_name(const EnvConfig& config) {
  static const char* names[] = {"gridworld", "mountaincar", "cartpole", "pointmass", "tabular"};
  return names[config.index()];
}

}  // namespace rplab
