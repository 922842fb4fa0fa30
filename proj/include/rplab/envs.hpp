#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "rplab/core.hpp"
#include "rplab/tabular.hpp"

namespace rplab {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

struct GridWorldSpec {
  int width = 5;
  int height = 5;
  Cell start{0, 0};
  Cell goal{4, 4};
  double step_reward = -1.0;
  double goal_reward = 10.0;
  double slip_prob = 0.0;  // chance the action is replaced by a uniform one
  int horizon = 50;
  void validate() const;
};

// Grid navigation with 4 moves. Entering the goal pays `goal_reward` and
// ends the episode; every other move pays `step_reward`. Moves into a wall
// leave the agent in place. States are cell indices y * width + x.
class GridWorld : public Environment {
 public:
  enum Move { up = 0, right = 1, down = 2, left = 3 };

  explicit GridWorld(GridWorldSpec spec);

  std::string name() const override { return "gridworld"; }
  const ActionSpace& action_space() const override { return space_; }
  std::size_t state_dim() const override { return 1; }
  int horizon() const override { return spec_.horizon; }
  ObservationBounds observation_bounds() const override;
  std::unique_ptr<Environment> clone() const override;

  bool enumerable() const override { return true; }
  int num_states() const override { return spec_.width * spec_.height; }
  std::vector<State> enumerate_states() const override;
  TabularMdp tabular() const override;

  const GridWorldSpec& spec() const { return spec_; }
  int index_of(Cell c) const { return c.y * spec_.width + c.x; }
  Cell cell_of(int index) const { return {index % spec_.width, index / spec_.width}; }
  Cell moved(Cell c, int move) const;

 protected:
  State sample_initial(Rng& rng) override;
  Outcome advance(const State& s, const Action& a, Rng& rng) override;

 private:
  GridWorldSpec spec_;
  ActionSpace space_;
};

struct MountainCarSpec {
  double min_position = -1.2;
  double max_position = 0.6;
  double max_speed = 0.07;
  double goal_position = 0.5;
  double force = 0.001;
  double gravity = 0.0025;
  double step_reward = -1.0;
  int horizon = 200;
  void validate() const;
};

// Classic under-powered car; actions push left, coast, push right.
// State is (position, velocity).
class MountainCar : public Environment {
 public:
  explicit MountainCar(MountainCarSpec spec = {});

  std::string name() const override { return "mountaincar"; }
  const ActionSpace& action_space() const override { return space_; }
  std::size_t state_dim() const override { return 2; }
  int horizon() const override { return spec_.horizon; }
  ObservationBounds observation_bounds() const override;
  std::unique_ptr<Environment> clone() const override;

  // One application of the dynamics; exposed for regression tests.
  static std::array<double, 2> dynamics(const MountainCarSpec& spec, double position,
                                        double velocity, int action);

 protected:
  State sample_initial(Rng& rng) override;
  Outcome advance(const State& s, const Action& a, Rng& rng) override;

 private:
  MountainCarSpec spec_;
  ActionSpace space_;
};

struct CartPoleSpec {
  double gravity = 9.8;
  double mass_cart = 1.0;
  double mass_pole = 0.1;
  double half_length = 0.5;
  double force = 10.0;
  double tau = 0.02;
  double theta_limit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  double x_limit = 2.4;
  int horizon = 500;
  void validate() const;
};

// Pole balancing with Euler integration; +1 per step until the pole falls
// or the cart leaves the track. State is (x, x_dot, theta, theta_dot).
class CartPole : public Environment {
 public:
  explicit CartPole(CartPoleSpec spec = {});

  std::string name() const override { return "cartpole"; }
  const ActionSpace& action_space() const override { return space_; }
  std::size_t state_dim() const override { return 4; }
  int horizon() const override { return spec_.horizon; }
  ObservationBounds observation_bounds() const override;
  std::unique_ptr<Environment> clone() const override;

 protected:
  State sample_initial(Rng& rng) override;
  Outcome advance(const State& s, const Action& a, Rng& rng) override;

 private:
  CartPoleSpec spec_;
  ActionSpace space_;
};

struct PointMassSpec {
  double target_x = 0.5;
  double target_y = 0.5;
  double dt = 0.1;
  double max_speed = 1.0;
  double action_penalty = 0.01;
  int horizon = 200;
  void validate() const;
};

// 2-D point mass in the box [-1, 1]^2 driven by a force in [-1, 1]^2.
// R(s, a) = -|p - target| - action_penalty * |a|^2. Hitting a wall stops
// the velocity component normal to it. State is (px, py, vx, vy).
class PointMass : public Environment {
 public:
  explicit PointMass(PointMassSpec spec = {});

  std::string name() const override { return "pointmass"; }
  const ActionSpace& action_space() const override { return space_; }
  std::size_t state_dim() const override { return 4; }
  int horizon() const override { return spec_.horizon; }
  ObservationBounds observation_bounds() const override;
  std::unique_ptr<Environment> clone() const override;

  // Width of the interval spanned by R over all states and actions.
  double reward_range() const;
  // The next reset() starts from `s` instead of sampling.
  void set_next_start(State s) { next_start_ = std::move(s); }
  static double reward(const PointMassSpec& spec, const State& s, const Action& a);

 protected:
  State sample_initial(Rng& rng) override;
  Outcome advance(const State& s, const Action& a, Rng& rng) override;

 private:
  PointMassSpec spec_;
  ActionSpace space_;
  std::optional<State> next_start_;
};

using EnvConfig = std::variant<GridWorldSpec, MountainCarSpec, CartPoleSpec, PointMassSpec, TabularMdp>;

std::unique_ptr<Environment> make_environment(const EnvConfig& config);
std::string environment_name(const EnvConfig& config);

}  // namespace rplab
