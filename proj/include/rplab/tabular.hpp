#pragma once

#include <vector>

#include "rplab/core.hpp"

namespace rplab {

struct Successor {
  int state = 0;
  double prob = 0.0;
};

// Enumerable finite-horizon MDP. States are indices; terminal states are
// absorbing with zero reward and end the episode on entry. `rewards` holds
// the expected immediate reward R(s, a).
//
// Action indices map to concrete actions through `actions`, which lets a
// finite action set be embedded in a continuous box for distance purposes.
struct TabularMdp {
  int num_states = 0;
  ActionSpace space;
  std::vector<Action> actions;
  std::vector<std::vector<std::vector<Successor>>> transitions;  // [s][a]
  std::vector<std::vector<double>> rewards;                      // [s][a]
  std::vector<double> initial;
  std::vector<bool> terminal;
  int horizon = 1;

  int num_actions() const { return static_cast<int>(actions.size()); }
  // Throws ConfigError on malformed tables or distributions.
  void validate() const;

  // Plain discrete MDP with actions 0..num_actions-1.
  static TabularMdp discrete(int num_states, int num_actions, int horizon);
};

// Samples episodes from a discrete TabularMdp. The state is {index}.
class TabularEnv : public Environment {
 public:
  explicit TabularEnv(TabularMdp mdp);

  std::string name() const override { return "tabular"; }
  const ActionSpace& action_space() const override { return mdp_.space; }
  std::size_t state_dim() const override { return 1; }
  int horizon() const override { return mdp_.horizon; }
  ObservationBounds observation_bounds() const override;
  std::unique_ptr<Environment> clone() const override;

  bool enumerable() const override { return true; }
  int num_states() const override { return mdp_.num_states; }
  std::vector<State> enumerate_states() const override;
  TabularMdp tabular() const override { return mdp_; }

 protected:
  State sample_initial(Rng& rng) override;
  Outcome advance(const State& s, const Action& a, Rng& rng) override;

 private:
  TabularMdp mdp_;
};

}  // namespace rplab
