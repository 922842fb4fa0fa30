#pragma once

#include <vector>

#include "rplab/core.hpp"
#include "rplab/mlp.hpp"

namespace rplab {

// Network-backed policy: inputs are normalised as (s - offset) * scale.
// Discrete spaces take the argmax output (lowest index on ties); boxes map
// tanh outputs affinely onto the bounds.
struct NetworkPolicy {
  MlpNet net;
  std::vector<double> input_offset;
  std::vector<double> input_scale;
  bool operator==(const NetworkPolicy&) const = default;
};

// Deterministic state -> action map. Every returned action lies inside the
// policy's action space.
class Policy {
 public:
  enum class Kind { tabular, network, constant };

  Policy() = default;
  // `table[i]` is the action for the enumerable state with index i.
  static Policy tabular(ActionSpace space, std::vector<int> table);
  static Policy network(ActionSpace space, NetworkPolicy net);
  static Policy constant(ActionSpace space, Action action);

  Action act(const State& s) const;

  Kind kind() const { return kind_; }
  const ActionSpace& action_space() const { return space_; }
  const std::vector<int>& table() const { return table_; }
  const NetworkPolicy& network() const { return net_; }
  const Action& constant_action() const { return constant_; }

  bool operator==(const Policy&) const = default;

 private:
  Kind kind_ = Kind::constant;
  ActionSpace space_ = ActionSpace::discrete(2);
  std::vector<int> table_;
  NetworkPolicy net_;
  Action constant_ = Action::discrete(0);
};

// Normalisation that maps the observation bounds onto [-1, 1].
NetworkPolicy make_network_policy(MlpNet net, const ObservationBounds& bounds);

// Normalised network input for state `s`.
std::vector<double> normalise(const NetworkPolicy& p, const State& s);

// Index of the largest element, lowest index on ties.
int argmax_lowest(std::span<const double> values);

}  // namespace rplab
