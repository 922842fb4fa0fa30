#include "rplab/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rplab/tabular.hpp"

namespace rplab {

Action Action::discrete(int index) {
  Action a;
  a.discrete_ = true;
  a.index_ = index;
  return a;
}

Action Action::continuous(std::vector<double> values) {
  Action a;
  a.discrete_ = false;
  a.index_ = -1;
  a.values_ = std::move(values);
  return a;
}

int Action::index() const {
  if (!discrete_) throw DomainError("continuous action has no index");
  return index_;
}

const std::vector<double>& Action::values() const {
  if (discrete_) throw DomainError("discrete action has no value vector");
  return values_;
}

ActionSpace ActionSpace::discrete(int count) {
  if (count < 2) throw ConfigError("discrete action space needs at least 2 actions");
  ActionSpace s;
  s.discrete_ = true;
  s.count_ = count;
  return s;
}

ActionSpace ActionSpace::box(std::vector<double> lower, std::vector<double> upper) {
  if (lower.empty() || lower.size() != upper.size())
    throw ConfigError("box bounds must be non-empty and of equal dimension");
  double sq = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i]))
      throw ConfigError("box bounds require lower < upper in every dimension");
    sq += (upper[i] - lower[i]) * (upper[i] - lower[i]);
  }
  ActionSpace s;
  s.discrete_ = false;
  s.count_ = 0;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  s.diameter_ = std::sqrt(sq);
  return s;
}

int ActionSpace::count() const {
  if (!discrete_) throw UnsupportedOperation("continuous action space has no count");
  return count_;
}

bool ActionSpace::contains(const Action& a) const {
  if (a.is_discrete() != discrete_) return false;
  if (discrete_) return a.index() >= 0 && a.index() < count_;
  const auto& v = a.values();
  if (v.size() != lower_.size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= lower_[i] && v[i] <= upper_[i])) return false;
  }
  return true;
}

void ActionSpace::require_contains(const Action& a) const {
  if (contains(a)) return;
  std::ostringstream msg;
  if (a.is_discrete() != discrete_) {
    msg << "action kind does not match the action space";
  } else if (discrete_) {
    msg << "discrete action " << a.index() << " outside [0, " << count_ << ")";
  } else if (a.values().size() != lower_.size()) {
    msg << "action dimension " << a.values().size() << " != space dimension " << lower_.size();
  } else {
    msg << "continuous action outside the box";
  }
  throw DomainError(msg.str());
}

Action ActionSpace::clip(const Action& a) const {
  if (discrete_) {
    require_contains(a);
    return a;
  }
  if (a.is_discrete() || a.values().size() != lower_.size())
    throw DomainError("cannot clip: action does not match the box dimension");
  std::vector<double> v = a.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw DomainError("cannot clip a non-finite action");
    v[i] = std::clamp(v[i], lower_[i], upper_[i]);
  }
  return Action::continuous(std::move(v));
}

State Environment::reset(Rng& rng) {
  state_ = sample_initial(rng);
  steps_ = 0;
  finished_ = false;
  return state_;
}

StepResult Environment::step(const Action& a, Rng& rng) {
  if (finished_) throw DomainError(name() + ": step called on a terminated episode");
  action_space().require_contains(a);
  Outcome out = advance(state_, a, rng);
  ++steps_;
  state_ = out.next;
  finished_ = out.terminal || steps_ >= horizon();
  return StepResult{std::move(out.next), out.reward, finished_};
}

int Environment::num_states() const {
  throw UnsupportedOperation(name() + " is not enumerable");
}

std::vector<State> Environment::enumerate_states() const {
  throw UnsupportedOperation(name() + " is not enumerable");
}

TabularMdp Environment::tabular() const {
  throw UnsupportedOperation(name() + " has no tabular form");
}

}  // namespace rplab
