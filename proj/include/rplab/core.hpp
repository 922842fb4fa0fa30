#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rplab/errors.hpp"
#include "rplab/random.hpp"

namespace rplab {

struct TabularMdp;

// Flattened environment state. Enumerable environments use a single
// element holding the state index.
using State = std::vector<double>;

class Action {
 public:
  Action() = default;
  static Action discrete(int index);
  static Action continuous(std::vector<double> values);

  bool is_discrete() const { return discrete_; }
  int index() const;
  const std::vector<double>& values() const;

  bool operator==(const Action&) const = default;

 private:
  bool discrete_ = true;
  int index_ = 0;
  std::vector<double> values_;
};

class ActionSpace {
 public:
  ActionSpace() = default;
  static ActionSpace discrete(int count);
  static ActionSpace box(std::vector<double> lower, std::vector<double> upper);

  bool is_discrete() const { return discrete_; }
  int count() const;
  std::size_t dimension() const { return discrete_ ? 1 : lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  // Largest L2 distance between two actions in the box (the corner pair).
  double diameter() const { return diameter_; }

  bool contains(const Action& a) const;
  // Throws DomainError when `a` has the wrong kind, size, or lies outside.
  void require_contains(const Action& a) const;
  // Projects a continuous action onto the box; discrete actions must
  // already be valid.
  Action clip(const Action& a) const;

  bool operator==(const ActionSpace&) const = default;

 private:
  bool discrete_ = true;
  int count_ = 2;
  std::vector<double> lower_;
  std::vector<double> upper_;
  double diameter_ = 0.0;
};

// One interaction step as recorded by the training loop.
// `r_observed == r_true + delta` holds exactly for every record.
struct TransitionRecord {
  std::int64_t t = 0;
  std::int64_t episode = 0;
  State s;
  Action a;
  double r_true = 0.0;
  double delta = 0.0;
  double r_observed = 0.0;
  State s_next;
  bool done = false;
  double distance = 0.0;  // d(a, target(s)) measured online
};

// What the learner is allowed to see: the poisoned reward only.
struct ObservedTransition {
  State s;
  Action a;
  double reward = 0.0;
  State s_next;
  bool done = false;
};

struct StepResult {
  State s_next;
  double r_true = 0.0;
  bool done = false;
};

// Per-dimension range used to normalise network inputs.
struct ObservationBounds {
  std::vector<double> low;
  std::vector<double> high;
};

// Episodic environment: the MDP (S, A, P, R, mu0) plus a horizon cap.
// Instances hold the current episode state and are confined to one run.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual const ActionSpace& action_space() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual int horizon() const = 0;
  virtual ObservationBounds observation_bounds() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

  // Starts a new episode from the initial distribution.
  State reset(Rng& rng);

  // Advances one step. `done` is set when the terminal predicate holds or
  // the horizon is reached; stepping afterwards is a DomainError.
  StepResult step(const Action& a, Rng& rng);

  const State& state() const { return state_; }
  int steps_taken() const { return steps_; }
  bool finished() const { return finished_; }

  // Enumerable environments only.
  virtual bool enumerable() const { return false; }
  virtual int num_states() const;
  virtual std::vector<State> enumerate_states() const;
  virtual TabularMdp tabular() const;

 protected:
  struct Outcome {
    State next;
    double reward = 0.0;
    bool terminal = false;
  };
  virtual State sample_initial(Rng& rng) = 0;
  virtual Outcome advance(const State& s, const Action& a, Rng& rng) = 0;

 private:
  State state_;
  int steps_ = 0;
  bool finished_ = true;
};

}  // namespace rplab
