#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rplab/attacks.hpp"
#include "rplab/core.hpp"
#include "rplab/learners.hpp"
#include "rplab/metrics.hpp"
#include "rplab/policy.hpp"

namespace rplab {

struct TrainingResult {
  std::vector<TransitionRecord> log;
  EfficiencyReport report;
};

// Raised when the attack produces a non-finite perturbation. Carries the
// records completed before the failing step.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, std::int64_t step, std::vector<TransitionRecord> partial)
      : std::runtime_error(what), step_(step), partial_(std::move(partial)) {}
  std::int64_t step() const { return step_; }
  const std::vector<TransitionRecord>& partial() const { return partial_; }

 private:
  std::int64_t step_;
  std::vector<TransitionRecord> partial_;
};

struct TrainingOptions {
  std::int64_t epoch_len = 4000;
  // Snapshot the learner's policy every this many steps (0 disables).
  std::int64_t snapshot_every = 0;
};

// Runs T interaction steps. Per step the learner acts, the environment
// moves, the attack sees (s, a, r, s') and the learner is shown r + delta.
// Environment and learner draw from independent substreams of `seed`.
TrainingResult run_training(Environment& env, Learner& learner, Attack& attack, const Policy& target,
                            std::int64_t T, std::uint64_t seed, const TrainingOptions& options = {},
                            std::vector<Policy>* snapshots = nullptr);

// Stream ids used to split the run seed.
inline constexpr std::uint64_t kEnvStream = 1;
inline constexpr std::uint64_t kLearnerStream = 2;
inline constexpr std::uint64_t kInitStream = 3;

}  // namespace rplab
