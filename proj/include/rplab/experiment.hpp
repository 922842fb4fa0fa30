#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rplab/attacks.hpp"
#include "rplab/envs.hpp"
#include "rplab/learners.hpp"
#include "rplab/metrics.hpp"
#include "rplab/policy.hpp"
#include "rplab/training.hpp"

namespace rplab {

enum class Tier { random, medium, expert };
std::string to_string(Tier tier);
Tier parse_tier(const std::string& name);

struct TargetPolicyTier {
  Tier tier = Tier::random;
  Policy policy;
  double value = 0.0;              // mean greedy evaluation return
  std::int64_t snapshot_step = -1;  // training steps behind the snapshot; -1 for random
};

struct SnapshotReturn {
  std::int64_t step = 0;
  double value = 0.0;
};

struct TargetOptions {
  std::int64_t T = 20000;  // clean training steps
  std::int64_t snapshot_every = 1000;
  int eval_episodes = 20;
  double medium_fraction = 0.5;
};

struct TargetSet {
  std::vector<TargetPolicyTier> tiers;  // random, medium, expert
  std::vector<SnapshotReturn> snapshots;
  const TargetPolicyTier& get(Tier tier) const;
};

// Raised when no snapshot reaches the medium threshold. The message lists
// every achieved return.
class TargetGenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mean return of `policy` over greedy episodes on a fresh environment.
double evaluate_return(const EnvConfig& env, const Policy& policy, int episodes, std::uint64_t seed);

// Trains cleanly, snapshots the policy periodically and picks the random,
// medium and expert tiers. The tiers satisfy value(random) <= value(medium)
// <= value(expert).
TargetSet generate_targets(const EnvConfig& env, const LearnerConfig& learner, std::uint64_t seed,
                           const TargetOptions& options = {});

enum class Scenario { unbounded, hard_capped };
std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

struct RunSpec {
  EnvConfig env;
  LearnerConfig learner;
  AttackConfig attack;
  Policy target;
  std::int64_t T = 1000;
  std::int64_t epoch_len = 4000;
};

// One seeded training run of `spec`.
TrainingResult run_single(const RunSpec& spec, std::uint64_t seed);

struct ScenarioResult {
  std::vector<EfficiencyReport> reports;  // run i used seed + i
  AggregateReport aggregate;
};

// Called once per finished run, possibly from a worker thread.
using RunCallback = std::function<void(std::size_t index, const TrainingResult& result)>;

// Repeats `spec` with seeds seed, seed + 1, ... on up to `jobs` threads.
// Unbounded drops any total cap; hard-capped requires one.
ScenarioResult run_scenario(Scenario scenario, RunSpec spec, int repeats, std::uint64_t seed, int jobs = 1,
                            const RunCallback& on_run = {});

// Runs `count` independent tasks on up to `jobs` threads; the first
// exception by task index is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace rplab
