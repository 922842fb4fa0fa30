#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rplab/attacks.hpp"
#include "rplab/envs.hpp"
#include "rplab/experiment.hpp"
#include "rplab/learners.hpp"
#include "rplab/metrics.hpp"
#include "rplab/policy.hpp"

namespace rplab {

using Json = nlohmann::json;

// ---- experiment configuration ----

struct TargetSpec {
  std::optional<Tier> tier;
  std::optional<std::string> policy_file;
  std::optional<std::vector<int>> table;  // explicit tabular target
  TargetOptions options;
};

struct Condition {
  std::string label;
  AttackConfig attack;
};

struct ExperimentConfig {
  EnvConfig env = GridWorldSpec{};
  LearnerConfig learner = TabularQConfig{};
  std::vector<Condition> conditions;
  Scenario scenario = Scenario::unbounded;
  bool clean_baseline = true;
  TargetSpec target;
  std::int64_t T = 1000;
  std::int64_t epoch_len = 4000;
  int repeats = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string output = "out";
  // verify only
  std::size_t alternatives = 20;
  std::size_t sampled_policies = 500;
};

// Parses and validates a configuration. Every problem found is reported
// in one ConfigError, one "field: message" line each. Unknown keys are
// rejected.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);
Json to_json(const ExperimentConfig& cfg);

EnvConfig parse_environment(const Json& j);
Json to_json(const EnvConfig& env);
Json to_json(const LearnerConfig& learner);
Json to_json(const AttackConfig& attack);

// ---- policies ----

struct PolicyFile {
  Policy policy;
  std::string tier;  // free-form label, "random" / "medium" / "expert" for generated targets
  double value = 0.0;
  std::int64_t snapshot_step = -1;
  std::uint64_t seed = 0;
  bool operator==(const PolicyFile&) const = default;
};

// Versioned text format; weights use 17 significant digits.
std::string format_policy(const PolicyFile& file);
PolicyFile parse_policy(const std::string& text);
void save_policy(const std::string& path, const PolicyFile& file);
PolicyFile load_policy(const std::string& path);

// ---- step logs ----

// Header: t,episode,s,a,r_true,delta,r_observed,distance,done. State and
// action components are joined with ';'. s_next is not persisted.
void write_step_log(const std::string& path, const std::vector<TransitionRecord>& log);
std::vector<TransitionRecord> read_step_log(const std::string& path, const ActionSpace& space);

// ---- reports ----

Json to_json(const EfficiencyReport& r);
EfficiencyReport report_from_json(const Json& j);
Json to_json(const AggregateReport& a);
AggregateReport aggregate_from_json(const Json& j);

std::string read_file(const std::string& path);
// Writes through a temporary file and renames it into place.
void write_file(const std::string& path, const std::string& contents);

// 17 significant digits, enough to read back the same double.
std::string format_double(double v);

}  // namespace rplab
