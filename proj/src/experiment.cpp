#include "rplab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <sstream>
#include <thread>

namespace rplab {

std::string to_string(Tier tier) {
  switch (tier) {
    case Tier::random:
      return "random";
    case Tier::medium:
      return "medium";
    case Tier::expert:
      return "expert";
  }
  return "random";
}

Tier parse_tier(const std::string& name) {
  if (name == "random") return Tier::random;
  if (name == "medium") return Tier::medium;
  if (name == "expert") return Tier::expert;
  throw ConfigError("unknown target tier '" + name + "' (expected random, medium or expert)");
}

const TargetPolicyTier& TargetSet::get(Tier tier) const {
  for (const auto& t : tiers)
    if (t.tier == tier) return t;
  throw DomainError("target set has no " + to_string(tier) + " tier");
}

double evaluate_return(const EnvConfig& env_cfg, const Policy& policy, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw DomainError("evaluate_return: episodes must be positive");
  auto env = make_environment(env_cfg);
  Rng rng(seed);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    State s = env->reset(rng);
    while (true) {
      StepResult st = env->step(policy.act(s), rng);
      total += st.r_true;
      if (st.done) break;
      s = std::move(st.s_next);
    }
  }
  return total / episodes;
}

TargetSet generate_targets(const EnvConfig& env_cfg, const LearnerConfig& learner_cfg, std::uint64_t seed,
                           const TargetOptions& options) {
  if (!(options.medium_fraction > 0.0 && options.medium_fraction < 1.0))
    throw ConfigError("medium_fraction must lie in (0, 1)");
  if (options.snapshot_every < 1 || options.T < options.snapshot_every)
    throw ConfigError("target generation needs 1 <= snapshot_every <= T");

  const Rng root(seed);
  auto env = make_environment(env_cfg);
  Rng random_rng = root.substream(11);
  Policy random = random_policy(learner_cfg, *env, random_rng);

  Rng init = root.substream(kInitStream);
  auto learner = make_learner(learner_cfg, *env, options.T, init);
  AttackConfig none;
  RewardAttack attack(none, random);
  TrainingOptions topt;
  topt.epoch_len = options.T;
  topt.snapshot_every = options.snapshot_every;
  std::vector<Policy> snaps;
  run_training(*env, *learner, attack, random, options.T, root.substream(12).seed(), topt, &snaps);

  const std::uint64_t eval_seed = root.substream(13).seed();
  TargetSet out;
  const double random_value = evaluate_return(env_cfg, random, options.eval_episodes, eval_seed);
  std::size_t best = 0;
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const std::int64_t step = static_cast<std::int64_t>(i + 1) * options.snapshot_every;
    out.snapshots.push_back({step, evaluate_return(env_cfg, snaps[i], options.eval_episodes, eval_seed)});
    if (out.snapshots[i].value > out.snapshots[best].value) best = i;
  }
  const double expert_value = out.snapshots[best].value;
  const double threshold = random_value + options.medium_fraction * (expert_value - random_value);

  std::optional<std::size_t> medium;
  if (expert_value >= random_value) {
    for (std::size_t i = 0; i < snaps.size() && !medium; ++i)
      if (out.snapshots[i].value >= threshold) medium = i;
  }
  if (!medium) {
    std::ostringstream os;
    os << "no snapshot qualifies as the medium target: random return " << random_value << ", threshold "
       << threshold << ", snapshot returns:";
    for (const auto& s : out.snapshots) os << " " << s.step << ":" << s.value;
    throw TargetGenerationError(os.str());
  }
  out.tiers.push_back({Tier::random, std::move(random), random_value, -1});
  out.tiers.push_back({Tier::medium, snaps[*medium], out.snapshots[*medium].value, out.snapshots[*medium].step});
  out.tiers.push_back({Tier::expert, snaps[best], expert_value, out.snapshots[best].step});
  return out;
}

std::string to_string(Scenario s) { return s == Scenario::unbounded ? "unbounded" : "hard-capped"; }

Scenario parse_scenario(const std::string& name) {
  if (name == "unbounded") return Scenario::unbounded;
  if (name == "hard-capped") return Scenario::hard_capped;
  throw ConfigError("unknown scenario '" + name + "' (expected unbounded or hard-capped)");
}

TrainingResult run_single(const RunSpec& spec, std::uint64_t seed) {
  auto env = make_environment(spec.env);
  spec.attack.validate(env->action_space());
  Rng init = Rng(seed).substream(kInitStream);
  auto learner = make_learner(spec.learner, *env, spec.T, init);
  RewardAttack attack(spec.attack, spec.target);
  TrainingOptions opt;
  opt.epoch_len = spec.epoch_len;
  return run_training(*env, *learner, attack, spec.target, spec.T, seed, opt);
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ScenarioResult run_scenario(Scenario scenario, RunSpec spec, int repeats, std::uint64_t seed, int jobs,
                            const RunCallback& on_run) {
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (scenario == Scenario::unbounded) {
    spec.attack.cap_C.reset();
  } else if (!spec.attack.cap_C && spec.attack.kind != AttackKind::none) {
    throw ConfigError("hard-capped scenario needs attack.cap_C");
  }
  ScenarioResult out;
  out.reports.resize(static_cast<std::size_t>(repeats));
  parallel_for(out.reports.size(), jobs, [&](std::size_t i) {
    TrainingResult r = run_single(spec, seed + i);
    if (on_run) on_run(i, r);
    out.reports[i] = std::move(r.report);
  });
  out.aggregate = aggregate(out.reports);
  return out;
}

}  // namespace rplab
