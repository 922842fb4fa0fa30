#include "rplab/training.hpp"

#include <cmath>
#include <string>

#include "rplab/distance.hpp"

namespace rplab {

TrainingResult run_training(Environment& env, Learner& learner, Attack& attack, const Policy& target,
                            std::int64_t T, std::uint64_t seed, const TrainingOptions& options,
                            std::vector<Policy>* snapshots) {
  if (T < 1) throw DomainError("run_training: T must be at least 1");
  const ActionSpace& space = env.action_space();
  if (!(target.action_space() == space)) throw DomainError("run_training: target policy space mismatch");

  const Rng root(seed);
  Rng env_rng = root.substream(kEnvStream);
  Rng learner_rng = root.substream(kLearnerStream);

  TrainingResult out;
  out.log.reserve(static_cast<std::size_t>(T));
  State s = env.reset(env_rng);
  std::int64_t episode = 0;
  for (std::int64_t t = 0; t < T; ++t) {
    Action a = learner.select_action(s, t, learner_rng);
    if (!space.is_discrete()) a = space.clip(a);
    const double distance = action_distance(space, a, target.act(s));
    StepResult step = env.step(a, env_rng);
    const double delta = attack.perturb(t, s, a, step.r_true, step.s_next);
    if (!std::isfinite(delta)) {
      throw RunAborted("attack returned a non-finite perturbation at step " + std::to_string(t), t,
                       std::move(out.log));
    }
    const double observed = step.r_true + delta;
    learner.observe(ObservedTransition{s, a, observed, step.s_next, step.done}, learner_rng);

    TransitionRecord rec;
    rec.t = t;
    rec.episode = episode;
    rec.s = s;
    rec.a = a;
    rec.r_true = step.r_true;
    rec.delta = delta;
    rec.r_observed = observed;
    rec.s_next = step.s_next;
    rec.done = step.done;
    rec.distance = distance;
    out.log.push_back(std::move(rec));

    if (snapshots && options.snapshot_every > 0 && (t + 1) % options.snapshot_every == 0) {
      snapshots->push_back(learner.snapshot_policy());
    }
    if (step.done) {
      s = env.reset(env_rng);
      ++episode;
    } else {
      s = std::move(step.s_next);
    }
  }
  out.report = compute_report(out.log, options.epoch_len, attack.ledger().exhausted_at);
  out.report.seed = seed;
  return out;
}

}  // namespace rplab
