#include "rplab/attacks.hpp"

#include <cmath>

#include "rplab/distance.hpp"

namespace rplab {

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::adaptive: return "adaptive";
    case AttackKind::greedy: return "greedy";
    case AttackKind::neighborhood: return "neighborhood";
  }
  return "none";
}

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "none") return AttackKind::none;
  if (name == "adaptive") return AttackKind::adaptive;
  if (name == "greedy") return AttackKind::greedy;
  if (name == "neighborhood") return AttackKind::neighborhood;
  throw ConfigError("unknown attack kind '" + name + "' (expected none|adaptive|greedy|neighborhood)");
}

void AttackConfig::validate(const ActionSpace& space) const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("attack.delta must be a finite nonnegative number");
  if (cap_B && !(*cap_B >= 0.0)) throw ConfigError("attack.cap_B must be nonnegative");
  if (cap_C && !(*cap_C >= 0.0)) throw ConfigError("attack.cap_C must be nonnegative");
  if (cap_B && delta > *cap_B) throw ConfigError("attack.delta exceeds attack.cap_B");
  if (kind == AttackKind::neighborhood) {
    if (!radius) throw ConfigError("attack.radius is required for the neighborhood attack");
    if (!(*radius >= 0.0)) throw ConfigError("attack.radius must be nonnegative");
    if (space.is_discrete())
      throw ConfigError("the neighborhood attack is defined only for continuous action spaces");
  } else if (radius) {
    throw ConfigError("attack.radius is only valid for the neighborhood attack");
  }
  if (kind == AttackKind::greedy && !space.is_discrete())
    throw ConfigError("the greedy attack is defined only in the discrete action space");
}

double perturb_adaptive(const AttackConfig& cfg, const ActionSpace& space, const Action& a,
                        const Action& target) {
  return -cfg.delta * action_distance(space, a, target);
}

double perturb_greedy(const AttackConfig& cfg, const ActionSpace& space, const Action& a,
                      const Action& target) {
  if (!space.is_discrete()) throw ConfigError("greedy attack on a continuous action space");
  return action_distance(space, a, target) == 0.0 ? cfg.delta : -cfg.delta;
}

double perturb_neighborhood(const AttackConfig& cfg, const ActionSpace& space, const Action& a,
                            const Action& target) {
  if (space.is_discrete()) throw ConfigError("neighborhood attack on a discrete action space");
  space.require_contains(a);
  space.require_contains(target);
  return raw_distance(a, target) > cfg.radius.value_or(0.0) ? -cfg.delta : 0.0;
}

double raw_perturbation(const AttackConfig& cfg, const ActionSpace& space, const Action& a,
                        const Action& target) {
  switch (cfg.kind) {
    case AttackKind::none: return 0.0;
    case AttackKind::adaptive: return perturb_adaptive(cfg, space, a, target);
    case AttackKind::greedy: return perturb_greedy(cfg, space, a, target);
    case AttackKind::neighborhood: return perturb_neighborhood(cfg, space, a, target);
  }
  return 0.0;
}

double govern(BudgetLedger& ledger, const AttackConfig& cfg, double raw_delta) {
  if (ledger.exhausted) return 0.0;
  const double magnitude = std::abs(raw_delta);
  if (cfg.cap_C && ledger.spent + magnitude > *cfg.cap_C) {
    ledger.exhausted = true;
    return 0.0;
  }
  ledger.spent += magnitude;
  if (magnitude > ledger.max_step) ledger.max_step = magnitude;
  return raw_delta;
}

double adversarial_reward(const AttackConfig& cfg, const TabularMdp& mdp, const Policy& target,
                          int state, int action) {
  const auto s = static_cast<std::size_t>(state);
  const auto a = static_cast<std::size_t>(action);
  const Action target_action = mdp.actions[static_cast<std::size_t>(target.act({static_cast<double>(state)}).index())];
  return mdp.rewards[s][a] + raw_perturbation(cfg, mdp.space, mdp.actions[a], target_action);
}

RewardAttack::RewardAttack(AttackConfig cfg, Policy target)
    : cfg_(std::move(cfg)), target_(std::move(target)) {
  cfg_.validate(target_.action_space());
}

double RewardAttack::perturb(std::int64_t t, const State& s, const Action& a, double /*r_true*/,
                             const State& /*s_next*/) {
  if (cfg_.kind == AttackKind::none) return 0.0;
  const bool was_exhausted = ledger_.exhausted;
  const double raw = raw_perturbation(cfg_, target_.action_space(), a, target_.act(s));
  const double applied = govern(ledger_, cfg_, raw);
  if (!was_exhausted && ledger_.exhausted) ledger_.exhausted_at = t;
  return applied;
}

}  // namespace rplab
