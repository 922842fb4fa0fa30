#pragma once

#include <optional>
#include <string>

#include "rplab/core.hpp"
#include "rplab/policy.hpp"
#include "rplab/tabular.hpp"

namespace rplab {

enum class AttackKind { none, adaptive, greedy, neighborhood };

std::string to_string(AttackKind kind);
AttackKind parse_attack_kind(const std::string& name);

struct AttackConfig {
  AttackKind kind = AttackKind::none;
  double delta = 0.0;                 // per-step magnitude
  std::optional<double> radius;       // neighborhood only, raw action units
  std::optional<double> cap_B;        // per-step cap
  std::optional<double> cap_C;        // total budget
  // Throws ConfigError when the configuration is inconsistent or the
  // attack is not defined for this kind of action space.
  void validate(const ActionSpace& space) const;
};

// Running spend of one attack over a whole training process.
struct BudgetLedger {
  double spent = 0.0;
  double max_step = 0.0;
  bool exhausted = false;
  std::optional<std::int64_t> exhausted_at;
};

// Raw per-step perturbations; `target` is the target action at the state.
double perturb_adaptive(const AttackConfig& cfg, const ActionSpace& space, const Action& a,
                        const Action& target);
double perturb_greedy(const AttackConfig& cfg, const ActionSpace& space, const Action& a,
                      const Action& target);
double perturb_neighborhood(const AttackConfig& cfg, const ActionSpace& space, const Action& a,
                            const Action& target);
double raw_perturbation(const AttackConfig& cfg, const ActionSpace& space, const Action& a,
                        const Action& target);

// Applies the budget: returns the perturbation actually injected and
// updates the ledger. Exhaustion is permanent and never spends partially.
double govern(BudgetLedger& ledger, const AttackConfig& cfg, double raw_delta);

// R-hat(s, a) of the adversarial MDP induced by the attack. Only the
// verification oracle reads R; the online attack never does.
double adversarial_reward(const AttackConfig& cfg, const TabularMdp& mdp, const Policy& target,
                          int state, int action);

// Per-step interception point of the training loop. Its only inputs are
// the step index and the (s, a, r, s') tuple; it never sees the learner.
class Attack {
 public:
  virtual ~Attack() = default;
  // Returns the perturbation added to the reward the learner observes.
  virtual double perturb(std::int64_t t, const State& s, const Action& a, double r_true,
                         const State& s_next) = 0;
  virtual const BudgetLedger& ledger() const = 0;
};

// The adversarial-MDP attack family with budget governance. It reads only
// s, a, the target policy and its own ledger.
class RewardAttack : public Attack {
 public:
  RewardAttack(AttackConfig cfg, Policy target);

  double perturb(std::int64_t t, const State& s, const Action& a, double r_true,
                 const State& s_next) override;

  const AttackConfig& config() const { return cfg_; }
  const BudgetLedger& ledger() const override { return ledger_; }
  const Policy& target() const { return target_; }

 private:
  AttackConfig cfg_;
  Policy target_;
  BudgetLedger ledger_;
};

}  // namespace rplab
