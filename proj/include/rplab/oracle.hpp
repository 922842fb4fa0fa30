#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rplab/attacks.hpp"
#include "rplab/metrics.hpp"
#include "rplab/policy.hpp"
#include "rplab/tabular.hpp"

namespace rplab {

// Deterministic tabular policy as one action index per state.
using PolicyTable = std::vector<int>;
// Reward function R(s, a) as a dense table.
using RewardTable = std::vector<std::vector<double>>;

// Expected undiscounted return over the horizon, from every start state.
struct PolicyValue {
  std::vector<double> per_state;
  double overall = 0.0;  // weighted by the initial distribution
};

// Action-index table of `policy` on `mdp` (matching by action value).
PolicyTable policy_table(const TabularMdp& mdp, const Policy& policy);

// Finite-horizon backward induction with V_0 = 0 and zero value after a
// terminal state.
PolicyValue evaluate_policy(const TabularMdp& mdp, const PolicyTable& pi);
PolicyValue evaluate_policy(const TabularMdp& mdp, const RewardTable& rewards, const PolicyTable& pi);

// D(pi, target): expected cumulative action distance along pi's own
// trajectories, by the same recursion with d(pi(s), target(s)) as reward.
PolicyValue divergence(const TabularMdp& mdp, const PolicyTable& pi, const PolicyTable& target);

// Optimal finite-horizon value over all (possibly non-stationary) policies.
PolicyValue optimal_value(const TabularMdp& mdp, const RewardTable& rewards);

inline constexpr std::uint64_t kMaxEnumeratedPolicies = 1'000'000;

// |A|^|S|, or nullopt when it exceeds 2^63.
std::optional<std::uint64_t> policy_count(const TabularMdp& mdp);
// Mixed-radix decoding of policy number `index` (state 0 least significant).
PolicyTable policy_from_index(const TabularMdp& mdp, std::uint64_t index);
// Every deterministic policy; IntractableError beyond the 1e6 cap.
std::vector<PolicyTable> enumerate_policies(const TabularMdp& mdp);
// Visits every policy in index order; same cap as enumerate_policies.
void for_each_policy(const TabularMdp& mdp, const std::function<void(const PolicyTable&)>& visit);
// Uniformly drawn policies, for spaces above the cap.
std::vector<PolicyTable> sample_policies(const TabularMdp& mdp, std::size_t n, Rng& rng);

RewardTable true_rewards(const TabularMdp& mdp);
RewardTable attacked_rewards(const TabularMdp& mdp, const AttackConfig& cfg, const PolicyTable& target);
// R(s, a) - c * d(a, target(s)).
RewardTable penalised_rewards(const TabularMdp& mdp, const PolicyTable& target, double c);
// d(a, target(s)) for every (s, a).
RewardTable distance_table(const TabularMdp& mdp, const PolicyTable& target);

// Smallest adaptive Delta that makes `target` optimal, found by
// enumeration: max over pi with D > 0 of (V^pi - V^target) / D, or 0.
double required_delta(const TabularMdp& mdp, const PolicyTable& target);

// Adaptive Delta certified by dynamic programming: `target` attains the
// optimal attacked value from every state. Works on MDPs too large to
// enumerate; the bracket is refined to `tolerance`.
double dp_sufficient_delta(const TabularMdp& mdp, const PolicyTable& target, double tolerance = 1e-6);

struct EmReport {
  bool condition2 = false;
  double condition2_margin = 0.0;  // V^target - best V^pi among pi with D > 0
  bool condition3 = false;
  double condition3_max_violation = 0.0;  // max (|R-hat - R| - Delta * d)
  std::vector<std::pair<int, int>> condition3_violations;  // (s, a) with positive violation
  std::uint64_t policies_checked = 0;
  bool enumerated = true;  // false when condition 2 was decided by DP
};

// Conditions 2 and 3 of the efficient adversarial MDP set. Condition 1
// (feasibility for the learner) is not mechanically decidable and is not
// checked. Large MDPs fall back to a DP optimality test for condition 2.
EmReport check_em_membership(const TabularMdp& mdp, const RewardTable& attacked, const PolicyTable& target,
                             double delta, double tolerance = 1e-9);
EmReport check_em_membership(const TabularMdp& mdp, const AttackConfig& cfg, const PolicyTable& target,
                             double tolerance = 1e-9);

// max over start states of |V^pi_hat - (V^pi - Delta * D(pi, target))|.
double decomposition_residual(const TabularMdp& mdp, const RewardTable& attacked, const PolicyTable& target,
                              double delta, const PolicyTable& pi);
// Same with the adaptive attack's rewards.
double verify_decomposition(const TabularMdp& mdp, const PolicyTable& target, double delta,
                            const PolicyTable& pi);

struct Alternative {
  std::string label;
  RewardTable rewards;
};

// The scaled family R - c d with c in {0.25, 0.5, 0.75} Delta followed by
// `random_count` seeded alternatives R - u(s, a) Delta d, u ~ U[0, 1].
std::vector<Alternative> generate_alternatives(const TabularMdp& mdp, const PolicyTable& target, double delta,
                                               std::uint64_t seed, std::size_t random_count = 20);

// min over pi with D > 0 of V^target - V^pi under `rewards`.
double min_gap(const TabularMdp& mdp, const RewardTable& rewards, const PolicyTable& target);

struct GapEntry {
  std::string label;
  bool accepted = false;
  std::string rejection;
  double gap = 0.0;
  bool dominated = false;  // adaptive gap >= gap - tolerance
};

struct GapComparison {
  double adaptive_gap = 0.0;
  std::vector<GapEntry> entries;
  std::size_t accepted = 0;
  bool all_dominated = false;
};

GapComparison theorem2_gap_comparison(const TabularMdp& mdp, const PolicyTable& target, double delta,
                                      const std::vector<Alternative>& alternatives, double tolerance = 1e-9);

struct AccountingCheck {
  bool ok = false;
  double expected_C = 0.0;  // Delta * epsilon * T
  double C_total = 0.0;
  double relative_error = 0.0;
  bool budget_ok = false;  // B_realized <= Delta
};

// Observable content of the efficiency bound for an un-capped adaptive
// run: C_total = Delta * epsilon * T and B_realized <= Delta.
AccountingCheck theorem1_accounting_check(const EfficiencyReport& report, double delta,
                                          double relative_tolerance = 1e-6);

}  // namespace rplab
