#include "rplab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rplab/distance.hpp"

namespace rplab {

namespace {

constexpr double kZeroDivergence = 1e-12;

void check_table(const TabularMdp& mdp, const PolicyTable& pi) {
  if (pi.size() != static_cast<std::size_t>(mdp.num_states))
    throw DomainError("policy table size does not match the number of states");
  for (int a : pi)
    if (a < 0 || a >= mdp.num_actions()) throw DomainError("policy table entry outside the action set");
}

// Backward induction for a fixed policy with immediate reward r[s].
PolicyValue backward(const TabularMdp& mdp, const PolicyTable& pi, const std::vector<double>& r) {
  const auto n = static_cast<std::size_t>(mdp.num_states);
  std::vector<double> prev(n, 0.0), cur(n, 0.0);
  for (int k = 0; k < mdp.horizon; ++k) {
    for (std::size_t s = 0; s < n; ++s) {
      if (mdp.terminal[s]) {
        cur[s] = 0.0;
        continue;
      }
      double v = r[s];
      for (const auto& succ : mdp.transitions[s][static_cast<std::size_t>(pi[s])])
        v += succ.prob * prev[static_cast<std::size_t>(succ.state)];
      cur[s] = v;
    }
    std::swap(prev, cur);
  }
  PolicyValue out;
  out.per_state = std::move(prev);
  for (std::size_t s = 0; s < n; ++s) out.overall += mdp.initial[s] * out.per_state[s];
  return out;
}

std::vector<double> on_policy(const RewardTable& table, const PolicyTable& pi) {
  std::vector<double> r(pi.size());
  for (std::size_t s = 0; s < pi.size(); ++s) r[s] = table[s][static_cast<std::size_t>(pi[s])];
  return r;
}

bool attains_optimum(const TabularMdp& mdp, const RewardTable& rewards, const PolicyTable& target,
                     double tolerance) {
  const PolicyValue v = evaluate_policy(mdp, rewards, target);
  const PolicyValue best = optimal_value(mdp, rewards);
  for (std::size_t s = 0; s < v.per_state.size(); ++s)
    if (v.per_state[s] < best.per_state[s] - tolerance) return false;
  return true;
}

std::uint64_t checked_count(const TabularMdp& mdp) {
  const auto count = policy_count(mdp);
  if (!count || *count > kMaxEnumeratedPolicies) {
    std::ostringstream os;
    os << "policy enumeration refused: " << mdp.num_actions() << "^" << mdp.num_states << " = "
       << (count ? std::to_string(*count) : std::string("more than 2^63")) << " policies exceeds the cap of "
       << kMaxEnumeratedPolicies;
    throw IntractableError(os.str());
  }
  return *count;
}

}  // namespace

PolicyTable policy_table(const TabularMdp& mdp, const Policy& policy) {
  PolicyTable table(static_cast<std::size_t>(mdp.num_states));
  for (int s = 0; s < mdp.num_states; ++s) {
    const Action a = policy.act(State{static_cast<double>(s)});
    const auto it = std::find(mdp.actions.begin(), mdp.actions.end(), a);
    if (it == mdp.actions.end()) throw DomainError("policy action is not one of the MDP's actions");
    table[static_cast<std::size_t>(s)] = static_cast<int>(it - mdp.actions.begin());
  }
  return table;
}

PolicyValue evaluate_policy(const TabularMdp& mdp, const PolicyTable& pi) {
  return evaluate_policy(mdp, mdp.rewards, pi);
}

PolicyValue evaluate_policy(const TabularMdp& mdp, const RewardTable& rewards, const PolicyTable& pi) {
  check_table(mdp, pi);
  return backward(mdp, pi, on_policy(rewards, pi));
}

PolicyValue divergence(const TabularMdp& mdp, const PolicyTable& pi, const PolicyTable& target) {
  check_table(mdp, pi);
  check_table(mdp, target);
  std::vector<double> d(pi.size());
  for (std::size_t s = 0; s < pi.size(); ++s)
    d[s] = action_distance(mdp.space, mdp.actions[static_cast<std::size_t>(pi[s])],
                           mdp.actions[static_cast<std::size_t>(target[s])]);
  return backward(mdp, pi, d);
}

PolicyValue optimal_value(const TabularMdp& mdp, const RewardTable& rewards) {
  const auto n = static_cast<std::size_t>(mdp.num_states);
  std::vector<double> prev(n, 0.0), cur(n, 0.0);
  for (int k = 0; k < mdp.horizon; ++k) {
    for (std::size_t s = 0; s < n; ++s) {
      if (mdp.terminal[s]) {
        cur[s] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < mdp.actions.size(); ++a) {
        double v = rewards[s][a];
        for (const auto& succ : mdp.transitions[s][a]) v += succ.prob * prev[static_cast<std::size_t>(succ.state)];
        best = std::max(best, v);
      }
      cur[s] = best;
    }
    std::swap(prev, cur);
  }
  PolicyValue out;
  out.per_state = std::move(prev);
  for (std::size_t s = 0; s < n; ++s) out.overall += mdp.initial[s] * out.per_state[s];
  return out;
}

std::optional<std::uint64_t> policy_count(const TabularMdp& mdp) {
  const auto base = static_cast<std::uint64_t>(mdp.num_actions());
  std::uint64_t count = 1;
  for (int s = 0; s < mdp.num_states; ++s) {
    if (count > (std::uint64_t{1} << 63) / base) return std::nullopt;
    count *= base;
  }
  return count;
}

PolicyTable policy_from_index(const TabularMdp& mdp, std::uint64_t index) {
  const auto base = static_cast<std::uint64_t>(mdp.num_actions());
  PolicyTable pi(static_cast<std::size_t>(mdp.num_states));
  for (auto& a : pi) {
    a = static_cast<int>(index % base);
    index /= base;
  }
  return pi;
}

std::vector<PolicyTable> enumerate_policies(const TabularMdp& mdp) {
  const std::uint64_t count = checked_count(mdp);
  std::vector<PolicyTable> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(policy_from_index(mdp, i));
  return out;
}

void for_each_policy(const TabularMdp& mdp, const std::function<void(const PolicyTable&)>& visit) {
  const std::uint64_t count = checked_count(mdp);
  PolicyTable pi(static_cast<std::size_t>(mdp.num_states), 0);
  const int base = mdp.num_actions();
  for (std::uint64_t i = 0; i < count; ++i) {
    visit(pi);
    for (auto& a : pi) {  // odometer increment, state 0 fastest
      if (++a < base) break;
      a = 0;
    }
  }
}

std::vector<PolicyTable> sample_policies(const TabularMdp& mdp, std::size_t n, Rng& rng) {
  std::vector<PolicyTable> out(n, PolicyTable(static_cast<std::size_t>(mdp.num_states)));
  const auto base = static_cast<std::uint64_t>(mdp.num_actions());
  for (auto& pi : out)
    for (auto& a : pi) a = static_cast<int>(rng.uniform_int(base));
  return out;
}

RewardTable true_rewards(const TabularMdp& mdp) { return mdp.rewards; }

RewardTable attacked_rewards(const TabularMdp& mdp, const AttackConfig& cfg, const PolicyTable& target) {
  check_table(mdp, target);
  RewardTable out = mdp.rewards;
  for (std::size_t s = 0; s < out.size(); ++s) {
    const Action& t = mdp.actions[static_cast<std::size_t>(target[s])];
    for (std::size_t a = 0; a < out[s].size(); ++a)
      out[s][a] += raw_perturbation(cfg, mdp.space, mdp.actions[a], t);
  }
  return out;
}

RewardTable distance_table(const TabularMdp& mdp, const PolicyTable& target) {
  check_table(mdp, target);
  RewardTable out(mdp.rewards.size(), std::vector<double>(mdp.actions.size()));
  for (std::size_t s = 0; s < out.size(); ++s)
    for (std::size_t a = 0; a < out[s].size(); ++a)
      out[s][a] = action_distance(mdp.space, mdp.actions[a], mdp.actions[static_cast<std::size_t>(target[s])]);
  return out;
}

RewardTable penalised_rewards(const TabularMdp& mdp, const PolicyTable& target, double c) {
  const RewardTable d = distance_table(mdp, target);
  RewardTable out = mdp.rewards;
  for (std::size_t s = 0; s < out.size(); ++s)
    for (std::size_t a = 0; a < out[s].size(); ++a) out[s][a] -= c * d[s][a];
  return out;
}

double required_delta(const TabularMdp& mdp, const PolicyTable& target) {
  const PolicyValue vt = evaluate_policy(mdp, target);
  double needed = 0.0;
  for_each_policy(mdp, [&](const PolicyTable& pi) {
    const double d = divergence(mdp, pi, target).overall;
    if (d <= kZeroDivergence) return;
    needed = std::max(needed, (evaluate_policy(mdp, pi).overall - vt.overall) / d);
  });
  return needed;
}

double dp_sufficient_delta(const TabularMdp& mdp, const PolicyTable& target, double tolerance) {
  check_table(mdp, target);
  const RewardTable d = distance_table(mdp, target);
  auto feasible = [&](double delta) {
    RewardTable r = mdp.rewards;
    for (std::size_t s = 0; s < r.size(); ++s)
      for (std::size_t a = 0; a < r[s].size(); ++a) r[s][a] -= delta * d[s][a];
    return attains_optimum(mdp, r, target, 1e-9);
  };
  if (feasible(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (!feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw NumericError("dp_sufficient_delta: no finite Delta makes the target optimal");
  }
  while (hi - lo > tolerance * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

EmReport check_em_membership(const TabularMdp& mdp, const RewardTable& attacked, const PolicyTable& target,
                             double delta, double tolerance) {
  check_table(mdp, target);
  EmReport rep;
  const RewardTable d = distance_table(mdp, target);
  rep.condition3_max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < d.size(); ++s) {
    for (std::size_t a = 0; a < d[s].size(); ++a) {
      const double v = std::abs(attacked[s][a] - mdp.rewards[s][a]) - delta * d[s][a];
      rep.condition3_max_violation = std::max(rep.condition3_max_violation, v);
      if (v > tolerance) rep.condition3_violations.emplace_back(static_cast<int>(s), static_cast<int>(a));
    }
  }
  rep.condition3 = rep.condition3_max_violation <= tolerance;

  const auto count = policy_count(mdp);
  if (count && *count <= kMaxEnumeratedPolicies) {
    rep.condition2_margin = min_gap(mdp, attacked, target);
    rep.policies_checked = *count;
    rep.enumerated = true;
  } else {
    rep.condition2_margin = evaluate_policy(mdp, attacked, target).overall - optimal_value(mdp, attacked).overall;
    rep.enumerated = false;
  }
  rep.condition2 = rep.condition2_margin >= -tolerance;
  return rep;
}

EmReport check_em_membership(const TabularMdp& mdp, const AttackConfig& cfg, const PolicyTable& target,
                             double tolerance) {
  return check_em_membership(mdp, attacked_rewards(mdp, cfg, target), target, cfg.delta, tolerance);
}

double decomposition_residual(const TabularMdp& mdp, const RewardTable& attacked, const PolicyTable& target,
                              double delta, const PolicyTable& pi) {
  const PolicyValue hat = evaluate_policy(mdp, attacked, pi);
  const PolicyValue clean = evaluate_policy(mdp, pi);
  const PolicyValue div = divergence(mdp, pi, target);
  double residual = 0.0;
  for (std::size_t s = 0; s < hat.per_state.size(); ++s)
    residual = std::max(residual, std::abs(hat.per_state[s] - (clean.per_state[s] - delta * div.per_state[s])));
  return residual;
}

double verify_decomposition(const TabularMdp& mdp, const PolicyTable& target, double delta,
                            const PolicyTable& pi) {
  AttackConfig cfg;
  cfg.kind = AttackKind::adaptive;
  cfg.delta = delta;
  return decomposition_residual(mdp, attacked_rewards(mdp, cfg, target), target, delta, pi);
}

std::vector<Alternative> generate_alternatives(const TabularMdp& mdp, const PolicyTable& target, double delta,
                                               std::uint64_t seed, std::size_t random_count) {
  std::vector<Alternative> out;
  for (double c : {0.25, 0.5, 0.75}) {
    std::ostringstream label;
    label << "scaled c=" << c << "*delta";
    out.push_back({label.str(), penalised_rewards(mdp, target, c * delta)});
  }
  const RewardTable d = distance_table(mdp, target);
  Rng rng(seed);
  for (std::size_t i = 0; i < random_count; ++i) {
    Rng stream = rng.substream(i);
    RewardTable r = mdp.rewards;
    for (std::size_t s = 0; s < r.size(); ++s)
      for (std::size_t a = 0; a < r[s].size(); ++a) r[s][a] -= stream.uniform() * delta * d[s][a];
    out.push_back({"random #" + std::to_string(i), std::move(r)});
  }
  return out;
}

double min_gap(const TabularMdp& mdp, const RewardTable& rewards, const PolicyTable& target) {
  const double vt = evaluate_policy(mdp, rewards, target).overall;
  double gap = std::numeric_limits<double>::infinity();
  for_each_policy(mdp, [&](const PolicyTable& pi) {
    if (divergence(mdp, pi, target).overall <= kZeroDivergence) return;
    gap = std::min(gap, vt - evaluate_policy(mdp, rewards, pi).overall);
  });
  return gap;
}

GapComparison theorem2_gap_comparison(const TabularMdp& mdp, const PolicyTable& target, double delta,
                                      const std::vector<Alternative>& alternatives, double tolerance) {
  AttackConfig cfg;
  cfg.kind = AttackKind::adaptive;
  cfg.delta = delta;
  const RewardTable adaptive = attacked_rewards(mdp, cfg, target);

  // One enumeration pass shared by every reward table; the min gap over
  // pi with D > 0 is also the condition 2 margin.
  std::vector<const RewardTable*> tables{&adaptive};
  for (const auto& alt : alternatives) tables.push_back(&alt.rewards);
  std::vector<double> vt(tables.size()), gap(tables.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < tables.size(); ++i) vt[i] = evaluate_policy(mdp, *tables[i], target).overall;
  for_each_policy(mdp, [&](const PolicyTable& pi) {
    if (divergence(mdp, pi, target).overall <= kZeroDivergence) return;
    for (std::size_t i = 0; i < tables.size(); ++i)
      gap[i] = std::min(gap[i], vt[i] - evaluate_policy(mdp, *tables[i], pi).overall);
  });

  GapComparison out;
  out.adaptive_gap = gap[0];
  out.all_dominated = true;
  const RewardTable d = distance_table(mdp, target);
  for (std::size_t i = 0; i < alternatives.size(); ++i) {
    GapEntry e;
    e.label = alternatives[i].label;
    e.gap = gap[i + 1];
    double violation = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < d.size(); ++s)
      for (std::size_t a = 0; a < d[s].size(); ++a)
        violation = std::max(violation, std::abs(alternatives[i].rewards[s][a] - mdp.rewards[s][a]) - delta * d[s][a]);
    if (violation > tolerance) {
      e.rejection = "condition 3 violated by " + std::to_string(violation);
    } else if (e.gap < -tolerance) {
      e.rejection = "condition 2 fails: target trails by " + std::to_string(-e.gap);
    } else {
      e.accepted = true;
      e.dominated = out.adaptive_gap >= e.gap - tolerance;
      out.all_dominated = out.all_dominated && e.dominated;
      ++out.accepted;
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

AccountingCheck theorem1_accounting_check(const EfficiencyReport& report, double delta,
                                          double relative_tolerance) {
  AccountingCheck c;
  c.C_total = report.C_total;
  c.expected_C = delta * report.epsilon * static_cast<double>(report.T);
  const double scale = std::max(std::abs(c.C_total), std::abs(c.expected_C));
  c.relative_error = scale > 0.0 ? std::abs(c.C_total - c.expected_C) / scale : 0.0;
  c.budget_ok = report.B_realized <= delta;
  c.ok = c.relative_error <= relative_tolerance && c.budget_ok;
  return c;
}

}  // namespace rplab
