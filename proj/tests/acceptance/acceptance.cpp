// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rplab/distance.hpp"
#include "rplab/experiment.hpp"
#include "rplab/oracle.hpp"
#include "support/mlp_oracle.hpp"

using namespace rplab;
using namespace rplab::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void progress(const std::string& msg) { std::cerr << "[acceptance] " << msg << std::endl; }

AttackConfig adaptive(double delta) { return {AttackKind::adaptive, delta, std::nullopt, std::nullopt, std::nullopt}; }

// reports collected from the end-to-end criteria for the accounting and log-shape checks
struct Ledger {
  std::vector<std::pair<EfficiencyReport, double>> adaptive_uncapped;  // report, delta
  std::vector<std::pair<EfficiencyReport, double>> greedy_uncapped;
  std::vector<std::string> adaptive_labels;
};

// ---------------------------------------------------------------- 1

Outcome distance_properties() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  int violations = 0;
  const int cases = 10000;
  for (int i = 0; i < cases; ++i) {
    if (i % 2 == 0) {
      const int n = 2 + rng.uniform_int(9);
      const ActionSpace space = ActionSpace::discrete(n);
      const Action a = Action::discrete(rng.uniform_int(n)), b = Action::discrete(rng.uniform_int(n));
      const double d = action_distance(space, a, b);
      violations += d != (a.index() == b.index() ? 0.0 : 1.0);
      violations += d != action_distance(space, b, a);
      violations += action_distance(space, a, a) != 0.0;
    } else {
      const int dim = 1 + rng.uniform_int(6);
      std::vector<double> lo(static_cast<std::size_t>(dim)), hi(lo.size());
      double diag = 0.0;
      for (std::size_t k = 0; k < lo.size(); ++k) {
        lo[k] = rng.uniform(-5, 1);
        hi[k] = lo[k] + rng.uniform(0.1, 6);
        diag += (hi[k] - lo[k]) * (hi[k] - lo[k]);
      }
      const ActionSpace space = ActionSpace::box(lo, hi);
      auto draw = [&] {
        std::vector<double> v(lo.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = rng.uniform(lo[k], hi[k]);
        return Action::continuous(v);
      };
      const Action a = draw(), b = draw();
      const double d = action_distance(space, a, b);
      double sq = 0.0;
      for (std::size_t k = 0; k < lo.size(); ++k) sq += (a.values()[k] - b.values()[k]) * (a.values()[k] - b.values()[k]);
      violations += !(d >= 0.0 && d <= 1.0);
      violations += d != action_distance(space, b, a);
      violations += action_distance(space, a, a) != 0.0;
      violations += std::abs(d - std::sqrt(sq) / std::sqrt(diag)) > 1e-12;
      violations += std::abs(action_distance(space, Action::continuous(lo), Action::continuous(hi)) - 1.0) > 1e-12;
    }
  }
  const double t = seconds_since(t0);
  return {violations == 0 && t < 1.0, fmt("%d cases, %d violations, %.3fs", cases, violations, t)};
}

// ---------------------------------------------------------------- 2

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  Rng rng(99);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto head = static_cast<OutputHead>(rng.uniform_int(3));
    const int out = 1 + rng.uniform_int(4);
    std::vector<int> sizes{1 + rng.uniform_int(6)};
    const int depth = 1 + rng.uniform_int(3);
    for (int d = 0; d < depth; ++d) sizes.push_back(2 + rng.uniform_int(20));
    sizes.push_back(head == OutputHead::dueling ? std::max(out, 2) : out);
    MlpNet net(sizes, head, rng);
    const int batch = 1 + rng.uniform_int(16);
    const Matrix x = random_matrix(sizes.front(), batch, rng);
    const Matrix t = random_matrix(net.output_size(), batch, rng);
    const CheckResult r = check_net(net, x, t, rng, 200);
    worst = std::max(worst, r.worst);
    checked += r.checked;
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-4 && t < 10.0, fmt("100 nets, %zu parameters, worst relative error %.2e, %.2fs", checked, worst, t)};
}

// ---------------------------------------------------------------- 3

GridWorldSpec grid(int size, double slip) {
  GridWorldSpec g;
  g.width = g.height = size;
  g.goal = {size - 1, size - 1};
  g.slip_prob = slip;
  return g;
}

Outcome decomposition() {
  const auto t0 = Clock::now();
  const double delta = 5.0;
  std::string detail;
  bool ok = true;
  const std::vector<std::pair<std::string, GridWorldSpec>> cases{
      {"3x3", grid(3, 0.0)}, {"3x3 slip", grid(3, 0.1)}, {"4x4", grid(4, 0.0)}};
  for (const auto& [name, spec] : cases) {
    const TabularMdp mdp = GridWorld(spec).tabular();
    Rng rng(31);
    PolicyTable target(static_cast<std::size_t>(mdp.num_states));
    for (auto& a : target) a = rng.uniform_int(4);
    double worst = 0.0;
    std::size_t n = 0;
    auto visit = [&](const PolicyTable& pi) {
      worst = std::max(worst, verify_decomposition(mdp, target, delta, pi));
      ++n;
    };
    const auto count = policy_count(mdp);
    if (count && *count <= kMaxEnumeratedPolicies) for_each_policy(mdp, visit);
    else
      for (const auto& pi : sample_policies(mdp, 500, rng)) visit(pi);
    ok = ok && worst <= 1e-9;
    detail += fmt("%s: %zu policies, max residual %.1e; ", name.c_str(), n, worst);
  }
  const double t = seconds_since(t0);
  return {ok && t < 60.0, detail + fmt("%.1fs", t)};
}

// ---------------------------------------------------------------- 4

TabularMdp three_state_mdp() {
  TabularMdp m = TabularMdp::discrete(3, 2, 4);
  m.transitions[0][0] = {{1, 1.0}};
  m.transitions[0][1] = {{1, 0.5}, {2, 0.5}};
  m.transitions[1][0] = {{2, 1.0}};
  m.transitions[1][1] = {{0, 0.7}, {1, 0.3}};
  m.transitions[2][0] = {{0, 1.0}};
  m.transitions[2][1] = {{2, 1.0}};
  m.rewards = {{1.0, 2.0}, {0.5, -1.0}, {3.0, 0.0}};
  m.initial = {1.0, 0.0, 0.0};
  return m;
}

Outcome gap_dominance() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  const TabularMdp chain = three_state_mdp();
  const TabularMdp grid3 = GridWorld(grid(3, 0.0)).tabular();
  const std::vector<std::tuple<std::string, TabularMdp, PolicyTable>> cases{
      {"3-state", chain, PolicyTable{0, 1, 1}}, {"3x3 grid", grid3, PolicyTable{1, 0, 0, 0, 3, 0, 1, 1, 0}}};
  for (const auto& [name, mdp, target] : cases) {
    const double delta = 2.0 * dp_sufficient_delta(mdp, target) + 1.0;
    const auto alts = generate_alternatives(mdp, target, delta, 5, 20);
    const GapComparison cmp = theorem2_gap_comparison(mdp, target, delta, alts, 1e-9);
    double closest = -1e300;
    for (const auto& e : cmp.entries)
      if (e.accepted) closest = std::max(closest, e.gap - cmp.adaptive_gap);
    ok = ok && cmp.all_dominated && cmp.accepted > 0;
    detail += fmt("%s: adaptive gap %.4f, %zu/%zu alternatives in the set, max(alt - adaptive) %.3g; ", name.c_str(),
                  cmp.adaptive_gap, cmp.accepted, alts.size(), closest);
  }
  const double t = seconds_since(t0);
  return {ok && t < 60.0, detail + fmt("%.1fs", t)};
}

// ---------------------------------------------------------------- 5

Outcome accounting(const Ledger& ledger) {
  std::size_t bad = 0;
  double worst = 0.0;
  for (const auto& [rep, delta] : ledger.adaptive_uncapped) {
    const AccountingCheck c = theorem1_accounting_check(rep, delta, 1e-6);
    bad += !c.ok;
    worst = std::max(worst, c.relative_error);
  }
  std::size_t greedy_bad = 0;
  for (const auto& [rep, delta] : ledger.greedy_uncapped)
    greedy_bad += rep.C_total != delta * static_cast<double>(rep.T) || rep.B_realized != delta;
  const bool ok = bad == 0 && greedy_bad == 0 && !ledger.adaptive_uncapped.empty() && !ledger.greedy_uncapped.empty();
  return {ok, fmt("%zu adaptive runs (%zu failing, worst relative error %.1e), %zu greedy runs (%zu failing)",
                  ledger.adaptive_uncapped.size(), bad, worst, ledger.greedy_uncapped.size(), greedy_bad)};
}

// ---------------------------------------------------------------- 6

Outcome em_conditions() {
  const TabularMdp mdp = GridWorld(grid(3, 0.0)).tabular();
  const PolicyTable target{1, 0, 0, 0, 3, 0, 1, 1, 0};
  const double clean_best = optimal_value(mdp, true_rewards(mdp)).overall;
  const double clean_target = evaluate_policy(mdp, target).overall;

  const double need = required_delta(mdp, target);
  const EmReport good = check_em_membership(mdp, adaptive(need * 1.01 + 1e-6), target);

  const double g = 5.0;
  const EmReport greedy = check_em_membership(mdp, {AttackKind::greedy, g, std::nullopt, std::nullopt, std::nullopt}, target);
  bool at_targets = !greedy.condition3_violations.empty();
  for (auto [s, a] : greedy.condition3_violations) at_targets = at_targets && target[static_cast<std::size_t>(s)] == a;

  const EmReport zero = check_em_membership(mdp, adaptive(0.0), target);
  const bool ok = good.condition2 && good.condition3 && !greedy.condition3 &&
                  std::abs(greedy.condition3_max_violation - g) < 1e-12 && at_targets && clean_target < clean_best &&
                  !zero.condition2;
  return {ok, fmt("required delta %.4f: cond2 %d (margin %.2e) cond3 %d; greedy: cond3 %d, violation %.3f at %zu target "
                  "pairs; delta 0 (target %.1f vs optimum %.1f): cond2 %d (margin %.3f)",
                  need, good.condition2, good.condition2_margin, good.condition3, greedy.condition3,
                  greedy.condition3_max_violation, greedy.condition3_violations.size(), clean_target, clean_best,
                  zero.condition2, zero.condition2_margin)};
}

// ---------------------------------------------------------------- 7

LearnerConfig gridworld_learner(std::int64_t T) {
  TabularQConfig q;
  q.epsilon_decay_steps = T / 10;
  return q;
}

TargetSet gridworld_targets() {
  TargetOptions o;
  o.T = 20000;
  o.snapshot_every = 100;
  return generate_targets(GridWorldSpec{}, gridworld_learner(200000), 7, o);
}

Outcome discrete_efficacy(const TargetSet& targets, Ledger& ledger) {
  const auto t0 = Clock::now();
  const std::int64_t T = 200000;
  const int repeats = 10;
  const TabularMdp mdp = GridWorld(GridWorldSpec{}).tabular();
  bool ok = true;
  std::string detail;
  for (const auto& tier : targets.tiers) {
    const double delta = 1.5 * dp_sufficient_delta(mdp, policy_table(mdp, tier.policy)) + 1.0;
    RunSpec spec{GridWorldSpec{}, gridworld_learner(T), AttackConfig{}, tier.policy, T, 4000};
    const ScenarioResult clean = run_scenario(Scenario::unbounded, spec, repeats, 100);
    spec.attack = adaptive(delta);
    const ScenarioResult attacked = run_scenario(Scenario::unbounded, spec, repeats, 100);
    for (const auto& r : attacked.reports) {
      ledger.adaptive_uncapped.push_back({r, delta});
      ledger.adaptive_labels.push_back("gridworld " + to_string(tier.tier));
    }
    const double ec = clean.aggregate.epsilon.mean, ea = attacked.aggregate.epsilon.mean;
    ok = ok && ea <= 0.15 && ea <= 0.5 * ec;
    detail += fmt("%s (value %.0f, delta %.1f): %.3f -> %.3f; ", to_string(tier.tier).c_str(), tier.value, delta, ec, ea);
  }
  // un-capped greedy runs for the accounting check
  RunSpec greedy{GridWorldSpec{}, gridworld_learner(T), {AttackKind::greedy, 2.0, std::nullopt, std::nullopt, std::nullopt},
                 targets.get(Tier::medium).policy, T, 4000};
  for (const auto& r : run_scenario(Scenario::unbounded, greedy, 3, 100).reports) ledger.greedy_uncapped.push_back({r, 2.0});
  const double t = seconds_since(t0);
  return {ok && t < 180.0, detail + fmt("%d repeats, %.1fs", repeats, t)};
}

// ---------------------------------------------------------------- 8

Outcome mountaincar(Ledger& ledger) {
  const auto t0 = Clock::now();
  const std::int64_t T = 240000;
  DqnConfig dqn;
  dqn.epsilon_decay_steps = T / 10;
  const EnvConfig env = MountainCarSpec{};
  Rng target_rng = Rng(0).substream(11);
  const Policy target = random_policy(dqn, *make_environment(env), target_rng);
  std::map<double, double> eps;
  for (double delta : {0.0, 1.0, 5.0}) {
    progress(fmt("mountaincar delta %.0f", delta));
    RunSpec spec{env, dqn, delta > 0 ? adaptive(delta) : AttackConfig{}, target, T, 4000};
    const TrainingResult r = run_single(spec, 0);
    eps[delta] = r.report.epsilon;
    if (delta > 0) {
      ledger.adaptive_uncapped.push_back({r.report, delta});
      ledger.adaptive_labels.push_back(fmt("mountaincar delta %.0f", delta));
    }
  }
  const double t = seconds_since(t0);
  const bool ok = eps[5] <= 0.5 * eps[0] && eps[5] <= eps[1] + 0.05 && t < 1200.0;
  return {ok, fmt("eps clean %.3f, delta 1 %.3f, delta 5 %.3f; %.0fs", eps[0], eps[1], eps[5], t)};
}

// ---------------------------------------------------------------- 9

Outcome hard_cap(const TargetSet& targets) {
  const auto t0 = Clock::now();
  const std::int64_t T = 200000;
  const int repeats = 10;
  const double delta = 5.0;
  const Policy& target = targets.get(Tier::medium).policy;
  RunSpec spec{GridWorldSpec{}, gridworld_learner(T), AttackConfig{}, target, T, 4000};
  const AggregateReport clean = run_scenario(Scenario::unbounded, spec, repeats, 100).aggregate;
  spec.attack = {AttackKind::adaptive, delta, std::nullopt, delta, 0.3 * static_cast<double>(T)};
  const AggregateReport ad = run_scenario(Scenario::hard_capped, spec, repeats, 100).aggregate;
  spec.attack.kind = AttackKind::greedy;
  const AggregateReport gr = run_scenario(Scenario::hard_capped, spec, repeats, 100).aggregate;
  auto separated = [](const MetricSummary& lo, const MetricSummary& hi) {
    return lo.mean < hi.mean &&
           (lo.mean + lo.ci_half_width < hi.mean - hi.ci_half_width || hi.mean - lo.mean >= 0.05);
  };
  const bool ok = separated(ad.epsilon, gr.epsilon) && separated(ad.epsilon, clean.epsilon);
  return {ok, fmt("medium target, B = %.0f, C/T = 0.3: adaptive %.3f +- %.3f, greedy %.3f +- %.3f, clean %.3f +- %.3f; %.1fs",
                  delta, ad.epsilon.mean, ad.epsilon.ci_half_width, gr.epsilon.mean, gr.epsilon.ci_half_width,
                  clean.epsilon.mean, clean.epsilon.ci_half_width, seconds_since(t0))};
}

// ---------------------------------------------------------------- 10

Outcome continuous_efficacy(Ledger& ledger) {
  const auto t0 = Clock::now();
  const std::int64_t T = 100000;
  DdpgConfig ddpg;
  ddpg.gamma = 0.9;
  ddpg.noise_decay_steps = T / 10;
  const EnvConfig env = PointMassSpec{};
  auto probe = make_environment(env);
  const double range = dynamic_cast<PointMass&>(*probe).reward_range();
  const double L = probe->action_space().diameter();
  Rng target_rng = Rng(0).substream(11);
  const Policy target = random_policy(ddpg, *probe, target_rng);
  const double delta = 2.0 * range;

  auto run = [&](AttackConfig attack, const std::string& label) {
    progress("pointmass " + label);
    return run_single({env, ddpg, attack, target, T, 4000}, 0).report;
  };
  const EfficiencyReport clean = run({}, "clean");
  const EfficiencyReport ad = run(adaptive(delta), "adaptive");
  ledger.adaptive_uncapped.push_back({ad, delta});
  ledger.adaptive_labels.push_back("pointmass adaptive");
  bool ok = ad.epsilon <= 0.5 * clean.epsilon;
  std::string detail = fmt("delta %.3f: clean %.3f, adaptive %.3f (C %.0f)", delta, clean.epsilon, ad.epsilon, ad.C_total);
  for (double r : {L / 2, L}) {
    const EfficiencyReport nb = run({AttackKind::neighborhood, delta, r, std::nullopt, std::nullopt}, fmt("r=%.3f", r));
    ok = ok && nb.epsilon > ad.epsilon && nb.C_total > ad.C_total;
    detail += fmt(", neighborhood r=%.3f %.3f (C %.0f)", r, nb.epsilon, nb.C_total);
  }
  const double t = seconds_since(t0);
  return {ok && t < 900.0, detail + fmt("; %.0fs", t)};
}

// ---------------------------------------------------------------- 11

Outcome log_shape(const Ledger& ledger) {
  std::size_t bad = 0;
  std::string worst;
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < ledger.adaptive_uncapped.size(); ++i) {
    const QuarterMeans q = quarter_means(ledger.adaptive_uncapped[i].first);
    if (!(q.last < q.first)) {
      ++bad;
      worst = ledger.adaptive_labels[i];
    }
    if (q.first > 0) worst_ratio = std::max(worst_ratio, q.last / q.first);
  }
  return {bad == 0 && !ledger.adaptive_uncapped.empty(),
          fmt("%zu runs, %zu without a drop%s%s, largest last/first ratio %.3f", ledger.adaptive_uncapped.size(), bad,
              bad ? " e.g. " : "", worst.c_str(), worst_ratio)};
}

}  // namespace

int main() {
  std::map<int, std::pair<std::string, Outcome>> results;
  auto record = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
    progress(fmt("criterion %d: %s", id, name.c_str()));
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    results[id] = {name, o};
    progress(fmt("criterion %d %s", id, o.pass ? "passed" : "FAILED"));
  };

  Ledger ledger;
  record(1, "distance properties", distance_properties);
  record(2, "gradient oracle", gradient_oracle);
  record(3, "value decomposition", decomposition);
  record(4, "gap dominance", gap_dominance);
  record(6, "EM condition checks", em_conditions);
  TargetSet targets;
  try {
    targets = gridworld_targets();
  } catch (const std::exception& e) {
    progress(std::string("target generation failed: ") + e.what());
  }
  record(7, "discrete efficacy", [&] { return discrete_efficacy(targets, ledger); });
  record(8, "mountaincar efficacy", [&] { return mountaincar(ledger); });
  record(9, "hard-cap ordering", [&] { return hard_cap(targets); });
  record(10, "continuous efficacy", [&] { return continuous_efficacy(ledger); });
  record(5, "budget accounting", [&] { return accounting(ledger); });
  record(11, "epoch curve shape", [&] { return log_shape(ledger); });

  int failed = 0;
  for (const auto& [id, entry] : results) {
    std::printf("criterion %2d %-22s %s  %s\n", id, entry.first.c_str(), entry.second.pass ? "PASS" : "FAIL",
                entry.second.detail.c_str());
    failed += !entry.second.pass;
  }
  std::printf("%zu criteria, %d failed\n", results.size(), failed);
  return failed ? 1 : 0;
}
