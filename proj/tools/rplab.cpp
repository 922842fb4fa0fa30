#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "rplab/io.hpp"
#include "rplab/oracle.hpp"

namespace fs = std::filesystem;
using namespace rplab;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  std::optional<int> jobs;
};

ExperimentConfig load_with_overrides(const Overrides& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (!o.out.empty()) cfg.output = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.repeats) {
    if (*o.repeats < 1) throw ConfigError("--repeats must be at least 1");
    cfg.repeats = *o.repeats;
  }
  if (o.jobs) {
    if (*o.jobs < 1) throw ConfigError("--jobs must be at least 1");
    cfg.jobs = *o.jobs;
  }
  return cfg;
}

std::string run_dir_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03zu", i);
  return buf;
}

Json space_json(const ActionSpace& space) {
  if (space.is_discrete()) return {{"kind", "discrete"}, {"count", space.count()}};
  return {{"kind", "box"}, {"lower", space.lower()}, {"upper", space.upper()}};
}

ActionSpace space_from_json(const Json& j) {
  if (j.at("kind") == "discrete") return ActionSpace::discrete(j.at("count").get<int>());
  return ActionSpace::box(j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>());
}

void write_json(const fs::path& p, const Json& j) { write_file(p.string(), j.dump(2) + "\n"); }

Json tier_manifest(const TargetSet& ts) {
  Json tiers = Json::object();
  for (const auto& t : ts.tiers)
    tiers[to_string(t.tier)] = {{"value", t.value}, {"snapshot_step", t.snapshot_step},
                                {"policy_file", to_string(t.tier) + ".policy"}};
  Json snaps = Json::array();
  for (const auto& s : ts.snapshots) snaps.push_back({{"step", s.step}, {"value", s.value}});
  return {{"tiers", tiers}, {"snapshots", snaps}};
}

void save_targets(const fs::path& dir, const TargetSet& ts, const ExperimentConfig& cfg) {
  for (const auto& t : ts.tiers)
    save_policy((dir / (to_string(t.tier) + ".policy")).string(),
                PolicyFile{t.policy, to_string(t.tier), t.value, t.snapshot_step, cfg.seed});
  Json m = tier_manifest(ts);
  m["seed"] = cfg.seed;
  m["environment"] = to_json(cfg.env);
  m["learner"] = to_json(cfg.learner);
  m["options"] = {{"T", cfg.target.options.T},
                  {"snapshot_every", cfg.target.options.snapshot_every},
                  {"eval_episodes", cfg.target.options.eval_episodes},
                  {"medium_fraction", cfg.target.options.medium_fraction}};
  write_json(dir / "manifest.json", m);
}

Policy resolve_target(const ExperimentConfig& cfg, const fs::path& out, Json& info) {
  auto env = make_environment(cfg.env);
  if (cfg.target.policy_file) {
    PolicyFile f = load_policy(*cfg.target.policy_file);
    if (!(f.policy.action_space() == env->action_space()))
      throw ConfigError("target.policy_file: action space does not match the environment");
    info = {{"policy_file", *cfg.target.policy_file}, {"tier", f.tier}, {"value", f.value}};
    return f.policy;
  }
  if (cfg.target.table) {
    Policy p = Policy::tabular(env->action_space(), *cfg.target.table);
    if (!env->enumerable() || static_cast<int>(cfg.target.table->size()) != env->num_states())
      throw ConfigError("target.table: needs one action per state of an enumerable environment");
    info = {{"table", *cfg.target.table}};
    return p;
  }
  TargetSet ts = generate_targets(cfg.env, cfg.learner, cfg.seed, cfg.target.options);
  save_targets(out / "targets", ts, cfg);
  const auto& t = ts.get(*cfg.target.tier);
  info = {{"tier", to_string(t.tier)}, {"value", t.value}, {"policy_file", "targets/" + to_string(t.tier) + ".policy"}};
  return t.policy;
}

int cmd_run(const Overrides& o) {
  const ExperimentConfig cfg = load_with_overrides(o);
  const fs::path out(cfg.output);
  fs::create_directories(out);

  Json target_info;
  const Policy target = resolve_target(cfg, out, target_info);
  auto env = make_environment(cfg.env);

  std::vector<Condition> conditions;
  bool has_clean = false;
  for (const auto& c : cfg.conditions) has_clean = has_clean || c.attack.kind == AttackKind::none;
  if (cfg.clean_baseline && !has_clean) conditions.push_back({"clean", AttackConfig{}});
  for (const auto& c : cfg.conditions) conditions.push_back(c);

  Json manifest = {{"config", to_json(cfg)},
                   {"target", target_info},
                   {"action_space", space_json(env->action_space())},
                   {"status", "running"},
                   {"conditions", Json::array()}};
  write_json(out / "manifest.json", manifest);

  bool failed = false;
  for (const auto& cond : conditions) {
    const fs::path cdir = out / cond.label;
    RunSpec spec{cfg.env, cfg.learner, cond.attack, target, cfg.T, cfg.epoch_len};
    if (cfg.scenario == Scenario::unbounded) spec.attack.cap_C.reset();
    std::vector<EfficiencyReport> reports(static_cast<std::size_t>(cfg.repeats));
    std::vector<std::string> errors(reports.size());
    parallel_for(reports.size(), cfg.jobs, [&](std::size_t i) {
      const fs::path rdir = cdir / run_dir_name(i);
      const std::uint64_t seed = cfg.seed + i;
      Json meta = {{"seed", seed}, {"condition", cond.label}, {"attack", to_json(spec.attack)},
                   {"scenario", to_string(cfg.scenario)}, {"action_space", space_json(env->action_space())}};
      try {
        TrainingResult r = run_single(spec, seed);
        write_step_log((rdir / "steps.csv").string(), r.log);
        Json rep = to_json(r.report);
        rep.update(meta);
        rep["complete"] = true;
        write_json(rdir / "report.json", rep);
        reports[i] = std::move(r.report);
      } catch (const RunAborted& e) {
        write_step_log((rdir / "steps.csv").string(), e.partial());
        meta["complete"] = false;
        meta["error"] = e.what();
        write_json(rdir / "report.json", meta);
        errors[i] = e.what();
      } catch (const std::exception& e) {
        meta["complete"] = false;
        meta["error"] = e.what();
        write_json(rdir / "report.json", meta);
        errors[i] = e.what();
      }
    });
    Json cinfo = {{"label", cond.label}, {"attack", to_json(spec.attack)}, {"dir", cond.label}};
    std::vector<EfficiencyReport> done;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (errors[i].empty()) {
        done.push_back(reports[i]);
      } else {
        failed = true;
        std::cerr << cond.label << "/" << run_dir_name(i) << ": " << errors[i] << "\n";
      }
    }
    if (!done.empty()) {
      const AggregateReport agg = aggregate(done);
      Json a = to_json(agg);
      a["condition"] = cond.label;
      a["attack"] = to_json(spec.attack);
      a["scenario"] = to_string(cfg.scenario);
      a["seeds"] = Json::array();
      for (const auto& r : done) a["seeds"].push_back(r.seed);
      a["complete"] = done.size() == reports.size();
      write_json(cdir / "aggregate.json", a);
      std::printf("%-28s n=%zu  eps=%.4f +- %.4f  C_total=%.6g  C/T=%.4f  B=%.4f\n", cond.label.c_str(), agg.n,
                  agg.epsilon.mean, agg.epsilon.ci_half_width, agg.C_total.mean, agg.C_per_step.mean,
                  agg.B_realized.mean);
    }
    manifest["conditions"].push_back(cinfo);
  }
  manifest["status"] = failed ? "incomplete" : "complete";
  write_json(out / "manifest.json", manifest);
  if (failed) {
    std::cerr << "run incomplete: see report.json files flagged complete=false\n";
    return 1;
  }
  return 0;
}

int cmd_targets(const Overrides& o) {
  const ExperimentConfig cfg = load_with_overrides(o);
  const fs::path dir = fs::path(cfg.output) / "targets";
  TargetSet ts;
  try {
    ts = generate_targets(cfg.env, cfg.learner, cfg.seed, cfg.target.options);
  } catch (const TargetGenerationError& e) {
    std::cerr << "targets: " << e.what() << "\n";
    return 2;
  }
  save_targets(dir, ts, cfg);
  for (const auto& t : ts.tiers)
    std::printf("%-7s value %.4f (snapshot step %lld)\n", to_string(t.tier).c_str(), t.value,
                static_cast<long long>(t.snapshot_step));
  std::printf("wrote %s\n", (dir / "manifest.json").string().c_str());
  return 0;
}

int cmd_verify(const Overrides& o) {
  const ExperimentConfig cfg = load_with_overrides(o);
  auto env = make_environment(cfg.env);
  if (!env->enumerable()) throw ConfigError("verify needs an enumerable environment (gridworld or tabular)");
  const TabularMdp mdp = env->tabular();
  if (cfg.conditions.size() != 1) throw ConfigError("verify needs exactly one attack");
  const AttackConfig attack = cfg.conditions.front().attack;

  const auto count = policy_count(mdp);
  if (!count || *count > kMaxEnumeratedPolicies) {
    std::cerr << "verify refused: " << mdp.num_actions() << "^" << mdp.num_states << " = "
              << (count ? std::to_string(*count) : std::string("more than 2^63")) << " policies exceeds the cap of "
              << kMaxEnumeratedPolicies << "\n";
    return 3;
  }

  Json target_info;
  const fs::path out(cfg.output);
  const PolicyTable target = policy_table(mdp, resolve_target(cfg, out, target_info));
  Json report = {{"environment", to_json(cfg.env)}, {"attack", to_json(attack)}, {"target", target}, {"policies", *count}};
  bool all = true;
  auto line = [&](const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %-26s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    all = all && ok;
  };
  char buf[256];

  const EmReport em = check_em_membership(mdp, attack, target);
  std::snprintf(buf, sizeof buf, "runner-up gap %.6g over %llu policies", em.condition2_margin,
                static_cast<unsigned long long>(em.policies_checked));
  line("em condition 2", em.condition2, buf);
  std::snprintf(buf, sizeof buf, "max violation %.6g at %zu (s, a) pairs", em.condition3_max_violation,
                em.condition3_violations.size());
  line("em condition 3", em.condition3, buf);
  report["em"] = {{"condition2", em.condition2},
                  {"condition2_margin", em.condition2_margin},
                  {"condition3", em.condition3},
                  {"condition3_max_violation", em.condition3_max_violation},
                  {"condition3_violations", em.condition3_violations}};

  double worst = 0.0;
  for_each_policy(mdp, [&](const PolicyTable& pi) { worst = std::max(worst, verify_decomposition(mdp, target, attack.delta, pi)); });
  std::snprintf(buf, sizeof buf, "max residual %.3g (adaptive, delta %.6g)", worst, attack.delta);
  line("value decomposition", worst <= 1e-9, buf);
  report["decomposition_residual"] = worst;

  const auto alternatives = generate_alternatives(mdp, target, attack.delta, cfg.seed, cfg.alternatives);
  const GapComparison gc = theorem2_gap_comparison(mdp, target, attack.delta, alternatives);
  std::snprintf(buf, sizeof buf, "adaptive gap %.6g, %zu of %zu alternatives accepted", gc.adaptive_gap, gc.accepted,
                gc.entries.size());
  line("gap dominance", gc.all_dominated, buf);
  Json entries = Json::array();
  for (const auto& e : gc.entries)
    entries.push_back({{"label", e.label}, {"accepted", e.accepted}, {"rejection", e.rejection}, {"gap", e.gap},
                       {"dominated", e.dominated}});
  report["gap_comparison"] = {{"adaptive_gap", gc.adaptive_gap}, {"alternatives", entries}};

  if (std::holds_alternative<TabularQConfig>(cfg.learner)) {
    AttackConfig run_attack = attack;
    run_attack.cap_C.reset();
    RunSpec spec{cfg.env, cfg.learner, run_attack, Policy::tabular(env->action_space(), target), cfg.T, cfg.epoch_len};
    const TrainingResult r = run_single(spec, cfg.seed);
    bool ok = true;
    std::string detail;
    if (attack.kind == AttackKind::greedy) {
      ok = r.report.C_total == attack.delta * static_cast<double>(r.report.T);
      std::snprintf(buf, sizeof buf, "greedy C_total %.10g vs delta*T %.10g", r.report.C_total,
                    attack.delta * static_cast<double>(r.report.T));
    } else {
      const AccountingCheck ac = theorem1_accounting_check(r.report, attack.delta);
      ok = attack.kind == AttackKind::none ? r.report.C_total == 0.0 : ac.ok;
      std::snprintf(buf, sizeof buf, "C_total %.10g vs delta*eps*T %.10g, B %.6g", ac.C_total, ac.expected_C,
                    r.report.B_realized);
    }
    line("budget accounting", ok, buf);
    report["accounting"] = to_json(r.report);
  }
  report["pass"] = all;
  write_json(out / "verify.json", report);
  return all ? 0 : 1;
}

int cmd_plotdata(const std::string& dir_arg) {
  const fs::path dir(dir_arg);
  std::vector<std::string> missing;
  if (!fs::exists(dir / "manifest.json")) {
    std::cerr << "missing artifact: " << (dir / "manifest.json").string() << "\n";
    return 1;
  }
  const Json manifest = Json::parse(read_file((dir / "manifest.json").string()));
  const fs::path pd = dir / "plotdata";
  fs::create_directories(pd);

  struct Row {
    std::string label;
    Json attack;
    AggregateReport agg;
  };
  std::vector<Row> rows;
  bool has_clean = false;
  for (const auto& c : manifest.at("conditions")) {
    const std::string label = c.at("label");
    const fs::path cdir = dir / c.at("dir").get<std::string>();
    const fs::path ap = cdir / "aggregate.json";
    if (!fs::exists(ap)) {
      missing.push_back(ap.string());
      continue;
    }
    const Json a = Json::parse(read_file(ap.string()));
    rows.push_back({label, c.at("attack"), aggregate_from_json(a)});
    if (c.at("attack").at("kind") == "none") has_clean = true;
    const std::size_t n = a.at("seeds").size();
    for (std::size_t i = 0; i < static_cast<std::size_t>(manifest.at("config").at("repeats").get<int>()); ++i) {
      const fs::path rp = cdir / run_dir_name(i) / "report.json";
      if (!fs::exists(rp)) {
        missing.push_back(rp.string());
        continue;
      }
      const Json rj = Json::parse(read_file(rp.string()));
      if (!rj.value("complete", false)) {
        missing.push_back(rp.string() + " (incomplete run)");
        continue;
      }
      const EfficiencyReport r = report_from_json(rj);
      std::string csv = "epoch,steps,mean_distance\n";
      for (const auto& p : r.epoch_curve)
        csv += std::to_string(p.epoch) + "," + std::to_string(p.steps) + "," + format_double(p.mean_distance) + "\n";
      write_file((pd / ("epochs_" + label + "_" + run_dir_name(i) + ".csv")).string(), csv);
    }
    (void)n;
  }
  if (!has_clean) missing.push_back("clean baseline condition (attack kind none)");

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    const std::string ka = a.attack.at("kind"), kb = b.attack.at("kind");
    const double da = a.attack.at("delta"), db = b.attack.at("delta");
    if (da != db) return da < db;
    return ka < kb;
  });

  std::string evd = "condition,kind,delta,radius,n,epsilon_mean,epsilon_ci\n";
  std::string evc = "condition,kind,delta,C_total_mean,C_total_ci,C_per_step_mean,C_per_step_ci,epsilon_mean,epsilon_ci\n";
  std::string agg = "condition,metric,mean,ci_half_width,n\n";
  for (const auto& r : rows) {
    const std::string kind = r.attack.at("kind");
    const double delta = kind == "none" ? 0.0 : r.attack.at("delta").get<double>();
    const std::string radius = r.attack.contains("radius") ? format_double(r.attack.at("radius")) : "";
    evd += r.label + "," + kind + "," + format_double(delta) + "," + radius + "," + std::to_string(r.agg.n) + "," +
           format_double(r.agg.epsilon.mean) + "," + format_double(r.agg.epsilon.ci_half_width) + "\n";
    evc += r.label + "," + kind + "," + format_double(delta) + "," + format_double(r.agg.C_total.mean) + "," +
           format_double(r.agg.C_total.ci_half_width) + "," + format_double(r.agg.C_per_step.mean) + "," +
           format_double(r.agg.C_per_step.ci_half_width) + "," + format_double(r.agg.epsilon.mean) + "," +
           format_double(r.agg.epsilon.ci_half_width) + "\n";
    const std::pair<const char*, const MetricSummary*> metrics[] = {{"epsilon", &r.agg.epsilon},
                                                                    {"C_total", &r.agg.C_total},
                                                                    {"C_per_step", &r.agg.C_per_step},
                                                                    {"B_realized", &r.agg.B_realized}};
    for (const auto& [name, m] : metrics)
      agg += r.label + "," + name + "," + format_double(m->mean) + "," + format_double(m->ci_half_width) + "," +
             std::to_string(r.agg.n) + "\n";
  }
  write_file((pd / "eps_vs_delta.csv").string(), evd);
  write_file((pd / "eps_vs_c.csv").string(), evc);
  write_file((pd / "aggregate.csv").string(), agg);
  for (const auto& m : missing) std::cerr << "missing artifact: " << m << "\n";
  std::printf("wrote %s\n", pd.string().c_str());
  return missing.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-poisoning laboratory"};
  app.require_subcommand(1);
  Overrides o;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats, jobs;
  std::string plot_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory (overrides the config)");
    sub->add_option("--seed", seed, "Base seed (overrides the config)");
    sub->add_option("--repeats", repeats, "Number of repeats (overrides the config)");
    sub->add_option("--jobs", jobs, "Parallel runs (overrides the config)");
  };
  auto* run = app.add_subcommand("run", "Train under the configured attacks and write logs and reports");
  add_common(run);
  auto* targets = app.add_subcommand("targets", "Generate random, medium and expert target policies");
  add_common(targets);
  auto* verify = app.add_subcommand("verify", "Run the exact oracle checks on an enumerable MDP");
  add_common(verify);
  auto* plot = app.add_subcommand("plotdata", "Emit CSV plot data from a run directory");
  plot->add_option("dir", plot_dir, "Run directory written by 'run'");
  plot->add_option("--out", plot_dir, "Run directory written by 'run'");

  CLI11_PARSE(app, argc, argv);
  o.seed = seed;
  o.repeats = repeats;
  o.jobs = jobs;
  try {
    if (run->parsed()) return cmd_run(o);
    if (targets->parsed()) return cmd_targets(o);
    if (verify->parsed()) return cmd_verify(o);
    if (plot->parsed()) {
      if (plot_dir.empty()) throw ConfigError("plotdata needs a run directory");
      return cmd_plotdata(plot_dir);
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const IntractableError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
