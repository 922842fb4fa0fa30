#include <pybind11/pybind11.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>

#include "rplab/distance.hpp"
#include "rplab/experiment.hpp"
#include "rplab/io.hpp"
#include "rplab/oracle.hpp"

namespace py = pybind11;
using namespace rplab;

namespace {

Policy target_for(const ExperimentConfig& cfg) {
  auto env = make_environment(cfg.env);
  if (cfg.target.policy_file) return load_policy(*cfg.target.policy_file).policy;
  if (cfg.target.table) return Policy::tabular(env->action_space(), *cfg.target.table);
  return generate_targets(cfg.env, cfg.learner, cfg.seed, cfg.target.options).get(*cfg.target.tier).policy;
}

// Trains every configured condition and returns reports and aggregates as JSON text.
std::string run_experiment(const std::string& config_text) {
  const ExperimentConfig cfg = parse_config(Json::parse(config_text));
  const Policy target = target_for(cfg);
  Json out = Json::object();
  py::gil_scoped_release release;
  for (const auto& cond : cfg.conditions) {
    const RunSpec spec{cfg.env, cfg.learner, cond.attack, target, cfg.T, cfg.epoch_len};
    const ScenarioResult r = run_scenario(cfg.scenario, spec, cfg.repeats, cfg.seed, cfg.jobs);
    Json reports = Json::array();
    for (const auto& rep : r.reports) reports.push_back(to_json(rep));
    out[cond.label] = {{"reports", reports}, {"aggregate", to_json(r.aggregate)}};
  }
  return out.dump();
}

std::string targets_json(const std::string& config_text) {
  const ExperimentConfig cfg = parse_config(Json::parse(config_text));
  const TargetSet ts = generate_targets(cfg.env, cfg.learner, cfg.seed, cfg.target.options);
  Json out = Json::object();
  for (const auto& t : ts.tiers) out[to_string(t.tier)] = {{"value", t.value}, {"snapshot_step", t.snapshot_step}};
  return out.dump();
}

TabularMdp mdp_from(const std::string& environment_text) {
  auto env = make_environment(parse_environment(Json::parse(environment_text)));
  return env->tabular();
}

AttackConfig attack_of(const std::string& kind, double delta, std::optional<double> radius,
                       std::optional<double> cap_B, std::optional<double> cap_C) {
  return {parse_attack_kind(kind), delta, radius, cap_B, cap_C};
}

}  // namespace

PYBIND11_MODULE(_rplab, m) {
  m.doc() = "Reward-poisoning attack lab";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<IntractableError>(m, "IntractableError", PyExc_RuntimeError);

  py::class_<Action>(m, "Action")
      .def_static("discrete", &Action::discrete)
      .def_static("continuous", &Action::continuous)
      .def_property_readonly("is_discrete", &Action::is_discrete)
      .def_property_readonly("index", &Action::index)
      .def_property_readonly("values", &Action::values)
      .def(py::self == py::self)
      .def("__repr__", [](const Action& a) {
        if (a.is_discrete()) return "Action.discrete(" + std::to_string(a.index()) + ")";
        std::string s = "Action.continuous([";
        for (std::size_t i = 0; i < a.values().size(); ++i) s += (i ? ", " : "") + format_double(a.values()[i]);
        return s + "])";
      });

  py::class_<ActionSpace>(m, "ActionSpace")
      .def_static("discrete", &ActionSpace::discrete)
      .def_static("box", &ActionSpace::box)
      .def_property_readonly("is_discrete", &ActionSpace::is_discrete)
      .def_property_readonly("count", &ActionSpace::count)
      .def_property_readonly("diameter", &ActionSpace::diameter)
      .def("contains", &ActionSpace::contains)
      .def("clip", &ActionSpace::clip);

  m.def("action_distance", &action_distance, py::arg("space"), py::arg("a"), py::arg("b"));
  m.def("raw_distance", &raw_distance);

  m.def(
      "perturbation",
      [](const std::string& kind, double delta, const ActionSpace& space, const Action& a, const Action& target,
         std::optional<double> radius) {
        const AttackConfig cfg = attack_of(kind, delta, radius, std::nullopt, std::nullopt);
        cfg.validate(space);
        return raw_perturbation(cfg, space, a, target);
      },
      py::arg("kind"), py::arg("delta"), py::arg("space"), py::arg("a"), py::arg("target"),
      py::arg("radius") = py::none());

  m.def(
      "govern",
      [](const std::vector<double>& raw, std::optional<double> cap_B, std::optional<double> cap_C) {
        const AttackConfig cfg{AttackKind::adaptive, 0.0, std::nullopt, cap_B, cap_C};
        BudgetLedger ledger;
        std::vector<double> out;
        for (double d : raw) out.push_back(govern(ledger, cfg, d));
        return out;
      },
      py::arg("raw"), py::arg("cap_B") = py::none(), py::arg("cap_C") = py::none());

  m.def("validate_config", [](const std::string& text) { return to_json(parse_config(Json::parse(text))).dump(); });
  m.def("run_experiment", &run_experiment, py::arg("config"));
  m.def("generate_targets", &targets_json, py::arg("config"));

  py::class_<TabularMdp>(m, "TabularMdp")
      .def_readonly("num_states", &TabularMdp::num_states)
      .def_property_readonly("num_actions", &TabularMdp::num_actions)
      .def_readonly("horizon", &TabularMdp::horizon);
  m.def("tabular_mdp", &mdp_from, py::arg("environment"));
  m.def("policy_value", [](const TabularMdp& mdp, const PolicyTable& pi) { return evaluate_policy(mdp, pi).overall; });
  m.def("divergence", [](const TabularMdp& mdp, const PolicyTable& pi, const PolicyTable& target) {
    return divergence(mdp, pi, target).overall;
  });
  m.def("policy_count", &policy_count);
  m.def("required_delta", &required_delta);
  m.def("dp_sufficient_delta", &dp_sufficient_delta, py::arg("mdp"), py::arg("target"), py::arg("tolerance") = 1e-6);
  m.def(
      "check_em_membership",
      [](const TabularMdp& mdp, const std::string& kind, double delta, const PolicyTable& target) {
        py::gil_scoped_release release;
        const EmReport r = check_em_membership(mdp, attack_of(kind, delta, std::nullopt, std::nullopt, std::nullopt),
                                               target);
        py::gil_scoped_acquire acquire;
        py::dict d;
        d["condition2"] = r.condition2;
        d["condition2_margin"] = r.condition2_margin;
        d["condition3"] = r.condition3;
        d["condition3_max_violation"] = r.condition3_max_violation;
        d["policies_checked"] = r.policies_checked;
        return d;
      },
      py::arg("mdp"), py::arg("kind"), py::arg("delta"), py::arg("target"));
  m.def("verify_decomposition", &verify_decomposition, py::arg("mdp"), py::arg("target"), py::arg("delta"),
        py::arg("pi"));
  m.def("min_gap", [](const TabularMdp& mdp, const std::string& kind, double delta, const PolicyTable& target) {
    return min_gap(mdp, attacked_rewards(mdp, attack_of(kind, delta, std::nullopt, std::nullopt, std::nullopt), target),
                   target);
  });
}
