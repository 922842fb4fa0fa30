#include "rplab/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace rplab {

namespace {

// Reads one JSON object, collecting "path: message" diagnostics instead of
// failing on the first problem.
class Section {
 public:
  Section(const Json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) error("", "expected an object");
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
  const Json* raw(const std::string& key) {
    if (!has(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void error(const std::string& key, const std::string& msg) {
    errors_.push_back((key.empty() ? (path_.empty() ? std::string("config") : path_) : field(key)) + ": " + msg);
  }

  std::optional<double> number(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      error(key, "expected a number");
      return std::nullopt;
    }
    return v->get<double>();
  }
  double number(const std::string& key, double fallback) { return number(key).value_or(fallback); }

  std::optional<std::int64_t> integer(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) {
      error(key, "expected an integer");
      return std::nullopt;
    }
    return v->get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) { return integer(key).value_or(fallback); }

  std::optional<std::string> string(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      error(key, "expected a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      error(key, "expected true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  std::optional<std::vector<int>> int_list(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    std::vector<int> out;
    if (!v->is_array()) {
      error(key, "expected a list of integers");
      return std::nullopt;
    }
    for (const auto& e : *v) {
      if (!e.is_number_integer()) {
        error(key, "expected a list of integers");
        return std::nullopt;
      }
      out.push_back(e.get<int>());
    }
    return out;
  }

  void require(const std::string& key) {
    if (!has(key)) error(key, "missing required field");
  }

  void reject_unknown() {
    if (!j_.is_object()) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) error(key, "unknown key");
  }

  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void throw_if(const std::vector<std::string>& errors) {
  if (errors.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

Cell parse_cell(Section& sec, const std::string& key, Cell fallback) {
  auto v = sec.int_list(key);
  if (!v) return fallback;
  if (v->size() != 2) {
    sec.error(key, "expected [x, y]");
    return fallback;
  }
  return {(*v)[0], (*v)[1]};
}

TabularMdp parse_tabular(Section& sec) {
  sec.require("num_states");
  sec.require("num_actions");
  const int ns = static_cast<int>(sec.integer("num_states", 1));
  const int na = static_cast<int>(sec.integer("num_actions", 2));
  TabularMdp mdp = TabularMdp::discrete(std::max(ns, 1), std::max(na, 2), static_cast<int>(sec.integer("horizon", 10)));
  if (const Json* r = sec.raw("rewards")) {
    try {
      mdp.rewards = r->get<std::vector<std::vector<double>>>();
    } catch (const std::exception&) {
      sec.error("rewards", "expected a states x actions table of numbers");
    }
  }
  if (const Json* t = sec.raw("transitions")) {
    // transitions[s][a] = [[next, prob], ...]
    try {
      const auto raw = t->get<std::vector<std::vector<std::vector<std::pair<int, double>>>>>();
      mdp.transitions.assign(raw.size(), {});
      for (std::size_t s = 0; s < raw.size(); ++s) {
        mdp.transitions[s].resize(raw[s].size());
        for (std::size_t a = 0; a < raw[s].size(); ++a)
          for (const auto& [next, p] : raw[s][a]) mdp.transitions[s][a].push_back({next, p});
      }
    } catch (const std::exception&) {
      sec.error("transitions", "expected transitions[s][a] = [[next_state, probability], ...]");
    }
  }
  if (const Json* i = sec.raw("initial")) {
    try {
      mdp.initial = i->get<std::vector<double>>();
    } catch (const std::exception&) {
      sec.error("initial", "expected a list of probabilities");
    }
  }
  if (const Json* t = sec.raw("terminal")) {
    try {
      mdp.terminal = t->get<std::vector<bool>>();
    } catch (const std::exception&) {
      sec.error("terminal", "expected a list of booleans");
    }
  }
  return mdp;
}

EnvConfig parse_environment_section(Section& sec) {
  const auto name = sec.string("name");
  if (!name) {
    sec.require("name");
    return GridWorldSpec{};
  }
  EnvConfig out;
  if (*name == "gridworld") {
    GridWorldSpec g;
    g.width = static_cast<int>(sec.integer("width", g.width));
    g.height = static_cast<int>(sec.integer("height", g.height));
    g.start = parse_cell(sec, "start", g.start);
    g.goal = parse_cell(sec, "goal", {g.width - 1, g.height - 1});
    g.step_reward = sec.number("step_reward", g.step_reward);
    g.goal_reward = sec.number("goal_reward", g.goal_reward);
    g.slip_prob = sec.number("slip_prob", g.slip_prob);
    g.horizon = static_cast<int>(sec.integer("horizon", g.horizon));
    out = g;
  } else if (*name == "mountaincar") {
    MountainCarSpec m;
    m.horizon = static_cast<int>(sec.integer("horizon", m.horizon));
    m.force = sec.number("force", m.force);
    m.gravity = sec.number("gravity", m.gravity);
    m.step_reward = sec.number("step_reward", m.step_reward);
    out = m;
  } else if (*name == "cartpole") {
    CartPoleSpec c;
    c.horizon = static_cast<int>(sec.integer("horizon", c.horizon));
    out = c;
  } else if (*name == "pointmass") {
    PointMassSpec p;
    if (auto t = sec.raw("target")) {
      try {
        const auto v = t->get<std::vector<double>>();
        if (v.size() != 2) throw std::runtime_error("size");
        p.target_x = v[0];
        p.target_y = v[1];
      } catch (const std::exception&) {
        sec.error("target", "expected [x, y]");
      }
    }
    p.dt = sec.number("dt", p.dt);
    p.max_speed = sec.number("max_speed", p.max_speed);
    p.action_penalty = sec.number("action_penalty", p.action_penalty);
    p.horizon = static_cast<int>(sec.integer("horizon", p.horizon));
    out = p;
  } else if (*name == "tabular") {
    out = parse_tabular(sec);
  } else {
    sec.error("name", "unknown environment '" + *name + "' (expected gridworld, mountaincar, cartpole, pointmass or tabular)");
  }
  sec.reject_unknown();
  return out;
}

std::optional<std::int64_t> optional_steps(Section& sec, const std::string& key) {
  auto v = sec.integer(key);
  if (v && *v < 1) sec.error(key, "must be at least 1");
  return v;
}

LearnerConfig parse_learner(Section& sec) {
  const auto name = sec.string("name");
  if (!name) {
    sec.require("name");
    return TabularQConfig{};
  }
  LearnerConfig out;
  if (*name == "tabular") {
    TabularQConfig c;
    c.alpha = sec.number("alpha", c.alpha);
    c.gamma = sec.number("gamma", c.gamma);
    c.epsilon_start = sec.number("epsilon_start", c.epsilon_start);
    c.epsilon_end = sec.number("epsilon_end", c.epsilon_end);
    c.epsilon_decay_steps = optional_steps(sec, "epsilon_decay_steps");
    out = c;
  } else if (*name == "dqn") {
    DqnConfig c;
    if (auto h = sec.int_list("hidden")) c.hidden = *h;
    c.learning_rate = sec.number("learning_rate", c.learning_rate);
    c.gamma = sec.number("gamma", c.gamma);
    c.buffer_capacity = static_cast<std::size_t>(sec.integer("buffer_capacity", static_cast<std::int64_t>(c.buffer_capacity)));
    c.batch_size = static_cast<std::size_t>(sec.integer("batch_size", static_cast<std::int64_t>(c.batch_size)));
    c.warmup = sec.integer("warmup", c.warmup);
    c.sync_every = sec.integer("sync_every", c.sync_every);
    c.double_q = sec.boolean("double_q", c.double_q);
    c.dueling = sec.boolean("dueling", c.dueling);
    c.huber = sec.boolean("huber", c.huber);
    c.epsilon_start = sec.number("epsilon_start", c.epsilon_start);
    c.epsilon_end = sec.number("epsilon_end", c.epsilon_end);
    c.epsilon_decay_steps = optional_steps(sec, "epsilon_decay_steps");
    out = c;
  } else if (*name == "ddpg") {
    DdpgConfig c;
    if (auto h = sec.int_list("hidden")) c.hidden = *h;
    c.actor_learning_rate = sec.number("actor_learning_rate", c.actor_learning_rate);
    c.critic_learning_rate = sec.number("critic_learning_rate", c.critic_learning_rate);
    c.gamma = sec.number("gamma", c.gamma);
    c.tau = sec.number("tau", c.tau);
    c.buffer_capacity = static_cast<std::size_t>(sec.integer("buffer_capacity", static_cast<std::int64_t>(c.buffer_capacity)));
    c.batch_size = static_cast<std::size_t>(sec.integer("batch_size", static_cast<std::int64_t>(c.batch_size)));
    c.warmup = sec.integer("warmup", c.warmup);
    c.noise_start = sec.number("noise_start", c.noise_start);
    c.noise_end = sec.number("noise_end", c.noise_end);
    c.noise_decay_steps = optional_steps(sec, "noise_decay_steps");
    c.twin_critics = sec.boolean("twin_critics", c.twin_critics);
    c.policy_delay = static_cast<int>(sec.integer("policy_delay", c.policy_delay));
    c.target_noise = sec.number("target_noise", c.target_noise);
    c.target_noise_clip = sec.number("target_noise_clip", c.target_noise_clip);
    out = c;
  } else {
    sec.error("name", "unknown learner '" + *name + "' (expected tabular, dqn or ddpg)");
  }
  sec.reject_unknown();
  return out;
}

Condition parse_condition(Section& sec, std::int64_t T) {
  Condition c;
  const auto kind = sec.string("kind");
  if (!kind) sec.require("kind");
  try {
    if (kind) c.attack.kind = parse_attack_kind(*kind);
  } catch (const ConfigError& e) {
    sec.error("kind", e.what());
  }
  c.attack.delta = sec.number("delta", 0.0);
  c.attack.radius = sec.number("radius");
  c.attack.cap_B = sec.number("cap_B");
  c.attack.cap_C = sec.number("cap_C");
  if (auto per_step = sec.number("cap_C_per_step")) {
    if (c.attack.cap_C) sec.error("cap_C_per_step", "give either cap_C or cap_C_per_step");
    c.attack.cap_C = *per_step * static_cast<double>(T);
  }
  std::ostringstream label;
  label << to_string(c.attack.kind) << "_d" << c.attack.delta;
  if (c.attack.radius) label << "_r" << *c.attack.radius;
  c.label = sec.string("label").value_or(label.str());
  sec.reject_unknown();
  return c;
}

}  // namespace

EnvConfig parse_environment(const Json& j) {
  std::vector<std::string> errors;
  Section sec(j, "environment", errors);
  EnvConfig env = parse_environment_section(sec);
  throw_if(errors);
  make_environment(env);
  return env;
}

ExperimentConfig parse_config(const Json& j) {
  std::vector<std::string> errors;
  Section root(j, "", errors);
  ExperimentConfig cfg;
  cfg.T = root.integer("T", cfg.T);
  if (cfg.T < 1) root.error("T", "must be at least 1");
  cfg.epoch_len = root.integer("epoch_len", cfg.epoch_len);
  if (cfg.epoch_len < 1) root.error("epoch_len", "must be at least 1");
  cfg.repeats = static_cast<int>(root.integer("repeats", cfg.repeats));
  if (cfg.repeats < 1) root.error("repeats", "must be at least 1");
  const auto seed = root.integer("seed", 0);
  if (seed < 0) root.error("seed", "must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(std::max<std::int64_t>(seed, 0));
  cfg.jobs = static_cast<int>(root.integer("jobs", cfg.jobs));
  if (cfg.jobs < 1) root.error("jobs", "must be at least 1");
  cfg.output = root.string("output").value_or(cfg.output);
  cfg.clean_baseline = root.boolean("clean_baseline", cfg.clean_baseline);
  cfg.alternatives = static_cast<std::size_t>(root.integer("alternatives", 20));
  cfg.sampled_policies = static_cast<std::size_t>(root.integer("sampled_policies", 500));
  if (auto s = root.string("scenario")) {
    try {
      cfg.scenario = parse_scenario(*s);
    } catch (const ConfigError& e) {
      root.error("scenario", e.what());
    }
  }

  root.require("environment");
  if (const Json* e = root.raw("environment")) {
    Section sec(*e, "environment", errors);
    cfg.env = parse_environment_section(sec);
  }
  if (const Json* l = root.raw("learner")) {
    Section sec(*l, "learner", errors);
    cfg.learner = parse_learner(sec);
  }

  const Json* single = root.raw("attack");
  const Json* list = root.raw("conditions");
  if (single && list) root.error("attack", "give either attack or conditions, not both");
  if (single) {
    Section sec(*single, "attack", errors);
    cfg.conditions.push_back(parse_condition(sec, cfg.T));
  } else if (list) {
    if (!list->is_array()) {
      root.error("conditions", "expected a list of attack objects");
    } else {
      for (std::size_t i = 0; i < list->size(); ++i) {
        Section sec((*list)[i], "conditions[" + std::to_string(i) + "]", errors);
        cfg.conditions.push_back(parse_condition(sec, cfg.T));
      }
    }
  }

  if (const Json* t = root.raw("target")) {
    Section sec(*t, "target", errors);
    if (auto tier = sec.string("tier")) {
      try {
        cfg.target.tier = parse_tier(*tier);
      } catch (const ConfigError& e) {
        sec.error("tier", e.what());
      }
    }
    cfg.target.policy_file = sec.string("policy_file");
    cfg.target.table = sec.int_list("table");
    const int given = cfg.target.tier.has_value() + cfg.target.policy_file.has_value() + cfg.target.table.has_value();
    if (given != 1) sec.error("", "give exactly one of tier, policy_file or table");
    auto& o = cfg.target.options;
    o.T = sec.integer("T", o.T);
    o.snapshot_every = sec.integer("snapshot_every", o.snapshot_every);
    o.eval_episodes = static_cast<int>(sec.integer("eval_episodes", o.eval_episodes));
    o.medium_fraction = sec.number("medium_fraction", o.medium_fraction);
    if (!(o.medium_fraction > 0.0 && o.medium_fraction < 1.0)) sec.error("medium_fraction", "must lie in (0, 1)");
    if (o.snapshot_every < 1 || o.snapshot_every > o.T) sec.error("snapshot_every", "must lie in [1, T]");
    if (o.eval_episodes < 1) sec.error("eval_episodes", "must be at least 1");
    sec.reject_unknown();
  } else {
    cfg.target.tier = Tier::random;
  }
  root.reject_unknown();

  // Cross-field checks against the environment's action space.
  if (errors.empty()) {
    std::unique_ptr<Environment> env;
    try {
      if (const auto* g = std::get_if<GridWorldSpec>(&cfg.env)) g->validate();
      if (const auto* m = std::get_if<TabularMdp>(&cfg.env)) m->validate();
      env = make_environment(cfg.env);
    } catch (const std::exception& e) {
      errors.push_back(std::string("environment: ") + e.what());
    }
    if (env) {
      for (std::size_t i = 0; i < cfg.conditions.size(); ++i) {
        const std::string where = single ? "attack" : "conditions[" + std::to_string(i) + "]";
        try {
          cfg.conditions[i].attack.validate(env->action_space());
        } catch (const ConfigError& e) {
          errors.push_back(where + ": " + e.what());
        }
        if (cfg.scenario == Scenario::hard_capped && cfg.conditions[i].attack.kind != AttackKind::none &&
            !cfg.conditions[i].attack.cap_C)
          errors.push_back(where + ": the hard-capped scenario needs cap_C or cap_C_per_step");
      }
      try {
        Rng probe(0);
        make_learner(cfg.learner, *env, cfg.T, probe);
      } catch (const ConfigError& e) {
        errors.push_back(std::string("learner: ") + e.what());
      }
    }
  }
  throw_if(errors);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

Json to_json(const EnvConfig& env) {
  return std::visit(
      [](const auto& e) -> Json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, GridWorldSpec>) {
          return {{"name", "gridworld"},      {"width", e.width},
                  {"height", e.height},       {"start", {e.start.x, e.start.y}},
                  {"goal", {e.goal.x, e.goal.y}}, {"step_reward", e.step_reward},
                  {"goal_reward", e.goal_reward}, {"slip_prob", e.slip_prob},
                  {"horizon", e.horizon}};
        } else if constexpr (std::is_same_v<T, MountainCarSpec>) {
          return {{"name", "mountaincar"}, {"horizon", e.horizon}, {"force", e.force},
                  {"gravity", e.gravity},  {"step_reward", e.step_reward}};
        } else if constexpr (std::is_same_v<T, CartPoleSpec>) {
          return {{"name", "cartpole"}, {"horizon", e.horizon}};
        } else if constexpr (std::is_same_v<T, PointMassSpec>) {
          return {{"name", "pointmass"},    {"target", {e.target_x, e.target_y}},
                  {"dt", e.dt},             {"max_speed", e.max_speed},
                  {"action_penalty", e.action_penalty}, {"horizon", e.horizon}};
        } else {
          Json transitions = Json::array();
          for (const auto& row : e.transitions) {
            Json r = Json::array();
            for (const auto& succ : row) {
              Json list = Json::array();
              for (const auto& x : succ) list.push_back({x.state, x.prob});
              r.push_back(list);
            }
            transitions.push_back(r);
          }
          return {{"name", "tabular"},       {"num_states", e.num_states}, {"num_actions", e.num_actions()},
                  {"horizon", e.horizon},    {"rewards", e.rewards},       {"transitions", transitions},
                  {"initial", e.initial},    {"terminal", e.terminal}};
        }
      },
      env);
}

Json to_json(const LearnerConfig& learner) {
  return std::visit(
      [](const auto& c) -> Json {
        using T = std::decay_t<decltype(c)>;
        Json j;
        if constexpr (std::is_same_v<T, TabularQConfig>) {
          j = {{"name", "tabular"}, {"alpha", c.alpha}, {"gamma", c.gamma},
               {"epsilon_start", c.epsilon_start}, {"epsilon_end", c.epsilon_end}};
          if (c.epsilon_decay_steps) j["epsilon_decay_steps"] = *c.epsilon_decay_steps;
        } else if constexpr (std::is_same_v<T, DqnConfig>) {
          j = {{"name", "dqn"},        {"hidden", c.hidden},     {"learning_rate", c.learning_rate},
               {"gamma", c.gamma},     {"buffer_capacity", c.buffer_capacity},
               {"batch_size", c.batch_size}, {"warmup", c.warmup}, {"sync_every", c.sync_every},
               {"double_q", c.double_q}, {"dueling", c.dueling}, {"huber", c.huber},
               {"epsilon_start", c.epsilon_start}, {"epsilon_end", c.epsilon_end}};
          if (c.epsilon_decay_steps) j["epsilon_decay_steps"] = *c.epsilon_decay_steps;
        } else {
          j = {{"name", "ddpg"},
               {"hidden", c.hidden},
               {"actor_learning_rate", c.actor_learning_rate},
               {"critic_learning_rate", c.critic_learning_rate},
               {"gamma", c.gamma},
               {"tau", c.tau},
               {"buffer_capacity", c.buffer_capacity},
               {"batch_size", c.batch_size},
               {"warmup", c.warmup},
               {"noise_start", c.noise_start},
               {"noise_end", c.noise_end},
               {"twin_critics", c.twin_critics},
               {"policy_delay", c.policy_delay},
               {"target_noise", c.target_noise},
               {"target_noise_clip", c.target_noise_clip}};
          if (c.noise_decay_steps) j["noise_decay_steps"] = *c.noise_decay_steps;
        }
        return j;
      },
      learner);
}

Json to_json(const AttackConfig& a) {
  Json j = {{"kind", to_string(a.kind)}, {"delta", a.delta}};
  if (a.radius) j["radius"] = *a.radius;
  if (a.cap_B) j["cap_B"] = *a.cap_B;
  if (a.cap_C) j["cap_C"] = *a.cap_C;
  return j;
}

Json to_json(const ExperimentConfig& cfg) {
  Json conditions = Json::array();
  for (const auto& c : cfg.conditions) {
    Json j = to_json(c.attack);
    j["label"] = c.label;
    conditions.push_back(j);
  }
  Json target;
  if (cfg.target.tier) target["tier"] = to_string(*cfg.target.tier);
  if (cfg.target.policy_file) target["policy_file"] = *cfg.target.policy_file;
  if (cfg.target.table) target["table"] = *cfg.target.table;
  target["T"] = cfg.target.options.T;
  target["snapshot_every"] = cfg.target.options.snapshot_every;
  target["eval_episodes"] = cfg.target.options.eval_episodes;
  target["medium_fraction"] = cfg.target.options.medium_fraction;
  return {{"environment", to_json(cfg.env)},
          {"learner", to_json(cfg.learner)},
          {"conditions", conditions},
          {"scenario", to_string(cfg.scenario)},
          {"clean_baseline", cfg.clean_baseline},
          {"target", target},
          {"T", cfg.T},
          {"epoch_len", cfg.epoch_len},
          {"repeats", cfg.repeats},
          {"seed", cfg.seed},
          {"jobs", cfg.jobs},
          {"output", cfg.output},
          {"alternatives", cfg.alternatives},
          {"sampled_policies", cfg.sampled_policies}};
}

// ---- policies ----

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void put_list(std::ostream& os, const std::string& key, const std::vector<double>& v) {
  os << key << ' ' << v.size();
  for (double x : v) os << ' ' << format_double(x);
  os << '\n';
}

std::string head_name(OutputHead h) {
  switch (h) {
    case OutputHead::linear:
      return "linear";
    case OutputHead::tanh:
      return "tanh";
    case OutputHead::dueling:
      return "dueling";
  }
  return "linear";
}

OutputHead parse_head(const std::string& s) {
  if (s == "linear") return OutputHead::linear;
  if (s == "tanh") return OutputHead::tanh;
  if (s == "dueling") return OutputHead::dueling;
  throw ConfigError("policy file: unknown output head '" + s + "'");
}

class Tokens {
 public:
  explicit Tokens(const std::string& text) : in_(text) {}
  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw ConfigError("policy file: unexpected end of input");
    return w;
  }
  void expect(const std::string& w) {
    const std::string got = word();
    if (got != w) throw ConfigError("policy file: expected '" + w + "', found '" + got + "'");
  }
  double number() {
    const std::string w = word();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(w, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != w.size()) throw ConfigError("policy file: expected a number, found '" + w + "'");
    return v;
  }
  long long integer() {
    const std::string w = word();
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(w, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != w.size()) throw ConfigError("policy file: expected an integer, found '" + w + "'");
    return v;
  }
  std::vector<double> list(const std::string& key) {
    expect(key);
    const auto n = integer();
    if (n < 0) throw ConfigError("policy file: negative length for " + key);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = number();
    return v;
  }
  std::string rest_of_line() {
    std::string line;
    std::getline(in_, line);
    const auto b = line.find_first_not_of(' ');
    return b == std::string::npos ? "" : line.substr(b);
  }

 private:
  std::istringstream in_;
};

}  // namespace

std::string format_policy(const PolicyFile& file) {
  std::ostringstream os;
  const Policy& p = file.policy;
  const ActionSpace& space = p.action_space();
  os << "rplab-policy v1\n";
  os << "tier " << (file.tier.empty() ? "-" : file.tier) << '\n';
  os << "value " << format_double(file.value) << '\n';
  os << "snapshot_step " << file.snapshot_step << '\n';
  os << "seed " << file.seed << '\n';
  if (space.is_discrete()) {
    os << "space discrete " << space.count() << '\n';
  } else {
    os << "space box " << space.dimension() << '\n';
    put_list(os, "lower", space.lower());
    put_list(os, "upper", space.upper());
  }
  switch (p.kind()) {
    case Policy::Kind::tabular: {
      os << "kind tabular\ntable " << p.table().size();
      for (int a : p.table()) os << ' ' << a;
      os << '\n';
      break;
    }
    case Policy::Kind::constant: {
      const Action& a = p.constant_action();
      os << "kind constant\n";
      if (a.is_discrete()) {
        os << "action " << a.index() << '\n';
      } else {
        put_list(os, "action", a.values());
      }
      break;
    }
    case Policy::Kind::network: {
      const NetworkPolicy& n = p.network();
      os << "kind network\nhead " << head_name(n.net.head()) << '\n';
      os << "sizes " << n.net.sizes().size();
      for (int s : n.net.sizes()) os << ' ' << s;
      os << '\n';
      put_list(os, "offset", n.input_offset);
      put_list(os, "scale", n.input_scale);
      for (std::size_t l = 0; l < n.net.layers().size(); ++l) {
        const auto& layer = n.net.layers()[l];
        os << "layer " << l << ' ' << layer.weight.rows() << ' ' << layer.weight.cols() << '\n';
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
          for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) os << (c ? " " : "") << format_double(layer.weight(r, c));
          os << '\n';
        }
        os << "bias";
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) os << ' ' << format_double(layer.bias(r));
        os << '\n';
      }
      break;
    }
  }
  os << "end\n";
  return os.str();
}

PolicyFile parse_policy(const std::string& text) {
  Tokens in(text);
  in.expect("rplab-policy");
  const std::string version = in.word();
  if (version != "v1") throw ConfigError("policy file: unsupported version '" + version + "'");
  PolicyFile f;
  in.expect("tier");
  f.tier = in.word();
  if (f.tier == "-") f.tier.clear();
  in.expect("value");
  f.value = in.number();
  in.expect("snapshot_step");
  f.snapshot_step = in.integer();
  in.expect("seed");
  f.seed = static_cast<std::uint64_t>(in.integer());

  in.expect("space");
  ActionSpace space;
  const std::string kind = in.word();
  if (kind == "discrete") {
    space = ActionSpace::discrete(static_cast<int>(in.integer()));
  } else if (kind == "box") {
    const auto dim = in.integer();
    auto lo = in.list("lower");
    auto hi = in.list("upper");
    if (static_cast<long long>(lo.size()) != dim || static_cast<long long>(hi.size()) != dim)
      throw ConfigError("policy file: box bounds do not match the dimension");
    space = ActionSpace::box(std::move(lo), std::move(hi));
  } else {
    throw ConfigError("policy file: unknown space '" + kind + "'");
  }

  in.expect("kind");
  const std::string pkind = in.word();
  if (pkind == "tabular") {
    in.expect("table");
    const auto n = in.integer();
    if (n < 0) throw ConfigError("policy file: negative table size");
    std::vector<int> table(static_cast<std::size_t>(n));
    for (auto& a : table) a = static_cast<int>(in.integer());
    f.policy = Policy::tabular(space, std::move(table));
  } else if (pkind == "constant") {
    if (space.is_discrete()) {
      in.expect("action");
      f.policy = Policy::constant(space, Action::discrete(static_cast<int>(in.integer())));
    } else {
      f.policy = Policy::constant(space, Action::continuous(in.list("action")));
    }
  } else if (pkind == "network") {
    in.expect("head");
    const OutputHead head = parse_head(in.word());
    in.expect("sizes");
    const auto count = in.integer();
    if (count < 2) throw ConfigError("policy file: a network needs at least two layer sizes");
    std::vector<int> sizes(static_cast<std::size_t>(count));
    for (auto& s : sizes) s = static_cast<int>(in.integer());
    NetworkPolicy np;
    np.input_offset = in.list("offset");
    np.input_scale = in.list("scale");
    std::vector<MlpNet::Layer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      in.expect("layer");
      if (in.integer() != static_cast<long long>(l)) throw ConfigError("policy file: layers out of order");
      const auto rows = in.integer(), cols = in.integer();
      if (rows < 1 || cols < 1) throw ConfigError("policy file: bad layer shape");
      MlpNet::Layer layer{MlpNet::Matrix(rows, cols), MlpNet::Vector(rows)};
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = in.number();
      in.expect("bias");
      for (Eigen::Index r = 0; r < rows; ++r) layer.bias(r) = in.number();
      layers.push_back(std::move(layer));
    }
    np.net = MlpNet(std::move(sizes), head, std::move(layers));
    f.policy = Policy::network(space, std::move(np));
  } else {
    throw ConfigError("policy file: unknown policy kind '" + pkind + "'");
  }
  in.expect("end");
  return f;
}

void save_policy(const std::string& path, const PolicyFile& file) { write_file(path, format_policy(file)); }

PolicyFile load_policy(const std::string& path) {
  try {
    return parse_policy(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---- step logs ----

namespace {

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> split_numbers(const std::string& field) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= field.size()) {
    const auto end = field.find(';', start);
    const std::string part = field.substr(start, end == std::string::npos ? std::string::npos : end - start);
    std::size_t used = 0;
    out.push_back(std::stod(part, &used));
    if (used != part.size()) throw std::invalid_argument(part);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

constexpr const char* kLogHeader = "t,episode,s,a,r_true,delta,r_observed,distance,done";

}  // namespace

void write_step_log(const std::string& path, const std::vector<TransitionRecord>& log) {
  std::string out = kLogHeader;
  out += '\n';
  for (const auto& r : log) {
    out += std::to_string(r.t);
    out += ',';
    out += std::to_string(r.episode);
    out += ',';
    out += join(r.s);
    out += ',';
    out += r.a.is_discrete() ? std::to_string(r.a.index()) : join(r.a.values());
    out += ',';
    out += format_double(r.r_true);
    out += ',';
    out += format_double(r.delta);
    out += ',';
    out += format_double(r.r_observed);
    out += ',';
    out += format_double(r.distance);
    out += ',';
    out += r.done ? '1' : '0';
    out += '\n';
  }
  write_file(path, out);
}

std::vector<TransitionRecord> read_step_log(const std::string& path, const ActionSpace& space) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kLogHeader) throw ConfigError(path + ": missing or unexpected step-log header");
  std::vector<TransitionRecord> log;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto end = line.find(',', start);
      f.push_back(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (f.size() != 9) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 9 columns");
    try {
      TransitionRecord r;
      r.t = std::stoll(f[0]);
      r.episode = std::stoll(f[1]);
      r.s = split_numbers(f[2]);
      r.a = space.is_discrete() ? Action::discrete(std::stoi(f[3])) : Action::continuous(split_numbers(f[3]));
      r.r_true = std::stod(f[4]);
      r.delta = std::stod(f[5]);
      r.r_observed = std::stod(f[6]);
      r.distance = std::stod(f[7]);
      if (f[8] != "0" && f[8] != "1") throw std::invalid_argument("done");
      r.done = f[8] == "1";
      log.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  return log;
}

// ---- reports ----

Json to_json(const EfficiencyReport& r) {
  Json curve = Json::array();
  for (const auto& p : r.epoch_curve) curve.push_back({p.epoch, p.steps, p.mean_distance});
  return {{"T", r.T},
          {"epsilon", r.epsilon},
          {"C_total", r.C_total},
          {"C_per_step", r.C_per_step},
          {"B_realized", r.B_realized},
          {"epoch_len", r.epoch_len},
          {"epoch_curve", curve},
          {"exhausted_at", r.exhausted_at ? Json(*r.exhausted_at) : Json(nullptr)},
          {"seed", r.seed}};
}

EfficiencyReport report_from_json(const Json& j) {
  EfficiencyReport r;
  r.T = j.at("T").get<std::int64_t>();
  r.epsilon = j.at("epsilon").get<double>();
  r.C_total = j.at("C_total").get<double>();
  r.C_per_step = j.at("C_per_step").get<double>();
  r.B_realized = j.at("B_realized").get<double>();
  r.epoch_len = j.at("epoch_len").get<std::int64_t>();
  for (const auto& p : j.at("epoch_curve"))
    r.epoch_curve.push_back({p.at(0).get<std::int64_t>(), p.at(1).get<std::int64_t>(), p.at(2).get<double>()});
  if (!j.at("exhausted_at").is_null()) r.exhausted_at = j.at("exhausted_at").get<std::int64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

namespace {
Json summary_json(const MetricSummary& m) { return {{"mean", m.mean}, {"ci_half_width", m.ci_half_width}}; }
MetricSummary summary_from(const Json& j) {
  return {j.at("mean").get<double>(), j.at("ci_half_width").get<double>()};
}
}  // namespace

Json to_json(const AggregateReport& a) {
  return {{"n", a.n},
          {"epsilon", summary_json(a.epsilon)},
          {"C_total", summary_json(a.C_total)},
          {"C_per_step", summary_json(a.C_per_step)},
          {"B_realized", summary_json(a.B_realized)}};
}

AggregateReport aggregate_from_json(const Json& j) {
  AggregateReport a;
  a.n = j.at("n").get<std::size_t>();
  a.epsilon = summary_from(j.at("epsilon"));
  a.C_total = summary_from(j.at("C_total"));
  a.C_per_step = summary_from(j.at("C_per_step"));
  a.B_realized = summary_from(j.at("B_realized"));
  return a;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out << contents;
    if (!out) throw ConfigError("write failed for " + path);
  }
  std::filesystem::rename(tmp, p);
}

}  // namespace rplab
