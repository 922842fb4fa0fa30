#include "rplab/tabular.hpp"

#include <cmath>
#include <sstream>

namespace rplab {

namespace {

int sample_index(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<int>(i);
  return 0;
}

}  // namespace

TabularMdp TabularMdp::discrete(int num_states, int num_actions, int horizon) {
  TabularMdp m;
  m.num_states = num_states;
  m.space = ActionSpace::discrete(num_actions);
  for (int a = 0; a < num_actions; ++a) m.actions.push_back(Action::discrete(a));
  m.transitions.assign(static_cast<std::size_t>(num_states),
                       std::vector<std::vector<Successor>>(static_cast<std::size_t>(num_actions)));
  m.rewards.assign(static_cast<std::size_t>(num_states),
                   std::vector<double>(static_cast<std::size_t>(num_actions), 0.0));
  m.initial.assign(static_cast<std::size_t>(num_states), 0.0);
  m.terminal.assign(static_cast<std::size_t>(num_states), false);
  m.horizon = horizon;
  return m;
}

void TabularMdp::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("tabular mdp: " + msg); };
  if (num_states <= 0) fail("num_states must be positive");
  if (horizon <= 0) fail("horizon must be positive");
  if (actions.empty()) fail("no actions");
  if (space.is_discrete() && space.count() != num_actions()) fail("action list does not match the space");
  for (const auto& a : actions) space.require_contains(a);
  const auto ns = static_cast<std::size_t>(num_states);
  if (transitions.size() != ns || rewards.size() != ns || initial.size() != ns || terminal.size() != ns)
    fail("table sizes do not match num_states");
  double mass = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    if (initial[s] < 0.0) fail("negative initial probability");
    if (initial[s] > 0.0 && terminal[s]) fail("initial distribution places mass on a terminal state");
    mass += initial[s];
    if (transitions[s].size() != actions.size() || rewards[s].size() != actions.size())
      fail("per-state tables do not match the action count");
    for (std::size_t a = 0; a < actions.size(); ++a) {
      if (!std::isfinite(rewards[s][a])) fail("non-finite reward");
      if (terminal[s]) continue;
      double p = 0.0;
      for (const auto& succ : transitions[s][a]) {
        if (succ.state < 0 || succ.state >= num_states || succ.prob < 0.0) fail("bad successor");
        p += succ.prob;
      }
      if (std::abs(p - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "transition row (" << s << ", " << a << ") sums to " << p;
        fail(os.str());
      }
    }
  }
  if (std::abs(mass - 1.0) > 1e-9) fail("initial distribution does not sum to 1");
}

TabularEnv::TabularEnv(TabularMdp mdp) : mdp_(std::move(mdp)) {
  mdp_.validate();
  if (!mdp_.space.is_discrete()) throw ConfigError("TabularEnv needs a discrete action space");
}

ObservationBounds TabularEnv::observation_bounds() const {
  return {{0.0}, {static_cast<double>(mdp_.num_states - 1)}};
}

std::unique_ptr<Environment> TabularEnv::clone() const { return std::make_unique<TabularEnv>(mdp_); }

std::vector<State> TabularEnv::enumerate_states() const {
  std::vector<State> out;
  for (int s = 0; s < mdp_.num_states; ++s) out.push_back({static_cast<double>(s)});
  return out;
}

State TabularEnv::sample_initial(Rng& rng) {
  return {static_cast<double>(sample_index(mdp_.initial, rng))};
}

Environment::Outcome TabularEnv::advance(const State& s, const Action& a, Rng& rng) {
  const auto si = static_cast<std::size_t>(std::lround(s[0]));
  const auto ai = static_cast<std::size_t>(a.index());
  const auto& succ = mdp_.transitions[si][ai];
  std::vector<double> probs;
  probs.reserve(succ.size());
  for (const auto& x : succ) probs.push_back(x.prob);
  const int next = succ[static_cast<std::size_t>(sample_index(probs, rng))].state;
  return {{static_cast<double>(next)}, mdp_.rewards[si][ai], mdp_.terminal[static_cast<std::size_t>(next)]};
}

}  // namespace rplab
