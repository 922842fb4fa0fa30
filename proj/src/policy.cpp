#include "rplab/policy.hpp"

#include <algorithm>
#include <cmath>

namespace rplab {

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

Policy Policy::tabular(ActionSpace space, std::vector<int> table) {
  if (!space.is_discrete()) throw ConfigError("tabular policies need a discrete action space");
  for (int a : table)
    if (a < 0 || a >= space.count()) throw DomainError("tabular policy entry outside the action space");
  Policy p;
  p.kind_ = Kind::tabular;
  p.space_ = std::move(space);
  p.table_ = std::move(table);
  return p;
}

Policy Policy::network(ActionSpace space, NetworkPolicy net) {
  const auto in = static_cast<std::size_t>(net.net.input_size());
  if (net.input_offset.size() != in || net.input_scale.size() != in)
    throw ConfigError("network normalisation does not match the input size");
  if (space.is_discrete()) {
    if (net.net.output_size() != space.count())
      throw ConfigError("network outputs do not match the discrete action count");
  } else {
    if (static_cast<std::size_t>(net.net.output_size()) != space.dimension())
      throw ConfigError("network outputs do not match the box dimension");
    if (net.net.head() != OutputHead::tanh)
      throw ConfigError("continuous network policies need a tanh output head");
  }
  Policy p;
  p.kind_ = Kind::network;
  p.space_ = std::move(space);
  p.net_ = std::move(net);
  return p;
}

Policy Policy::constant(ActionSpace space, Action action) {
  space.require_contains(action);
  Policy p;
  p.kind_ = Kind::constant;
  p.space_ = std::move(space);
  p.constant_ = std::move(action);
  return p;
}

std::vector<double> normalise(const NetworkPolicy& p, const State& s) {
  if (s.size() != p.input_offset.size()) throw DomainError("state size does not match the policy input");
  std::vector<double> x(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) x[i] = (s[i] - p.input_offset[i]) * p.input_scale[i];
  return x;
}

Action Policy::act(const State& s) const {
  switch (kind_) {
    case Kind::constant:
      return constant_;
    case Kind::tabular: {
      if (s.size() != 1) throw DomainError("tabular policy expects an indexed state");
      const auto idx = static_cast<long>(std::lround(s[0]));
      if (idx < 0 || idx >= static_cast<long>(table_.size()))
        throw DomainError("state index outside the policy table");
      return Action::discrete(table_[static_cast<std::size_t>(idx)]);
    }
    case Kind::network: {
      const std::vector<double> y = net_.net.predict(normalise(net_, s));
      if (space_.is_discrete()) return Action::discrete(argmax_lowest(y));
      std::vector<double> a(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double lo = space_.lower()[i], hi = space_.upper()[i];
        a[i] = std::clamp(lo + 0.5 * (y[i] + 1.0) * (hi - lo), lo, hi);
      }
      return Action::continuous(std::move(a));
    }
  }
  return constant_;
}

NetworkPolicy make_network_policy(MlpNet net, const ObservationBounds& bounds) {
  NetworkPolicy p;
  p.net = std::move(net);
  for (std::size_t i = 0; i < bounds.low.size(); ++i) {
    const double lo = bounds.low[i], hi = bounds.high[i];
    p.input_offset.push_back(0.5 * (lo + hi));
    p.input_scale.push_back(hi > lo ? 2.0 / (hi - lo) : 1.0);
  }
  return p;
}

}  // namespace rplab
