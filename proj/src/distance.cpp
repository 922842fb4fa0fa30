#include "rplab/distance.hpp"

#include <cmath>

namespace rplab {

double raw_distance(const Action& a1, const Action& a2) {
  if (a1.is_discrete() || a2.is_discrete())
    throw DomainError("raw_distance requires continuous actions");
  const auto& x = a1.values();
  const auto& y = a2.values();
  if (x.size() != y.size()) throw DomainError("action dimensions differ");
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(sq);
}

double action_distance(const ActionSpace& space, const Action& a1, const Action& a2) {
  space.require_contains(a1);
  space.require_contains(a2);
  if (space.is_discrete()) return a1.index() == a2.index() ? 0.0 : 1.0;
  return raw_distance(a1, a2) / space.diameter();
}

}  // namespace rplab
