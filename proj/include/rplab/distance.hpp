#pragma once

#include "rplab/core.hpp"

namespace rplab {

// Normalised action distance in [0, 1]: the mismatch indicator for
// discrete spaces, ||a1 - a2||_2 / L for boxes of diameter L.
double action_distance(const ActionSpace& space, const Action& a1, const Action& a2);

// Un-normalised L2 distance between two continuous actions.
double raw_distance(const Action& a1, const Action& a2);

}  // namespace rplab
