#pragma once

#include "cidm/signals.hpp"

namespace cidm {

struct PureDelayParams {
  double delta = 0.0;  // > 0
};

struct InertialDelayParams {
  double delta = 0.0;  // > 0
  double theta = 0.0;  // >= 0, minimum surviving pulse width
};

// Shifts every finite transition by +delta.
WstSignal pure_transform(const WstSignal& s, PureDelayParams p);

// Shifts by delta, then removes pulses narrower than theta until stable.
// Removal picks the narrowest pulse first (ties leftmost), so short gaps
// between wider pulses merge them rather than deleting everything.
WstSignal inertial_transform(const WstSignal& s, InertialDelayParams p);

}  // namespace cidm
