#include "cidm/baselines.hpp"

#include <stdexcept>

namespace cidm {

WstSignal pure_transform(const WstSignal& s, PureDelayParams p) {
  if (!(p.delta > 0.0))
    throw std::invalid_argument("pure delay requires delta > 0");
  std::vector<WstTransition> out = s.transitions();
  for (auto& tr : out) tr.t = tr.t.plus(p.delta);
  return WstSignal(std::move(out));
}

WstSignal inertial_transform(const WstSignal& s, InertialDelayParams p) {
  if (!(p.delta > 0.0))
    throw std::invalid_argument("inertial delay requires delta > 0");
  if (!(p.theta >= 0.0))
    throw std::invalid_argument("inertial delay requires theta >= 0");

  std::vector<WstTransition> ts = s.transitions();
  for (auto& tr : ts) tr.t = tr.t.plus(p.delta);

  for (;;) {
    std::size_t best = 0;
    double best_width = p.theta;
    bool found = false;
    for (std::size_t i = 2; i < ts.size(); ++i) {
      const double w = ts[i].t.seconds() - ts[i - 1].t.seconds();
      if (w < best_width) {
        best_width = w;
        best = i - 1;
        found = true;
      }
    }
    if (!found) break;
    ts.erase(ts.begin() + static_cast<std::ptrdiff_t>(best),
             ts.begin() + static_cast<std::ptrdiff_t>(best) + 2);
  }
  return WstSignal(std::move(ts));
}

}  // namespace cidm
