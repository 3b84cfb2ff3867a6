#pragma once

#include <cassert>
#include <cmath>
#include <compare>
#include <limits>

namespace cidm {

// Simulation time in seconds. Every signal carries exactly one transition at
// -infinity (the initial state); that sentinel is the only non-finite value a
// Time may hold, and it is manipulated symbolically rather than as a float
// that participates in arithmetic.
class Time {
 public:
  constexpr Time() = default;

  constexpr explicit Time(double seconds) : value_(seconds) {
    assert(std::isfinite(seconds));
  }

  static constexpr Time minus_inf() {
    Time t;
    t.value_ = -std::numeric_limits<double>::infinity();
    return t;
  }

  constexpr bool is_neg_inf() const {
    return value_ == -std::numeric_limits<double>::infinity();
  }
  constexpr bool finite() const { return !is_neg_inf(); }

  // Finite value accessor; must not be called on the sentinel.
  constexpr double seconds() const {
    assert(finite());
    return value_;
  }

  // Raw value including the sentinel, for ordering and export.
  constexpr double raw() const { return value_; }

  // -inf absorbs finite offsets.
  constexpr Time plus(double dt) const {
    return is_neg_inf() ? *this : Time(value_ + dt);
  }

  friend constexpr bool operator==(Time a, Time b) { return a.value_ == b.value_; }
  friend constexpr auto operator<=>(Time a, Time b) { return a.value_ <=> b.value_; }

 private:
  double value_ = 0.0;
};

}  // namespace cidm
