#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cidm/time.hpp"

namespace cidm {

// Binary logic level.
enum class Bit : int { zero = 0, one = 1 };

constexpr Bit flip(Bit b) { return b == Bit::zero ? Bit::one : Bit::zero; }
constexpr int to_int(Bit b) { return static_cast<int>(b); }
constexpr Bit bit_of(int v) { return v ? Bit::one : Bit::zero; }

// Signal well-formedness properties. s1: initial transition at -inf;
// s2: values alternate; s3: times strictly increasing; s4: offset rules
// (o_0 = 0 and occurrence times never fall behind the transition two back).
// Signals are finite lists here, so s3's unbounded-growth clause for
// infinite sequences holds vacuously.
enum class SignalProperty { s1, s2, s3, s4 };

const char* name(SignalProperty p);

struct SignalCheck {
  bool ok = true;
  SignalProperty property = SignalProperty::s1;
  std::size_t index = 0;
  std::string message;

  static SignalCheck pass() { return {}; }
  static SignalCheck fail(SignalProperty p, std::size_t i, std::string msg);
  explicit operator bool() const { return ok; }
};

// One transition of a well-separated-transitions signal: the signal takes
// value x from time t on (state is constant on [t_n, t_{n+1})).
struct WstTransition {
  Time t;
  Bit x = Bit::zero;

  friend bool operator==(const WstTransition&, const WstTransition&) = default;
};

// One transition of a threshold-crossing-times signal: scheduled at t,
// occurring at t + o. Out-of-order occurrences encode cancellations.
struct TctTransition {
  Time t;
  Bit x = Bit::zero;
  double o = 0.0;

  Time occurrence() const { return t.plus(o); }

  friend bool operator==(const TctTransition&, const TctTransition&) = default;
};

SignalCheck validate_wst(std::span<const WstTransition> candidate);
SignalCheck validate_tct(std::span<const TctTransition> candidate);

// Stimulus files may carry explicit zero-time glitches as same-time transition
// pairs, so scheduled times are only required to be non-decreasing there.
SignalCheck validate_stimulus(std::span<const TctTransition> candidate);

class WstSignal {
 public:
  // Constant signal holding `initial` since -inf.
  explicit WstSignal(Bit initial = Bit::zero);
  // Throws std::invalid_argument if S1-S3 fail.
  explicit WstSignal(std::vector<WstTransition> transitions);

  const std::vector<WstTransition>& transitions() const { return transitions_; }
  std::size_t size() const { return transitions_.size(); }
  Bit initial_value() const { return transitions_.front().x; }

  friend bool operator==(const WstSignal&, const WstSignal&);

 private:
  std::vector<WstTransition> transitions_;
};

class TctSignal {
 public:
  explicit TctSignal(Bit initial = Bit::zero);
  // Throws std::invalid_argument if S1-S4 fail.
  explicit TctSignal(std::vector<TctTransition> transitions);

  const std::vector<TctTransition>& transitions() const { return transitions_; }
  std::size_t size() const { return transitions_.size(); }
  Bit initial_value() const { return transitions_.front().x; }

  friend bool operator==(const TctSignal&, const TctSignal&);

 private:
  std::vector<TctTransition> transitions_;
};

// State function value at finite time t (value of the most recent transition
// occurring before or at t; canceled TCT transitions do not count).
Bit state_at(const WstSignal& s, double t);
Bit state_at(const TctSignal& s, double t);

// Constant per-direction delay shift. delta_plus applies to rising
// transitions, delta_minus to falling ones; either may be negative.
struct PureShift {
  double delta_plus = 0.0;
  double delta_minus = 0.0;

  friend bool operator==(const PureShift&, const PureShift&) = default;
};

// A transition together with its immediate predecessor that it annihilated.
struct CanceledPair {
  std::size_t index;  // index of the canceled (earlier) transition
  TctTransition canceled;
  TctTransition canceling;
};

struct CancellationScan {
  WstSignal wst;
  std::vector<CanceledPair> canceled;
};

// Resolves cancellations: a transition whose occurrence does not exceed its
// predecessor's removes both from the surviving set. Survivors are emitted at
// their occurrence times.
CancellationScan scan_cancellations(const TctSignal& s);
WstSignal tct_to_wst(const TctSignal& s);

// Adds delta_plus / delta_minus to the offsets of rising / falling
// transitions. Scheduled times are untouched; the initial transition keeps
// its zero offset. The result is re-validated.
TctSignal apply_shift(const TctSignal& s, PureShift p);

}  // namespace cidm
