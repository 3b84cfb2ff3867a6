#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cidm/signals.hpp"

namespace cidm {

// Strictly increasing, concave single-history delay function delta(T), where
// T is the time from the previous output transition's occurrence to the
// current input transition. Three families:
//
//   exp_down(dmin, dinf, tau):  dinf - (dinf - dmin) * exp(-(T + dmin) / tau)
//   log_up(dmin, dinf, tau):    dmin + tau * ln((T + dinf) / (dinf - dmin)),
//                               defined for T > -dinf
//   sampled(points):            piecewise-linear through strictly increasing,
//                               concave samples; flat extension above the
//                               last sample
//
// log_up is the exact reflection -exp_down^{-1}(-T) of exp_down with the same
// parameters, so the pair forms an involution in closed form.
class DelayFunction {
 public:
  // Evaluates at finite T. Throws std::domain_error outside the domain.
  double operator()(double T) const;

  // Evaluates with T = +inf mapped to at_saturation().
  double eval(double T) const;

  // Value used for the T -> +inf limit. dinf for the closed forms; the last
  // sample for sampled tables.
  double at_saturation() const;

  // True when at_saturation() is a flat extension rather than a limit.
  bool saturation_is_flat() const;

  // Open lower domain bound (-inf when unbounded). Finite upper bounds only
  // occur for reflected sampled tables.
  double domain_lower() const;
  double domain_upper() const;

  // Reflection across the second median: -f^{-1}(-T).
  DelayFunction reflected() const;

  // post + f(T + pre).
  DelayFunction shifted(double pre, double post) const;

  std::string describe() const;

  static DelayFunction exp_down(double dmin, double dinf, double tau);
  static DelayFunction log_up(double dmin, double dinf, double tau);
  static DelayFunction sampled(std::vector<std::pair<double, double>> points);

  struct Impl;

 private:
  explicit DelayFunction(std::shared_ptr<const Impl> impl)
      : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

// Paired rising/falling delay functions satisfying -up(-down(T)) = T with a
// shared fixed point up(-delta_min) = delta_min = down(-delta_min) and strict
// causality up(0) > 0, down(0) > 0.
class InvolutionPair {
 public:
  // up is validated as the reflection partner of down: the involution
  // residual is checked on a grid (tol 1e-9 closed forms, 1e-6 sampled) and
  // construction fails beyond tolerance. delta_min is found by bisection.
  InvolutionPair(DelayFunction up, DelayFunction down, double involution_tol);

  // Same validation, but the fixed point is known exactly (closed-form
  // constructions) and only verified.
  InvolutionPair(DelayFunction up, DelayFunction down, double involution_tol,
                 double known_delta_min);

  // Partner derived by reflection; always within tolerance.
  static InvolutionPair from_down(DelayFunction down, double involution_tol);

  const DelayFunction& up() const { return up_; }
  const DelayFunction& down() const { return down_; }
  double delta_min() const { return delta_min_; }
  double involution_tolerance() const { return tol_; }

 private:
  DelayFunction up_;
  DelayFunction down_;
  double delta_min_;
  double tol_;
};

// Exact closed-form pair: down = exp_down, up = log_up, delta_min given.
// Requires 0 < delta_min < delta_inf and tau > 0.
InvolutionPair make_exp_log_pair(double delta_min, double delta_inf, double tau);

// Max residual of -up(-down(T)) - T and the mirror over a grid inside the
// valid domain. Used by constructors and property tests.
double involution_residual(const DelayFunction& up, const DelayFunction& down,
                           int grid_points = 1000);

// Largest T (capped at 50) where `down` still sits frac * max(1, |sat|)
// below its saturation value. Composing -down(T) into the rising partner is
// well-conditioned only below this point; identity checks should not sample
// beyond it.
double saturation_clear_hi(const DelayFunction& down, double frac = 1e-5);

struct DeltaMinOptions {
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;  // 0 = expand automatically
  double width_tol = 1e-13;
  int max_iterations = 200;
};

// Unique positive fixed point of up(-d) = d, found by bisection on the
// strictly decreasing g(d) = up(-d) - d. Cross-checked against down.
// Throws std::runtime_error when no sign change exists in the bracket.
double solve_delta_min(const DelayFunction& up, const DelayFunction& down,
                       const DeltaMinOptions& opts = {});
double solve_delta_min(const InvolutionPair& pair,
                       const DeltaMinOptions& opts = {});

// Delay behavior of a shifter (delta_plus, delta_minus) followed by an
// involution pair: up(T) = d+ + base.up(T + d+), down likewise with d-.
// Not itself an involution; minima shift to base.delta_min + d+/-.
struct CidmDelayPair {
  DelayFunction up;
  DelayFunction down;
  double up_min;
  double down_min;
  PureShift shift;
  InvolutionPair base;
};

CidmDelayPair pi_compose(PureShift shift, const InvolutionPair& base);

struct CausalityCheck {
  bool causal = false;
  double up_margin = 0.0;    // d+ + base.up(d-)
  double down_margin = 0.0;  // d- + base.down(d+)
};

// Strict causality of an involution pair followed by a shifter. The two
// margins must agree in sign for a true involution pair; disagreement is an
// internal error.
CausalityCheck causality_check(const InvolutionPair& base, PureShift shift);

// Involution pair followed by a shifter, which is again an involution pair:
// up(T) = d+ + base.up(T + d-), down(T) = d- + base.down(T + d+), with
// delta_min recomputed by bisection. Throws std::runtime_error when the
// composition is not strictly causal.
InvolutionPair ip_compose(const InvolutionPair& base, PureShift shift);

// Full-range saturating switching waveform with an analytic inverse.
// Rising: vdd * (1 - exp(-t/tau)) for t >= 0, 0 before.
// Falling: vdd * exp(-t/tau) for t >= 0, vdd before.
struct SwitchingWaveform {
  enum class Direction { rising, falling };

  Direction direction = Direction::rising;
  double vdd = 1.0;
  double tau = 1.0;

  static SwitchingWaveform rising(double vdd, double tau);
  static SwitchingWaveform falling(double vdd, double tau);

  double value(double t) const;
  // Time at which the waveform reaches voltage v. Throws std::domain_error
  // for v outside the reachable open range.
  double inverse(double v) const;
};

// Per-direction shift between two input discretization thresholds:
// delta_plus = f_up^{-1}(vth_star) - f_up^{-1}(vth), delta_minus likewise on
// the falling waveform. The two components have opposite sign whenever the
// thresholds differ; that property is asserted.
PureShift derive_shift(const SwitchingWaveform& waveform_up,
                       const SwitchingWaveform& waveform_down,
                       double vth_in_star, double vth_in);

}  // namespace cidm
