#include "cidm/delay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cidm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

struct DelayFunction::Impl {
  virtual ~Impl() = default;
  virtual double eval_finite(double T) const = 0;
  virtual double saturation() const = 0;
  virtual bool saturation_flat() const { return false; }
  virtual double lower() const = 0;
  virtual double upper() const { return kInf; }
  virtual std::shared_ptr<const Impl> reflect() const = 0;
  virtual std::string describe() const = 0;
};

namespace {

struct ExpDownImpl;
struct LogUpImpl;

struct ExpDownImpl final : DelayFunction::Impl {
  double dmin, dinf, tau;
  ExpDownImpl(double a, double b, double c) : dmin(a), dinf(b), tau(c) {}

  double eval_finite(double T) const override {
    return dinf - (dinf - dmin) * std::exp(-(T + dmin) / tau);
  }
  double saturation() const override { return dinf; }
  double lower() const override { return -kInf; }
  std::shared_ptr<const DelayFunction::Impl> reflect() const override;
  std::string describe() const override {
    std::ostringstream os;
    os << "exp_down(dmin=" << dmin << ", dinf=" << dinf << ", tau=" << tau << ")";
    return os.str();
  }
};

struct LogUpImpl final : DelayFunction::Impl {
  double dmin, dinf, tau;
  LogUpImpl(double a, double b, double c) : dmin(a), dinf(b), tau(c) {}

  double eval_finite(double T) const override {
    if (!(T > -dinf)) {
      std::ostringstream os;
      os << "log_up evaluated at T=" << T << " outside domain (T > " << -dinf
         << ")";
      throw std::domain_error(os.str());
    }
    return dmin + tau * std::log((T + dinf) / (dinf - dmin));
  }
  // The true T->inf limit diverges; dinf is the pinned saturation convention
  // shared with exp_down so the first transition after -inf gets the
  // full-range delay.
  double saturation() const override { return dinf; }
  double lower() const override { return -dinf; }
  std::shared_ptr<const DelayFunction::Impl> reflect() const override {
    return std::make_shared<ExpDownImpl>(dmin, dinf, tau);
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "log_up(dmin=" << dmin << ", dinf=" << dinf << ", tau=" << tau << ")";
    return os.str();
  }
};

std::shared_ptr<const DelayFunction::Impl> ExpDownImpl::reflect() const {
  return std::make_shared<LogUpImpl>(dmin, dinf, tau);
}

struct SampledImpl final : DelayFunction::Impl {
  // Strictly increasing x and y, slopes positive and non-increasing.
  std::vector<std::pair<double, double>> pts;

  explicit SampledImpl(std::vector<std::pair<double, double>> p)
      : pts(std::move(p)) {
    if (pts.size() < 2)
      throw std::invalid_argument("sampled delay function needs >= 2 points");
    double prev_slope = kInf;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double dx = pts[i].first - pts[i - 1].first;
      const double dy = pts[i].second - pts[i - 1].second;
      if (!(dx > 0.0))
        throw std::invalid_argument("sampled delay function: abscissae must be strictly increasing");
      if (!(dy > 0.0))
        throw std::invalid_argument("sampled delay function: values must be strictly increasing");
      const double slope = dy / dx;
      if (slope > prev_slope * (1.0 + 1e-12))
        throw std::invalid_argument("sampled delay function: slopes must be non-increasing (concavity)");
      prev_slope = slope;
    }
  }

  double eval_finite(double T) const override {
    if (T < pts.front().first) {
      std::ostringstream os;
      os << "sampled delay function evaluated at T=" << T
         << " below table start " << pts.front().first;
      throw std::domain_error(os.str());
    }
    if (T >= pts.back().first) return pts.back().second;  // flat extension
    auto it = std::upper_bound(
        pts.begin(), pts.end(), T,
        [](double v, const std::pair<double, double>& p) { return v < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double f = (T - lo.first) / (hi.first - lo.first);
    return lo.second + f * (hi.second - lo.second);
  }
  double saturation() const override { return pts.back().second; }
  bool saturation_flat() const override { return true; }
  double lower() const override { return pts.front().first; }
  double upper() const override { return pts.back().first; }
  std::shared_ptr<const DelayFunction::Impl> reflect() const override {
    // -f^{-1}(-T): the reflected table is the reversed point list with both
    // coordinates swapped and negated, which stays piecewise linear.
    std::vector<std::pair<double, double>> r(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      r[pts.size() - 1 - i] = {-pts[i].second, -pts[i].first};
    }
    return std::make_shared<SampledImpl>(std::move(r));
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "sampled(" << pts.size() << " points, [" << pts.front().first << ", "
       << pts.back().first << "])";
    return os.str();
  }
};

struct ShiftedImpl final : DelayFunction::Impl {
  std::shared_ptr<const DelayFunction::Impl> inner;
  double pre, post;

  ShiftedImpl(std::shared_ptr<const DelayFunction::Impl> f, double a, double b)
      : inner(std::move(f)), pre(a), post(b) {}

  double eval_finite(double T) const override {
    return post + inner->eval_finite(T + pre);
  }
  double saturation() const override { return post + inner->saturation(); }
  bool saturation_flat() const override { return inner->saturation_flat(); }
  double lower() const override {
    const double l = inner->lower();
    return l == -kInf ? l : l - pre;
  }
  double upper() const override {
    const double u = inner->upper();
    return u == kInf ? u : u - pre;
  }
  std::shared_ptr<const DelayFunction::Impl> reflect() const override {
    // (post + f(T + pre)) reflected is pre + f_reflected(T + post).
    return std::make_shared<ShiftedImpl>(inner->reflect(), post, pre);
  }
  std::string describe() const override {
    std::ostringstream os;
    os << post << " + [" << inner->describe() << "](T + " << pre << ")";
    return os.str();
  }
};

}  // namespace

double DelayFunction::operator()(double T) const { return impl_->eval_finite(T); }

double DelayFunction::eval(double T) const {
  if (T == kInf) return impl_->saturation();
  return impl_->eval_finite(T);
}

double DelayFunction::at_saturation() const { return impl_->saturation(); }
bool DelayFunction::saturation_is_flat() const { return impl_->saturation_flat(); }
double DelayFunction::domain_lower() const { return impl_->lower(); }
double DelayFunction::domain_upper() const { return impl_->upper(); }

DelayFunction DelayFunction::reflected() const {
  return DelayFunction(impl_->reflect());
}

DelayFunction DelayFunction::shifted(double pre, double post) const {
  if (pre == 0.0 && post == 0.0) return *this;
  return DelayFunction(std::make_shared<ShiftedImpl>(impl_, pre, post));
}

std::string DelayFunction::describe() const { return impl_->describe(); }

namespace {
void check_family_params(double dmin, double dinf, double tau) {
  if (!(dmin > 0.0) || !(dmin < dinf) || !(tau > 0.0))
    throw std::invalid_argument(
        "delay function family requires 0 < delta_min < delta_inf and tau > 0");
}
}  // namespace

DelayFunction DelayFunction::exp_down(double dmin, double dinf, double tau) {
  check_family_params(dmin, dinf, tau);
  return DelayFunction(std::make_shared<ExpDownImpl>(dmin, dinf, tau));
}

DelayFunction DelayFunction::log_up(double dmin, double dinf, double tau) {
  check_family_params(dmin, dinf, tau);
  return DelayFunction(std::make_shared<LogUpImpl>(dmin, dinf, tau));
}

DelayFunction DelayFunction::sampled(
    std::vector<std::pair<double, double>> points) {
  return DelayFunction(std::make_shared<SampledImpl>(std::move(points)));
}

double saturation_clear_hi(const DelayFunction& down, double frac) {
  double lo = std::max(down.domain_lower(), -50.0) + 1e-9;
  double hi = std::min(down.domain_upper(), 50.0);
  const double sat = down.at_saturation();
  const double margin = frac * std::max(1.0, std::abs(sat));
  const auto clear = [&](double t) {
    try {
      return sat - down(t) >= margin;
    } catch (const std::domain_error&) {
      return false;
    }
  };
  if (clear(hi)) return hi;
  if (!clear(lo)) return lo;
  for (int i = 0; i < 200 && hi - lo > 1e-9; ++i) {
    const double mid = 0.5 * (lo + hi);
    (clear(mid) ? lo : hi) = mid;
  }
  return lo;
}

double involution_residual(const DelayFunction& up, const DelayFunction& down,
                           int grid_points) {
  // T-range where both compositions stay inside both domains. Near its
  // saturation the falling function is flat, so feeding -down(T) into the
  // rising one sits next to a vertical asymptote and the composed evaluation
  // is ill-conditioned even for exact pairs; stay measurably away from it.
  // Bounded rising tables (sampled data) cap the range as well.
  double lo =
      std::max({down.domain_lower(), up.domain_lower(), -50.0}) + 1e-6;
  double hi = saturation_clear_hi(down, 1e-6);
  if (up.domain_upper() < hi) hi = up.domain_upper() - 1e-9;

  double worst = 0.0;
  int valid = 0;
  for (int i = 0; i < grid_points; ++i) {
    const double T = lo + (hi - lo) * (static_cast<double>(i) + 0.5) /
                              static_cast<double>(grid_points);
    try {
      const double a = -up(-down(T)) - T;
      if (std::isfinite(a)) {
        worst = std::max(worst, std::abs(a));
        ++valid;
      }
    } catch (const std::domain_error&) {
      // grid point outside the composed domain; skip
    }
    try {
      const double b = -down(-up(T)) - T;
      if (std::isfinite(b)) worst = std::max(worst, std::abs(b));
    } catch (const std::domain_error&) {
    }
  }
  if (valid < grid_points / 2)
    throw std::runtime_error(
        "involution residual: functions share too little domain");
  return worst;
}

namespace {
void validate_pair(const DelayFunction& up, const DelayFunction& down,
                   double involution_tol) {
  const double r = involution_residual(up, down);
  if (r > involution_tol) {
    std::ostringstream os;
    os << "delay functions are not an involution pair: residual " << r
       << " exceeds tolerance " << involution_tol;
    throw std::invalid_argument(os.str());
  }
  if (!(up.eval(0.0) > 0.0) || !(down.eval(0.0) > 0.0))
    throw std::invalid_argument(
        "involution pair is not strictly causal: up(0) and down(0) must be > 0");
}
}  // namespace

InvolutionPair::InvolutionPair(DelayFunction up, DelayFunction down,
                               double involution_tol)
    : up_(std::move(up)), down_(std::move(down)), delta_min_(0.0),
      tol_(involution_tol) {
  validate_pair(up_, down_, involution_tol);
  delta_min_ = solve_delta_min(up_, down_);
}

InvolutionPair::InvolutionPair(DelayFunction up, DelayFunction down,
                               double involution_tol, double known_delta_min)
    : up_(std::move(up)), down_(std::move(down)), delta_min_(known_delta_min),
      tol_(involution_tol) {
  validate_pair(up_, down_, involution_tol);
  if (std::abs(up_(-delta_min_) - delta_min_) > involution_tol ||
      std::abs(down_(-delta_min_) - delta_min_) > involution_tol)
    throw std::invalid_argument("stated delta_min is not the pair's fixed point");
}

InvolutionPair InvolutionPair::from_down(DelayFunction down,
                                         double involution_tol) {
  DelayFunction up = down.reflected();
  return InvolutionPair(std::move(up), std::move(down), involution_tol);
}

InvolutionPair make_exp_log_pair(double delta_min, double delta_inf,
                                 double tau) {
  return InvolutionPair(DelayFunction::log_up(delta_min, delta_inf, tau),
                        DelayFunction::exp_down(delta_min, delta_inf, tau),
                        1e-9, delta_min);
}

double solve_delta_min(const DelayFunction& up, const DelayFunction& down,
                       const DeltaMinOptions& opts) {
  // Past the vertical asymptote the function heads to -inf; evaluating there
  // counts as the negative side of the bracket.
  const auto g = [&up](double d) -> double {
    try {
      return up(-d) - d;
    } catch (const std::domain_error&) {
      return -kInf;
    }
  };

  // Largest d with -d still inside up's domain.
  const double dl = up.domain_lower();
  const double d_cap = (dl == -kInf) ? 1e18 : -dl;

  double lo = opts.bracket_lo;
  double hi = opts.bracket_hi;
  if (!(g(lo) > 0.0))
    throw std::runtime_error(
        "solve_delta_min: no sign change (functions not strictly causal at "
        "the lower bracket)");

  if (hi <= lo) {
    double probe = std::max(1.0, 2.0 * std::abs(lo) + 1.0);
    bool found = false;
    for (int i = 0; i < 200; ++i) {
      const double d_try = std::min(probe, std::nextafter(d_cap, lo));
      if (g(d_try) < 0.0) {
        hi = d_try;
        found = true;
        break;
      }
      lo = d_try;
      if (d_try >= std::nextafter(d_cap, lo) || probe > 1e17) break;
      probe *= 2.0;
    }
    if (!found)
      throw std::runtime_error(
          "solve_delta_min: no sign change found while expanding the bracket "
          "(non-causal or malformed functions)");
  } else if (!(g(hi) < 0.0)) {
    throw std::runtime_error(
        "solve_delta_min: no sign change in the bracketing interval");
  }

  for (int i = 0; i < opts.max_iterations && (hi - lo) > opts.width_tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // hit double resolution
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }

  // Secant polish inside the final bracket to push the fixed-point residual
  // to rounding level.
  double a = lo, b = hi;
  double fa = g(a), fb = g(b);
  double d = 0.5 * (a + b);
  if (std::isfinite(fa) && std::isfinite(fb) && fa != fb) {
    for (int i = 0; i < 8; ++i) {
      const double cand = (a * fb - b * fa) / (fb - fa);
      if (!(cand > lo) || !(cand < hi)) break;
      const double fc = g(cand);
      if (!std::isfinite(fc)) break;
      d = cand;
      if (std::abs(fc) < 1e-15) break;
      if ((fc > 0.0) == (fa > 0.0)) {
        a = cand;
        fa = fc;
      } else {
        b = cand;
        fb = fc;
      }
    }
  }

  // Both functions must agree on the fixed point (involution symmetry).
  const double res_up = std::abs(up(-d) - d);
  const double res_down = std::abs(down(-d) - d);
  if (res_up > 1e-6 || res_down > 1e-3)
    throw std::runtime_error("solve_delta_min: fixed point residual too large");
  return d;
}

double solve_delta_min(const InvolutionPair& pair, const DeltaMinOptions& opts) {
  return solve_delta_min(pair.up(), pair.down(), opts);
}

CidmDelayPair pi_compose(PureShift shift, const InvolutionPair& base) {
  return CidmDelayPair{
      base.up().shifted(shift.delta_plus, shift.delta_plus),
      base.down().shifted(shift.delta_minus, shift.delta_minus),
      base.delta_min() + shift.delta_plus,
      base.delta_min() + shift.delta_minus,
      shift,
      base,
  };
}

CausalityCheck causality_check(const InvolutionPair& base, PureShift shift) {
  // A shift beyond a function's lower asymptote means the composed channel's
  // zero-history delay dives to -inf: decisively non-causal rather than an
  // evaluation error.
  const auto margin_eval = [](const DelayFunction& f, double arg) {
    if (arg <= f.domain_lower()) return -kInf;
    return f(arg);
  };
  CausalityCheck c;
  c.up_margin = shift.delta_plus + margin_eval(base.up(), shift.delta_minus);
  c.down_margin = shift.delta_minus + margin_eval(base.down(), shift.delta_plus);
  c.causal = c.up_margin > 0.0 && c.down_margin > 0.0;
  if ((c.up_margin > 0.0) != (c.down_margin > 0.0))
    throw std::logic_error(
        "causality margins disagree in sign; base pair is not an involution");
  return c;
}

InvolutionPair ip_compose(const InvolutionPair& base, PureShift shift) {
  const auto c = causality_check(base, shift);
  if (!c.causal) {
    std::ostringstream os;
    os << "ip_compose: composed channel is not strictly causal (margins "
       << c.up_margin << ", " << c.down_margin << ")";
    throw std::runtime_error(os.str());
  }
  // Note the crossed shifts relative to pi_compose.
  DelayFunction up = base.up().shifted(shift.delta_minus, shift.delta_plus);
  DelayFunction down = base.down().shifted(shift.delta_plus, shift.delta_minus);
  return InvolutionPair(std::move(up), std::move(down),
                        base.involution_tolerance());
}

SwitchingWaveform SwitchingWaveform::rising(double vdd, double tau) {
  if (!(vdd > 0.0) || !(tau > 0.0))
    throw std::invalid_argument("switching waveform requires vdd > 0 and tau > 0");
  return {Direction::rising, vdd, tau};
}

SwitchingWaveform SwitchingWaveform::falling(double vdd, double tau) {
  if (!(vdd > 0.0) || !(tau > 0.0))
    throw std::invalid_argument("switching waveform requires vdd > 0 and tau > 0");
  return {Direction::falling, vdd, tau};
}

double SwitchingWaveform::value(double t) const {
  if (direction == Direction::rising)
    return t <= 0.0 ? 0.0 : vdd * (1.0 - std::exp(-t / tau));
  return t <= 0.0 ? vdd : vdd * std::exp(-t / tau);
}

double SwitchingWaveform::inverse(double v) const {
  if (direction == Direction::rising) {
    if (!(v >= 0.0) || !(v < vdd))
      throw std::domain_error("rising waveform inverse defined on [0, vdd)");
    return -tau * std::log(1.0 - v / vdd);
  }
  if (!(v > 0.0) || !(v <= vdd))
    throw std::domain_error("falling waveform inverse defined on (0, vdd]");
  return -tau * std::log(v / vdd);
}

PureShift derive_shift(const SwitchingWaveform& waveform_up,
                       const SwitchingWaveform& waveform_down,
                       double vth_in_star, double vth_in) {
  if (waveform_up.direction != SwitchingWaveform::Direction::rising ||
      waveform_down.direction != SwitchingWaveform::Direction::falling)
    throw std::invalid_argument("derive_shift needs a rising and a falling waveform");
  const auto check = [&](double v, const SwitchingWaveform& w) {
    if (!(v > 0.0) || !(v < w.vdd))
      throw std::domain_error("threshold must lie strictly inside (0, vdd)");
  };
  check(vth_in_star, waveform_up);
  check(vth_in, waveform_up);
  check(vth_in_star, waveform_down);
  check(vth_in, waveform_down);

  PureShift s;
  s.delta_plus = waveform_up.inverse(vth_in_star) - waveform_up.inverse(vth_in);
  s.delta_minus =
      waveform_down.inverse(vth_in_star) - waveform_down.inverse(vth_in);
  if (vth_in != vth_in_star) {
    const bool opposite = (s.delta_plus > 0.0) != (s.delta_minus > 0.0);
    if (!opposite)
      throw std::logic_error(
          "derived shift components must have opposite sign for distinct thresholds");
  }
  return s;
}

}  // namespace cidm
