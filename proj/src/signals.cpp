#include "cidm/signals.hpp"

#include <sstream>
#include <stdexcept>

namespace cidm {

const char* name(SignalProperty p) {
  switch (p) {
    case SignalProperty::s1: return "S1";
    case SignalProperty::s2: return "S2";
    case SignalProperty::s3: return "S3";
    case SignalProperty::s4: return "S4";
  }
  return "?";
}

SignalCheck SignalCheck::fail(SignalProperty p, std::size_t i, std::string msg) {
  SignalCheck c;
  c.ok = false;
  c.property = p;
  c.index = i;
  std::ostringstream os;
  os << name(p) << " violated at index " << i << ": " << msg;
  c.message = os.str();
  return c;
}

namespace {

// S1-S3 on the (t, x) components, shared between both encodings.
template <class Transition>
SignalCheck check_s1_to_s3(std::span<const Transition> ts, bool strict_times) {
  if (ts.empty() || !ts.front().t.is_neg_inf())
    return SignalCheck::fail(SignalProperty::s1, 0,
                             "first transition must be at -inf");
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (ts[i].t.is_neg_inf())
      return SignalCheck::fail(SignalProperty::s1, i,
                               "-inf allowed only for the initial transition");
    if (ts[i].x == ts[i - 1].x)
      return SignalCheck::fail(SignalProperty::s2, i, "values must alternate");
    if (i >= 2) {
      const bool bad = strict_times ? !(ts[i - 1].t < ts[i].t)
                                    : !(ts[i - 1].t <= ts[i].t);
      if (bad)
        return SignalCheck::fail(
            SignalProperty::s3, i,
            strict_times ? "times must be strictly increasing"
                         : "times must be non-decreasing");
    }
  }
  return SignalCheck::pass();
}

SignalCheck check_s4(std::span<const TctTransition> ts) {
  if (!ts.empty() && ts.front().o != 0.0)
    return SignalCheck::fail(SignalProperty::s4, 0, "o_0 must be 0");
  for (std::size_t i = 2; i < ts.size(); ++i) {
    if (ts[i].occurrence() < ts[i - 2].occurrence())
      return SignalCheck::fail(SignalProperty::s4, i,
                               "occurrence falls behind transition n-2");
  }
  return SignalCheck::pass();
}

}  // namespace

SignalCheck validate_wst(std::span<const WstTransition> candidate) {
  return check_s1_to_s3(candidate, /*strict_times=*/true);
}

SignalCheck validate_tct(std::span<const TctTransition> candidate) {
  if (auto c = check_s1_to_s3(candidate, /*strict_times=*/true); !c) return c;
  return check_s4(candidate);
}

SignalCheck validate_stimulus(std::span<const TctTransition> candidate) {
  if (auto c = check_s1_to_s3(candidate, /*strict_times=*/false); !c) return c;
  return check_s4(candidate);
}

WstSignal::WstSignal(Bit initial) : transitions_{{Time::minus_inf(), initial}} {}

WstSignal::WstSignal(std::vector<WstTransition> transitions)
    : transitions_(std::move(transitions)) {
  if (auto c = validate_wst(transitions_); !c)
    throw std::invalid_argument("invalid WST signal: " + c.message);
}

bool operator==(const WstSignal& a, const WstSignal& b) {
  if (a.transitions_.size() != b.transitions_.size()) return false;
  for (std::size_t i = 0; i < a.transitions_.size(); ++i) {
    if (a.transitions_[i].t != b.transitions_[i].t ||
        a.transitions_[i].x != b.transitions_[i].x)
      return false;
  }
  return true;
}

TctSignal::TctSignal(Bit initial)
    : transitions_{{Time::minus_inf(), initial, 0.0}} {}

TctSignal::TctSignal(std::vector<TctTransition> transitions)
    : transitions_(std::move(transitions)) {
  if (auto c = validate_tct(transitions_); !c)
    throw std::invalid_argument("invalid TCT signal: " + c.message);
}

bool operator==(const TctSignal& a, const TctSignal& b) {
  if (a.transitions_.size() != b.transitions_.size()) return false;
  for (std::size_t i = 0; i < a.transitions_.size(); ++i) {
    if (a.transitions_[i].t != b.transitions_[i].t ||
        a.transitions_[i].x != b.transitions_[i].x ||
        a.transitions_[i].o != b.transitions_[i].o)
      return false;
  }
  return true;
}

Bit state_at(const WstSignal& s, double t) {
  const auto& ts = s.transitions();
  Bit v = ts.front().x;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (ts[i].t.seconds() <= t)
      v = ts[i].x;
    else
      break;
  }
  return v;
}

Bit state_at(const TctSignal& s, double t) {
  const auto scan = scan_cancellations(s);
  return state_at(scan.wst, t);
}

CancellationScan scan_cancellations(const TctSignal& s) {
  const auto& ts = s.transitions();
  // S4 guarantees only the immediately preceding transition can be canceled,
  // so a single pass with one-deep annihilation resolves everything.
  std::vector<bool> canceled(ts.size(), false);
  std::vector<std::size_t> survivors{0};
  std::vector<CanceledPair> pairs;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (!canceled[i - 1] && !(ts[i - 1].occurrence() < ts[i].occurrence())) {
      canceled[i] = canceled[i - 1] = true;
      survivors.pop_back();
      pairs.push_back({i - 1, ts[i - 1], ts[i]});
    } else {
      survivors.push_back(i);
    }
  }
  std::vector<WstTransition> out;
  out.reserve(survivors.size());
  for (std::size_t i : survivors)
    out.push_back({ts[i].occurrence(), ts[i].x});
  return {WstSignal(std::move(out)), std::move(pairs)};
}

WstSignal tct_to_wst(const TctSignal& s) { return scan_cancellations(s).wst; }

TctSignal apply_shift(const TctSignal& s, PureShift p) {
  std::vector<TctTransition> out = s.transitions();
  for (std::size_t i = 1; i < out.size(); ++i)
    out[i].o += (out[i].x == Bit::one) ? p.delta_plus : p.delta_minus;
  return TctSignal(std::move(out));
}

}  // namespace cidm
