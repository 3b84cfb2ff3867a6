#include "cidm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cidm {

void AnalogTrace::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && !(samples[i - 1].first < samples[i].first))
      throw std::invalid_argument(
          "analog trace times must be strictly increasing (sample " +
          std::to_string(i) + ")");
    const double v = samples[i].second;
    if (v < -0.1 * vdd || v > 1.1 * vdd)
      throw std::invalid_argument("analog trace voltage outside sanity band at sample " +
                                  std::to_string(i));
  }
}

WstSignal digitize(const AnalogTrace& a, double vth) {
  if (a.samples.size() < 2)
    throw std::invalid_argument("analog trace too short to digitize (< 2 samples)");
  if (!(vth > 0.0) || !(vth < a.vdd))
    throw std::invalid_argument("threshold must lie inside (0, vdd)");
  a.validate();

  const auto side = [vth](double v) { return v >= vth; };
  std::vector<WstTransition> out;
  bool high = side(a.samples.front().second);
  out.push_back({Time::minus_inf(), bit_of(high)});
  for (std::size_t i = 1; i < a.samples.size(); ++i) {
    const auto [t0, v0] = a.samples[i - 1];
    const auto [t1, v1] = a.samples[i];
    const bool h = side(v1);
    if (h == high) continue;
    const double tc = t0 + (vth - v0) * (t1 - t0) / (v1 - v0);
    high = h;
    if (out.back().t.finite() && !(out.back().t.seconds() < tc)) {
      // Crossing collapsed onto the previous one (trace touching the
      // threshold); the zero-width pulse vanishes.
      out.pop_back();
      continue;
    }
    out.push_back({Time(tc), bit_of(h)});
  }
  return WstSignal(std::move(out));
}

double deviation_area(const WstSignal& model, const WstSignal& reference,
                      double t0, double t1) {
  if (!(t0 < t1)) throw std::invalid_argument("deviation horizon requires t0 < t1");
  std::set<double> cuts{t0, t1};
  for (const auto& tr : model.transitions())
    if (tr.t.finite() && tr.t.seconds() > t0 && tr.t.seconds() < t1)
      cuts.insert(tr.t.seconds());
  for (const auto& tr : reference.transitions())
    if (tr.t.finite() && tr.t.seconds() > t0 && tr.t.seconds() < t1)
      cuts.insert(tr.t.seconds());

  double area = 0.0;
  auto it = cuts.begin();
  double prev = *it;
  for (++it; it != cuts.end(); ++it) {
    if (state_at(model, prev) != state_at(reference, prev))
      area += *it - prev;
    prev = *it;
  }
  return area;
}

namespace {

// Deterministic normal deviates (Box-Muller over a fixed-width generator) so
// frozen test expectations hold on any platform.
class NormalDraw {
 public:
  explicit NormalDraw(std::uint64_t seed) : state_(seed ? seed : 1) {}

  double operator()(double mu, double sigma) {
    if (have_spare_) {
      have_spare_ = false;
      return mu + sigma * spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return mu + sigma * (r * std::cos(a));
  }

 private:
  double uniform() {
    // splitmix64
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }

  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace

TctSignal generate_pulse_train(const PulseTrainSpec& spec) {
  if (spec.count < 1 || !(spec.mu > 0.0) || !(spec.sigma >= 0.0))
    throw std::invalid_argument("pulse train requires count >= 1, mu > 0, sigma >= 0");
  NormalDraw draw(spec.seed);
  const double floor = spec.floor_fraction * spec.mu;
  std::vector<TctTransition> ts{{Time::minus_inf(), Bit::zero, 0.0}};
  double t = 0.0;
  for (int i = 0; i < spec.count; ++i) {
    const double gap = std::max(draw(spec.gap_mu, spec.gap_sigma), floor);
    const double width = std::max(draw(spec.mu, spec.sigma), floor);
    t += gap;
    ts.push_back({Time(t), Bit::one, 0.0});
    t += width;
    ts.push_back({Time(t), Bit::zero, 0.0});
  }
  return TctSignal(std::move(ts));
}

namespace {

// Active piece of the reconstructed trajectory: either a settled level or a
// full-range waveform anchored so its threshold crossing lands where the
// transition predicts.
struct Trajectory {
  bool flat = true;
  double level = 0.0;
  SwitchingWaveform waveform;
  double anchor_offset = 0.0;  // waveform-local time at global t = 0

  double value(double t) const {
    return flat ? level : waveform.value(t + anchor_offset);
  }
};

Reconstruction reconstruct_impl(std::span<const WstTransition> occurrences,
                                Bit initial,
                                const SwitchingWaveform& rising,
                                const SwitchingWaveform& falling, double vth,
                                double step) {
  if (rising.direction != SwitchingWaveform::Direction::rising ||
      falling.direction != SwitchingWaveform::Direction::falling)
    throw std::invalid_argument("reconstruct_analog needs one rising and one falling waveform");
  if (!(vth > 0.0) || !(vth < rising.vdd))
    throw std::invalid_argument("threshold must lie inside (0, vdd)");
  if (!(step > 0.0)) throw std::invalid_argument("sample step must be > 0");

  const double vdd = rising.vdd;
  Reconstruction rec;
  rec.trace.vdd = vdd;

  // Constant trace for signals without transitions.
  if (occurrences.empty()) {
    const double lvl = initial == Bit::one ? vdd : 0.0;
    for (int i = 0; i <= 10; ++i)
      rec.trace.samples.push_back({static_cast<double>(i) * step, lvl});
    return rec;
  }

  const double span = 3.0 * std::max(rising.tau, falling.tau) +
                      std::max(rising.inverse(vth), falling.inverse(vth));
  const double t_begin = occurrences.front().t.seconds() - span;
  const double t_end = occurrences.back().t.seconds() + span;

  struct Piece {
    double from;
    Trajectory traj;
  };
  std::vector<Piece> pieces;

  Trajectory current;
  current.flat = true;
  current.level = initial == Bit::one ? vdd : 0.0;
  double current_from = t_begin;

  for (const auto& tr : occurrences) {
    Trajectory next;
    next.flat = false;
    next.waveform = tr.x == Bit::one ? rising : falling;
    next.anchor_offset = next.waveform.inverse(vth) - tr.t.seconds();
    const double occ = tr.t.seconds();

    // First instant >= current_from where the active trajectory meets the
    // next waveform: the value-continuous switch point.
    const auto gap = [&](double t) { return current.value(t) - next.value(t); };
    double switch_t = occ;
    bool continuous = false;
    const double g0 = gap(current_from);
    if (g0 == 0.0) {
      switch_t = current_from;
      continuous = true;
    } else {
      const double horizon = occ + span;
      const int kSteps = 256;
      const double h = (horizon - current_from) / kSteps;
      if (h > 0.0) {
        double a = current_from, fa = g0;
        for (int i = 1; i <= kSteps; ++i) {
          const double b = current_from + h * i;
          const double fb = gap(b);
          if ((fa > 0.0) != (fb > 0.0)) {
            double x0 = a, x1 = b;
            for (int k = 0; k < 80; ++k) {
              const double m = 0.5 * (x0 + x1);
              if ((gap(m) > 0.0) == (fa > 0.0))
                x0 = m;
              else
                x1 = m;
            }
            switch_t = 0.5 * (x0 + x1);
            continuous = true;
            break;
          }
          a = b;
          fa = fb;
        }
      }
    }
    if (!continuous) {
      switch_t = std::max(occ, current_from);
      rec.jumps.push_back({switch_t, std::abs(gap(switch_t))});
    }
    pieces.push_back({current_from, current});
    current = next;
    current_from = switch_t;
  }
  pieces.push_back({current_from, current});

  for (double t = t_begin; t <= t_end + 0.5 * step; t += step) {
    std::size_t pi = 0;
    while (pi + 1 < pieces.size() && pieces[pi + 1].from <= t) ++pi;
    rec.trace.samples.push_back({t, pieces[pi].traj.value(t)});
  }
  return rec;
}

}  // namespace

Reconstruction reconstruct_analog(const TctSignal& f,
                                  const SwitchingWaveform& rising,
                                  const SwitchingWaveform& falling, double vth,
                                  double sample_step) {
  // Switch at occurrence times, in sequence order; canceled transitions are
  // deliberately kept so sub-threshold bumps become visible.
  std::vector<WstTransition> occ;
  for (std::size_t i = 1; i < f.transitions().size(); ++i) {
    const auto& tr = f.transitions()[i];
    occ.push_back({tr.occurrence(), tr.x});
  }
  return reconstruct_impl(occ, f.initial_value(), rising, falling, vth,
                          sample_step);
}

Reconstruction reconstruct_analog(const WstSignal& f,
                                  const SwitchingWaveform& rising,
                                  const SwitchingWaveform& falling, double vth,
                                  double sample_step) {
  std::vector<WstTransition> occ(f.transitions().begin() + 1,
                                 f.transitions().end());
  return reconstruct_impl(occ, f.initial_value(), rising, falling, vth,
                          sample_step);
}

ComparisonReport compare_models(std::span<const ModelVariant> variants,
                                const StimulusMap& stimuli,
                                const std::map<std::string, WstSignal>& references,
                                double t0, double t1,
                                const std::string& baseline) {
  ComparisonReport rep;
  rep.baseline = baseline;
  bool saw_baseline = false;

  for (const auto& variant : variants) {
    ModelScore score;
    score.name = variant.name;
    const SimResult res = run(variant.circuit, stimuli, variant.options);
    const auto& observed = variant.circuit.observed;
    if (observed.empty())
      throw std::invalid_argument("compare_models: circuit observes no vertices");
    for (const auto& vtx : observed) {
      auto ref = references.find(vtx);
      if (ref == references.end())
        throw std::invalid_argument("compare_models: missing reference signal for '" +
                                    vtx + "'");
      const auto& wst = res.wst.at(vtx);
      SignalDeviation d;
      d.vertex = vtx;
      d.area = deviation_area(wst, ref->second, t0, t1);
      score.total_area += d.area;
      score.per_signal.push_back(std::move(d));
    }
    rep.models.push_back(std::move(score));
    if (variant.name == baseline) saw_baseline = true;
  }
  if (!saw_baseline)
    throw std::invalid_argument("compare_models: baseline model '" + baseline +
                                "' not among the variants");

  double base_area = 0.0;
  for (const auto& m : rep.models)
    if (m.name == baseline) base_area = m.total_area;
  rep.normalizable = base_area > 0.0;
  for (auto& m : rep.models)
    m.normalized = rep.normalizable
                       ? m.total_area / base_area
                       : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

ModelVariant derive_variant(const Circuit& base, const std::string& name,
                            double tau) {
  ModelVariant v;
  v.name = name;
  v.options.tau = tau;
  if (name == "cidm") {
    v.circuit = base;
    return v;
  }
  if (name == "idm") {
    v.circuit = base;
    v.options.idm_interconnect = true;
    return v;
  }
  if (name != "pure" && name != "inertial")
    throw std::invalid_argument("unknown model variant: " + name +
                                " (expected cidm, idm, pure or inertial)");

  Circuit out;
  out.observed = base.observed;
  for (const auto& vx : base.vertices()) {
    if (vx.is_input()) {
      out.add_input(vx.id, vx.init_value());
    } else if (vx.is_output()) {
      out.add_output(vx.id);
    } else {
      ChannelSpec spec = vx.channel();
      if (spec.kind == ChannelKind::cidm) {
        const double sat = spec.base_pair().down().at_saturation();
        const double mean_shift =
            0.5 * (spec.shift.delta_plus + spec.shift.delta_minus);
        ChannelSpec repl;
        repl.gate = spec.gate;
        repl.init = spec.init;
        repl.kind = name == "pure" ? ChannelKind::pure : ChannelKind::inertial;
        repl.pure_delta = sat + mean_shift;
        repl.inertial_theta = name == "inertial" ? spec.base_pair().delta_min() : 0.0;
        spec = repl;
      }
      out.add_channel(vx.id, spec);
    }
  }
  for (const auto& e : base.edges()) out.connect(e.source, e.input_index, e.target);
  v.circuit = std::move(out);
  return v;
}

CancellationReport cancellation_report(const SimResult& result) {
  CancellationReport rep;
  for (const auto& [vertex, pairs] : result.canceled) {
    if (pairs.empty()) continue;
    VertexCancellations vc;
    vc.vertex = vertex;
    vc.pairs = pairs;
    // Consecutive annihilated pairs with no survivor between them form one
    // train: pair indices (i, i+1) and (i+2, i+3) chain.
    CancellationTrain cur{pairs.front().index, 1};
    for (std::size_t k = 1; k < pairs.size(); ++k) {
      if (pairs[k].index == pairs[k - 1].index + 2) {
        ++cur.pulses;
      } else {
        vc.trains.push_back(cur);
        cur = {pairs[k].index, 1};
      }
    }
    vc.trains.push_back(cur);
    for (const auto& t : vc.trains)
      vc.longest_train = std::max(vc.longest_train, t.pulses);
    rep.total_pairs += pairs.size();
    rep.per_vertex.push_back(std::move(vc));
  }
  return rep;
}

}  // namespace cidm
