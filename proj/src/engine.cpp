#include "cidm/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace cidm {

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::transition_indicator: return "evTI";
    case EventKind::gate_input: return "evGI";
    case EventKind::gate_output: return "evGO";
  }
  return "?";
}

void EventQueue::schedule(QueuedEvent ev, double now) {
  if (ev.time < now) {
    std::ostringstream os;
    os << "event scheduled in the past: t=" << ev.time << " with now=" << now;
    throw std::logic_error(os.str());
  }
  // Last-scheduled-wins: drop pending instances of the same event at or
  // after the new time.
  auto ki = by_key_.find(ev.key);
  if (ki != by_key_.end()) {
    auto& its = ki->second;
    for (std::size_t i = 0; i < its.size();) {
      if (its[i]->ev.time >= ev.time) {
        q_.erase(its[i]);
        its[i] = its.back();
        its.pop_back();
      } else {
        ++i;
      }
    }
  }
  Entry e{ev, rank_of(ev.key.target), rank_of(ev.key.source), next_seq_++};
  auto [it, inserted] = q_.insert(e);
  assert(inserted);
  (void)inserted;
  by_key_[ev.key].push_back(it);
}

QueuedEvent EventQueue::pop() {
  if (q_.empty()) throw std::logic_error("pop on empty event queue");
  auto it = q_.begin();
  QueuedEvent ev = it->ev;
  auto ki = by_key_.find(ev.key);
  if (ki != by_key_.end()) {
    auto& its = ki->second;
    for (std::size_t i = 0; i < its.size(); ++i) {
      if (its[i] == it) {
        its[i] = its.back();
        its.pop_back();
        break;
      }
    }
    if (its.empty()) by_key_.erase(ki);
  }
  q_.erase(it);
  return ev;
}

double calc_delta(const GateFunction& g, Bit x, double delta_plus,
                  double delta_minus) {
  switch (g.kind()) {
    case GateKind::not_:
      return x == Bit::one ? delta_minus : delta_plus;
    case GateKind::id:
      return x == Bit::one ? delta_plus : delta_minus;
    default:
      if (delta_plus != delta_minus)
        throw std::invalid_argument(
            "multi-input gates require delta_plus == delta_minus");
      return delta_plus;
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct VertexState {
  const Vertex* v = nullptr;
  // File plus incremental cancellation bookkeeping.
  std::vector<TctTransition> entries;
  std::vector<bool> annihilated;
  std::vector<std::size_t> survivors;
  // Channel-only state.
  std::vector<Bit> gate_in;                    // by input index - 1
  std::vector<int> feeder;                     // vertex index per input
  std::optional<Bit> pending_go;               // projected output decision
  std::optional<CidmDelayPair> pi;             // cidm delay behavior
  bool warned_flat_saturation = false;
  // Instrumented gate-input change log, one per input.
  std::vector<std::vector<std::pair<double, Bit>>> gate_in_log;
};

class Simulation {
 public:
  Simulation(const Circuit& c, const StimulusMap& stimuli,
             const SimOptions& opts)
      : circuit_(c), opts_(opts), queue_(make_ranks(c)) {
    build();
    load_stimuli(stimuli);
  }

  SimResult execute();

 private:
  static std::vector<int> make_ranks(const Circuit& c) {
    std::vector<std::string> ids;
    ids.reserve(c.vertices().size());
    for (const auto& v : c.vertices()) ids.push_back(v.id);
    std::vector<std::string> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> rank(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      rank[i] = static_cast<int>(
          std::lower_bound(sorted.begin(), sorted.end(), ids[i]) -
          sorted.begin());
    }
    return rank;
  }

  void build();
  void load_stimuli(const StimulusMap& stimuli);

  void handle_ti(const QueuedEvent& ev);
  void handle_gi(const QueuedEvent& ev);
  void handle_go(const QueuedEvent& ev);

  void commit_output(int vi, double t, Bit x, double o);
  void fan_out(int vi, double t);

  void append_entry(int vi, const TctTransition& tr);
  void remove_last_entry(int vi);

  // Raw last entry, or last survivor under the idm interconnect view.
  std::pair<Time, Bit> read_file(int vi) const;

  Bit projected_output(int vi) const {
    const auto& s = state_[vi];
    return s.pending_go ? *s.pending_go : s.entries.back().x;
  }

  int index_of(const std::string& id) const {
    for (std::size_t i = 0; i < circuit_.vertices().size(); ++i)
      if (circuit_.vertices()[i].id == id) return static_cast<int>(i);
    throw EngineError("unknown vertex: " + id);
  }

  void trace(const QueuedEvent& ev, const std::string& detail);

  const Circuit& circuit_;
  SimOptions opts_;
  EventQueue queue_;
  std::vector<VertexState> state_;
  // Outgoing channel edges per vertex as (target index, input index).
  std::vector<std::vector<std::pair<int, int>>> out_edges_;
  double now_ = 0.0;
  SimResult result_;
};

void Simulation::build() {
  const auto structure = validate_structure(circuit_);
  if (!structure.ok()) {
    std::ostringstream os;
    os << "circuit fails structural validation: "
       << structure.violations.front().rule << " at "
       << structure.violations.front().where << " ("
       << structure.violations.front().message << ")";
    throw EngineError(os.str());
  }
  const auto compat = validate_compatibility(circuit_);
  if (!compat.ok()) {
    std::ostringstream os;
    os << "circuit fails compatibility validation: "
       << compat.violations.front().where << " ("
       << compat.violations.front().message << ")";
    throw EngineError(os.str());
  }

  const auto& vs = circuit_.vertices();
  state_.resize(vs.size());
  out_edges_.resize(vs.size());

  for (std::size_t i = 0; i < vs.size(); ++i) {
    auto& s = state_[i];
    s.v = &vs[i];
    if (vs[i].is_output()) continue;
    const Bit init = vs[i].init_value();
    s.entries.push_back({Time::minus_inf(), init, 0.0});
    s.annihilated.push_back(false);
    s.survivors.push_back(0);
    if (vs[i].is_channel()) {
      const ChannelSpec& spec = vs[i].channel();
      const int d = spec.gate.arity();
      s.gate_in.assign(static_cast<std::size_t>(d), Bit::zero);
      s.feeder.assign(static_cast<std::size_t>(d), -1);
      s.gate_in_log.assign(static_cast<std::size_t>(d), {});
      if (spec.kind == ChannelKind::cidm)
        s.pi = pi_compose(spec.shift, spec.base_pair());
    }
  }

  for (const auto& e : circuit_.edges()) {
    const int src = index_of(e.source);
    const int dst = index_of(e.target);
    if (circuit_.vertices()[static_cast<std::size_t>(dst)].is_channel()) {
      out_edges_[static_cast<std::size_t>(src)].push_back({dst, e.input_index});
      auto& ds = state_[static_cast<std::size_t>(dst)];
      ds.gate_in[static_cast<std::size_t>(e.input_index - 1)] =
          circuit_.vertices()[static_cast<std::size_t>(src)].init_value();
      ds.feeder[static_cast<std::size_t>(e.input_index - 1)] = src;
    }
  }

  // Reset phase: channels whose gate disagrees with Init get a transition
  // scheduled at t = 0.
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (!vs[i].is_channel()) continue;
    auto& s = state_[i];
    const Bit y = vs[i].channel().gate.eval(s.gate_in);
    if (y != vs[i].channel().init) {
      QueuedEvent ev;
      ev.time = 0.0;
      ev.key = {EventKind::gate_output, static_cast<int>(i), 0, -1};
      ev.value = y;
      queue_.schedule(ev, 0.0);
      s.pending_go = y;
    }
  }
}

void Simulation::load_stimuli(const StimulusMap& stimuli) {
  for (const auto& [port, raw] : stimuli) {
    const int vi = index_of(port);
    const Vertex& v = circuit_.vertices()[static_cast<std::size_t>(vi)];
    if (!v.is_input())
      throw EngineError("stimulus target is not an input port: " + port);
    if (auto c = validate_stimulus(raw); !c)
      throw EngineError("stimulus for " + port + ": " + c.message);
    if (raw.empty() || raw.front().x != v.init_value())
      throw EngineError("stimulus for " + port +
                        " must start from the port's initial value");
    // Equal scheduled times encode zero-time glitches; only the last entry
    // of each equal-time run can occur.
    std::vector<TctTransition> collapsed;
    for (std::size_t i = 1; i < raw.size(); ++i) {
      if (raw[i].t.seconds() < 0.0)
        throw EngineError("stimulus for " + port +
                          " has a transition before t = 0");
      if (!collapsed.empty() && collapsed.back().t == raw[i].t)
        collapsed.back() = raw[i];
      else
        collapsed.push_back(raw[i]);
    }
    for (const auto& tr : collapsed) {
      QueuedEvent ev;
      ev.time = tr.t.seconds();
      ev.key = {EventKind::gate_output, vi, 0, -1};
      ev.value = tr.x;
      ev.stim_offset = tr.o;
      ev.is_stimulus = true;
      queue_.schedule(ev, 0.0);
    }
  }
}

void Simulation::trace(const QueuedEvent& ev, const std::string& detail) {
  if (!opts_.trace) return;
  TraceRecord r;
  r.time = ev.time;
  r.kind = ev.key.kind;
  r.target = circuit_.vertices()[static_cast<std::size_t>(ev.key.target)].id;
  r.input = ev.key.input;
  if (ev.key.source >= 0)
    r.source = circuit_.vertices()[static_cast<std::size_t>(ev.key.source)].id;
  r.detail = detail;
  result_.trace.push_back(std::move(r));
}

std::pair<Time, Bit> Simulation::read_file(int vi) const {
  const auto& s = state_[static_cast<std::size_t>(vi)];
  if (opts_.idm_interconnect) {
    const auto& tr = s.entries[s.survivors.back()];
    return {tr.occurrence(), tr.x};
  }
  const auto& tr = s.entries.back();
  return {tr.occurrence(), tr.x};
}

void Simulation::append_entry(int vi, const TctTransition& tr) {
  auto& s = state_[static_cast<std::size_t>(vi)];
  s.entries.push_back(tr);
  const std::size_t n = s.entries.size() - 1;
  if (!s.annihilated[n - 1] &&
      !(s.entries[n - 1].occurrence() < tr.occurrence())) {
    s.annihilated[n - 1] = true;
    s.annihilated.push_back(true);
    s.survivors.pop_back();
  } else {
    s.annihilated.push_back(false);
    s.survivors.push_back(n);
  }
}

void Simulation::remove_last_entry(int vi) {
  auto& s = state_[static_cast<std::size_t>(vi)];
  const std::size_t n = s.entries.size() - 1;
  if (s.annihilated[n]) {
    s.annihilated[n - 1] = false;
    s.survivors.push_back(n - 1);
  } else {
    s.survivors.pop_back();
  }
  s.annihilated.pop_back();
  s.entries.pop_back();
}

void Simulation::fan_out(int vi, double t) {
  const auto& s = state_[static_cast<std::size_t>(vi)];
  for (const auto& [target, input] : out_edges_[static_cast<std::size_t>(vi)]) {
    QueuedEvent ev;
    ev.time = t;
    ev.key = {EventKind::transition_indicator, target, input, vi};
    ev.expected_file_size = s.entries.size();
    queue_.schedule(ev, now_);
  }
}

void Simulation::handle_ti(const QueuedEvent& ev) {
  const int src = ev.key.source;
  const int dst = ev.key.target;
  auto& srcs = state_[static_cast<std::size_t>(src)];
  if (srcs.entries.size() != ev.expected_file_size)
    throw std::logic_error(
        "internal: file changed between transition indicator and read");

  const auto [occ, x] = read_file(src);
  const ChannelSpec& spec =
      circuit_.vertices()[static_cast<std::size_t>(dst)].channel();
  double d = 0.0;
  if (spec.kind == ChannelKind::cidm) {
    const PureShift sh = spec.effective_shift(ev.key.input);
    d = calc_delta(spec.gate, x, sh.delta_plus, sh.delta_minus);
  }
  const double t_sched =
      occ.is_neg_inf() ? now_ : std::max(now_, occ.seconds() + d);

  QueuedEvent gi;
  gi.time = t_sched;
  gi.key = {EventKind::gate_input, dst, ev.key.input, -1};
  gi.value = x;
  queue_.schedule(gi, now_);
  if (opts_.trace) {
    std::ostringstream os;
    os << "read (" << occ.raw() << ", " << to_int(x) << "), evGI at "
       << t_sched;
    trace(ev, os.str());
  }
}

void Simulation::handle_gi(const QueuedEvent& ev) {
  const int vi = ev.key.target;
  auto& s = state_[static_cast<std::size_t>(vi)];
  Bit& slot = s.gate_in[static_cast<std::size_t>(ev.key.input - 1)];
  if (slot == ev.value) {
    trace(ev, "vacuous");
    return;
  }
  slot = ev.value;
  s.gate_in_log[static_cast<std::size_t>(ev.key.input - 1)].push_back(
      {now_, ev.value});

  const ChannelSpec& spec =
      circuit_.vertices()[static_cast<std::size_t>(vi)].channel();
  const Bit y = spec.gate.eval(s.gate_in);
  const Bit current = projected_output(vi);
  if (y != current) {
    QueuedEvent go;
    go.time = now_;
    go.key = {EventKind::gate_output, vi, 0, -1};
    go.value = y;
    queue_.schedule(go, now_);
    s.pending_go = y;
    if (opts_.trace) {
      std::ostringstream os;
      os << "gate output decision " << to_int(y);
      trace(ev, os.str());
    }
  } else {
    trace(ev, "no output change");
  }
}

void Simulation::handle_go(const QueuedEvent& ev) {
  const int vi = ev.key.target;
  auto& s = state_[static_cast<std::size_t>(vi)];

  if (ev.is_stimulus) {
    if (ev.value == s.entries.back().x) {
      trace(ev, "stimulus vacuous");
      return;  // collapsed zero-time glitch or repeated level
    }
    append_entry(vi, {Time(now_), ev.value, ev.stim_offset});
    fan_out(vi, now_);
    trace(ev, "stimulus committed");
    return;
  }

  s.pending_go.reset();
  const Vertex& v = circuit_.vertices()[static_cast<std::size_t>(vi)];
  const ChannelSpec& spec = v.channel();

  // Previous output transition as occurrence time; -inf means the channel
  // has been settled forever and delay functions run at their saturation.
  const Time prev = s.entries.back().occurrence();
  const double T = prev.is_neg_inf() ? kInf : now_ - prev.seconds();

  double o = 0.0;
  if (spec.kind == ChannelKind::cidm) {
    const auto& pi = *s.pi;
    try {
      if (ev.value == Bit::one)
        o = pi.up.eval(T - pi.shift.delta_plus) - pi.shift.delta_plus;
      else
        o = pi.down.eval(T - pi.shift.delta_minus) - pi.shift.delta_minus;
    } catch (const std::domain_error& ex) {
      std::ostringstream os;
      os << "delay function domain violation at t=" << now_ << " on channel '"
         << v.id << "' (T=" << T << ", value=" << to_int(ev.value)
         << "): " << ex.what()
         << "; an incompatible channel slipped through validation";
      throw EngineError(os.str());
    }
    const auto& used = (ev.value == Bit::one) ? pi.up : pi.down;
    if (T == kInf && used.saturation_is_flat() && !s.warned_flat_saturation) {
      s.warned_flat_saturation = true;
      result_.warnings.push_back(
          "channel '" + v.id +
          "': sampled delay table extended flat for the initial transition");
    }
  } else {
    o = spec.pure_delta;
    if (spec.kind == ChannelKind::inertial) {
      const Time last_surv = s.entries[s.survivors.back()].occurrence();
      if (!last_surv.is_neg_inf() &&
          now_ + o - last_surv.seconds() < spec.inertial_theta) {
        // Too narrow: occur exactly at the previous occurrence so the pair
        // annihilates.
        o = last_surv.seconds() - now_;
      }
    }
  }

  if (opts_.trace) {
    std::ostringstream os;
    os << "value " << to_int(ev.value) << ", T=" << T << ", o=" << o;
    trace(ev, os.str());
  }
  commit_output(vi, now_, ev.value, o);
}

void Simulation::commit_output(int vi, double t, Bit x, double o) {
  auto& s = state_[static_cast<std::size_t>(vi)];
  const bool same_instant =
      s.entries.size() > 1 && s.entries.back().t == Time(t);

  if (same_instant) {
    // Re-decision within one instant. With binary values the correction
    // either restores the pre-instant level (drop the provisional entry) or
    // re-confirms the decision already materialized (nothing to do).
    if (x == s.entries.back().x) return;
    remove_last_entry(vi);
    fan_out(vi, t);
    return;
  }
  if (x == s.entries.back().x) return;  // vacuous

  append_entry(vi, {Time(t), x, o});

  // Strict causality keeps files S4-consistent; anything else is a bug.
  const auto& e = s.entries;
  if (e.size() >= 3 &&
      e[e.size() - 1].occurrence() < e[e.size() - 3].occurrence())
    throw std::logic_error("internal: transition file lost S4 on channel " +
                           s.v->id);

  fan_out(vi, t);
}

SimResult Simulation::execute() {
  result_.tau = opts_.tau;
  while (!queue_.empty()) {
    const QueuedEvent ev = queue_.pop();
    if (ev.time > opts_.tau) break;
    now_ = ev.time;
    result_.end_time = now_;
    ++result_.dispatched_events;
    switch (ev.key.kind) {
      case EventKind::transition_indicator: handle_ti(ev); break;
      case EventKind::gate_input: handle_gi(ev); break;
      case EventKind::gate_output: handle_go(ev); break;
    }
  }

  // Postprocess: derive WST views, collect cancellations, alias output
  // ports to their drivers.
  for (std::size_t i = 0; i < circuit_.vertices().size(); ++i) {
    const auto& v = circuit_.vertices()[i];
    if (v.is_output()) continue;
    auto& s = state_[i];
    TctSignal sig(s.entries);
    const auto scan = scan_cancellations(sig);
    // Incremental bookkeeping must agree with the batch pass.
    std::size_t live = 0;
    for (std::size_t k = 0; k < s.annihilated.size(); ++k)
      if (!s.annihilated[k]) ++live;
    if (live != scan.wst.size())
      throw std::logic_error("internal: cancellation bookkeeping diverged on " +
                             v.id);
    result_.files[v.id] = TransitionFile{v.id, s.entries};
    result_.wst.emplace(v.id, scan.wst);
    result_.canceled[v.id] = scan.canceled;

    if (v.is_channel()) {
      // Gate-side input signals, with same-instant corrections collapsed.
      for (std::size_t k = 0; k < s.gate_in_log.size(); ++k) {
        const int f = s.feeder[k];
        const Bit init =
            circuit_.vertices()[static_cast<std::size_t>(f)].init_value();
        std::vector<WstTransition> ts{{Time::minus_inf(), init}};
        for (const auto& [tt, val] : s.gate_in_log[k]) {
          if (ts.size() > 1 && ts.back().t == Time(tt))
            ts.back().x = val;
          else
            ts.push_back({Time(tt), val});
          if (ts.size() > 1 && ts[ts.size() - 2].x == ts.back().x)
            ts.pop_back();
        }
        result_.gate_inputs.emplace(v.id + ".in" + std::to_string(k + 1),
                                    WstSignal(std::move(ts)));
      }
    }
  }
  for (const auto& v : circuit_.vertices()) {
    if (!v.is_output()) continue;
    const auto in = circuit_.incoming(v.id);
    const std::string& drv = in.front().source;
    TransitionFile f = result_.files.at(drv);
    f.vertex = v.id;
    result_.files[v.id] = std::move(f);
    result_.wst.emplace(v.id, result_.wst.at(drv));
    result_.canceled[v.id] = result_.canceled.at(drv);
  }
  return result_;
}

}  // namespace

SimResult run(const Circuit& c, const StimulusMap& stimuli,
              const SimOptions& opts) {
  Simulation sim(c, stimuli, opts);
  return sim.execute();
}

std::vector<SimResult> run_batch(const Circuit& c,
                                 std::span<const StimulusMap> stimuli,
                                 const SimOptions& opts) {
  std::vector<SimResult> out;
  out.reserve(stimuli.size());
  for (const auto& s : stimuli) out.push_back(run(c, s, opts));
  return out;
}

}  // namespace cidm
