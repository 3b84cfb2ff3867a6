#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cidm/engine.hpp"
#include "oracles.hpp"

using namespace cidm;

namespace {

ChannelSpec cidm_channel(GateKind g, int arity, Bit init, PureShift shift,
                         BaseParams base = {}) {
  ChannelSpec s;
  s.kind = ChannelKind::cidm;
  s.gate = GateFunction(g, arity);
  s.init = init;
  s.shift = shift;
  s.base = base;
  return s;
}

TctTransition tct(double t, int x, double o = 0.0) {
  return {Time(t), bit_of(x), o};
}
TctTransition tct_init(int x) { return {Time::minus_inf(), bit_of(x), 0.0}; }

std::vector<TctTransition> pulse(int init, double t_up, double t_down) {
  return {tct_init(init), tct(t_up, 1 - init), tct(t_down, init)};
}

bool same_wst(const SimResult& a, const SimResult& b) {
  if (a.wst.size() != b.wst.size()) return false;
  for (const auto& [k, v] : a.wst) {
    auto it = b.wst.find(k);
    if (it == b.wst.end() || !(v == it->second)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("queue dispatches by time, kind priority, coordinates, insertion") {
  EventQueue q({0, 1, 2});
  const auto ev = [](EventKind k, double t, int target, int input = 0,
                     int source = -1) {
    QueuedEvent e;
    e.time = t;
    e.key = {k, target, input, source};
    return e;
  };
  q.schedule(ev(EventKind::gate_output, 4.0, 1), 0.0);
  q.schedule(ev(EventKind::transition_indicator, 4.0, 1, 1, 0), 0.0);
  q.schedule(ev(EventKind::gate_input, 4.0, 1, 1), 0.0);
  q.schedule(ev(EventKind::gate_input, 3.0, 2, 1), 0.0);
  CHECK(q.pop().key.kind == EventKind::gate_input);  // t=3 first
  CHECK(q.pop().key.kind == EventKind::transition_indicator);
  CHECK(q.pop().key.kind == EventKind::gate_input);
  CHECK(q.pop().key.kind == EventKind::gate_output);
  CHECK(q.empty());
}

TEST_CASE("queue same-event scheduling is last-wins at equal times") {
  EventQueue q({0});
  QueuedEvent a;
  a.time = 7.0;
  a.key = {EventKind::gate_output, 0, 0, -1};
  a.value = Bit::zero;
  q.schedule(a, 0.0);
  a.value = Bit::one;
  q.schedule(a, 0.0);
  REQUIRE(q.size() == 1);
  CHECK(q.pop().value == Bit::one);
}

TEST_CASE("queue preemption deletes pending instances at or after the new time") {
  EventQueue q({0});
  QueuedEvent a;
  a.key = {EventKind::gate_input, 0, 1, -1};
  a.time = 9.0;
  q.schedule(a, 0.0);
  a.time = 6.0;
  q.schedule(a, 0.0);
  REQUIRE(q.size() == 1);
  CHECK(q.pop().time == 6.0);

  // An earlier pending instance survives a later schedule.
  a.time = 6.0;
  q.schedule(a, 0.0);
  a.time = 9.0;
  q.schedule(a, 0.0);
  CHECK(q.size() == 2);
}

TEST_CASE("queue rejects scheduling in the past") {
  EventQueue q({0});
  QueuedEvent a;
  a.key = {EventKind::gate_output, 0, 0, -1};
  a.time = 1.0;
  CHECK_THROWS_AS(q.schedule(a, 2.0), std::logic_error);
}

TEST_CASE("queue orders same-time same-kind events by vertex rank then input") {
  // Ranks reverse the declaration order.
  EventQueue q({2, 1, 0});
  const auto ev = [](double t, int target, int input) {
    QueuedEvent e;
    e.time = t;
    e.key = {EventKind::gate_input, target, input, -1};
    return e;
  };
  q.schedule(ev(1.0, 0, 1), 0.0);
  q.schedule(ev(1.0, 2, 2), 0.0);
  q.schedule(ev(1.0, 2, 1), 0.0);
  CHECK(q.pop().key.target == 2);  // rank 0
  CHECK(q.pop().key.input == 2);
  CHECK(q.pop().key.target == 0);
}

TEST_CASE("queue dispatch order is a total order under random schedules") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> tm(0.0, 10.0);
  std::uniform_int_distribution<int> vtx(0, 4);
  std::uniform_int_distribution<int> kind(0, 2);
  for (int round = 0; round < 50; ++round) {
    EventQueue q({3, 0, 4, 1, 2});
    for (int i = 0; i < 200; ++i) {
      QueuedEvent e;
      e.time = tm(rng);
      e.key.kind = static_cast<EventKind>(kind(rng));
      e.key.target = vtx(rng);
      e.key.input = e.key.kind == EventKind::gate_output ? 0 : 1 + vtx(rng) % 3;
      e.key.source =
          e.key.kind == EventKind::transition_indicator ? vtx(rng) : -1;
      q.schedule(e, 0.0);
    }
    double prev_time = -1.0;
    int prev_kind = -1;
    while (!q.empty()) {
      const QueuedEvent e = q.pop();
      CHECK(e.time >= prev_time);
      if (e.time == prev_time) CHECK(static_cast<int>(e.key.kind) >= prev_kind);
      if (e.time != prev_time) prev_kind = -1;
      prev_time = e.time;
      prev_kind = std::max(prev_kind, static_cast<int>(e.key.kind));
    }
  }
}

TEST_CASE("quiesced circuits satisfy the gate functions at the horizon") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> gap(0.5, 3.0);
  std::uniform_int_distribution<int> gate_pick(0, 3);
  for (int round = 0; round < 40; ++round) {
    const GateKind kinds[] = {GateKind::and_, GateKind::or_, GateKind::xor_,
                              GateKind::nand};
    const GateKind gk = kinds[gate_pick(rng)];
    Circuit c;
    c.add_input("p", Bit::zero);
    c.add_input("q", Bit::one);
    c.add_channel("u", cidm_channel(GateKind::not_, 1, Bit::one, {0, 0}));
    const GateFunction g(gk, 2);
    const Bit ginit = g.eval(std::vector{Bit::one, Bit::one});
    ChannelSpec w = cidm_channel(gk, 2, ginit, {0.1, 0.1});
    w.input_shift_override[2] = {0.0, 0.0};  // port-fed input
    c.add_channel("w", w);
    c.connect("p", 1, "u");
    c.connect("u", 1, "w");
    c.connect("q", 2, "w");
    REQUIRE(validate_compatibility(c).ok());

    StimulusMap stim;
    std::vector<TctTransition> sp{tct_init(0)};
    std::vector<TctTransition> sq{tct_init(1)};
    double t = gap(rng);
    for (int k = 0; k < 6; ++k) {
      sp.push_back(tct(t, k % 2 ? 0 : 1));
      t += gap(rng);
    }
    t = gap(rng);
    for (int k = 0; k < 4; ++k) {
      sq.push_back(tct(t, k % 2 ? 1 : 0));
      t += gap(rng);
    }
    stim["p"] = sp;
    stim["q"] = sq;
    const double tau = 500.0;  // far beyond the last activity
    const SimResult r = run(c, stim, {.tau = tau});
    const Bit pv = state_at(r.wst.at("p"), tau);
    const Bit qv = state_at(r.wst.at("q"), tau);
    const Bit uv = state_at(r.wst.at("u"), tau);
    const Bit wv = state_at(r.wst.at("w"), tau);
    CHECK(uv == flip(pv));
    CHECK(wv == g.eval(std::vector{uv, qv}));
  }
}

TEST_CASE("calc_delta follows the gate-dependent selection") {
  const GateFunction not_g(GateKind::not_, 1), id_g(GateKind::id, 1),
      and_g(GateKind::and_, 2);
  CHECK(calc_delta(not_g, Bit::one, 0.3, -0.7) == -0.7);
  CHECK(calc_delta(not_g, Bit::zero, 0.3, -0.7) == 0.3);
  CHECK(calc_delta(id_g, Bit::one, 0.3, -0.7) == 0.3);
  CHECK(calc_delta(id_g, Bit::zero, 0.3, -0.7) == -0.7);
  CHECK(calc_delta(and_g, Bit::one, 0.4, 0.4) == 0.4);
  CHECK_THROWS_AS(calc_delta(and_g, Bit::one, 0.4, 0.3), std::invalid_argument);
}

TEST_CASE("settled inverter with consistent init produces no events") {
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("inv", cidm_channel(GateKind::not_, 1, Bit::one, {0, 0}));
  c.connect("in", 1, "inv");
  const SimResult r = run(c, {}, {.tau = 10.0});
  CHECK(r.files.at("inv").entries.size() == 1);
  CHECK(r.files.at("inv").entries.front().x == Bit::one);
  CHECK(r.dispatched_events == 0);
}

TEST_CASE("inconsistent init gets a reset transition at t = 0") {
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("inv", cidm_channel(GateKind::not_, 1, Bit::zero, {0, 0}));
  c.connect("in", 1, "inv");
  const SimResult r = run(c, {}, {.tau = 10.0});
  REQUIRE(r.files.at("inv").entries.size() == 2);
  const auto& tr = r.files.at("inv").entries[1];
  CHECK(tr.t == Time(0.0));
  CHECK(tr.x == Bit::one);
  // Settled history: offset saturates at delta_inf.
  CHECK(tr.o == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("tau = 0 processes exactly the reset phase") {
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("inv", cidm_channel(GateKind::not_, 1, Bit::zero, {0, 0}));
  c.connect("in", 1, "inv");
  StimulusMap stim;
  stim["in"] = {tct_init(0), tct(5.0, 1)};
  const SimResult r = run(c, stim, {.tau = 0.0});
  CHECK(r.files.at("inv").entries.size() == 2);  // reset committed
  CHECK(r.files.at("in").entries.size() == 1);   // stimulus beyond tau
}

TEST_CASE("single rising edge through an id channel lands at t + delta_inf") {
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("buf", cidm_channel(GateKind::id, 1, Bit::zero, {0, 0}));
  c.add_output("out");
  c.connect("in", 1, "buf");
  c.connect("buf", 1, "out");
  StimulusMap stim;
  stim["in"] = {tct_init(0), tct(5.0, 1)};
  const SimResult r = run(c, stim, {.tau = 50.0});
  REQUIRE(r.files.at("buf").entries.size() == 2);
  const auto& tr = r.files.at("buf").entries[1];
  CHECK(tr.t == Time(5.0));
  CHECK(tr.occurrence() == Time(9.0));  // 5 + saturation 4
  // Output port aliases its driver.
  CHECK(r.files.at("out").entries.size() == 2);
  CHECK(r.wst.at("out") == r.wst.at("buf"));
}

TEST_CASE("short pulse collapses inside the channel and is reported") {
  // Rising 5, falling 5.2 into a (1,4,2) id channel after a long-settled 0:
  // the falling offset runs off the rising occurrence and cancels it.
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("buf", cidm_channel(GateKind::id, 1, Bit::zero, {0, 0}));
  c.connect("in", 1, "buf");
  StimulusMap stim;
  stim["in"] = pulse(0, 5.0, 5.2);
  const SimResult r = run(c, stim, {.tau = 50.0});
  REQUIRE(r.files.at("buf").entries.size() == 3);
  const auto& rise = r.files.at("buf").entries[1];
  const auto& fall = r.files.at("buf").entries[2];
  CHECK(rise.o == doctest::Approx(4.0).epsilon(1e-12));
  // T = 5.2 - 9 = -3.8; down(-3.8) = 4 - 3 e^{1.4}
  CHECK(fall.o ==
        doctest::Approx(4.0 - 3.0 * std::exp(1.4)).epsilon(1e-12));
  CHECK(fall.occurrence() < rise.occurrence());
  CHECK(r.wst.at("buf").size() == 1);  // nothing survives
  REQUIRE(r.canceled.at("buf").size() == 1);
  CHECK(r.canceled.at("buf").front().index == 1);
}

TEST_CASE("same-time opposite stimulus entries vanish without a trace") {
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("buf", cidm_channel(GateKind::id, 1, Bit::zero, {0, 0}));
  c.connect("in", 1, "buf");
  StimulusMap clean, glitched;
  clean["in"] = {tct_init(0), tct(3.0, 1), tct(9.0, 0)};
  glitched["in"] = {tct_init(0), tct(1.0, 1), tct(1.0, 0), tct(3.0, 1),
                    tct(9.0, 0)};
  const SimResult a = run(c, clean, {.tau = 50.0});
  const SimResult b = run(c, glitched, {.tau = 50.0});
  CHECK(same_wst(a, b));
  CHECK(a.files.at("in").entries.size() == b.files.at("in").entries.size());
}

TEST_CASE("occurrence-tie stimulus pair cancels at the port and dies in the channel") {
  // Occurrences collide (tie) while scheduled times differ: the port exposes
  // the canceled pair, the gate sees a sub-threshold 0.5-wide attempt, and
  // the channel's own output pair annihilates. Unlike a true same-time
  // glitch, the channel's single-history anchor remembers the excursion.
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("buf", cidm_channel(GateKind::id, 1, Bit::zero, {0, 0}));
  c.connect("in", 1, "buf");
  StimulusMap glitched;
  glitched["in"] = {tct_init(0), tct(3.0, 1, 0.0), tct(3.5, 0, -0.5),
                    tct(8.0, 1)};
  const SimResult b = run(c, glitched, {.tau = 50.0});
  CHECK(b.canceled.at("in").size() == 1);
  CHECK(b.canceled.at("buf").size() == 1);
  // No pulse survives anywhere; only the final rise shows up.
  CHECK(b.wst.at("in").size() == 2);
  REQUIRE(b.wst.at("buf").size() == 2);
  CHECK(b.wst.at("buf").transitions()[1].x == Bit::one);
  // History anchor: the final rise references the canceled attempt, so its
  // delay is evaluated at finite T rather than at saturation.
  const double anchor =
      3.5 + (4.0 - 3.0 * std::exp(-(-3.5 + 1.0) / 2.0));  // canceled fall occ
  const double T = 8.0 - anchor;
  const double expect = 8.0 + 1.0 + 2.0 * std::log((T + 4.0) / 3.0);
  CHECK(b.wst.at("buf").transitions()[1].t.seconds() ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("same-time evGI races settle on the last evaluation") {
  // Both nand inputs flip at t = 2 via zero-delay paths; the net gate input
  // change (1,1) -> (0,0) keeps the output at 1 with no transition.
  Circuit c;
  c.add_input("a", Bit::one);
  c.add_input("b", Bit::one);
  c.add_channel("g", cidm_channel(GateKind::nand, 2, Bit::zero, {0, 0}));
  c.connect("a", 1, "g");
  c.connect("b", 2, "g");
  StimulusMap stim;
  stim["a"] = {tct_init(1), tct(2.0, 0)};
  stim["b"] = {tct_init(1), tct(2.0, 0)};
  const SimResult r = run(c, stim, {.tau = 20.0});
  // nand(1,1) = 0 == Init, no reset; after both fall nand(0,0) = 1.
  REQUIRE(r.files.at("g").entries.size() == 2);
  CHECK(r.files.at("g").entries[1].x == Bit::one);
  CHECK(r.files.at("g").entries[1].t == Time(2.0));
}

TEST_CASE("xor same-time race nets out to no output transition") {
  Circuit c;
  c.add_input("a", Bit::zero);
  c.add_input("b", Bit::zero);
  c.add_channel("g", cidm_channel(GateKind::xor_, 2, Bit::zero, {0, 0}));
  c.connect("a", 1, "g");
  c.connect("b", 2, "g");
  StimulusMap stim;
  stim["a"] = {tct_init(0), tct(2.0, 1)};
  stim["b"] = {tct_init(0), tct(2.0, 1)};
  const SimResult r = run(c, stim, {.tau = 20.0});
  CHECK(r.files.at("g").entries.size() == 1);
  CHECK(r.wst.at("g").size() == 1);
}

TEST_CASE("reset racing a t=0 stimulus retracts the provisional transition") {
  // The channel ranks before the port, so its reset transition commits at
  // t = 0 before the stimulus flips the input; the same-instant correction
  // must retract it and leave downstream untouched.
  Circuit c;
  c.add_channel("a", cidm_channel(GateKind::not_, 1, Bit::zero, {0, 0}));
  c.add_channel("b", cidm_channel(GateKind::not_, 1, Bit::one, {0, 0}));
  c.add_input("z", Bit::zero);
  c.connect("z", 1, "a");
  c.connect("a", 1, "b");
  StimulusMap stim;
  stim["z"] = {tct_init(0), tct(0.0, 1)};
  const SimResult r = run(c, stim, {.tau = 50.0});
  // not(1) == Init(a): the reset was retracted, nothing ever switches.
  CHECK(r.files.at("a").entries.size() == 1);
  CHECK(r.wst.at("a").size() == 1);
  CHECK(r.files.at("b").entries.size() == 1);
  // Without the stimulus the reset stands and ripples through.
  const SimResult q = run(c, {}, {.tau = 50.0});
  CHECK(q.files.at("a").entries.size() == 2);
  CHECK(q.files.at("b").entries.size() == 2);
}

TEST_CASE("small chain matches the closed-form stage composition") {
  using namespace oracles;
  const std::vector<StageParams> stages = {
      {{1.0, 4.0, 2.0}, 0.0, 0.0, true},
      {{0.6, 2.0, 1.1}, 0.2, -0.15, true},
      {{0.9, 3.0, 1.7}, -0.1, 0.25, false},
  };
  Circuit c;
  c.add_input("in", Bit::zero);
  std::string prev = "in";
  int level = 0;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    level = s.inverting ? 1 - level : level;
    BaseParams bp;
    bp.delta_min = s.base.dmin;
    bp.delta_inf = s.base.dinf;
    bp.tau = s.base.tau;
    const PureShift sh = i == 0 ? PureShift{0, 0}
                                : PureShift{s.delta_plus, s.delta_minus};
    const std::string id = "s" + std::to_string(i);
    c.add_channel(id, cidm_channel(s.inverting ? GateKind::not_ : GateKind::id,
                                   1, bit_of(level), sh, bp));
    c.connect(prev, 1, id);
    prev = id;
  }
  REQUIRE(validate_compatibility(c).ok());

  std::vector<OracleEvent> in = {{6.0, 6.0, 1}, {14.0, 14.0, 0}};
  std::vector<StageParams> effective = stages;
  effective[0].delta_plus = effective[0].delta_minus = 0.0;  // port-fed
  const auto expect = chain_transfer(effective, in, 0);
  REQUIRE(expect.has_value());

  StimulusMap stim;
  stim["in"] = {tct_init(0), tct(6.0, 1), tct(14.0, 0)};
  const SimResult r = run(c, stim, {.tau = 100.0});
  const auto& wst = r.wst.at(prev).transitions();
  REQUIRE(wst.size() == expect->size() + 1);
  for (std::size_t i = 0; i < expect->size(); ++i) {
    CHECK(wst[i + 1].t.seconds() ==
          doctest::Approx((*expect)[i].time).epsilon(1e-12));
    CHECK(to_int(wst[i + 1].x) == (*expect)[i].value);
  }
}

TEST_CASE("idm interconnect view is bit-identical under zero shifts") {
  Circuit c;
  c.add_input("in", Bit::zero);
  std::string prev = "in";
  int level = 0;
  for (int i = 0; i < 3; ++i) {
    level = 1 - level;
    const std::string id = "inv" + std::to_string(i);
    c.add_channel(id, cidm_channel(GateKind::not_, 1, bit_of(level), {0, 0}));
    c.connect(prev, 1, id);
    prev = id;
  }
  StimulusMap stim;
  stim["in"] = {tct_init(0), tct(2, 1), tct(2.4, 0), tct(6, 1), tct(11, 0)};
  const SimResult tct_view = run(c, stim, {.tau = 60.0});
  const SimResult wst_view =
      run(c, stim, {.tau = 60.0, .idm_interconnect = true});
  CHECK(same_wst(tct_view, wst_view));
  for (const auto& [k, f] : tct_view.files) {
    CHECK(f.entries.size() == wst_view.files.at(k).entries.size());
    for (std::size_t i = 0; i < f.entries.size(); ++i) {
      CHECK(f.entries[i].t == wst_view.files.at(k).entries[i].t);
      CHECK(f.entries[i].o == wst_view.files.at(k).entries[i].o);
    }
  }
}

TEST_CASE("canceled pulse regenerates through an asymmetric successor") {
  // Stage 1 cancels a 2.5-wide pulse; stage 2's shift re-orders the
  // occurrences and regenerates it. The same circuit under the idm view
  // never sees the pulse.
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("c1", cidm_channel(GateKind::not_, 1, Bit::one, {0, 0}));
  BaseParams fast;
  fast.delta_min = 0.05;
  fast.delta_inf = 0.12;
  fast.tau = 0.1;
  c.add_channel("c2",
                cidm_channel(GateKind::not_, 1, Bit::zero, {-0.5, 0.5}, fast));
  c.add_output("out");
  c.connect("in", 1, "c1");
  c.connect("c1", 1, "c2");
  c.connect("c2", 1, "out");
  REQUIRE(validate_compatibility(c).ok());

  StimulusMap stim;
  stim["in"] = pulse(0, 5.0, 7.5);

  const SimResult r = run(c, stim, {.tau = 100.0});
  CHECK(r.wst.at("c1").size() == 1);        // canceled at stage 1
  CHECK(r.canceled.at("c1").size() == 1);
  REQUIRE(r.wst.at("c2").size() == 3);      // regenerated downstream

  // Expected values from the closed forms: stage 1 schedules occurrences
  // 9 (falling, saturated) and 7.5 + up(-1.5) (rising, canceling); stage 2
  // re-orders them through its asymmetric shift and regenerates the pulse.
  const double occ_c1_fall = 5.0 + 4.0;
  const double occ_c1_rise = 7.5 + (1.0 + 2.0 * std::log(2.5 / 3.0));
  const double g_rise = occ_c1_fall + (-0.5);  // gate time of c2's rise
  const double g_fall = occ_c1_rise + 0.5;
  const double occ_rise = g_rise + 0.12;  // settled history saturates
  const double T_fall = g_fall - occ_rise;
  const double occ_fall =
      g_fall + (0.12 - 0.07 * std::exp(-(T_fall + 0.05) / 0.1));
  CHECK(r.wst.at("c2").transitions()[1].t.seconds() ==
        doctest::Approx(occ_rise).epsilon(1e-9));
  CHECK(r.wst.at("c2").transitions()[2].t.seconds() ==
        doctest::Approx(occ_fall).epsilon(1e-9));

  const SimResult idm = run(c, stim, {.tau = 100.0, .idm_interconnect = true});
  CHECK(idm.wst.at("c2").size() == 1);  // pulse lost silently
  CHECK(idm.wst.at("out").size() == 1);
}

TEST_CASE("ring oscillator terminates at tau with the expected cadence") {
  Circuit c;
  for (int i = 0; i < 3; ++i)
    c.add_channel("r" + std::to_string(i),
                  cidm_channel(GateKind::not_, 1, bit_of(i % 2), {0, 0}));
  c.connect("r0", 1, "r1");
  c.connect("r1", 1, "r2");
  c.connect("r2", 1, "r0");
  const double dmin_c = min_delta_of_circuit(c);
  CHECK(dmin_c == doctest::Approx(1.0).epsilon(1e-9));
  const double tau = 100.0 * dmin_c;
  const SimResult r = run(c, {}, {.tau = tau});
  CHECK(r.dispatched_events > 0);
  // Transition spacing per channel is at least the circuit minimum delay, so
  // the event count stays within the tau / dmin budget.
  const std::uint64_t bound = static_cast<std::uint64_t>(
      std::ceil(tau / dmin_c) * static_cast<double>(c.edges().size()) * 10.0 +
      100.0);
  CHECK(r.dispatched_events <= bound);
  for (const auto& [k, f] : r.files) {
    CHECK(validate_tct(f.entries).ok);
    CHECK(f.entries.size() > 5);  // it oscillated
  }
}

TEST_CASE("declaration order never changes simulation results") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> width(0.3, 4.0);
  for (int round = 0; round < 20; ++round) {
    const bool shuffle = round % 2 == 1;
    const auto build = [&](bool reorder) {
      Circuit c;
      const auto add_all = [&](const std::vector<int>& order) {
        for (int what : order) {
          switch (what) {
            case 0: c.add_input("in", Bit::zero); break;
            case 1:
              c.add_channel("n1", cidm_channel(GateKind::not_, 1, Bit::one,
                                               {0, 0}));
              break;
            case 2: {
              // Input 2 is port-fed and must not shift.
              ChannelSpec s =
                  cidm_channel(GateKind::nand, 2, Bit::zero, {0.1, 0.1});
              s.input_shift_override[2] = {0.0, 0.0};
              c.add_channel("n2", s);
              break;
            }
            case 3: c.add_output("out"); break;
          }
        }
      };
      add_all(reorder ? std::vector<int>{3, 2, 1, 0}
                      : std::vector<int>{0, 1, 2, 3});
      c.connect("in", 1, "n1");
      c.connect("n1", 1, "n2");
      c.connect("in", 2, "n2");
      c.connect("n2", 1, "out");
      return c;
    };
    StimulusMap stim;
    std::vector<TctTransition> sig{tct_init(0)};
    double t = 1.0;
    for (int k = 0; k < 6; ++k) {
      sig.push_back(tct(t, k % 2 ? 0 : 1));
      t += width(rng);
    }
    stim["in"] = sig;
    const SimResult a = run(build(false), stim, {.tau = 200.0});
    const SimResult b = run(build(shuffle), stim, {.tau = 200.0});
    CHECK(same_wst(a, b));
    CHECK(a.dispatched_events == b.dispatched_events);
  }
}

TEST_CASE("files and gate-side signals stay well-formed on random runs") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> width(0.05, 3.0);
  std::uniform_real_distribution<double> param(0.3, 1.2);
  for (int round = 0; round < 50; ++round) {
    BaseParams b1, b2;
    b1.delta_min = param(rng);
    b1.delta_inf = b1.delta_min + 1.0 + param(rng);
    b1.tau = 0.5 + param(rng);
    b2 = b1;
    b2.delta_min = param(rng);
    b2.delta_inf = b2.delta_min + 0.5 + param(rng);
    Circuit c;
    c.add_input("in", Bit::zero);
    c.add_channel("a", cidm_channel(GateKind::not_, 1, Bit::one, {0, 0}, b1));
    c.add_channel("b", cidm_channel(GateKind::not_, 1, Bit::zero,
                                    {0.2 * param(rng), -0.2 * param(rng)}, b2));
    c.connect("in", 1, "a");
    c.connect("a", 1, "b");
    if (!validate_compatibility(c).ok()) continue;

    std::vector<TctTransition> sig{tct_init(0)};
    double t = 0.5;
    for (int k = 0; k < 12; ++k) {
      sig.push_back(tct(t, k % 2 ? 0 : 1));
      t += width(rng);
    }
    StimulusMap stim;
    stim["in"] = sig;
    const SimResult r = run(c, stim, {.tau = 500.0});
    for (const auto& [k, f] : r.files) CHECK(validate_tct(f.entries).ok);
    for (const auto& [k, w] : r.wst) CHECK(validate_wst(w.transitions()).ok);
    for (const auto& [k, g] : r.gate_inputs)
      CHECK(validate_wst(g.transitions()).ok);
  }
}

TEST_CASE("sampled bases warn when the first transition uses the flat tail") {
  const auto exact = make_exp_log_pair(1.0, 4.0, 2.0);
  BaseParams bp;
  bp.family = BaseParams::Family::sampled;
  for (int i = 0; i <= 500; ++i) {
    const double t = -3.0 + i * (9.0 / 500.0);
    bp.down_points.push_back({t, exact.down()(t)});
  }
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("buf", cidm_channel(GateKind::id, 1, Bit::zero, {0, 0}, bp));
  c.connect("in", 1, "buf");
  StimulusMap stim;
  stim["in"] = {tct_init(0), tct(5.0, 1)};
  const SimResult r = run(c, stim, {.tau = 40.0});
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings.front().find("flat") != std::string::npos);
  // The flat tail stands in for the settled-history limit: the reflected
  // rising table ends at -(first falling abscissa).
  CHECK(r.files.at("buf").entries[1].o == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("engine rejects invalid setups") {
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("g", cidm_channel(GateKind::nand, 2, Bit::one, {0, 0}));
  c.connect("in", 1, "g");
  CHECK_THROWS_AS(run(c, {}, {.tau = 1.0}), EngineError);  // C5 broken

  Circuit ok;
  ok.add_input("in", Bit::zero);
  ok.add_channel("g", cidm_channel(GateKind::not_, 1, Bit::one, {0, 0}));
  ok.connect("in", 1, "g");
  StimulusMap bad_port;
  bad_port["nope"] = {tct_init(0)};
  CHECK_THROWS_AS(run(ok, bad_port, {.tau = 1.0}), EngineError);

  StimulusMap bad_init;
  bad_init["in"] = {tct_init(1), tct(1.0, 0)};
  CHECK_THROWS_AS(run(ok, bad_init, {.tau = 1.0}), EngineError);

  StimulusMap negative;
  negative["in"] = {tct_init(0), tct(-1.0, 1)};
  CHECK_THROWS_AS(run(ok, negative, {.tau = 1.0}), EngineError);
}

TEST_CASE("batch runs are independent and ordered") {
  Circuit c;
  c.add_input("in", Bit::zero);
  c.add_channel("g", cidm_channel(GateKind::id, 1, Bit::zero, {0, 0}));
  c.connect("in", 1, "g");
  std::vector<StimulusMap> stims(3);
  stims[0]["in"] = {tct_init(0), tct(1.0, 1)};
  stims[1]["in"] = {tct_init(0), tct(2.0, 1)};
  stims[2]["in"] = {tct_init(0)};
  const auto results = run_batch(c, stims, {.tau = 50.0});
  REQUIRE(results.size() == 3);
  CHECK(results[0].files.at("g").entries.size() == 2);
  CHECK(results[1].files.at("g").entries[1].t == Time(2.0));
  CHECK(results[2].files.at("g").entries.size() == 1);
  // Same stimulus again gives the same result.
  const auto again = run(c, stims[1], {.tau = 50.0});
  CHECK(same_wst(again, results[1]));
}

TEST_CASE("pure and inertial channel kinds run in-circuit") {
  Circuit c;
  c.add_input("in", Bit::zero);
  ChannelSpec p;
  p.kind = ChannelKind::pure;
  p.gate = GateFunction(GateKind::id, 1);
  p.init = Bit::zero;
  p.pure_delta = 2.0;
  c.add_channel("pd", p);
  ChannelSpec i;
  i.kind = ChannelKind::inertial;
  i.gate = GateFunction(GateKind::id, 1);
  i.init = Bit::zero;
  i.pure_delta = 2.0;
  i.inertial_theta = 1.0;
  c.add_channel("ind", i);
  c.connect("in", 1, "pd");
  c.connect("pd", 1, "ind");

  StimulusMap stim;
  // Wide pulse and a narrow one: the narrow one dies in the inertial stage.
  stim["in"] = {tct_init(0), tct(1.0, 1), tct(4.0, 0), tct(6.0, 1),
                tct(6.5, 0)};
  const SimResult r = run(c, stim, {.tau = 60.0});
  const auto& pd = r.wst.at("pd").transitions();
  REQUIRE(pd.size() == 5);
  CHECK(pd[1].t == Time(3.0));
  CHECK(pd[2].t == Time(6.0));
  const auto& ind = r.wst.at("ind").transitions();
  REQUIRE(ind.size() == 3);  // only the wide pulse survives
  CHECK(ind[1].t == Time(5.0));
  CHECK(ind[2].t == Time(8.0));
  CHECK(r.canceled.at("ind").size() == 1);
}
