#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cidm/circuit.hpp"
#include "cidm/event_queue.hpp"
#include "cidm/signals.hpp"

namespace cidm {

struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimOptions {
  double tau = 0.0;
  // When set, interconnect reads return the last surviving transition (the
  // WST view) instead of the raw last file entry, silently dropping canceled
  // pulses the way a plain involution-channel simulation would.
  bool idm_interconnect = false;
  bool trace = false;
};

// Append-only buffer of the TCT transitions a vertex generated, seeded with
// (-inf, Init, 0).
struct TransitionFile {
  std::string vertex;
  std::vector<TctTransition> entries;
};

struct TraceRecord {
  double time = 0.0;
  EventKind kind = EventKind::gate_output;
  std::string target;
  int input = 0;
  std::string source;
  std::string detail;
};

struct SimResult {
  std::map<std::string, TransitionFile> files;
  std::map<std::string, WstSignal> wst;
  std::map<std::string, std::vector<CanceledPair>> canceled;
  // Instrumented gate-side signals, keyed "<channel>.in<k>".
  std::map<std::string, WstSignal> gate_inputs;
  std::uint64_t dispatched_events = 0;
  double end_time = 0.0;
  double tau = 0.0;
  std::vector<std::string> warnings;
  std::vector<TraceRecord> trace;
};

// Per input port, the full TCT signal including the (-inf, Init, 0) entry.
// Scheduled times may repeat (explicit zero-time glitches); equal-time runs
// collapse to the last entry before simulation.
using StimulusMap = std::map<std::string, std::vector<TctTransition>>;

// Runs the discrete-event simulation until the queue drains or an event past
// tau would dispatch (events at exactly tau are processed). Throws
// EngineError on structurally invalid or incompatible circuits and on
// malformed stimuli.
SimResult run(const Circuit& c, const StimulusMap& stimuli,
              const SimOptions& opts);

// Independent runs over different stimuli; results ordered by input index,
// no shared mutable state between runs.
std::vector<SimResult> run_batch(const Circuit& c,
                                 std::span<const StimulusMap> stimuli,
                                 const SimOptions& opts);

// Input-side shift selection: the shifter delays the input transition that
// will cause a rising output by delta_plus and a falling one by delta_minus,
// so the embedded gate decides which component applies. Multi-input gates
// require delta_plus == delta_minus.
double calc_delta(const GateFunction& g, Bit x, double delta_plus,
                  double delta_minus);

}  // namespace cidm
