#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cidm/circuit.hpp"
#include "cidm/delay.hpp"
#include "cidm/engine.hpp"
#include "cidm/signals.hpp"

namespace cidm {

// Sampled analog trace. Times strictly increasing; voltages within a sanity
// band of [-0.1 vdd, 1.1 vdd].
struct AnalogTrace {
  std::vector<std::pair<double, double>> samples;
  double vdd = 1.0;

  void validate() const;  // throws std::invalid_argument
};

// Threshold crossings by linear interpolation; the initial level comes from
// the first sample's side of vth. Throws on traces shorter than 2 samples.
WstSignal digitize(const AnalogTrace& a, double vth);

// Integral over [t0, t1] of |state(model) - state(reference)|, computed
// exactly from the transition lists.
double deviation_area(const WstSignal& model, const WstSignal& reference,
                      double t0, double t1);

struct PulseTrainSpec {
  int count = 1;
  double mu = 1.0;      // mean pulse width
  double sigma = 0.0;   // width std deviation
  double gap_mu = 1.0;  // mean inter-pulse gap
  double gap_sigma = 0.0;
  double floor_fraction = 0.01;  // truncation floor as a fraction of mu
  std::uint64_t seed = 1;
};

// Deterministic train of normally distributed pulses starting from level 0;
// offsets are all zero. Widths and gaps are clamped at floor_fraction * mu.
TctSignal generate_pulse_train(const PulseTrainSpec& spec);

struct Jump {
  double time = 0.0;
  double magnitude = 0.0;  // volts
};

struct Reconstruction {
  AnalogTrace trace;
  // Instants where no value-continuous waveform switch existed and the
  // trajectory jumped instead.
  std::vector<Jump> jumps;
};

// Places full-range waveforms so each surviving or canceled transition's
// threshold crossing lands at its occurrence time. Consecutive waveforms are
// joined at their intersection when one exists (value-continuous switch);
// otherwise the switch jumps at the occurrence time and the jump is logged.
Reconstruction reconstruct_analog(const TctSignal& f,
                                  const SwitchingWaveform& rising,
                                  const SwitchingWaveform& falling, double vth,
                                  double sample_step);
Reconstruction reconstruct_analog(const WstSignal& f,
                                  const SwitchingWaveform& rising,
                                  const SwitchingWaveform& falling, double vth,
                                  double sample_step);

struct ModelVariant {
  std::string name;
  Circuit circuit;
  SimOptions options;
};

struct SignalDeviation {
  std::string vertex;
  double area = 0.0;
};

struct ModelScore {
  std::string name;
  std::vector<SignalDeviation> per_signal;
  double total_area = 0.0;
  double normalized = 0.0;
};

struct ComparisonReport {
  std::vector<ModelScore> models;
  std::string baseline;
  bool normalizable = true;  // false when the baseline area is zero
};

// Runs every variant on the same stimuli and scores each observed vertex
// against its reference over [t0, t1]. Totals are normalized by the baseline
// model's total. Throws when a reference is missing or the baseline model is
// not among the variants.
ComparisonReport compare_models(std::span<const ModelVariant> variants,
                                const StimulusMap& stimuli,
                                const std::map<std::string, WstSignal>& references,
                                double t0, double t1,
                                const std::string& baseline = "inertial");

// Derives a comparison variant from a base netlist. Known names:
//   cidm     - the circuit as loaded
//   idm      - same circuit under the surviving-transitions interconnect view
//   pure     - every cidm channel replaced by a pure delay matched to the
//              base saturation delay plus the mean shift
//   inertial - pure delay plus pulse removal below the base minimum delay
ModelVariant derive_variant(const Circuit& base, const std::string& name,
                            double tau);

// Per-vertex canceled transition pairs grouped into trains (maximal runs of
// consecutive annihilated pulses with no surviving transition in between).
struct CancellationTrain {
  std::size_t first_index = 0;
  std::size_t pulses = 0;
};

struct VertexCancellations {
  std::string vertex;
  std::vector<CanceledPair> pairs;
  std::vector<CancellationTrain> trains;
  std::size_t longest_train = 0;
};

struct CancellationReport {
  std::vector<VertexCancellations> per_vertex;
  std::size_t total_pairs = 0;
};

CancellationReport cancellation_report(const SimResult& result);

}  // namespace cidm
