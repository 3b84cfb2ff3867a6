#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "cidm/analysis.hpp"
#include "cidm/circuit.hpp"
#include "cidm/engine.hpp"
#include "cidm/signals.hpp"

namespace cidm::io {

struct ParseError : std::runtime_error {
  ParseError(int line, int column, const std::string& msg);
  int line;
  int column;
};

struct SemanticError : std::runtime_error {
  SemanticError(std::string vertex_id, const std::string& msg);
  std::string vertex;
};

// Netlist text format, schema "cidm-netlist v1". One declaration per line:
//
//   input <id> init=<0|1>
//   output <id>
//   channel <id> gate=<kind> arity=<d> init=<0|1> kind=cidm
//       base=exp_log(delta_min=..,delta_inf=..,tau=..) shift=(<d+>,<d->)
//       [shift_in<k>=(..,..)] [vth_in=..] [vth_out=..] [vth_in_star=..]
//       [vth_out_star=..]
//   channel <id> gate=<kind> arity=<d> init=<0|1> kind=pure delta=<s>
//   channel <id> ... kind=inertial delta=<s> theta=<s>
//   connect <source> <target> <input-index>
//   observe <id> [<id> ...]
//
// Sampled bases: base=sampled(x1:y1,x2:y2,...) with an optional explicit
// rising table up=sampled(...). Unknown fields are rejected with their
// position.
Circuit load_netlist(const std::string& text);
std::string save_netlist(const Circuit& c);

// Stimulus text format, schema "cidm-stimulus v1": `port <id>` followed by
// `t x o` triples, the first at -inf with the port's initial value. Repeated
// scheduled times are legal (explicit zero-time glitches).
StimulusMap load_stimulus(const std::string& text);
std::string save_stimulus(const StimulusMap& stimuli);

// Reference analog traces: header line, then `time,voltage` rows.
AnalogTrace load_reference_csv(const std::string& text, double vdd);
std::string analog_csv(const AnalogTrace& trace);

// Per-vertex trace exports. CSV carries full double precision and
// round-trips exactly.
std::string tct_csv(const TransitionFile& file);
TransitionFile parse_tct_csv(const std::string& text, std::string vertex);
std::string wst_csv(const WstSignal& s);
WstSignal parse_wst_csv(const std::string& text);

struct VcdExport {
  std::string text;
  double max_quantization_error = 0.0;
};

// Value-change dump of the WST views, quantized to an integral timescale
// (default 1 fs). Throws when a time is negative or overflows the tick
// counter; the error suggests a coarser timescale.
VcdExport export_vcd(const std::map<std::string, WstSignal>& signals,
                     double timescale_seconds = 1e-15);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace cidm::io
