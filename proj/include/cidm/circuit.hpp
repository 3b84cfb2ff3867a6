#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cidm/delay.hpp"
#include "cidm/signals.hpp"

namespace cidm {

enum class GateKind { id, not_, and_, or_, nand, nor, xor_, xnor };

const char* gate_name(GateKind k);
std::optional<GateKind> parse_gate(const std::string& name);

// Boolean gate function with fixed arity. id/not force arity 1.
class GateFunction {
 public:
  GateFunction(GateKind kind, int arity);

  GateKind kind() const { return kind_; }
  int arity() const { return arity_; }
  bool single_input() const { return kind_ == GateKind::id || kind_ == GateKind::not_; }

  Bit eval(std::span<const Bit> inputs) const;

 private:
  GateKind kind_;
  int arity_;
};

enum class ChannelKind { cidm, pure, inertial };

const char* channel_kind_name(ChannelKind k);

// Serializable parameter record for a channel's base involution pair.
// exp_log pairs are exact closed forms; sampled tables give the falling
// function, with the rising one derived by reflection unless an explicit
// table is supplied (validated against the involution tolerance, 1e-6 for
// sampled data).
struct BaseParams {
  enum class Family { exp_log, sampled };
  Family family = Family::exp_log;
  double delta_min = 1.0;
  double delta_inf = 4.0;
  double tau = 2.0;
  std::vector<std::pair<double, double>> down_points;
  std::vector<std::pair<double, double>> up_points;  // optional explicit table

  InvolutionPair build() const;
  friend bool operator==(const BaseParams&, const BaseParams&) = default;
};

// Full parameterization of one channel: the embedded gate, its initial
// output value, and the delay behavior. cidm channels carry an input-side
// shifter and a base involution pair; pure/inertial carry a constant delay
// (and a minimum pulse width).
struct ChannelSpec {
  ChannelKind kind = ChannelKind::cidm;
  GateFunction gate{GateKind::id, 1};
  Bit init = Bit::zero;

  // cidm parameters
  PureShift shift;
  BaseParams base;
  // Optional per-input shift overrides, keyed by input index (1-based).
  std::map<int, PureShift> input_shift_override;
  // Documentation-only threshold annotations, round-tripped by the netlist.
  std::map<std::string, double> threshold_notes;

  // pure / inertial parameters
  double pure_delta = 0.0;
  double inertial_theta = 0.0;

  PureShift effective_shift(int input_index) const;

  // Built on first use and cached; throws std::invalid_argument when the
  // parameters do not form a valid pair.
  const InvolutionPair& base_pair() const;

  // Throws std::invalid_argument on parameter rule violations (bad base,
  // non-positive pure delay, multi-input gate with asymmetric shift, ...).
  void validate() const;

 private:
  mutable std::shared_ptr<const InvolutionPair> cached_base_;
};

struct InputPort {
  Bit init = Bit::zero;
};
struct OutputPort {};

struct Vertex {
  std::string id;
  std::variant<InputPort, OutputPort, ChannelSpec> role;

  bool is_input() const { return std::holds_alternative<InputPort>(role); }
  bool is_output() const { return std::holds_alternative<OutputPort>(role); }
  bool is_channel() const { return std::holds_alternative<ChannelSpec>(role); }
  const ChannelSpec& channel() const { return std::get<ChannelSpec>(role); }
  Bit init_value() const;
};

// 0-delay connection from the output of `source` into input `input_index`
// (1-based) of `target`.
struct Edge {
  std::string source;
  int input_index = 1;
  std::string target;
};

class Circuit {
 public:
  // All add_* calls throw std::invalid_argument on duplicate ids; connect
  // throws on unknown vertex ids.
  void add_input(const std::string& id, Bit init);
  void add_output(const std::string& id);
  void add_channel(const std::string& id, ChannelSpec spec);
  void connect(const std::string& source, int input_index,
               const std::string& target);

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_vertex(const std::string& id) const;
  const Vertex& vertex(const std::string& id) const;

  std::vector<Edge> incoming(const std::string& id) const;
  std::vector<Edge> outgoing(const std::string& id) const;

  // Vertices observed by the analysis harness; serialized with the netlist.
  std::vector<std::string> observed;

 private:
  std::size_t index_of(const std::string& id) const;
  std::vector<Vertex> vertices_;
  std::map<std::string, std::size_t> by_id_;
  std::vector<Edge> edges_;
};

struct Violation {
  std::string rule;  // C3, C5, compat, ...
  std::string where;
  std::string message;
};

struct StructureReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Degree and ordering rules: input ports have no incoming edges, output
// ports exactly one incoming and none outgoing, a d-ary channel exactly d
// incoming edges with distinct indices 1..d.
StructureReport validate_structure(const Circuit& c);

struct EdgeCausality {
  Edge edge;
  bool checked = false;  // false for edges not subject to a causality check
  bool causal = true;
  double up_margin = 0.0;
  double down_margin = 0.0;
  std::string note;
};

struct CompatibilityReport {
  std::vector<EdgeCausality> edges;
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Every channel-to-channel edge must form a strictly causal logical channel
// (predecessor base followed by successor shift); channels fed directly by
// input ports must use a zero shift on that input.
CompatibilityReport validate_compatibility(const Circuit& c);

// Smallest delta_min over all channel-to-channel logical channels; +inf when
// there are none.
double min_delta_of_circuit(const Circuit& c);

}  // namespace cidm
