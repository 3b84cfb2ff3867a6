#include "cidm/circuit.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cidm {

const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::id: return "id";
    case GateKind::not_: return "not";
    case GateKind::and_: return "and";
    case GateKind::or_: return "or";
    case GateKind::nand: return "nand";
    case GateKind::nor: return "nor";
    case GateKind::xor_: return "xor";
    case GateKind::xnor: return "xnor";
  }
  return "?";
}

std::optional<GateKind> parse_gate(const std::string& name) {
  if (name == "id") return GateKind::id;
  if (name == "not") return GateKind::not_;
  if (name == "and") return GateKind::and_;
  if (name == "or") return GateKind::or_;
  if (name == "nand") return GateKind::nand;
  if (name == "nor") return GateKind::nor;
  if (name == "xor") return GateKind::xor_;
  if (name == "xnor") return GateKind::xnor;
  return std::nullopt;
}

GateFunction::GateFunction(GateKind kind, int arity)
    : kind_(kind), arity_(arity) {
  if (kind == GateKind::id || kind == GateKind::not_) {
    if (arity != 1)
      throw std::invalid_argument("id/not gates are unary");
  } else if (arity < 1) {
    throw std::invalid_argument("gate arity must be >= 1");
  }
}

Bit GateFunction::eval(std::span<const Bit> in) const {
  if (static_cast<int>(in.size()) != arity_)
    throw std::invalid_argument("gate input count does not match arity");
  const auto all_one = [&] {
    return std::all_of(in.begin(), in.end(),
                       [](Bit b) { return b == Bit::one; });
  };
  const auto any_one = [&] {
    return std::any_of(in.begin(), in.end(),
                       [](Bit b) { return b == Bit::one; });
  };
  const auto parity = [&] {
    int p = 0;
    for (Bit b : in) p ^= to_int(b);
    return p != 0;
  };
  switch (kind_) {
    case GateKind::id: return in[0];
    case GateKind::not_: return flip(in[0]);
    case GateKind::and_: return bit_of(all_one());
    case GateKind::or_: return bit_of(any_one());
    case GateKind::nand: return bit_of(!all_one());
    case GateKind::nor: return bit_of(!any_one());
    case GateKind::xor_: return bit_of(parity());
    case GateKind::xnor: return bit_of(!parity());
  }
  return Bit::zero;
}

const char* channel_kind_name(ChannelKind k) {
  switch (k) {
    case ChannelKind::cidm: return "cidm";
    case ChannelKind::pure: return "pure";
    case ChannelKind::inertial: return "inertial";
  }
  return "?";
}

InvolutionPair BaseParams::build() const {
  if (family == Family::exp_log)
    return make_exp_log_pair(delta_min, delta_inf, tau);
  if (up_points.empty())
    return InvolutionPair::from_down(DelayFunction::sampled(down_points), 1e-6);
  return InvolutionPair(DelayFunction::sampled(up_points),
                        DelayFunction::sampled(down_points), 1e-6);
}

PureShift ChannelSpec::effective_shift(int input_index) const {
  auto it = input_shift_override.find(input_index);
  return it == input_shift_override.end() ? shift : it->second;
}

const InvolutionPair& ChannelSpec::base_pair() const {
  if (!cached_base_)
    cached_base_ = std::make_shared<const InvolutionPair>(base.build());
  return *cached_base_;
}

void ChannelSpec::validate() const {
  if (kind == ChannelKind::cidm) {
    base_pair();  // surfaces bad base parameters
    if (gate.arity() > 1) {
      // Multi-input gates only support symmetric shifts; the effect of an
      // input transition on the output direction is not known in advance.
      for (int i = 1; i <= gate.arity(); ++i) {
        const PureShift s = effective_shift(i);
        if (s.delta_plus != s.delta_minus) {
          std::ostringstream os;
          os << "multi-input gate requires delta_plus == delta_minus on input "
             << i;
          throw std::invalid_argument(os.str());
        }
      }
    }
  } else {
    if (!(pure_delta > 0.0))
      throw std::invalid_argument("pure/inertial channel requires delta > 0");
    if (kind == ChannelKind::inertial && !(inertial_theta >= 0.0))
      throw std::invalid_argument("inertial channel requires theta >= 0");
  }
  for (const auto& [idx, s] : input_shift_override) {
    (void)s;
    if (idx < 1 || idx > gate.arity())
      throw std::invalid_argument("shift override index outside 1..arity");
  }
}

Bit Vertex::init_value() const {
  if (auto* p = std::get_if<InputPort>(&role)) return p->init;
  if (auto* c = std::get_if<ChannelSpec>(&role)) return c->init;
  throw std::logic_error("output ports have no initial value of their own");
}

void Circuit::add_input(const std::string& id, Bit init) {
  if (by_id_.count(id))
    throw std::invalid_argument("duplicate vertex id: " + id);
  by_id_[id] = vertices_.size();
  vertices_.push_back({id, InputPort{init}});
}

void Circuit::add_output(const std::string& id) {
  if (by_id_.count(id))
    throw std::invalid_argument("duplicate vertex id: " + id);
  by_id_[id] = vertices_.size();
  vertices_.push_back({id, OutputPort{}});
}

void Circuit::add_channel(const std::string& id, ChannelSpec spec) {
  if (by_id_.count(id))
    throw std::invalid_argument("duplicate vertex id: " + id);
  spec.validate();
  by_id_[id] = vertices_.size();
  vertices_.push_back({id, std::move(spec)});
}

void Circuit::connect(const std::string& source, int input_index,
                      const std::string& target) {
  if (!by_id_.count(source))
    throw std::invalid_argument("unknown edge source: " + source);
  if (!by_id_.count(target))
    throw std::invalid_argument("unknown edge target: " + target);
  edges_.push_back({source, input_index, target});
}

bool Circuit::has_vertex(const std::string& id) const { return by_id_.count(id) > 0; }

std::size_t Circuit::index_of(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end())
    throw std::invalid_argument("unknown vertex id: " + id);
  return it->second;
}

const Vertex& Circuit::vertex(const std::string& id) const {
  return vertices_[index_of(id)];
}

std::vector<Edge> Circuit::incoming(const std::string& id) const {
  std::vector<Edge> r;
  for (const auto& e : edges_)
    if (e.target == id) r.push_back(e);
  return r;
}

std::vector<Edge> Circuit::outgoing(const std::string& id) const {
  std::vector<Edge> r;
  for (const auto& e : edges_)
    if (e.source == id) r.push_back(e);
  return r;
}

StructureReport validate_structure(const Circuit& c) {
  StructureReport rep;
  const auto add = [&rep](std::string rule, std::string where, std::string msg) {
    rep.violations.push_back({std::move(rule), std::move(where), std::move(msg)});
  };

  for (const auto& e : c.edges()) {
    if (e.input_index < 1)
      add("C5", e.target, "edge input index must be >= 1");
    if (c.vertex(e.target).is_input())
      add("C3", e.target, "input ports must have no incoming edges");
    if (c.vertex(e.source).is_output())
      add("C4", e.source, "output ports must have no outgoing edges");
  }

  for (const auto& v : c.vertices()) {
    const auto in = c.incoming(v.id);
    if (v.is_output()) {
      if (in.size() != 1)
        add("C4", v.id, "output port needs exactly one incoming edge, has " +
                            std::to_string(in.size()));
    } else if (v.is_channel()) {
      const int d = v.channel().gate.arity();
      std::set<int> seen;
      for (const auto& e : in) {
        if (e.input_index > d)
          add("C5", v.id, "input index " + std::to_string(e.input_index) +
                              " exceeds gate arity " + std::to_string(d));
        if (!seen.insert(e.input_index).second)
          add("C5", v.id,
              "duplicate input index " + std::to_string(e.input_index));
      }
      if (static_cast<int>(in.size()) != d)
        add("C5", v.id, "gate of arity " + std::to_string(d) + " has " +
                            std::to_string(in.size()) + " incoming edges");
    }
  }
  return rep;
}

CompatibilityReport validate_compatibility(const Circuit& c) {
  CompatibilityReport rep;
  for (const auto& e : c.edges()) {
    const Vertex& src = c.vertex(e.source);
    const Vertex& dst = c.vertex(e.target);
    EdgeCausality ec;
    ec.edge = e;

    if (!dst.is_channel()) {
      ec.note = "edge into an output port; nothing to check";
      rep.edges.push_back(ec);
      continue;
    }
    const ChannelSpec& succ = dst.channel();
    if (succ.kind != ChannelKind::cidm) {
      ec.note = "successor is a " + std::string(channel_kind_name(succ.kind)) +
                " channel; strictly causal by its positive delta";
      rep.edges.push_back(ec);
      continue;
    }
    const PureShift s = succ.effective_shift(e.input_index);

    if (src.is_input()) {
      // Externally driven input: the dangling shifter must vanish so the
      // port's transitions pass through with zero minimum delay.
      ec.checked = true;
      ec.causal = (s.delta_plus == 0.0 && s.delta_minus == 0.0);
      ec.note = "input-port edge requires shift (0,0)";
      if (!ec.causal)
        rep.violations.push_back(
            {"compat", e.source + "->" + e.target,
             "channel input driven by an input port must use shift (0,0)"});
      rep.edges.push_back(ec);
      continue;
    }

    const ChannelSpec& pred = src.channel();
    if (pred.kind != ChannelKind::cidm) {
      ec.note = "predecessor is a " + std::string(channel_kind_name(pred.kind)) +
                " channel; strictly causal by its positive delta";
      rep.edges.push_back(ec);
      continue;
    }

    ec.checked = true;
    try {
      const auto cc = causality_check(pred.base_pair(), s);
      ec.causal = cc.causal;
      ec.up_margin = cc.up_margin;
      ec.down_margin = cc.down_margin;
      if (!cc.causal) {
        std::ostringstream os;
        os << "logical channel not strictly causal (margins " << cc.up_margin
           << ", " << cc.down_margin << ")";
        rep.violations.push_back({"compat", e.source + "->" + e.target, os.str()});
      }
    } catch (const std::exception& ex) {
      ec.causal = false;
      ec.note = ex.what();
      rep.violations.push_back({"compat", e.source + "->" + e.target,
                                std::string("causality check failed: ") + ex.what()});
    }
    rep.edges.push_back(ec);
  }
  return rep;
}

double min_delta_of_circuit(const Circuit& c) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : c.edges()) {
    const Vertex& src = c.vertex(e.source);
    const Vertex& dst = c.vertex(e.target);
    if (!src.is_channel() || !dst.is_channel()) continue;
    const ChannelSpec& pred = src.channel();
    const ChannelSpec& succ = dst.channel();
    if (pred.kind != ChannelKind::cidm || succ.kind != ChannelKind::cidm)
      continue;
    const auto logical =
        ip_compose(pred.base_pair(), succ.effective_shift(e.input_index));
    best = std::min(best, logical.delta_min());
  }
  return best;
}

}  // namespace cidm
