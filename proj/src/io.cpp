#include "cidm/io.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace cidm::io {

namespace {

std::string at(int line, int column, const std::string& msg) {
  std::ostringstream os;
  os << "line " << line << ", column " << column << ": " << msg;
  return os.str();
}

// Round-trip exact double formatting.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Trim to the shortest representation that still round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[64];
    std::snprintf(probe, sizeof probe, "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

std::string fmt_time(Time t) { return t.is_neg_inf() ? "-inf" : fmt(t.seconds()); }

}  // namespace

ParseError::ParseError(int l, int c, const std::string& msg)
    : std::runtime_error(at(l, c, msg)), line(l), column(c) {}

SemanticError::SemanticError(std::string vertex_id, const std::string& msg)
    : std::runtime_error("vertex '" + vertex_id + "': " + msg),
      vertex(std::move(vertex_id)) {}

namespace {

struct Token {
  std::string text;
  int column = 0;
};

// Whitespace-separated tokens; '#' starts a comment.
std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    const std::size_t start = i;
    int depth = 0;
    while (i < line.size() &&
           (depth > 0 || !std::isspace(static_cast<unsigned char>(line[i])))) {
      if (line[i] == '(') ++depth;
      if (line[i] == ')') --depth;
      ++i;
    }
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

double parse_double(const Token& tok, int line) {
  char* end = nullptr;
  const double v = std::strtod(tok.text.c_str(), &end);
  if (end != tok.text.c_str() + tok.text.size())
    throw ParseError(line, tok.column, "expected a number, got '" + tok.text + "'");
  return v;
}

Time parse_time(const Token& tok, int line) {
  if (tok.text == "-inf") return Time::minus_inf();
  return Time(parse_double(tok, line));
}

Bit parse_bit(const std::string& s, int line, int column) {
  if (s == "0") return Bit::zero;
  if (s == "1") return Bit::one;
  throw ParseError(line, column, "expected 0 or 1, got '" + s + "'");
}

// key=value field access over a token list.
struct Fields {
  std::map<std::string, Token> kv;
  int line;

  static Fields from(const std::vector<Token>& toks, std::size_t first,
                     int line) {
    Fields f;
    f.line = line;
    for (std::size_t i = first; i < toks.size(); ++i) {
      const auto eq = toks[i].text.find('=');
      if (eq == std::string::npos)
        throw ParseError(line, toks[i].column,
                         "expected key=value, got '" + toks[i].text + "'");
      const std::string key = toks[i].text.substr(0, eq);
      Token val{toks[i].text.substr(eq + 1),
                toks[i].column + static_cast<int>(eq) + 1};
      if (f.kv.count(key))
        throw ParseError(line, toks[i].column, "duplicate field '" + key + "'");
      f.kv[key] = std::move(val);
    }
    return f;
  }

  Token take(const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end())
      throw std::invalid_argument("missing required field '" + key + "'");
    Token t = it->second;
    kv.erase(it);
    return t;
  }

  std::optional<Token> take_optional(const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    Token t = it->second;
    kv.erase(it);
    return t;
  }

  void reject_unknown() const {
    if (!kv.empty()) {
      const auto& [key, tok] = *kv.begin();
      throw ParseError(line, tok.column, "unknown field '" + key + "'");
    }
  }
};

PureShift parse_shift(const Token& tok, int line) {
  // (a,b)
  const std::string& s = tok.text;
  if (s.size() < 5 || s.front() != '(' || s.back() != ')')
    throw ParseError(line, tok.column, "expected (delta_plus,delta_minus)");
  const auto comma = s.find(',');
  if (comma == std::string::npos)
    throw ParseError(line, tok.column, "expected (delta_plus,delta_minus)");
  PureShift p;
  p.delta_plus = parse_double({s.substr(1, comma - 1), tok.column + 1}, line);
  p.delta_minus = parse_double(
      {s.substr(comma + 1, s.size() - comma - 2), tok.column}, line);
  return p;
}

std::vector<std::pair<double, double>> parse_points(const std::string& body,
                                                    int line, int column) {
  std::vector<std::pair<double, double>> pts;
  std::size_t i = 0;
  while (i < body.size()) {
    std::size_t j = body.find(',', i);
    if (j == std::string::npos) j = body.size();
    const std::string item = body.substr(i, j - i);
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ParseError(line, column, "expected x:y sample, got '" + item + "'");
    pts.push_back({parse_double({item.substr(0, colon), column}, line),
                   parse_double({item.substr(colon + 1), column}, line)});
    i = j + 1;
  }
  return pts;
}

BaseParams parse_base(const Token& tok, const Fields& /*fields*/, int line,
                      std::optional<Token> up_tok) {
  BaseParams bp;
  const std::string& s = tok.text;
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')')
    throw ParseError(line, tok.column, "expected family(args)");
  const std::string family = s.substr(0, open);
  const std::string body = s.substr(open + 1, s.size() - open - 2);
  if (family == "exp_log") {
    if (up_tok)
      throw ParseError(line, up_tok->column,
                       "up= table only applies to sampled bases");
    bp.family = BaseParams::Family::exp_log;
    // delta_min=..,delta_inf=..,tau=..
    std::map<std::string, double> args;
    std::size_t i = 0;
    while (i < body.size()) {
      std::size_t j = body.find(',', i);
      if (j == std::string::npos) j = body.size();
      const std::string item = body.substr(i, j - i);
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw ParseError(line, tok.column, "expected key=value in base args");
      args[item.substr(0, eq)] =
          parse_double({item.substr(eq + 1), tok.column}, line);
      i = j + 1;
    }
    for (const auto& key : {"delta_min", "delta_inf", "tau"})
      if (!args.count(key))
        throw std::invalid_argument(std::string("base missing '") + key + "'");
    if (args.size() != 3)
      throw std::invalid_argument("unexpected extra base argument");
    bp.delta_min = args["delta_min"];
    bp.delta_inf = args["delta_inf"];
    bp.tau = args["tau"];
    return bp;
  }
  if (family == "sampled") {
    bp.family = BaseParams::Family::sampled;
    bp.down_points = parse_points(body, line, tok.column);
    if (up_tok) {
      const std::string& u = up_tok->text;
      const auto uo = u.find('(');
      if (uo == std::string::npos || u.back() != ')' ||
          u.substr(0, uo) != "sampled")
        throw ParseError(line, up_tok->column, "expected up=sampled(...)");
      bp.up_points =
          parse_points(u.substr(uo + 1, u.size() - uo - 2), line, up_tok->column);
    }
    return bp;
  }
  throw ParseError(line, tok.column, "unknown delay family '" + family + "'");
}

const char* const kThresholdNotes[] = {"vth_in", "vth_out", "vth_in_star",
                                       "vth_out_star"};

}  // namespace

Circuit load_netlist(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  Circuit c;
  bool saw_header = false;

  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (!saw_header) {
      if (toks.size() != 2 || toks[0].text != "cidm-netlist" ||
          toks[1].text != "v1")
        throw ParseError(lineno, toks[0].column,
                         "expected header 'cidm-netlist v1'");
      saw_header = true;
      continue;
    }
    const std::string& kw = toks[0].text;
    try {
      if (kw == "input") {
        if (toks.size() < 2)
          throw ParseError(lineno, toks[0].column, "input needs an id");
        auto f = Fields::from(toks, 2, lineno);
        const auto init = f.take("init");
        f.reject_unknown();
        c.add_input(toks[1].text, parse_bit(init.text, lineno, init.column));
      } else if (kw == "output") {
        if (toks.size() != 2)
          throw ParseError(lineno, toks[0].column, "output needs exactly an id");
        c.add_output(toks[1].text);
      } else if (kw == "channel") {
        if (toks.size() < 2)
          throw ParseError(lineno, toks[0].column, "channel needs an id");
        auto f = Fields::from(toks, 2, lineno);
        const auto gate_tok = f.take("gate");
        const auto kind_gate = parse_gate(gate_tok.text);
        if (!kind_gate)
          throw SemanticError(toks[1].text,
                              "unknown gate kind '" + gate_tok.text + "'");
        int arity = 1;
        if (auto a = f.take_optional("arity"))
          arity = static_cast<int>(parse_double(*a, lineno));
        const auto init = f.take("init");
        const auto kind_tok = f.take("kind");

        ChannelSpec spec;
        spec.gate = GateFunction(*kind_gate, arity);
        spec.init = parse_bit(init.text, lineno, init.column);
        if (kind_tok.text == "cidm") {
          spec.kind = ChannelKind::cidm;
          const auto base_tok = f.take("base");
          auto up_tok = f.take_optional("up");
          spec.base = parse_base(base_tok, f, lineno, up_tok);
          spec.shift = parse_shift(f.take("shift"), lineno);
          for (int k = 1; k <= arity; ++k) {
            if (auto ov = f.take_optional("shift_in" + std::to_string(k)))
              spec.input_shift_override[k] = parse_shift(*ov, lineno);
          }
          for (const char* note : kThresholdNotes)
            if (auto v = f.take_optional(note))
              spec.threshold_notes[note] = parse_double(*v, lineno);
        } else if (kind_tok.text == "pure" || kind_tok.text == "inertial") {
          spec.kind = kind_tok.text == "pure" ? ChannelKind::pure
                                              : ChannelKind::inertial;
          spec.pure_delta = parse_double(f.take("delta"), lineno);
          if (spec.kind == ChannelKind::inertial)
            spec.inertial_theta = parse_double(f.take("theta"), lineno);
        } else {
          throw SemanticError(toks[1].text,
                              "unknown channel kind '" + kind_tok.text + "'");
        }
        f.reject_unknown();
        c.add_channel(toks[1].text, std::move(spec));
      } else if (kw == "connect") {
        if (toks.size() != 4)
          throw ParseError(lineno, toks[0].column,
                           "connect needs: source target input-index");
        const int idx = static_cast<int>(parse_double(toks[3], lineno));
        c.connect(toks[1].text, idx, toks[2].text);
      } else if (kw == "observe") {
        for (std::size_t i = 1; i < toks.size(); ++i) {
          if (!c.has_vertex(toks[i].text))
            throw SemanticError(toks[i].text, "observed vertex is not declared");
          c.observed.push_back(toks[i].text);
        }
      } else {
        throw ParseError(lineno, toks[0].column,
                         "unknown declaration '" + kw + "'");
      }
    } catch (const std::invalid_argument& ex) {
      // Circuit/ChannelSpec rule violations carry the offending vertex.
      throw SemanticError(toks.size() > 1 ? toks[1].text : kw, ex.what());
    }
  }
  if (!saw_header) throw ParseError(1, 1, "missing 'cidm-netlist v1' header");
  return c;
}

namespace {

std::string shift_str(const PureShift& p) {
  return "(" + fmt(p.delta_plus) + "," + fmt(p.delta_minus) + ")";
}

std::string points_str(const std::vector<std::pair<double, double>>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ",";
    s += fmt(pts[i].first) + ":" + fmt(pts[i].second);
  }
  return s;
}

}  // namespace

std::string save_netlist(const Circuit& c) {
  std::ostringstream os;
  os << "cidm-netlist v1\n\n";
  for (const auto& v : c.vertices()) {
    if (v.is_input()) {
      os << "input " << v.id << " init=" << to_int(v.init_value()) << "\n";
    } else if (v.is_output()) {
      os << "output " << v.id << "\n";
    } else {
      const ChannelSpec& s = v.channel();
      os << "channel " << v.id << " gate=" << gate_name(s.gate.kind())
         << " arity=" << s.gate.arity() << " init=" << to_int(s.init)
         << " kind=" << channel_kind_name(s.kind);
      if (s.kind == ChannelKind::cidm) {
        if (s.base.family == BaseParams::Family::exp_log) {
          os << " base=exp_log(delta_min=" << fmt(s.base.delta_min)
             << ",delta_inf=" << fmt(s.base.delta_inf)
             << ",tau=" << fmt(s.base.tau) << ")";
        } else {
          os << " base=sampled(" << points_str(s.base.down_points) << ")";
          if (!s.base.up_points.empty())
            os << " up=sampled(" << points_str(s.base.up_points) << ")";
        }
        os << " shift=" << shift_str(s.shift);
        for (const auto& [k, ov] : s.input_shift_override)
          os << " shift_in" << k << "=" << shift_str(ov);
        for (const auto& [key, val] : s.threshold_notes)
          os << " " << key << "=" << fmt(val);
      } else {
        os << " delta=" << fmt(s.pure_delta);
        if (s.kind == ChannelKind::inertial)
          os << " theta=" << fmt(s.inertial_theta);
      }
      os << "\n";
    }
  }
  if (!c.edges().empty()) os << "\n";
  for (const auto& e : c.edges())
    os << "connect " << e.source << " " << e.target << " " << e.input_index
       << "\n";
  if (!c.observed.empty()) {
    os << "\nobserve";
    for (const auto& id : c.observed) os << " " << id;
    os << "\n";
  }
  return os.str();
}

StimulusMap load_stimulus(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  StimulusMap out;
  std::string port;

  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (!saw_header) {
      if (toks.size() != 2 || toks[0].text != "cidm-stimulus" ||
          toks[1].text != "v1")
        throw ParseError(lineno, toks[0].column,
                         "expected header 'cidm-stimulus v1'");
      saw_header = true;
      continue;
    }
    if (toks[0].text == "port") {
      if (toks.size() != 2)
        throw ParseError(lineno, toks[0].column, "port needs exactly an id");
      port = toks[1].text;
      if (out.count(port))
        throw ParseError(lineno, toks[1].column,
                         "duplicate port section '" + port + "'");
      out[port] = {};
      continue;
    }
    if (port.empty())
      throw ParseError(lineno, toks[0].column,
                       "transition before any 'port' line");
    if (toks.size() != 3)
      throw ParseError(lineno, toks[0].column, "expected: t x o");
    TctTransition tr;
    tr.t = parse_time(toks[0], lineno);
    tr.x = parse_bit(toks[1].text, lineno, toks[1].column);
    tr.o = parse_double(toks[2], lineno);
    auto& list = out[port];
    list.push_back(tr);
    if (auto c = validate_stimulus(list); !c)
      throw ParseError(lineno, toks[0].column,
                       "signal for port '" + port + "': " + c.message);
  }
  if (!saw_header) throw ParseError(1, 1, "missing 'cidm-stimulus v1' header");
  return out;
}

std::string save_stimulus(const StimulusMap& stimuli) {
  std::ostringstream os;
  os << "cidm-stimulus v1\n";
  for (const auto& [port, list] : stimuli) {
    os << "\nport " << port << "\n";
    for (const auto& tr : list)
      os << fmt_time(tr.t) << " " << to_int(tr.x) << " " << fmt(tr.o) << "\n";
  }
  return os.str();
}

AnalogTrace load_reference_csv(const std::string& text, double vdd) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  AnalogTrace trace;
  trace.vdd = vdd;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) continue;  // header row
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError(lineno, 1, "expected 'time,voltage'");
    char* end = nullptr;
    const double t = std::strtod(line.c_str(), &end);
    if (end != line.c_str() + comma)
      throw ParseError(lineno, 1, "bad time value");
    const double v = std::strtod(line.c_str() + comma + 1, &end);
    if (end != line.c_str() + line.size())
      throw ParseError(lineno, static_cast<int>(comma) + 2, "bad voltage value");
    if (!trace.samples.empty() && !(trace.samples.back().first < t))
      throw ParseError(lineno, 1, "time column must be strictly increasing");
    trace.samples.push_back({t, v});
  }
  try {
    trace.validate();
  } catch (const std::invalid_argument& ex) {
    throw ParseError(lineno, 1, ex.what());
  }
  return trace;
}

std::string analog_csv(const AnalogTrace& trace) {
  std::ostringstream os;
  os << "time,voltage\n";
  for (const auto& [t, v] : trace.samples) os << fmt(t) << "," << fmt(v) << "\n";
  return os.str();
}

std::string tct_csv(const TransitionFile& file) {
  std::ostringstream os;
  os << "t,x,o,t_occ\n";
  for (const auto& tr : file.entries)
    os << fmt_time(tr.t) << "," << to_int(tr.x) << "," << fmt(tr.o) << ","
       << fmt_time(tr.occurrence()) << "\n";
  return os.str();
}

TransitionFile parse_tct_csv(const std::string& text, std::string vertex) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  TransitionFile f;
  f.vertex = std::move(vertex);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || lineno == 1) continue;
    std::istringstream ls(line);
    std::string t_s, x_s, o_s;
    if (!std::getline(ls, t_s, ',') || !std::getline(ls, x_s, ',') ||
        !std::getline(ls, o_s, ','))
      throw ParseError(lineno, 1, "expected t,x,o,t_occ");
    TctTransition tr;
    tr.t = parse_time({t_s, 1}, lineno);
    tr.x = parse_bit(x_s, lineno, 1);
    tr.o = parse_double({o_s, 1}, lineno);
    f.entries.push_back(tr);
  }
  return f;
}

std::string wst_csv(const WstSignal& s) {
  std::ostringstream os;
  os << "t,x\n";
  for (const auto& tr : s.transitions())
    os << fmt_time(tr.t) << "," << to_int(tr.x) << "\n";
  return os.str();
}

WstSignal parse_wst_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<WstTransition> ts;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || lineno == 1) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError(lineno, 1, "expected t,x");
    WstTransition tr;
    tr.t = parse_time({line.substr(0, comma), 1}, lineno);
    tr.x = parse_bit(line.substr(comma + 1), lineno, static_cast<int>(comma) + 2);
    ts.push_back(tr);
  }
  return WstSignal(std::move(ts));
}

VcdExport export_vcd(const std::map<std::string, WstSignal>& signals,
                     double timescale_seconds) {
  if (!(timescale_seconds > 0.0))
    throw std::invalid_argument("VCD timescale must be positive");

  VcdExport out;
  std::ostringstream os;
  os << "$version cidm $end\n";
  if (timescale_seconds == 1e-15)
    os << "$timescale 1 fs $end\n";
  else if (timescale_seconds == 1e-12)
    os << "$timescale 1 ps $end\n";
  else if (timescale_seconds == 1e-9)
    os << "$timescale 1 ns $end\n";
  else {
    std::ostringstream msg;
    msg << "unsupported VCD timescale " << timescale_seconds
        << " s (use 1e-15, 1e-12 or 1e-9)";
    throw std::invalid_argument(msg.str());
  }

  os << "$scope module cidm $end\n";
  std::map<std::string, std::string> code;
  int next = 33;  // printable identifier codes
  for (const auto& [name, sig] : signals) {
    (void)sig;
    std::string c;
    int n = next++;
    while (true) {
      c.insert(c.begin(), static_cast<char>(33 + (n - 33) % 94));
      n = (n - 33) / 94 + 33 - 1;
      if (n < 33) break;
    }
    code[name] = c;
    os << "$var wire 1 " << c << " " << name << " $end\n";
  }
  os << "$upscope $end\n$enddefinitions $end\n";

  os << "$dumpvars\n";
  for (const auto& [name, sig] : signals)
    os << to_int(sig.initial_value()) << code[name] << "\n";
  os << "$end\n";

  // Merge all changes in nondecreasing tick order.
  struct Change {
    std::uint64_t tick;
    double exact;
    std::string code;
    Bit value;
  };
  std::vector<Change> changes;
  for (const auto& [name, sig] : signals) {
    for (std::size_t i = 1; i < sig.transitions().size(); ++i) {
      const auto& tr = sig.transitions()[i];
      const double t = tr.t.seconds();
      if (t < 0.0)
        throw std::invalid_argument(
            "VCD cannot represent negative times; export CSV instead");
      const double ticks = t / timescale_seconds;
      if (ticks > 9.0e18)
        throw std::invalid_argument(
            "time overflows the VCD tick counter; use a coarser timescale");
      const auto tick = static_cast<std::uint64_t>(std::llround(ticks));
      out.max_quantization_error =
          std::max(out.max_quantization_error,
                   std::abs(t - static_cast<double>(tick) * timescale_seconds));
      changes.push_back({tick, t, code[name], tr.x});
    }
  }
  std::stable_sort(changes.begin(), changes.end(),
                   [](const Change& a, const Change& b) { return a.tick < b.tick; });

  bool have_time = false;
  std::uint64_t cur = 0;
  for (const auto& ch : changes) {
    if (!have_time || ch.tick != cur) {
      os << "#" << ch.tick << "\n";
      cur = ch.tick;
      have_time = true;
    }
    os << to_int(ch.value) << ch.code << "\n";
  }
  out.text = os.str();
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw std::runtime_error("cannot write file: " + path);
  outf << content;
}

}  // namespace cidm::io
