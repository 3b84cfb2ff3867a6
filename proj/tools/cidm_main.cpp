// Command-line front end: validation, simulation, model comparison,
// stimulus generation, analog reconstruction and cancellation reporting.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "cidm/analysis.hpp"
#include "cidm/baselines.hpp"
#include "cidm/circuit.hpp"
#include "cidm/engine.hpp"
#include "cidm/io.hpp"

namespace fs = std::filesystem;
using namespace cidm;

namespace {

// Exit codes: 0 success, 1 input/parse, 2 validation, 3 runtime.
constexpr int kExitParse = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

[[noreturn]] void fail(int code, const std::string& category,
                       const std::string& message) {
  std::cerr << "cidm: error: category=" << category << " message=\"" << message
            << "\"" << std::endl;
  std::exit(code);
}

std::string default_out_dir() {
  if (const char* env = std::getenv("CIDM_OUT_DIR")) return env;
  return ".";
}

Circuit load_netlist_or_die(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& ex) {
    fail(kExitParse, "input", ex.what());
  }
  try {
    return io::load_netlist(text);
  } catch (const io::ParseError& ex) {
    fail(kExitParse, "parse", std::string(path) + ": " + ex.what());
  } catch (const io::SemanticError& ex) {
    fail(kExitParse, "semantic", std::string(path) + ": " + ex.what());
  }
}

StimulusMap load_stimulus_or_die(const std::string& path) {
  try {
    return io::load_stimulus(io::read_file(path));
  } catch (const std::exception& ex) {
    fail(kExitParse, "parse", std::string(path) + ": " + ex.what());
  }
}

// Prints the reports; returns false when either validation fails.
bool report_validation(const Circuit& c, std::ostream& os) {
  const auto sr = validate_structure(c);
  if (!sr.ok()) {
    for (const auto& v : sr.violations)
      os << "structure " << v.rule << " at " << v.where << ": " << v.message
         << "\n";
    return false;
  }
  os << "structure: ok (" << c.vertices().size() << " vertices, "
     << c.edges().size() << " edges)\n";

  const auto cr = validate_compatibility(c);
  for (const auto& e : cr.edges) {
    os << "edge " << e.edge.source << " -> " << e.edge.target << "[in"
       << e.edge.input_index << "]: ";
    if (!e.checked) {
      os << (e.note.empty() ? "no causality check needed" : e.note) << "\n";
    } else if (!e.note.empty()) {
      os << (e.causal ? "ok" : "VIOLATED") << " (" << e.note << ")\n";
    } else if (e.causal) {
      os << "causal, margins up=" << e.up_margin << " down=" << e.down_margin
         << "\n";
    } else {
      os << "NOT CAUSAL, margins up=" << e.up_margin
         << " down=" << e.down_margin << "\n";
    }
  }
  if (!cr.ok()) {
    for (const auto& v : cr.violations)
      os << "compatibility violation at " << v.where << ": " << v.message
         << "\n";
    return false;
  }
  const double dmin = min_delta_of_circuit(c);
  if (std::isinf(dmin))
    os << "delta_min(circuit): none (no channel-to-channel logical channels)\n";
  else
    os << "delta_min(circuit): " << dmin << "\n";
  return true;
}

SwitchingWaveform parse_waveform_arg(const std::string& arg, bool rising) {
  // vdd=..,tau_rise=..,tau_fall=..
  double vdd = 1.0, tr = 1.0, tf = 1.0;
  std::istringstream in(arg);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("bad waveform spec item: " + item);
    const std::string key = item.substr(0, eq);
    const double val = std::strtod(item.c_str() + eq + 1, nullptr);
    if (key == "vdd")
      vdd = val;
    else if (key == "tau_rise")
      tr = val;
    else if (key == "tau_fall")
      tf = val;
    else
      throw std::invalid_argument("unknown waveform key: " + key);
  }
  return rising ? SwitchingWaveform::rising(vdd, tr)
                : SwitchingWaveform::falling(vdd, tf);
}

int cmd_validate(const std::string& netlist) {
  const Circuit c = load_netlist_or_die(netlist);
  std::ostringstream os;
  const bool ok = report_validation(c, os);
  std::cout << os.str();
  if (!ok) fail(kExitValidation, "validation", "circuit failed validation");
  return 0;
}

int cmd_simulate(const std::string& netlist, const std::string& stimulus,
                 double until, std::string out_dir, const std::string& format,
                 bool idm, bool trace_events) {
  const Circuit c = load_netlist_or_die(netlist);
  StimulusMap stim;
  if (!stimulus.empty()) stim = load_stimulus_or_die(stimulus);

  {
    std::ostringstream os;
    if (!report_validation(c, os)) {
      std::cout << os.str();
      fail(kExitValidation, "validation", "circuit failed validation");
    }
  }

  SimOptions opts;
  opts.tau = until;
  opts.idm_interconnect = idm;
  opts.trace = trace_events;

  SimResult res;
  try {
    res = run(c, stim, opts);
  } catch (const EngineError& ex) {
    fail(kExitValidation, "validation", ex.what());
  } catch (const std::exception& ex) {
    fail(kExitRuntime, "runtime", ex.what());
  }

  try {
    fs::create_directories(out_dir);
    for (const auto& [vertex, file] : res.files)
      io::write_file((fs::path(out_dir) / (vertex + ".tct.csv")).string(),
                     io::tct_csv(file));
    if (format == "csv" || format == "both") {
      for (const auto& [vertex, sig] : res.wst)
        io::write_file((fs::path(out_dir) / (vertex + ".wst.csv")).string(),
                       io::wst_csv(sig));
    }
    if (format == "vcd" || format == "both") {
      const auto vcd = io::export_vcd(res.wst);
      io::write_file((fs::path(out_dir) / "waves.vcd").string(), vcd.text);
      std::cout << "vcd quantization error: " << vcd.max_quantization_error
                << " s\n";
    }
  } catch (const std::exception& ex) {
    fail(kExitRuntime, "runtime", ex.what());
  }

  const auto rep = cancellation_report(res);
  std::cout << "simulated until " << until << " s: " << res.dispatched_events
            << " events, last at " << res.end_time << " s\n";
  std::cout << "canceled transition pairs: " << rep.total_pairs << "\n";
  for (const auto& w : res.warnings) std::cout << "warning: " << w << "\n";
  if (trace_events) {
    for (const auto& r : res.trace) {
      std::cout << "  t=" << std::setprecision(17) << r.time << " "
                << event_kind_name(r.kind) << " " << r.target;
      if (r.input) std::cout << "[in" << r.input << "]";
      if (!r.source.empty()) std::cout << " from " << r.source;
      if (!r.detail.empty()) std::cout << ": " << r.detail;
      std::cout << "\n";
    }
  }
  std::cout << "results written to " << out_dir << "\n";
  return 0;
}

int cmd_compare(const std::string& netlist, const std::string& models_arg,
                const std::string& stimulus, const std::string& reference,
                double until, double vdd, double vth, std::string out_csv) {
  const Circuit base = load_netlist_or_die(netlist);
  const StimulusMap stim = load_stimulus_or_die(stimulus);

  std::vector<ModelVariant> variants;
  std::istringstream in(models_arg);
  std::string name;
  while (std::getline(in, name, ',')) {
    try {
      variants.push_back(derive_variant(base, name, until));
    } catch (const std::exception& ex) {
      fail(kExitParse, "input", ex.what());
    }
  }

  std::map<std::string, WstSignal> refs;
  for (const auto& vtx : base.observed) {
    const fs::path p = fs::path(reference) / (vtx + ".csv");
    if (!fs::exists(p))
      fail(kExitParse, "input", "missing reference trace: " + p.string());
    try {
      const auto trace = io::load_reference_csv(io::read_file(p.string()), vdd);
      refs.emplace(vtx, digitize(trace, vth));
    } catch (const std::exception& ex) {
      fail(kExitParse, "parse", p.string() + ": " + ex.what());
    }
  }

  ComparisonReport rep;
  try {
    rep = compare_models(variants, stim, refs, 0.0, until);
  } catch (const EngineError& ex) {
    fail(kExitValidation, "validation", ex.what());
  } catch (const std::exception& ex) {
    fail(kExitRuntime, "runtime", ex.what());
  }

  std::cout << "model        total_area      normalized\n";
  std::ostringstream csv;
  csv << "model,vertex,area,total_area,normalized\n";
  for (const auto& m : rep.models) {
    std::cout << std::left << std::setw(12) << m.name << " "
              << std::setw(15) << m.total_area << " ";
    if (rep.normalizable)
      std::cout << m.normalized;
    else
      std::cout << "(unnormalizable: baseline area is zero)";
    std::cout << "\n";
    for (const auto& s : m.per_signal)
      csv << m.name << "," << s.vertex << "," << s.area << "," << m.total_area
          << "," << m.normalized << "\n";
  }
  if (!out_csv.empty()) {
    try {
      io::write_file(out_csv, csv.str());
    } catch (const std::exception& ex) {
      fail(kExitRuntime, "runtime", ex.what());
    }
    std::cout << "per-signal breakdown written to " << out_csv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CIDM digital timing simulator"};
  app.require_subcommand(1);

  // validate
  std::string netlist;
  auto* validate =
      app.add_subcommand("validate", "structural and compatibility checks");
  validate->add_option("--netlist", netlist, "netlist file")->required();

  // simulate
  std::string sim_netlist, sim_stimulus, sim_out = default_out_dir();
  std::string sim_format = "csv";
  double sim_until = 0.0;
  bool sim_idm = false, sim_trace = false;
  auto* simulate = app.add_subcommand("simulate", "run the event simulation");
  simulate->add_option("--netlist", sim_netlist)->required();
  simulate->add_option("--stimulus", sim_stimulus);
  simulate->add_option("--until", sim_until, "simulation horizon, seconds")
      ->required();
  simulate->add_option("--out", sim_out, "output directory");
  simulate->add_option("--format", sim_format)
      ->check(CLI::IsMember({"csv", "vcd", "both"}));
  simulate->add_flag("--idm", sim_idm,
                     "surviving-transitions interconnect view");
  simulate->add_flag("--trace-events", sim_trace, "dump the dispatch log");

  // compare
  std::string cmp_netlist, cmp_models = "cidm,idm,pure,inertial";
  std::string cmp_stimulus, cmp_reference, cmp_out;
  double cmp_until = 0.0, cmp_vdd = 1.0, cmp_vth = 0.5;
  auto* compare =
      app.add_subcommand("compare", "deviation areas against a reference");
  compare->add_option("--netlist-base", cmp_netlist)->required();
  compare->add_option("--models", cmp_models, "comma list of model variants");
  compare->add_option("--stimulus", cmp_stimulus)->required();
  compare->add_option("--reference", cmp_reference,
                      "directory of <vertex>.csv analog traces")
      ->required();
  compare->add_option("--until", cmp_until)->required();
  compare->add_option("--vdd", cmp_vdd);
  compare->add_option("--vth", cmp_vth);
  compare->add_option("--out", cmp_out, "per-signal CSV breakdown");

  // gen-stimulus
  std::string gen_port = "in", gen_out;
  PulseTrainSpec gen_spec;
  auto* gen = app.add_subcommand("gen-stimulus", "random pulse train");
  gen->add_option("--port", gen_port, "input port name");
  gen->add_option("--count", gen_spec.count)->required();
  gen->add_option("--mu", gen_spec.mu, "mean pulse width")->required();
  gen->add_option("--sigma", gen_spec.sigma)->required();
  gen->add_option("--gap-mu", gen_spec.gap_mu);
  gen->add_option("--gap-sigma", gen_spec.gap_sigma);
  gen->add_option("--floor-frac", gen_spec.floor_fraction);
  gen->add_option("--seed", gen_spec.seed)->required();
  gen->add_option("--out", gen_out)->required();

  // reconstruct
  std::string rec_trace, rec_waveforms = "vdd=1,tau_rise=1,tau_fall=1", rec_out;
  double rec_vth = 0.5, rec_step = 0.01;
  auto* rec =
      app.add_subcommand("reconstruct", "analog view of a TCT trace file");
  rec->add_option("--trace", rec_trace, "<vertex>.tct.csv file")->required();
  rec->add_option("--waveforms", rec_waveforms,
                  "vdd=..,tau_rise=..,tau_fall=..");
  rec->add_option("--vth", rec_vth);
  rec->add_option("--step", rec_step)->required();
  rec->add_option("--out", rec_out)->required();

  // report-cancellations
  std::string rc_dir;
  auto* rc = app.add_subcommand("report-cancellations",
                                "canceled pulse trains of a result directory");
  rc->add_option("--result", rc_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(netlist);
    if (*simulate)
      return cmd_simulate(sim_netlist, sim_stimulus, sim_until, sim_out,
                          sim_format, sim_idm, sim_trace);
    if (*compare)
      return cmd_compare(cmp_netlist, cmp_models, cmp_stimulus, cmp_reference,
                         cmp_until, cmp_vdd, cmp_vth, cmp_out);
    if (*gen) {
      const TctSignal train = generate_pulse_train(gen_spec);
      StimulusMap m;
      m[gen_port] = train.transitions();
      io::write_file(gen_out, io::save_stimulus(m));
      std::cout << "wrote " << gen_spec.count << " pulses to " << gen_out
                << "\n";
      return 0;
    }
    if (*rec) {
      const auto file = io::parse_tct_csv(io::read_file(rec_trace), "trace");
      const auto up = parse_waveform_arg(rec_waveforms, true);
      const auto down = parse_waveform_arg(rec_waveforms, false);
      const TctSignal sig(file.entries);
      const auto r = reconstruct_analog(sig, up, down, rec_vth, rec_step);
      io::write_file(rec_out, io::analog_csv(r.trace));
      std::cout << "wrote " << r.trace.samples.size() << " samples to "
                << rec_out << "\n";
      if (!r.jumps.empty()) {
        std::cout << r.jumps.size()
                  << " value jump(s) at waveform switches; largest "
                  << std::max_element(r.jumps.begin(), r.jumps.end(),
                                      [](const Jump& a, const Jump& b) {
                                        return a.magnitude < b.magnitude;
                                      })
                         ->magnitude
                  << " V\n";
      }
      return 0;
    }
    if (*rc) {
      SimResult res;
      for (const auto& entry : fs::directory_iterator(rc_dir)) {
        const std::string name = entry.path().filename().string();
        const std::string suffix = ".tct.csv";
        if (name.size() <= suffix.size() ||
            name.substr(name.size() - suffix.size()) != suffix)
          continue;
        const std::string vertex = name.substr(0, name.size() - suffix.size());
        const auto file =
            io::parse_tct_csv(io::read_file(entry.path().string()), vertex);
        const TctSignal sig(file.entries);
        res.files[vertex] = file;
        res.canceled[vertex] = scan_cancellations(sig).canceled;
      }
      const auto rep = cancellation_report(res);
      std::cout << "canceled transition pairs: " << rep.total_pairs << "\n";
      for (const auto& vc : rep.per_vertex) {
        std::cout << vc.vertex << ": " << vc.pairs.size() << " pair(s), "
                  << vc.trains.size() << " train(s), longest "
                  << vc.longest_train << "\n";
        for (const auto& p : vc.pairs)
          std::cout << "  scheduled (" << p.canceled.t.raw() << ", "
                    << p.canceling.t.raw() << ") occurring ("
                    << p.canceled.occurrence().raw() << ", "
                    << p.canceling.occurrence().raw() << ") values ("
                    << to_int(p.canceled.x) << to_int(p.canceling.x) << ")\n";
      }
      return 0;
    }
  } catch (const io::ParseError& ex) {
    fail(kExitParse, "parse", ex.what());
  } catch (const std::invalid_argument& ex) {
    fail(kExitParse, "input", ex.what());
  } catch (const EngineError& ex) {
    fail(kExitValidation, "validation", ex.what());
  } catch (const std::exception& ex) {
    fail(kExitRuntime, "runtime", ex.what());
  }
  return 0;
}
