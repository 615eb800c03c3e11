#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "tension/calibration.hpp"
#include "tension/config.hpp"
#include "tension/control.hpp"
#include "tension/daq.hpp"
#include "tension/elastomer.hpp"
#include "tension/errors.hpp"
#include "tension/pipeline.hpp"
#include "tension/text.hpp"

namespace tension::cli {

namespace {

// Missing files and bad flag values: exit 1. Everything the library rejects
// after that (data, physics, formats) exits 2.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Shared {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out = "-";
  CLI::Option* seed_opt = nullptr;
};

struct Loaded {
  ModelConfig model;
  std::map<std::string, std::string> run;
};

Loaded load(const Shared& shared) {
  Loaded l;
  if (shared.config_path.empty()) return l;
  std::ifstream in(shared.config_path);
  if (!in) throw UsageError("cannot open config '" + shared.config_path + "'");
  l.model = parse_config(in);
  in.clear();
  in.seekg(0);
  l.run = parse_run_entries(in);
  return l;
}

// Flag value if given on the command line, else the config's run.<key>, else the default.
template <typename T>
void run_default(T& value, const CLI::Option* opt, const Loaded& l, const std::string& key) {
  if (opt->count() > 0) return;
  const auto it = l.run.find(key);
  if (it == l.run.end()) return;
  if constexpr (std::is_same_v<T, std::string>) {
    value = it->second;
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    const auto v = text::parse_unsigned(it->second);
    if (!v) throw UsageError("bad run." + key);
    value = *v;
  } else {
    const auto v = text::parse_double(it->second);
    if (!v) throw UsageError("bad run." + key);
    value = *v;
  }
}

// Library InputErrors raised while interpreting a flag are usage errors, not data errors.
template <typename F>
auto from_flag(F&& parse) {
  try {
    return parse();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
}

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw UsageError(std::string("cannot open ") + what + " '" + path + "'");
  return in;
}

std::string read_text(const std::string& path, const char* what) {
  auto in = open_input(path, what);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

daq::SampleLog read_log_file(const std::string& path) {
  auto in = open_input(path, "log");
  return daq::read_log(in);
}

std::vector<daq::ReferenceRow> read_reference_file(const std::string& path) {
  auto in = open_input(path, "reference log");
  return daq::read_reference(in);
}

calibration::CalibrationPoly read_calibration(const std::string& path) {
  return calibration::poly_from_json(read_text(path, "calibration"));
}

/// Primary output: a file when --out names one, stdout otherwise.
class Sink {
public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw UsageError("cannot write '" + path + "'");
    os_ = file_.get();
    to_file_ = true;
  }
  std::ostream& stream() { return *os_; }
  bool to_file() const { return to_file_; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
  bool to_file_ = false;
};

std::vector<std::string> echo(const ModelConfig& cfg, const std::vector<std::pair<std::string, std::string>>& run) {
  std::vector<std::string> lines;
  for (const auto& [k, v] : run) lines.push_back("run." + k + " = " + v);
  for (const auto& [k, v] : resolved_entries(cfg)) lines.push_back(k + " = " + v);
  return lines;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << body;
}

// --- frames ---------------------------------------------------------------

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s += digits[b >> 4];
    s += digits[b & 0xF];
  }
  return s;
}

std::vector<std::uint8_t> from_hex(std::string_view s) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (s.size() % 2 != 0) throw DomainError("malformed hex: odd number of digits");
  std::vector<std::uint8_t> out;
  out.reserve(s.size() / 2);
  for (std::size_t i = 0; i < s.size(); i += 2) {
    const int hi = nibble(s[i]), lo = nibble(s[i + 1]);
    if (hi < 0 || lo < 0) throw DomainError("malformed hex at offset " + std::to_string(i));
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

constexpr const char* kListingHeader = "seq,timestamp_us,counts";

std::vector<daq::SensorSample> read_samples(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::istringstream probe(text);
  std::string line;
  while (std::getline(probe, line) && (line.empty() || line.starts_with("#"))) {
  }
  std::istringstream body(text);
  if (text::trim(line) == daq::kLogHeader) return daq::read_log(body).samples();
  if (text::trim(line) != kListingHeader) {
    throw ParseError(0, std::string("expected '") + kListingHeader + "' or '" + daq::kLogHeader + "' header");
  }
  std::vector<daq::SensorSample> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(body, line)) {
    ++line_no;
    const auto view = text::trim(line);
    if (view.empty() || view.starts_with("#")) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto f = text::split(view, ',');
    if (f.size() != 3) throw ParseError(line_no, "expected 3 fields");
    const auto seq = text::parse_unsigned(f[0]);
    const auto t = text::parse_unsigned(f[1]);
    const auto c = text::parse_unsigned(f[2]);
    if (!seq || !t || !c || *seq > 0xFFFFFFFFull || *c > 0xFFFFull) throw ParseError(line_no, "bad sample");
    out.push_back({static_cast<std::uint32_t>(*seq), *t, static_cast<std::uint16_t>(*c)});
  }
  return out;
}

void write_listing(std::ostream& os, const std::vector<daq::SensorSample>& samples) {
  os << kListingHeader << '\n';
  for (const auto& s : samples) os << s.seq << ',' << s.timestamp_us << ',' << s.counts << '\n';
}

// --- commands -------------------------------------------------------------

struct SimulateArgs {
  double rate = 1000.0;
  double duration = 10.0;
  std::string profile = "triangle:70";
  std::optional<double> temperature;
  std::optional<double> sigma;
  std::string reference_out;
  CLI::Option *rate_opt, *duration_opt, *profile_opt;
};

int cmd_simulate(const Shared& shared, SimulateArgs a, std::ostream& out, std::ostream&) {
  auto l = load(shared);
  std::uint64_t seed = shared.seed;
  run_default(seed, shared.seed_opt, l, "seed");
  run_default(a.rate, a.rate_opt, l, "rate_hz");
  run_default(a.duration, a.duration_opt, l, "duration_s");
  run_default(a.profile, a.profile_opt, l, "force_profile");
  if (a.temperature) l.model.temperature_c = *a.temperature;
  if (a.sigma) l.model.noise_sigma_v = *a.sigma;
  l.model.validate();

  const auto profile = from_flag([&] { return pipeline::parse_force_profile(a.profile, a.duration); });
  optics::NoiseSource noise({l.model.noise_sigma_v, seed});
  const auto log = daq::stream_simulate(profile, {a.rate, a.duration, l.model.temperature_c}, l.model.chain(),
                                        l.model.adc, noise);
  const auto preamble = echo(l.model, {{"command", "simulate"},
                                       {"seed", std::to_string(seed)},
                                       {"rate_hz", text::format_double(a.rate)},
                                       {"duration_s", text::format_double(a.duration)},
                                       {"force_profile", a.profile}});
  Sink sink(shared.out, out);
  daq::write_log(log, sink.stream(), preamble);
  if (!a.reference_out.empty()) {
    std::ofstream ref(a.reference_out);
    if (!ref) throw UsageError("cannot write '" + a.reference_out + "'");
    daq::write_reference(daq::sample_reference(profile, log), ref, preamble);
  }
  return kOk;
}

struct CalibrateArgs {
  std::string log, reference, stationary, metrics_out;
  int degree = 3;
};

int cmd_calibrate(const Shared& shared, const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
  const auto l = load(shared);
  const auto log = read_log_file(a.log);
  const auto ref = read_reference_file(a.reference);
  std::optional<daq::SampleLog> stationary;
  if (!a.stationary.empty()) stationary = read_log_file(a.stationary);

  const auto poly = calibration::fit_poly(pipeline::align(log, ref), a.degree);
  const auto report = pipeline::compute_metrics(log, ref, poly, stationary);

  Sink sink(shared.out, out);
  sink.stream() << calibration::to_json(poly);
  if (!a.metrics_out.empty()) write_text(a.metrics_out, calibration::to_json(report, resolved_entries(l.model)));
  (sink.to_file() ? out : err) << calibration::summary_table(report);
  if (!poly.monotone_over_fit_range()) err << "warning: calibration is not monotone over the fit range\n";
  return kOk;
}

struct MetricsArgs {
  std::string log, reference, calibration, stationary;
  bool table = false;
};

int cmd_metrics(const Shared& shared, const MetricsArgs& a, std::ostream& out, std::ostream&) {
  const auto l = load(shared);
  const auto poly = read_calibration(a.calibration);
  std::optional<daq::SampleLog> stationary;
  if (!a.stationary.empty()) stationary = read_log_file(a.stationary);
  const auto report = pipeline::compute_metrics(read_log_file(a.log), read_reference_file(a.reference), poly,
                                                stationary);
  Sink sink(shared.out, out);
  if (a.table) {
    sink.stream() << calibration::summary_table(report);
  } else {
    sink.stream() << calibration::to_json(report, resolved_entries(l.model));
  }
  return kOk;
}

struct ReplayArgs {
  std::string log, calibration;
};

int cmd_replay(const Shared& shared, const ReplayArgs& a, std::ostream& out, std::ostream& err) {
  const auto l = load(shared);
  const auto poly = read_calibration(a.calibration);
  auto log = read_log_file(a.log);
  std::size_t extrapolated = 0;
  for (auto& row : log.rows) {
    const auto est = calibration::apply_poly(poly, row.voltage_v);
    row.force_n = est.force_n;
    if (est.extrapolated) ++extrapolated;
  }
  Sink sink(shared.out, out);
  daq::write_log(log, sink.stream(),
                 echo(l.model, {{"command", "replay"}, {"calibration", a.calibration}}));
  if (extrapolated > 0) err << "warning: " << extrapolated << " samples outside the calibration range\n";
  return kOk;
}

struct ControlArgs {
  std::string profile = "staircase";
  std::string calibration, summary_out;
  std::optional<double> duration;
  double rate = 1000.0;
  CLI::Option *profile_opt, *rate_opt;
};

int cmd_control(const Shared& shared, ControlArgs a, std::ostream& out, std::ostream& err) {
  auto l = load(shared);
  std::uint64_t seed = shared.seed;
  run_default(seed, shared.seed_opt, l, "seed");
  run_default(a.profile, a.profile_opt, l, "profile");
  run_default(a.rate, a.rate_opt, l, "control_rate_hz");
  if (!a.duration && l.run.contains("duration_s")) {
    const auto v = text::parse_double(l.run.at("duration_s"));
    if (!v) throw UsageError("bad run.duration_s");
    a.duration = *v;
  }
  l.model.validate();

  auto profile = control::ReferenceProfile::staircase();
  switch (from_flag([&] { return control::parse_profile_kind(a.profile); })) {
    case control::ProfileKind::staircase: break;
    case control::ProfileKind::repeated_step: profile = control::ReferenceProfile::repeated_step(); break;
    case control::ProfileKind::rectified_sine: profile = control::ReferenceProfile::rectified_sine(); break;
  }
  const double duration = a.duration.value_or(profile.default_duration());

  const auto poly = a.calibration.empty() ? pipeline::calibrate_from_sweep(l.model, seed).poly
                                          : read_calibration(a.calibration);
  const auto chain = l.model.chain();
  const auto plant = l.model.resolved_plant();
  optics::NoiseSource noise({l.model.noise_sigma_v, seed ^ 0x9E3779B97F4A7C15ull});
  auto gains = l.model.gains;
  gains.dt = 1.0 / a.rate;
  control::PiController pi(gains);
  const auto result = control::run_experiment(
      profile, plant, {plant.taut_angle(), 0.0, 0.0}, pi,
      control::simulated_sensor(chain, l.model.adc, poly, noise, l.model.temperature_c),
      {duration, a.rate, 1.0, 10});

  const auto preamble = echo(l.model, {{"command", "control"},
                                       {"seed", std::to_string(seed)},
                                       {"profile", control::to_string(profile.kind)},
                                       {"duration_s", text::format_double(duration)},
                                       {"control_rate_hz", text::format_double(a.rate)},
                                       {"calibration", a.calibration.empty() ? "internal-sweep" : a.calibration}});
  Sink sink(shared.out, out);
  sink.stream() << control::trajectory_csv(result.trajectory, preamble);

  nlohmann::ordered_json summary;
  summary["profile"] = control::to_string(profile.kind);
  summary["duration_s"] = duration;
  summary["samples"] = result.trajectory.size();
  if (result.rmse) {
    summary["rmse_n"] = *result.rmse;
  } else {
    summary["rmse_n"] = nullptr;
    summary["rmse_note"] = "n/a (empty trajectory)";
  }
  if (profile.kind == control::ProfileKind::repeated_step) summary["trials"] = result.rising_edges;
  summary["rising_edges"] = result.rising_edges;
  if (profile.kind != control::ProfileKind::rectified_sine) {
    auto levels = nlohmann::ordered_json::array();
    for (const auto& s : result.segments) {
      nlohmann::ordered_json e;
      e["start_s"] = s.segment.start_s;
      e["level_n"] = s.segment.level_n;
      if (s.steady_state_error) {
        e["steady_state_error_n"] = *s.steady_state_error;
      } else {
        e["steady_state_error_n"] = nullptr;
      }
      levels.push_back(std::move(e));
    }
    summary["segments"] = std::move(levels);
  }
  double min_measured = 0.0;
  for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
    if (i == 0 || result.trajectory[i].measured_n < min_measured) min_measured = result.trajectory[i].measured_n;
  }
  if (!result.trajectory.empty()) summary["min_measured_n"] = min_measured;
  if (result.error) {
    summary["aborted"] = *result.error;
  } else {
    summary["aborted"] = nullptr;
  }
  const auto summary_text = summary.dump(2) + "\n";
  if (!a.summary_out.empty()) {
    write_text(a.summary_out, summary_text);
  } else {
    (sink.to_file() ? out : err) << summary_text;
  }
  if (result.error) {
    err << "error: run aborted: " << *result.error << '\n';
    return kDomain;
  }
  return kOk;
}

struct SweepArgs {
  std::vector<std::string> params;
  double force = 200.0;
};

int cmd_sweep(const Shared& shared, const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const auto l = load(shared);
  std::vector<elastomer::ParamRange> ranges;
  for (const auto& p : a.params) ranges.push_back(from_flag([&] { return elastomer::parse_param_range(p); }));
  std::optional<elastomer::SectionProperties> section;
  if (l.model.I1 || l.model.I2 || l.model.A5 || l.model.A6) section = l.model.section();
  const auto result = elastomer::sweep_geometry(l.model.geometry, ranges, a.force, l.model.material, section);
  Sink sink(shared.out, out);
  sink.stream() << elastomer::sweep_csv(result);
  for (const auto& s : result.skipped) err << "skipped " << s.param_values << ": " << s.reason << '\n';
  return kOk;
}

struct FrameArgs {
  std::string in = "-";
  std::vector<std::string> hex;
};

int cmd_frame_encode(const Shared& shared, const FrameArgs& a, std::ostream& out) {
  std::vector<daq::SensorSample> samples;
  if (a.in == "-") {
    samples = read_samples(std::cin);
  } else {
    auto f = open_input(a.in, "sample listing");
    samples = read_samples(f);
  }
  Sink sink(shared.out, out);
  for (const auto& frame : daq::frames_from_samples(samples)) sink.stream() << to_hex(daq::encode_payload(frame)) << '\n';
  return kOk;
}

int cmd_frame_decode(const Shared& shared, const FrameArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<std::string> lines = a.hex;
  if (lines.empty()) {
    std::unique_ptr<std::ifstream> file;
    std::istream* in = &std::cin;
    if (a.in != "-") {
      file = std::make_unique<std::ifstream>(open_input(a.in, "hex input"));
      in = file.get();
    }
    std::string line;
    while (std::getline(*in, line)) {
      const auto t = text::trim(line);
      if (!t.empty() && !t.starts_with("#")) lines.emplace_back(t);
    }
  }
  std::vector<daq::SensorSample> samples;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto bytes = from_hex(text::trim(lines[i]));
    const auto r = daq::decode_frame(bytes);
    if (!r.ok()) throw DomainError("frame " + std::to_string(i + 1) + ": " + daq::to_string(r.error));
    if (r.reserved_nonzero) err << "warning: frame " << i + 1 << " has a nonzero reserved byte\n";
    const auto s = r.frame.samples();
    samples.insert(samples.end(), s.begin(), s.end());
  }
  Sink sink(shared.out, out);
  write_listing(sink.stream(), samples);
  return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optical tension sensor toolkit: simulate, calibrate, evaluate, control."};
  app.name("tension_cli");
  app.require_subcommand(1);
  app.fallthrough();

  Shared shared;
  app.add_option("--config", shared.config_path, "key = value model configuration");
  shared.seed_opt = app.add_option("--seed", shared.seed, "random seed");
  app.add_option("--out", shared.out, "output file ('-' for stdout)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "stream a force profile through the sensor model");
  sim.rate_opt = simulate->add_option("--rate", sim.rate, "sample rate in Hz (max 5000)");
  sim.duration_opt = simulate->add_option("--duration", sim.duration, "seconds");
  sim.profile_opt = simulate->add_option("--force-profile", sim.profile,
                                         "const:F | triangle:PEAK | ramp:PEAK | rsine:AMP:FREQ");
  simulate->add_option("--temperature", sim.temperature, "ambient temperature in degC");
  simulate->add_option("--sigma", sim.sigma, "voltage noise standard deviation in V");
  simulate->add_option("--reference-out", sim.reference_out, "also write the ideal reference channel");

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "fit a calibration polynomial to a sweep");
  calibrate->add_option("--log", cal.log, "sensor log")->required();
  calibrate->add_option("--reference", cal.reference, "reference load-cell log")->required();
  calibrate->add_option("--stationary", cal.stationary, "stationary log for the resolution metric");
  calibrate->add_option("--degree", cal.degree, "polynomial degree")->check(CLI::Range(1, 8));
  calibrate->add_option("--metrics-out", cal.metrics_out, "write the metrics report as JSON");

  MetricsArgs met;
  auto* metrics = app.add_subcommand("metrics", "evaluate a calibration against a sweep");
  metrics->add_option("--log", met.log, "sensor log")->required();
  metrics->add_option("--reference", met.reference, "reference load-cell log")->required();
  metrics->add_option("--calibration", met.calibration, "calibration JSON")->required();
  metrics->add_option("--stationary", met.stationary, "stationary log for the resolution metric");
  metrics->add_flag("--table", met.table, "print the summary table instead of JSON");

  ReplayArgs rep;
  auto* replay = app.add_subcommand("replay", "apply a calibration to a recorded log");
  replay->add_option("--log", rep.log, "sensor log")->required();
  replay->add_option("--calibration", rep.calibration, "calibration JSON")->required();

  ControlArgs ctl;
  auto* control = app.add_subcommand("control", "closed-loop force control experiment");
  ctl.profile_opt = control->add_option("--profile", ctl.profile, "staircase | repeated-step | rectified-sine");
  control->add_option("--calibration", ctl.calibration, "calibration JSON (default: internal sweep)");
  control->add_option("--duration", ctl.duration, "seconds (default: profile length)");
  ctl.rate_opt = control->add_option("--rate", ctl.rate, "control rate in Hz");
  control->add_option("--summary-out", ctl.summary_out, "write the JSON summary here");

  SweepArgs swp;
  auto* sweep = app.add_subcommand("sweep", "elastomer geometry sweep");
  sweep->add_option("--param", swp.params, "NAME=LO:HI:STEP, e.g. b1=2mm:4mm:0.5mm (repeatable)");
  sweep->add_option("--force", swp.force, "applied force in N");

  FrameArgs frm;
  auto* frame = app.add_subcommand("frame", "CAN-FD payload codec");
  frame->require_subcommand(1);
  auto* encode = frame->add_subcommand("encode", "sample listing or log -> hex payloads");
  encode->add_option("--in", frm.in, "input file ('-' for stdin)");
  auto* decode = frame->add_subcommand("decode", "hex payloads -> sample listing");
  decode->add_option("hex", frm.hex, "payloads; read from --in when omitted");
  decode->add_option("--in", frm.in, "input file ('-' for stdin)");

  std::vector<std::string> argv_store{"tension_cli"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << "run '" << sub->get_name() << " --help' for options\n";
    return kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(shared, sim, out, err);
    if (calibrate->parsed()) return cmd_calibrate(shared, cal, out, err);
    if (metrics->parsed()) return cmd_metrics(shared, met, out, err);
    if (replay->parsed()) return cmd_replay(shared, rep, out, err);
    if (control->parsed()) return cmd_control(shared, ctl, out, err);
    if (sweep->parsed()) return cmd_sweep(shared, swp, out, err);
    if (encode->parsed()) return cmd_frame_encode(shared, frm, out);
    if (decode->parsed()) return cmd_frame_decode(shared, frm, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomain;
  }
  return kUsage;
}

} // namespace tension::cli
