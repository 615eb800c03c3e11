#include "tension/daq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tension/errors.hpp"
#include "tension/text.hpp"

namespace tension::daq {

void AdcConfig::validate() const {
  if (bits < 8 || bits > 24) throw DomainError("ADC bits must lie in [8, 24]");
  if (!(v_ref > 0.0) || !std::isfinite(v_ref)) throw DomainError("ADC v_ref must be > 0");
}

std::uint32_t quantize(double voltage, const AdcConfig& adc) {
  if (std::isnan(voltage)) voltage = 0.0;
  const double clamped = std::clamp(voltage, 0.0, adc.v_ref);
  const double scaled = std::floor(clamped / adc.v_ref * static_cast<double>(adc.max_counts()));
  return static_cast<std::uint32_t>(scaled);
}

double counts_to_voltage(std::uint32_t counts, const AdcConfig& adc) {
  if (counts > adc.max_counts()) {
    throw DomainError("ADC counts " + std::to_string(counts) + " exceed the " +
                      std::to_string(adc.bits) + "-bit range");
  }
  return static_cast<double>(counts) / static_cast<double>(adc.max_counts()) * adc.v_ref;
}

// --- frames ----------------------------------------------------------------

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[offset + i]) << (8 * i);
  return v;
}

} // namespace

std::vector<SensorSample> FramePayload::samples() const {
  std::vector<SensorSample> out;
  out.reserve(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out.push_back(SensorSample{seq + static_cast<std::uint32_t>(k),
                               t0_us + static_cast<std::uint64_t>(k) * dt_us, counts[k]});
  }
  return out;
}

FramePayload make_frame(std::span<const SensorSample> samples) {
  if (samples.size() > kMaxFrameSamples) {
    throw EncodeError("frame holds at most 24 samples (got " + std::to_string(samples.size()) + ")");
  }
  FramePayload f;
  if (samples.empty()) return f;
  f.seq = samples.front().seq;
  f.t0_us = samples.front().timestamp_us;
  std::uint64_t dt = 0;
  if (samples.size() > 1) {
    if (samples[1].timestamp_us < samples[0].timestamp_us) throw EncodeError("timestamps decrease");
    dt = samples[1].timestamp_us - samples[0].timestamp_us;
    if (dt > 0xFFFF) throw EncodeError("sample spacing " + std::to_string(dt) + " us does not fit u16");
  }
  f.dt_us = static_cast<std::uint16_t>(dt);
  f.counts.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (s.seq != f.seq + static_cast<std::uint32_t>(k)) throw EncodeError("sequence numbers are not contiguous");
    if (s.timestamp_us != f.t0_us + k * dt) throw EncodeError("sample spacing is not uniform");
    f.counts.push_back(s.counts);
  }
  return f;
}

std::vector<std::uint8_t> encode_payload(const FramePayload& frame) {
  if (frame.counts.size() > kMaxFrameSamples) throw EncodeError("frame holds at most 24 samples");
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderBytes + 2 * frame.counts.size());
  put_u32(out, frame.seq);
  put_u64(out, frame.t0_us);
  put_u16(out, frame.dt_us);
  out.push_back(static_cast<std::uint8_t>(frame.counts.size()));
  out.push_back(frame.reserved);
  for (auto c : frame.counts) put_u16(out, c);
  return out;
}

std::vector<std::uint8_t> encode_frame(std::span<const SensorSample> samples) {
  return encode_payload(make_frame(samples));
}

const char* to_string(FrameError e) {
  switch (e) {
    case FrameError::none: return "ok";
    case FrameError::truncated_header: return "truncated-header";
    case FrameError::bad_count: return "bad-count";
    case FrameError::length_mismatch: return "length-mismatch";
  }
  return "unknown";
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) noexcept {
  DecodeResult r;
  if (bytes.size() < kFrameHeaderBytes) {
    r.error = FrameError::truncated_header;
    return r;
  }
  const std::size_t n = bytes[14];
  if (n > kMaxFrameSamples) {
    r.error = FrameError::bad_count;
    return r;
  }
  if (bytes.size() != kFrameHeaderBytes + 2 * n) {
    r.error = FrameError::length_mismatch;
    return r;
  }
  r.frame.seq = get_le<std::uint32_t>(bytes, 0);
  r.frame.t0_us = get_le<std::uint64_t>(bytes, 4);
  r.frame.dt_us = get_le<std::uint16_t>(bytes, 12);
  r.frame.reserved = bytes[15];
  r.reserved_nonzero = r.frame.reserved != 0;
  r.frame.counts.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    r.frame.counts[k] = get_le<std::uint16_t>(bytes, kFrameHeaderBytes + 2 * k);
  }
  return r;
}

std::vector<FramePayload> frames_from_samples(std::span<const SensorSample> samples) {
  std::vector<FramePayload> out;
  for (std::size_t i = 0; i < samples.size(); i += kMaxFrameSamples) {
    out.push_back(make_frame(samples.subspan(i, std::min(kMaxFrameSamples, samples.size() - i))));
  }
  return out;
}

// --- streaming -------------------------------------------------------------

std::uint64_t sample_period_us(double rate_hz) {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw DomainError("sample rate must be > 0 Hz");
  if (rate_hz > kMaxSampleRateHz) {
    throw RateLimitError("sample rate " + text::format_double(rate_hz) +
                         " Hz exceeds the 5 kHz (5000 Hz) acquisition limit");
  }
  return static_cast<std::uint64_t>(std::llround(1e6 / rate_hz));
}

std::vector<SensorSample> SampleLog::samples() const {
  std::vector<SensorSample> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back(SensorSample{static_cast<std::uint32_t>(i), rows[i].timestamp_us, rows[i].counts});
  }
  return out;
}

SampleLog stream_simulate(const ForceProfile& profile, const StreamConfig& cfg,
                          const optics::SensingChain& chain, const AdcConfig& adc,
                          optics::NoiseSource& noise) {
  const std::uint64_t period = sample_period_us(cfg.rate_hz);
  if (!(cfg.duration_s >= 0.0) || !std::isfinite(cfg.duration_s)) {
    throw DomainError("duration must be finite and >= 0 s");
  }
  if (!std::isfinite(cfg.temperature_c)) throw DomainError("temperature must be finite");
  adc.validate();
  if (adc.bits > 16) throw DomainError("sample log stores 16-bit counts; ADC has " + std::to_string(adc.bits) + " bits");
  chain.reflector.validate();

  const auto n = static_cast<std::size_t>(std::ceil(cfg.rate_hz * cfg.duration_s - 1e-9));
  SampleLog log;
  log.rows.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t t_us = k * period;
    const double force = profile(static_cast<double>(t_us) * 1e-6);
    const double v = optics::sensor_voltage(force, cfg.temperature_c, chain, &noise);
    const auto counts = static_cast<std::uint16_t>(quantize(v, adc));
    log.rows.push_back(LogRow{t_us, counts, counts_to_voltage(counts, adc), std::nullopt});
  }
  return log;
}

std::vector<ReferenceRow> sample_reference(const ForceProfile& profile, const SampleLog& log) {
  std::vector<ReferenceRow> out;
  out.reserve(log.rows.size());
  for (const auto& r : log.rows) {
    out.push_back(ReferenceRow{r.timestamp_us, profile(static_cast<double>(r.timestamp_us) * 1e-6)});
  }
  return out;
}

double stationary_force_std(double force_n, double sigma_v, const optics::SensingChain& chain,
                            const AdcConfig& adc, const VoltageToForce& to_force, const StreamConfig& cfg,
                            std::uint64_t seed) {
  optics::NoiseSource noise({sigma_v, seed});
  const SampleLog log = stream_simulate([force_n](double) { return force_n; }, cfg, chain, adc, noise);
  if (log.rows.size() < 2) throw InputError("stationary run needs at least 2 samples");
  double mean = 0.0;
  std::vector<double> f;
  f.reserve(log.rows.size());
  for (const auto& r : log.rows) {
    f.push_back(to_force(r.voltage_v));
    mean += f.back();
  }
  mean /= static_cast<double>(f.size());
  double ss = 0.0;
  for (double x : f) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(f.size() - 1));
}

namespace {

// Constant-force stream reduced to its noise-free voltage and the unit normal
// draws; sample i reads clean + sigma * z[i], exactly as stream_simulate does.
struct StationaryDraws {
  double clean_v = 0.0;
  std::vector<double> z;
};

StationaryDraws stationary_draws(double force_n, const optics::SensingChain& chain, const StreamConfig& cfg,
                                 std::uint64_t seed) {
  (void)sample_period_us(cfg.rate_hz);
  const auto n = static_cast<std::size_t>(std::ceil(cfg.rate_hz * cfg.duration_s - 1e-9));
  StationaryDraws d;
  d.clean_v = optics::sensor_voltage(force_n, cfg.temperature_c, chain, nullptr);
  optics::NoiseSource unit({1.0, seed});
  d.z.reserve(n);
  for (std::size_t i = 0; i < n; ++i) d.z.push_back(unit.draw());
  return d;
}

double draws_force_std(const StationaryDraws& d, double sigma_v, const AdcConfig& adc,
                       const VoltageToForce& to_force) {
  double mean = 0.0;
  std::vector<double> f;
  f.reserve(d.z.size());
  std::uint32_t cached_counts = 0;
  double cached_force = 0.0;
  bool have_cache = false;
  for (double z : d.z) {
    const std::uint32_t c = quantize(d.clean_v + sigma_v * z, adc);
    if (!have_cache || c != cached_counts) {
      cached_counts = c;
      cached_force = to_force(counts_to_voltage(c, adc));
      have_cache = true;
    }
    f.push_back(cached_force);
    mean += cached_force;
  }
  mean /= static_cast<double>(f.size());
  double ss = 0.0;
  for (double x : f) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(f.size() - 1));
}

} // namespace

double tune_noise_sigma(double force_n, double target_std_n, const optics::SensingChain& chain,
                        const AdcConfig& adc, const VoltageToForce& to_force, const StreamConfig& cfg,
                        std::uint64_t seed) {
  if (!(target_std_n > 0.0)) throw DomainError("target standard deviation must be > 0");
  const StationaryDraws draws = stationary_draws(force_n, chain, cfg, seed);
  if (draws.z.size() < 2) throw InputError("stationary run needs at least 2 samples");
  auto measure = [&](double sigma) { return draws_force_std(draws, sigma, adc, to_force); };

  const double slope = std::abs(optics::sensitivity(force_n, chain));
  double lo = 0.0;
  double hi = 4.0 * target_std_n * slope + adc.lsb();
  for (int i = 0; i < 60 && measure(hi) < target_std_n; ++i) hi *= 2.0;
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    (measure(mid) < target_std_n ? lo : hi) = mid;
  }

  // Quantization makes the std a step function of sigma; pick the plateau
  // closest to the target in a +-1% neighbourhood.
  double best = hi;
  double best_err = std::abs(measure(hi) - target_std_n);
  constexpr int kScan = 4000;
  for (int i = 0; i <= kScan; ++i) {
    const double sigma = hi * (0.99 + 0.02 * i / kScan);
    const double err = std::abs(measure(sigma) - target_std_n);
    if (err < best_err) {
      best_err = err;
      best = sigma;
    }
  }
  return best;
}

// --- CSV -------------------------------------------------------------------

std::string format_time_s(std::uint64_t timestamp_us) {
  std::string frac = std::to_string(timestamp_us % 1000000);
  frac.insert(0, 6 - frac.size(), '0');
  return std::to_string(timestamp_us / 1000000) + "." + frac;
}

namespace {

std::optional<std::uint64_t> parse_time_us(std::string_view s) {
  s = text::trim(s);
  const auto dot = s.find('.');
  if (dot != std::string_view::npos && s.size() - dot - 1 <= 6 &&
      s.find_first_of("eE") == std::string_view::npos) {
    const auto whole = text::parse_unsigned(s.substr(0, dot));
    std::string frac(s.substr(dot + 1));
    if (!whole || (!frac.empty() && !text::parse_unsigned(frac))) return std::nullopt;
    frac.append(6 - frac.size(), '0');
    return *whole * 1000000 + *text::parse_unsigned(frac);
  }
  if (auto whole = text::parse_unsigned(s)) return *whole * 1000000;
  auto v = text::parse_double(s);
  if (!v || *v < 0.0 || !std::isfinite(*v)) return std::nullopt;
  return static_cast<std::uint64_t>(std::llround(*v * 1e6));
}

void write_preamble(std::ostream& out, const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
}

// Skips '#' preamble lines and checks the header; returns the header's line number.
std::size_t expect_header(std::istream& in, const char* header, std::string& line) {
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.front() == '#') continue;
    if (text::trim(line) != header) {
      throw ParseError(line_no, std::string("expected header '") + header + "'");
    }
    return line_no;
  }
  throw ParseError(line_no + 1, std::string("missing header '") + header + "'");
}

} // namespace

void write_log(const SampleLog& log, std::ostream& out, const std::vector<std::string>& preamble) {
  write_preamble(out, preamble);
  out << kLogHeader << '\n';
  for (const auto& r : log.rows) {
    out << format_time_s(r.timestamp_us) << ',' << r.counts << ',' << text::format_double(r.voltage_v) << ',';
    if (r.force_n) out << text::format_double(*r.force_n);
    out << '\n';
  }
}

void write_log(const SampleLog& log, const std::string& path, const std::vector<std::string>& preamble) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  write_log(log, out, preamble);
  if (!out) throw InputError("failed writing '" + path + "'");
}

SampleLog read_log(std::istream& in) {
  std::string line;
  std::size_t line_no = expect_header(in, kLogHeader, line);
  SampleLog log;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 4) throw ParseError(line_no, "expected 4 fields");
    const auto t = parse_time_us(fields[0]);
    const auto counts = text::parse_unsigned(fields[1]);
    const auto volts = text::parse_double(fields[2]);
    if (!t) throw ParseError(line_no, "bad time_s");
    if (!counts || *counts > 0xFFFF) throw ParseError(line_no, "bad counts");
    if (!volts) throw ParseError(line_no, "bad voltage_v");
    LogRow row{*t, static_cast<std::uint16_t>(*counts), *volts, std::nullopt};
    if (!text::trim(fields[3]).empty()) {
      const auto f = text::parse_double(fields[3]);
      if (!f) throw ParseError(line_no, "bad force_n");
      row.force_n = *f;
    }
    if (!log.rows.empty() && row.timestamp_us < log.rows.back().timestamp_us) {
      throw ParseError(line_no, "timestamps decrease");
    }
    log.rows.push_back(row);
  }
  return log;
}

SampleLog read_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_log(in);
}

void write_reference(const std::vector<ReferenceRow>& rows, std::ostream& out,
                     const std::vector<std::string>& preamble) {
  write_preamble(out, preamble);
  out << kReferenceHeader << '\n';
  for (const auto& r : rows) out << format_time_s(r.timestamp_us) << ',' << text::format_double(r.force_n) << '\n';
}

std::vector<ReferenceRow> read_reference(std::istream& in) {
  std::string line;
  std::size_t line_no = expect_header(in, kReferenceHeader, line);
  std::vector<ReferenceRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != 2) throw ParseError(line_no, "expected 2 fields");
    const auto t = parse_time_us(fields[0]);
    const auto f = text::parse_double(fields[1]);
    if (!t) throw ParseError(line_no, "bad time_s");
    if (!f) throw ParseError(line_no, "bad force_n");
    if (!rows.empty() && *t < rows.back().timestamp_us) throw ParseError(line_no, "timestamps decrease");
    rows.push_back(ReferenceRow{*t, *f});
  }
  return rows;
}

} // namespace tension::daq
