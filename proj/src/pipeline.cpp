#include "tension/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tension/errors.hpp"
#include "tension/text.hpp"

namespace tension::pipeline {

namespace {

double number(std::string_view s, const std::string& spec) {
  const auto v = text::parse_double(s);
  if (!v || !std::isfinite(*v)) throw InputError("bad number in force profile '" + spec + "'");
  return *v;
}

} // namespace

daq::ForceProfile triangle_profile(double peak_n, double duration_s) {
  const double half = duration_s / 2.0;
  return [peak_n, half](double t) {
    if (!(half > 0.0)) return 0.0;
    const double f = t <= half ? t / half : 2.0 - t / half;
    return peak_n * std::max(0.0, f);
  };
}

daq::ForceProfile parse_force_profile(const std::string& spec, double duration_s) {
  const auto parts = text::split(spec, ':');
  const auto kind = parts.front();
  const auto args = parts.size() - 1;
  if (kind == "const" && args == 1) {
    const double f = number(parts[1], spec);
    return [f](double) { return f; };
  }
  if (kind == "triangle" && args == 1) return triangle_profile(number(parts[1], spec), duration_s);
  if (kind == "ramp" && args == 1) {
    const double peak = number(parts[1], spec);
    return [peak, duration_s](double t) { return duration_s > 0.0 ? peak * std::min(1.0, t / duration_s) : 0.0; };
  }
  if (kind == "rsine" && args == 2) {
    const double amp = number(parts[1], spec);
    const double freq = number(parts[2], spec);
    return [amp, freq](double t) { return amp * std::abs(std::sin(2.0 * std::numbers::pi * freq * t)); };
  }
  throw InputError("unknown force profile '" + spec + "' (const:F, triangle:PEAK, ramp:PEAK, rsine:AMP:FREQ)");
}

SweepCalibration calibrate_from_sweep(const ModelConfig& cfg, std::uint64_t seed, double rate_hz,
                                      double duration_s) {
  const auto chain = cfg.chain();
  const auto profile = triangle_profile(calibration::kCalibrationSpanN, duration_s);
  optics::NoiseSource noise({cfg.noise_sigma_v, seed});
  SweepCalibration out;
  out.log = daq::stream_simulate(profile, {rate_hz, duration_s, cfg.temperature_c}, chain, cfg.adc, noise);
  out.reference = daq::sample_reference(profile, out.log);
  const auto pairs = align(out.log, out.reference);
  out.poly = calibration::fit_poly(pairs, 3);
  return out;
}

double estimate_rate_hz(const daq::SampleLog& log) {
  if (log.rows.size() < 2) return 0.0;
  std::vector<std::uint64_t> dt;
  dt.reserve(log.rows.size() - 1);
  for (std::size_t i = 1; i < log.rows.size(); ++i) dt.push_back(log.rows[i].timestamp_us - log.rows[i - 1].timestamp_us);
  std::nth_element(dt.begin(), dt.begin() + dt.size() / 2, dt.end());
  const auto mid = dt[dt.size() / 2];
  return mid == 0 ? 0.0 : 1e6 / static_cast<double>(mid);
}

std::vector<calibration::CalibrationPair> align(const daq::SampleLog& log,
                                                const std::vector<daq::ReferenceRow>& reference) {
  if (log.rows.empty()) throw InputError("sample log is empty");
  if (reference.empty()) throw InputError("reference log is empty");
  const double rate = estimate_rate_hz(log);
  // Half a period; a single-row log has no period, so only exact matches count.
  const double tolerance_us = rate > 0.0 ? 0.5e6 / rate : 0.0;

  std::vector<calibration::CalibrationPair> pairs;
  pairs.reserve(log.rows.size());
  std::size_t j = 0;
  for (const auto& row : log.rows) {
    while (j + 1 < reference.size() && reference[j + 1].timestamp_us <= row.timestamp_us) ++j;
    std::size_t best = j;
    auto distance = [&](std::size_t k) {
      const auto a = reference[k].timestamp_us, b = row.timestamp_us;
      return static_cast<double>(a > b ? a - b : b - a);
    };
    if (j + 1 < reference.size() && distance(j + 1) < distance(j)) best = j + 1;
    if (distance(best) > tolerance_us) {
      throw DomainError("no reference sample within half a period of t=" + daq::format_time_s(row.timestamp_us) + " s");
    }
    pairs.push_back({row.voltage_v, reference[best].force_n});
  }
  return pairs;
}

AlignedForces decode_aligned(const std::vector<calibration::CalibrationPair>& pairs,
                             const calibration::CalibrationPoly& poly) {
  AlignedForces out;
  out.reference_n.reserve(pairs.size());
  out.measured_n.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.reference_n.push_back(p.force_n);
    out.measured_n.push_back(calibration::evaluate(poly.coefficients, p.voltage));
  }
  return out;
}

calibration::MetricsReport compute_metrics(const daq::SampleLog& sweep,
                                           const std::vector<daq::ReferenceRow>& reference,
                                           const calibration::CalibrationPoly& poly,
                                           const std::optional<daq::SampleLog>& stationary) {
  const auto forces = decode_aligned(align(sweep, reference), poly);
  calibration::MetricsReport report;
  report.rmse = calibration::rmse(forces.measured_n, forces.reference_n);
  const auto curves = calibration::bin_sweep(forces.reference_n, forces.measured_n);
  report.nonlinearity_pct = calibration::nonlinearity(curves.loading);
  report.hysteresis_pct = calibration::hysteresis(curves.loading, curves.unloading);
  report.sample_rate_hz = estimate_rate_hz(sweep);
  if (stationary) {
    std::vector<double> f;
    f.reserve(stationary->rows.size());
    for (const auto& r : stationary->rows) f.push_back(calibration::evaluate(poly.coefficients, r.voltage_v));
    const auto res = calibration::resolution(f, report.full_scale);
    report.resolution = res.resolution_n;
    report.resolution_steps = res.steps;
  }
  return report;
}

} // namespace tension::pipeline
