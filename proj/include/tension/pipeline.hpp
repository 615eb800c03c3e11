#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tension/calibration.hpp"
#include "tension/config.hpp"
#include "tension/daq.hpp"

// Glue between the sensing modules: force profiles, calibration sweeps,
// log alignment and metric reports.
namespace tension::pipeline {

/// Parses a force profile spec over a run of `duration_s`:
///   const:F           constant F newtons
///   triangle:PEAK     0 -> PEAK -> 0, apex at duration/2
///   ramp:PEAK         0 -> PEAK over the run
///   rsine:AMP:FREQ    AMP * |sin(2 pi FREQ t)|
/// Throws InputError on anything else.
daq::ForceProfile parse_force_profile(const std::string& spec, double duration_s);

daq::ForceProfile triangle_profile(double peak_n, double duration_s);

struct SweepCalibration {
  daq::SampleLog log;
  std::vector<daq::ReferenceRow> reference;
  calibration::CalibrationPoly poly;
};

/// Default calibration procedure: a 0 -> 70 -> 0 N triangle streamed through
/// the configured chain, paired with an ideal reference, fitted with a cubic.
SweepCalibration calibrate_from_sweep(const ModelConfig& cfg, std::uint64_t seed, double rate_hz = 1000.0,
                                      double duration_s = 140.0);

/// Pairs every log row with the nearest reference row in time. Throws
/// DomainError naming the first log timestamp without a reference row within
/// half a sample period.
std::vector<calibration::CalibrationPair> align(const daq::SampleLog& log,
                                                const std::vector<daq::ReferenceRow>& reference);

/// Reference and decoded force per aligned sample.
struct AlignedForces {
  std::vector<double> reference_n;
  std::vector<double> measured_n;
};

AlignedForces decode_aligned(const std::vector<calibration::CalibrationPair>& pairs,
                             const calibration::CalibrationPoly& poly);

/// RMSE, nonlinearity and hysteresis of a calibrated sweep; resolution when a
/// stationary log is supplied.
calibration::MetricsReport compute_metrics(const daq::SampleLog& sweep,
                                           const std::vector<daq::ReferenceRow>& reference,
                                           const calibration::CalibrationPoly& poly,
                                           const std::optional<daq::SampleLog>& stationary = std::nullopt);

/// Median spacing between consecutive timestamps, converted to Hz. 0 for fewer than two rows.
double estimate_rate_hz(const daq::SampleLog& log);

} // namespace tension::pipeline
