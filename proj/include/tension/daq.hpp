#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tension/optics.hpp"

namespace tension::daq {

struct AdcConfig {
  int bits = 16;
  double v_ref = 3.3;

  std::uint32_t max_counts() const { return (std::uint32_t{1} << bits) - 1; }
  double lsb() const { return v_ref / static_cast<double>(max_counts()); }
  void validate() const;
};

/// floor(clamp(v, 0, v_ref) / v_ref * (2^bits - 1)).
std::uint32_t quantize(double voltage, const AdcConfig& adc);

/// Throws DomainError when `counts` exceeds the converter range.
double counts_to_voltage(std::uint32_t counts, const AdcConfig& adc);

struct SensorSample {
  std::uint32_t seq = 0;
  std::uint64_t timestamp_us = 0;
  std::uint16_t counts = 0;

  friend bool operator==(const SensorSample&, const SensorSample&) = default;
};

// --- CAN-FD data field -----------------------------------------------------
//
// Little-endian payload, 16-byte header then n counts:
//   0  u32 seq of first sample
//   4  u64 t0_us
//  12  u16 dt_us
//  14  u8  n (<= 24)
//  15  u8  reserved (0)
//  16  u16 counts[n]

inline constexpr std::size_t kFrameHeaderBytes = 16;
inline constexpr std::size_t kMaxFrameSamples = 24;
inline constexpr std::size_t kMaxFrameBytes = kFrameHeaderBytes + 2 * kMaxFrameSamples;

struct FramePayload {
  std::uint32_t seq = 0;
  std::uint64_t t0_us = 0;
  std::uint16_t dt_us = 0;
  std::uint8_t reserved = 0;
  std::vector<std::uint16_t> counts;

  std::vector<SensorSample> samples() const;
  friend bool operator==(const FramePayload&, const FramePayload&) = default;
};

/// Packs up to 24 samples with contiguous seq and uniform spacing. Throws EncodeError.
FramePayload make_frame(std::span<const SensorSample> samples);
std::vector<std::uint8_t> encode_payload(const FramePayload& frame);
std::vector<std::uint8_t> encode_frame(std::span<const SensorSample> samples);

enum class FrameError { none, truncated_header, bad_count, length_mismatch };

const char* to_string(FrameError e);

struct DecodeResult {
  FrameError error = FrameError::none;
  FramePayload frame;          // valid only when error == none
  bool reserved_nonzero = false;  // warning, payload still decoded

  bool ok() const noexcept { return error == FrameError::none; }
};

/// Total over arbitrary bytes: never throws, reports a typed error instead.
DecodeResult decode_frame(std::span<const std::uint8_t> bytes) noexcept;

/// Splits a stream into consecutive frames of at most 24 samples.
std::vector<FramePayload> frames_from_samples(std::span<const SensorSample> samples);

// --- streaming -------------------------------------------------------------

inline constexpr double kMaxSampleRateHz = 5000.0;

using ForceProfile = std::function<double(double t_s)>;

struct LogRow {
  std::uint64_t timestamp_us = 0;
  std::uint16_t counts = 0;
  double voltage_v = 0.0;
  std::optional<double> force_n;

  friend bool operator==(const LogRow&, const LogRow&) = default;
};

struct SampleLog {
  std::vector<LogRow> rows;

  std::vector<SensorSample> samples() const;
  friend bool operator==(const SampleLog&, const SampleLog&) = default;
};

struct StreamConfig {
  double rate_hz = 1000.0;
  double duration_s = 10.0;
  double temperature_c = 25.0;
};

/// Sample period rounded to whole microseconds, the resolution of the timestamp clock.
std::uint64_t sample_period_us(double rate_hz);

/// Runs the force profile through optics and ADC. Sample k is taken at
/// k * sample_period_us(rate); ceil(rate * duration) samples are produced.
/// The noise source is advanced once per sample.
SampleLog stream_simulate(const ForceProfile& profile, const StreamConfig& cfg,
                          const optics::SensingChain& chain, const AdcConfig& adc,
                          optics::NoiseSource& noise);

using VoltageToForce = std::function<double(double voltage)>;

/// Sample standard deviation of the decoded force while `force_n` is held
/// constant, streamed at `cfg` with Gaussian voltage noise `sigma_v`.
double stationary_force_std(double force_n, double sigma_v, const optics::SensingChain& chain,
                            const AdcConfig& adc, const VoltageToForce& to_force, const StreamConfig& cfg,
                            std::uint64_t seed);

/// Voltage noise level at which stationary_force_std reaches `target_std_n`.
/// Bisection on a fixed seed, so quantization is accounted for.
double tune_noise_sigma(double force_n, double target_std_n, const optics::SensingChain& chain,
                        const AdcConfig& adc, const VoltageToForce& to_force, const StreamConfig& cfg,
                        std::uint64_t seed);

inline constexpr const char* kLogHeader = "time_s,counts,voltage_v,force_n";

/// Lines in `preamble` are written first, each prefixed with "# ".
void write_log(const SampleLog& log, std::ostream& out, const std::vector<std::string>& preamble = {});
void write_log(const SampleLog& log, const std::string& path, const std::vector<std::string>& preamble = {});
SampleLog read_log(std::istream& in);
SampleLog read_log(const std::string& path);

// Reference channel (load cell) log: time_s,force_n
struct ReferenceRow {
  std::uint64_t timestamp_us = 0;
  double force_n = 0.0;

  friend bool operator==(const ReferenceRow&, const ReferenceRow&) = default;
};

inline constexpr const char* kReferenceHeader = "time_s,force_n";

void write_reference(const std::vector<ReferenceRow>& rows, std::ostream& out,
                     const std::vector<std::string>& preamble = {});
std::vector<ReferenceRow> read_reference(std::istream& in);

/// Ideal load-cell channel: the profile evaluated at every log timestamp.
std::vector<ReferenceRow> sample_reference(const ForceProfile& profile, const SampleLog& log);

std::string format_time_s(std::uint64_t timestamp_us);

} // namespace tension::daq
