#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tension/calibration.hpp"
#include "tension/daq.hpp"
#include "tension/optics.hpp"

namespace tension::control {

// --- twisted string actuator ----------------------------------------------

/// Contraction of a twisted string pair: L0 - sqrt(L0^2 - (r*theta)^2).
/// Throws KinematicLimitError when |r*theta| >= L0.
double tsa_contraction(double theta_rad, double untwisted_length_m, double string_radius_m);

struct TsaParams {
  double untwisted_length = 0.1;   // m
  double string_radius = 0.75e-3;  // m
  double motor_tau = 0.02;         // s, velocity lag
  double max_speed = 500.0;        // rad/s
  double series_stiffness = 0.0;   // N/m; the elastomer stiffness when built by default_plant()
  double slack_offset = 0.5e-3;    // m of contraction taken up before the string loads

  void validate() const;
  /// Twist at which contraction equals slack_offset.
  double taut_angle() const;
};

struct TsaState {
  double theta = 0.0;  // rad
  double omega = 0.0;  // rad/s
  double tension = 0.0;  // N
};

/// Advances motor speed (exact first-order lag toward command*max_speed) and
/// twist over dt. The command is clamped to [-1, 1]. Tension is
/// k * max(0, contraction - slack_offset).
TsaState plant_step(const TsaParams& plant, const TsaState& state, double command, double dt);

// --- PI --------------------------------------------------------------------

struct PiGains {
  double kp = 0.0;  // command per N
  double ki = 0.0;  // command per N*s
  double dt = 1e-3;
  double u_min = -1.0;
  double u_max = 1.0;
  bool anti_windup = true;
};

class PiController {
public:
  explicit PiController(const PiGains& gains);

  /// One control tick. With anti-windup on, the integrator is held whenever
  /// the output would saturate and the error pushes further into saturation,
  /// and |ki * integrator| never exceeds u_max - u_min.
  double step(double reference_n, double measured_n);

  double integrator() const noexcept { return integrator_; }
  void set_integrator(double value) noexcept { integrator_ = value; }
  void reset() noexcept { integrator_ = 0.0; }
  const PiGains& gains() const noexcept { return gains_; }

private:
  PiGains gains_;
  double integrator_ = 0.0;  // N*s
};

double pi_step(PiController& controller, double reference_n, double measured_n);

// --- reference profiles ----------------------------------------------------

enum class ProfileKind { staircase, repeated_step, rectified_sine };

struct ReferenceProfile {
  ProfileKind kind = ProfileKind::staircase;
  // staircase
  std::vector<double> levels{10.0, 20.0, 30.0, 40.0, 50.0};
  double dwell_s = 3.0;
  // repeated step: each trial is off for period/2 then on for period/2
  double step_amplitude = 30.0;
  int trials = 10;
  double trial_period_s = 4.0;
  // rectified sine
  double sine_amplitude = 20.0;
  double sine_frequency_hz = 0.5;
  double sine_duration_s = 10.0;

  static ReferenceProfile staircase();
  static ReferenceProfile repeated_step();
  static ReferenceProfile rectified_sine();

  double default_duration() const;
  void validate() const;
};

/// Throws InputError for unknown names. Accepts staircase, repeated-step, rectified-sine.
ProfileKind parse_profile_kind(const std::string& name);
const char* to_string(ProfileKind kind);

double make_reference(const ReferenceProfile& profile, double t_s);

/// Constant-reference segment of a piecewise-constant profile.
struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;
  double level_n = 0.0;
};

/// Segments covering [0, duration); empty for the rectified sine.
std::vector<Segment> profile_segments(const ReferenceProfile& profile, double duration_s);

// --- measurement -----------------------------------------------------------

/// Tension -> reported force. Returns the measured force for the given true tension.
using ForceSensor = std::function<double(double tension_n)>;

ForceSensor ideal_sensor();

/// Optics, noise, ADC and calibration in series. Readings are floored at 0 N
/// because the string cannot push. The noise source is shared, not owned.
ForceSensor simulated_sensor(const optics::SensingChain& chain, const daq::AdcConfig& adc,
                             const calibration::CalibrationPoly& poly, optics::NoiseSource& noise,
                             double temperature_c = 25.0);

// --- experiment ------------------------------------------------------------

struct TrajectoryPoint {
  double t_s = 0.0;
  double reference_n = 0.0;
  double measured_n = 0.0;
  double command = 0.0;
  double tension_n = 0.0;  // true string tension
};

struct SegmentError {
  Segment segment;
  /// Mean (reference - measured) over [start + settle, end); nullopt when the window is empty.
  std::optional<double> steady_state_error;
};

struct ExperimentResult {
  std::vector<TrajectoryPoint> trajectory;
  std::optional<double> rmse;  // reference vs measured, nullopt for an empty run
  std::vector<SegmentError> segments;
  int rising_edges = 0;
  std::optional<std::string> error;  // set when the run aborted; trajectory is partial
};

struct ExperimentConfig {
  double duration_s = 0.0;
  double control_rate_hz = 1000.0;
  double settle_s = 1.0;
  int plant_substeps = 10;
};

/// Closed loop: reference -> PI -> TSA plant -> sensor -> PI. The plant starts
/// at `initial` (typically just taut). Faults abort the run and are reported in
/// `error` rather than thrown.
ExperimentResult run_experiment(const ReferenceProfile& profile, const TsaParams& plant, const TsaState& initial,
                                PiController& controller, const ForceSensor& sensor,
                                const ExperimentConfig& cfg = {});

/// Number of transitions from below to at-or-above `level` in the reference trace.
int count_rising_edges(const std::vector<TrajectoryPoint>& trajectory, double level);

inline constexpr const char* kTrajectoryHeader = "time_s,reference_n,measured_n,command";

std::string trajectory_csv(const std::vector<TrajectoryPoint>& trajectory,
                           const std::vector<std::string>& preamble = {});

/// Gains tuned for the default plant at the default operating point.
PiGains default_gains();

/// Default plant with series stiffness taken from the elastomer model.
TsaParams default_plant(const elastomer::ElastomerModel& beam);

} // namespace tension::control
