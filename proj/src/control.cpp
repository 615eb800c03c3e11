#include "tension/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tension/errors.hpp"
#include "tension/text.hpp"

namespace tension::control {

double tsa_contraction(double theta_rad, double untwisted_length_m, double string_radius_m) {
  if (!(untwisted_length_m > 0.0) || !(string_radius_m > 0.0)) {
    throw DomainError("TSA string length and radius must be > 0");
  }
  if (!std::isfinite(theta_rad)) throw DomainError("TSA angle must be finite");
  const double twist = std::abs(string_radius_m * theta_rad);
  if (twist >= untwisted_length_m) {
    throw KinematicLimitError("TSA kinematic limit: |r*theta| = " + text::format_double(twist) +
                              " m reaches the string length " + text::format_double(untwisted_length_m) + " m");
  }
  const double root = std::sqrt(untwisted_length_m * untwisted_length_m - twist * twist);
  // L0 - root, rearranged to avoid cancellation at small twist
  return twist * twist / (untwisted_length_m + root);
}

void TsaParams::validate() const {
  if (!(untwisted_length > 0.0) || !(string_radius > 0.0)) throw DomainError("TSA geometry must be > 0");
  if (!(motor_tau > 0.0)) throw DomainError("motor time constant must be > 0");
  if (!(max_speed > 0.0)) throw DomainError("motor max speed must be > 0");
  if (!(series_stiffness > 0.0)) throw DomainError("series stiffness must be > 0");
  if (!(slack_offset >= 0.0) || slack_offset >= untwisted_length) {
    throw DomainError("slack offset must lie in [0, L0)");
  }
}

double TsaParams::taut_angle() const {
  const double remaining = untwisted_length - slack_offset;
  return std::sqrt(untwisted_length * untwisted_length - remaining * remaining) / string_radius;
}

TsaState plant_step(const TsaParams& plant, const TsaState& state, double command, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("plant step needs dt > 0");
  const double u = std::clamp(std::isfinite(command) ? command : 0.0, -1.0, 1.0);
  const double target = u * plant.max_speed;
  const double decay = std::exp(-dt / plant.motor_tau);

  TsaState next;
  next.omega = target + (state.omega - target) * decay;
  next.theta = state.theta + target * dt + (state.omega - target) * plant.motor_tau * (1.0 - decay);
  const double x = tsa_contraction(next.theta, plant.untwisted_length, plant.string_radius);
  next.tension = plant.series_stiffness * std::max(0.0, x - plant.slack_offset);
  return next;
}

// --- PI --------------------------------------------------------------------

PiController::PiController(const PiGains& gains) : gains_(gains) {
  if (!(gains_.dt > 0.0)) throw DomainError("controller dt must be > 0");
  if (!(gains_.u_min < gains_.u_max)) throw DomainError("controller limits must satisfy u_min < u_max");
}

double PiController::step(double reference_n, double measured_n) {
  const double e = reference_n - measured_n;
  const double candidate = integrator_ + e * gains_.dt;
  const double unsat = gains_.kp * e + gains_.ki * candidate;
  const bool deepens = (unsat > gains_.u_max && e > 0.0) || (unsat < gains_.u_min && e < 0.0);
  if (!(gains_.anti_windup && deepens)) integrator_ = candidate;
  if (gains_.anti_windup && gains_.ki > 0.0) {
    const double bound = (gains_.u_max - gains_.u_min) / gains_.ki;
    integrator_ = std::clamp(integrator_, -bound, bound);
  }
  return std::clamp(gains_.kp * e + gains_.ki * integrator_, gains_.u_min, gains_.u_max);
}

double pi_step(PiController& controller, double reference_n, double measured_n) {
  return controller.step(reference_n, measured_n);
}

// --- profiles --------------------------------------------------------------

ReferenceProfile ReferenceProfile::staircase() {
  ReferenceProfile p;
  p.kind = ProfileKind::staircase;
  return p;
}

ReferenceProfile ReferenceProfile::repeated_step() {
  ReferenceProfile p;
  p.kind = ProfileKind::repeated_step;
  return p;
}

ReferenceProfile ReferenceProfile::rectified_sine() {
  ReferenceProfile p;
  p.kind = ProfileKind::rectified_sine;
  return p;
}

double ReferenceProfile::default_duration() const {
  switch (kind) {
    case ProfileKind::staircase: return dwell_s * static_cast<double>(levels.size());
    case ProfileKind::repeated_step: return trial_period_s * trials;
    case ProfileKind::rectified_sine: return sine_duration_s;
  }
  return 0.0;
}

void ReferenceProfile::validate() const {
  switch (kind) {
    case ProfileKind::staircase:
      if (levels.empty()) throw InputError("staircase needs at least one level");
      for (double l : levels) {
        if (!(l >= 0.0)) throw InputError("staircase levels must be >= 0");
      }
      if (!(dwell_s > 0.0)) throw InputError("staircase dwell must be > 0");
      break;
    case ProfileKind::repeated_step:
      if (!(step_amplitude >= 0.0) || trials < 0 || !(trial_period_s > 0.0)) {
        throw InputError("repeated step needs amplitude >= 0, trials >= 0, period > 0");
      }
      break;
    case ProfileKind::rectified_sine:
      if (!(sine_amplitude >= 0.0) || !(sine_frequency_hz > 0.0) || !(sine_duration_s >= 0.0)) {
        throw InputError("rectified sine needs amplitude >= 0 and frequency > 0");
      }
      break;
  }
}

ProfileKind parse_profile_kind(const std::string& name) {
  if (name == "staircase") return ProfileKind::staircase;
  if (name == "repeated-step" || name == "repeated_step") return ProfileKind::repeated_step;
  if (name == "rectified-sine" || name == "rectified_sine") return ProfileKind::rectified_sine;
  throw InputError("unknown profile '" + name + "' (staircase, repeated-step, rectified-sine)");
}

const char* to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::staircase: return "staircase";
    case ProfileKind::repeated_step: return "repeated-step";
    case ProfileKind::rectified_sine: return "rectified-sine";
  }
  return "unknown";
}

double make_reference(const ReferenceProfile& profile, double t_s) {
  if (t_s < 0.0) return 0.0;
  switch (profile.kind) {
    case ProfileKind::staircase: {
      const auto idx = static_cast<std::size_t>(std::floor(t_s / profile.dwell_s));
      return profile.levels[std::min(idx, profile.levels.size() - 1)];
    }
    case ProfileKind::repeated_step: {
      const double k = std::floor(t_s / profile.trial_period_s);
      if (k >= profile.trials) return 0.0;
      const double phase = t_s - k * profile.trial_period_s;
      return phase >= profile.trial_period_s / 2.0 ? profile.step_amplitude : 0.0;
    }
    case ProfileKind::rectified_sine:
      return profile.sine_amplitude * std::abs(std::sin(2.0 * std::numbers::pi * profile.sine_frequency_hz * t_s));
  }
  return 0.0;
}

std::vector<Segment> profile_segments(const ReferenceProfile& profile, double duration_s) {
  std::vector<Segment> raw;
  switch (profile.kind) {
    case ProfileKind::staircase:
      for (std::size_t k = 0; k < profile.levels.size(); ++k) {
        const bool last = k + 1 == profile.levels.size();
        raw.push_back(Segment{static_cast<double>(k) * profile.dwell_s,
                              last ? std::max(duration_s, static_cast<double>(k + 1) * profile.dwell_s)
                                   : static_cast<double>(k + 1) * profile.dwell_s,
                              profile.levels[k]});
      }
      break;
    case ProfileKind::repeated_step: {
      const double half = profile.trial_period_s / 2.0;
      for (int k = 0; k < profile.trials; ++k) {
        const double t0 = k * profile.trial_period_s;
        raw.push_back(Segment{t0, t0 + half, 0.0});
        raw.push_back(Segment{t0 + half, t0 + profile.trial_period_s, profile.step_amplitude});
      }
      const double tail = profile.trials * profile.trial_period_s;
      if (duration_s > tail) raw.push_back(Segment{tail, duration_s, 0.0});
      break;
    }
    case ProfileKind::rectified_sine:
      break;
  }
  std::vector<Segment> out;
  for (auto s : raw) {
    if (s.start_s >= duration_s) break;
    s.end_s = std::min(s.end_s, duration_s);
    out.push_back(s);
  }
  return out;
}

// --- sensors ---------------------------------------------------------------

ForceSensor ideal_sensor() {
  return [](double tension_n) { return tension_n; };
}

ForceSensor simulated_sensor(const optics::SensingChain& chain, const daq::AdcConfig& adc,
                             const calibration::CalibrationPoly& poly, optics::NoiseSource& noise,
                             double temperature_c) {
  return [chain, adc, poly, noise = &noise, temperature_c](double tension_n) {
    const double v = optics::sensor_voltage(tension_n, temperature_c, chain, noise);
    const double decoded = daq::counts_to_voltage(daq::quantize(v, adc), adc);
    return std::max(0.0, calibration::apply_poly(poly, decoded).force_n);
  };
}

// --- experiment ------------------------------------------------------------

int count_rising_edges(const std::vector<TrajectoryPoint>& trajectory, double level) {
  int edges = 0;
  double prev = 0.0;
  for (const auto& p : trajectory) {
    if (prev < level && p.reference_n >= level) ++edges;
    prev = p.reference_n;
  }
  return edges;
}

ExperimentResult run_experiment(const ReferenceProfile& profile, const TsaParams& plant, const TsaState& initial,
                                PiController& controller, const ForceSensor& sensor,
                                const ExperimentConfig& cfg) {
  profile.validate();
  plant.validate();
  if (!(cfg.control_rate_hz > 0.0)) throw InputError("control rate must be > 0");
  if (cfg.control_rate_hz > daq::kMaxSampleRateHz) {
    throw RateLimitError("control rate " + text::format_double(cfg.control_rate_hz) +
                         " Hz exceeds the 5 kHz sensing rate");
  }
  const double dt = 1.0 / cfg.control_rate_hz;
  if (std::abs(controller.gains().dt - dt) > 1e-12) {
    throw InputError("controller dt does not match the control rate");
  }
  if (!(cfg.duration_s >= 0.0)) throw InputError("duration must be >= 0");
  const int substeps = std::max(1, cfg.plant_substeps);

  ExperimentResult result;
  const auto ticks = static_cast<std::size_t>(std::ceil(cfg.duration_s * cfg.control_rate_hz - 1e-9));
  result.trajectory.reserve(ticks);

  TsaState state = initial;
  try {
    const double x0 = tsa_contraction(state.theta, plant.untwisted_length, plant.string_radius);
    state.tension = plant.series_stiffness * std::max(0.0, x0 - plant.slack_offset);
    for (std::size_t i = 0; i < ticks; ++i) {
      const double t = static_cast<double>(i) * dt;
      const double ref = make_reference(profile, t);
      const double measured = sensor(state.tension);
      const double u = controller.step(ref, measured);
      result.trajectory.push_back(TrajectoryPoint{t, ref, measured, u, state.tension});
      for (int s = 0; s < substeps; ++s) state = plant_step(plant, state, u, dt / substeps);
    }
  } catch (const DomainError& e) {
    result.error = e.what();
  }

  if (!result.trajectory.empty()) {
    double ss = 0.0;
    for (const auto& p : result.trajectory) ss += (p.reference_n - p.measured_n) * (p.reference_n - p.measured_n);
    result.rmse = std::sqrt(ss / static_cast<double>(result.trajectory.size()));
  }

  for (const auto& seg : profile_segments(profile, cfg.duration_s)) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : result.trajectory) {
      if (p.t_s >= seg.start_s + cfg.settle_s && p.t_s < seg.end_s) {
        sum += p.reference_n - p.measured_n;
        ++n;
      }
    }
    result.segments.push_back(SegmentError{seg, n > 0 ? std::optional<double>(sum / static_cast<double>(n))
                                                      : std::nullopt});
  }
  const double edge_level = profile.kind == ProfileKind::repeated_step ? profile.step_amplitude
                          : profile.kind == ProfileKind::staircase    ? profile.levels.back()
                                                                      : profile.sine_amplitude;
  result.rising_edges = count_rising_edges(result.trajectory, edge_level);
  return result;
}

std::string trajectory_csv(const std::vector<TrajectoryPoint>& trajectory, const std::vector<std::string>& preamble) {
  std::string out;
  for (const auto& line : preamble) out += "# " + line + "\n";
  out += kTrajectoryHeader;
  out += '\n';
  for (const auto& p : trajectory) {
    out += text::format_double(p.t_s);
    out += ',';
    out += text::format_double(p.reference_n);
    out += ',';
    out += text::format_double(p.measured_n);
    out += ',';
    out += text::format_double(p.command);
    out += '\n';
  }
  return out;
}

PiGains default_gains() {
  PiGains g;
  g.kp = 5.0e-4;
  g.ki = 5.0e-3;
  g.dt = 1e-3;
  return g;
}

TsaParams default_plant(const elastomer::ElastomerModel& beam) {
  TsaParams p;
  p.series_stiffness = beam.stiffness();
  return p;
}

} // namespace tension::control
