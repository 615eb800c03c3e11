#include "tension/optics.hpp"

#include <algorithm>
#include <cmath>

#include "tension/errors.hpp"
#include "tension/text.hpp"

namespace tension::optics {

void PhotoReflectorModel::validate() const {
  if (!(v_peak > 0.0)) throw DomainError("v_peak must be > 0");
  if (!(window_min > 0.0 && window_min < window_max)) {
    throw DomainError("operating window must satisfy 0 < d_min < d_max");
  }
  if (!(rest_gap >= window_min && rest_gap <= window_max)) {
    throw DomainError("rest gap must lie inside the operating window");
  }
  if (!(d_peak > window_max)) {
    throw DomainError("d_peak must exceed the window maximum so the window is on the rising branch");
  }
  if (gap_sign != 1 && gap_sign != -1) throw DomainError("gap_sign must be +1 or -1");
  if (!std::isfinite(temp_coeff) || !std::isfinite(t_ref)) {
    throw DomainError("temperature coefficients must be finite");
  }
}

NoiseSource::NoiseSource(const NoiseModel& model) : sigma_(model.sigma_v), engine_(model.seed) {
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw DomainError("noise sigma must be >= 0");
}

double NoiseSource::draw() {
  if (sigma_ == 0.0) return 0.0;
  return sigma_ * normal_(engine_);
}

double response_voltage(double gap_m, const PhotoReflectorModel& model) {
  if (!std::isfinite(gap_m) || gap_m < 0.0) {
    throw DomainError("gap must be finite and >= 0 (got " + text::format_double(gap_m) + ")");
  }
  const double x = gap_m / model.d_peak;
  return model.v_peak * x * x * std::exp(2.0 * (1.0 - x));
}

double gap_from_force(double force_n, const PhotoReflectorModel& model,
                      const elastomer::ElastomerModel& beam) {
  const double dx = beam.displacement(force_n).total_dx;
  const double gap = model.rest_gap + model.gap_sign * dx;
  if (gap < model.window_min || gap > model.window_max) throw OutOfWindowError(force_n, gap);
  return gap;
}

double apply_temperature(double voltage, double temperature_c, const PhotoReflectorModel& model) {
  return voltage + model.temp_coeff * (temperature_c - model.t_ref);
}

double sensor_voltage(double force_n, double temperature_c, const SensingChain& chain,
                      NoiseSource* noise) {
  if (elastomer::check_allowable(force_n) == elastomer::Allowable::overload) {
    throw DomainError("force " + text::format_double(force_n) + " N exceeds the allowable " +
                      text::format_double(elastomer::kAllowableForceN) + " N");
  }
  const double gap = gap_from_force(force_n, chain.reflector, chain.elastomer);
  double v = apply_temperature(response_voltage(gap, chain.reflector), temperature_c, chain.reflector);
  if (noise != nullptr) v += noise->draw();
  return v;
}

double sensitivity(double force_n, const SensingChain& chain) {
  const double h = 0.5;
  const double lo = std::max(0.0, force_n - h);
  const double hi = force_n + h;
  const double t = chain.reflector.t_ref;
  return (sensor_voltage(hi, t, chain, nullptr) - sensor_voltage(lo, t, chain, nullptr)) / (hi - lo);
}

} // namespace tension::optics
