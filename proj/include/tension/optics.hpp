#pragma once

#include <cstdint>
#include <random>

#include "tension/elastomer.hpp"

namespace tension::optics {

/// Photo-reflector voltage as a function of reflector gap.
///
/// The response is the unimodal curve
///   v(d) = v_peak * (d/d_peak)^2 * exp(2 * (1 - d/d_peak))
/// which is zero at d = 0 and peaks at d_peak. The operating window sits
/// entirely below d_peak so that voltage is monotone in gap.
struct PhotoReflectorModel {
  double v_peak = 3.0;          // V
  double d_peak = 0.55e-3;      // m
  double rest_gap = 0.4e-3;     // m, gap at zero tension
  double window_min = 0.2e-3;   // m
  double window_max = 0.5e-3;   // m
  int gap_sign = -1;            // tension closes the gap
  double temp_coeff = 0.35 / 80.0;  // V/degC
  double t_ref = 25.0;          // degC

  void validate() const;
};

struct NoiseModel {
  double sigma_v = 0.0;
  std::uint64_t seed = 0;
};

/// Zero-mean Gaussian voltage noise. Owns its generator; one owner at a time.
class NoiseSource {
public:
  explicit NoiseSource(const NoiseModel& model);

  double draw();
  double sigma() const noexcept { return sigma_; }

private:
  double sigma_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Elastomer plus reflector: everything between applied tension and analog voltage.
struct SensingChain {
  elastomer::ElastomerModel elastomer;
  PhotoReflectorModel reflector;
};

double response_voltage(double gap_m, const PhotoReflectorModel& model);

/// Gap after the elastomer stretches under `force_n`. Throws OutOfWindowError.
double gap_from_force(double force_n, const PhotoReflectorModel& model,
                      const elastomer::ElastomerModel& beam);

double apply_temperature(double voltage, double temperature_c, const PhotoReflectorModel& model);

/// Full chain including temperature drift and one noise draw (when `noise` is non-null).
/// Forces above the allowable limit are rejected with DomainError.
double sensor_voltage(double force_n, double temperature_c, const SensingChain& chain,
                      NoiseSource* noise);

/// Noise-free dV/dF at `force_n`, central difference.
double sensitivity(double force_n, const SensingChain& chain);

} // namespace tension::optics
