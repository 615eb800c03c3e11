#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tension::calibration {

/// Voltage -> force polynomial, coefficients in ascending power (N / V^k).
struct CalibrationPoly {
  std::vector<double> coefficients;
  double fit_min_v = 0.0;
  double fit_max_v = 0.0;
  double residual_rmse = 0.0;

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }

  /// True when the derivative never changes sign over [fit_min_v, fit_max_v].
  bool monotone_over_fit_range() const;
};

struct ForceEstimate {
  double force_n = 0.0;
  bool extrapolated = false;
};

struct CalibrationPair {
  double voltage = 0.0;
  double force_n = 0.0;
};

/// Least-squares fit of force against voltage. Voltages are centered and
/// scaled to [-1, 1] before solving; coefficients are mapped back to volts.
CalibrationPoly fit_poly(std::span<const CalibrationPair> pairs, int degree = 3);

ForceEstimate apply_poly(const CalibrationPoly& poly, double voltage);

/// Horner evaluation without the range check.
double evaluate(std::span<const double> coefficients, double x);

double rmse(std::span<const double> predicted, std::span<const double> truth);

/// (reference, measured) pair on a loading or unloading curve.
struct CurvePoint {
  double reference_n = 0.0;
  double measured_n = 0.0;
};

inline constexpr double kPercentFullScaleN = 200.0;
inline constexpr double kStepFullScaleN = 207.26;
/// Upper end of the calibration sweep.
inline constexpr double kCalibrationSpanN = 70.0;

/// Max deviation of measured from its own least-squares line, % of full scale.
double nonlinearity(std::span<const CurvePoint> loading, double full_scale_n = kPercentFullScaleN);

/// Max |up - down| at equal reference force over the overlapping range, % of full scale.
/// Both curves are linearly interpolated onto the union of their reference points.
double hysteresis(std::span<const CurvePoint> loading, std::span<const CurvePoint> unloading,
                  double full_scale_n = kPercentFullScaleN);

struct Resolution {
  double resolution_n = 0.0;  // sample standard deviation
  long long steps = 0;
};

Resolution resolution(std::span<const double> stationary_force, double full_scale_n = kStepFullScaleN);

struct LoadingCurves {
  std::vector<CurvePoint> loading;    // ascending reference
  std::vector<CurvePoint> unloading;  // ascending reference
};

/// Splits a single up-then-down sweep at its peak reference and averages each
/// branch into bins of width `bin_n`. Empty bins are dropped.
LoadingCurves bin_sweep(std::span<const double> reference_n, std::span<const double> measured_n,
                        double bin_n = 1.0);

struct MetricsReport {
  double rmse = 0.0;
  double nonlinearity_pct = 0.0;
  double hysteresis_pct = 0.0;
  std::optional<double> resolution;  // N
  std::optional<long long> resolution_steps;
  double full_scale = kStepFullScaleN;           // step count basis
  double percent_full_scale = kPercentFullScaleN;  // % metrics basis
  double sample_rate_hz = 0.0;
};

std::string to_json(const CalibrationPoly& poly);
CalibrationPoly poly_from_json(const std::string& json_text);

/// `config` is echoed verbatim as an object of key/value strings.
std::string to_json(const MetricsReport& report,
                    const std::vector<std::pair<std::string, std::string>>& config = {});

/// Human-readable summary laid out like a calibration results table.
std::string summary_table(const MetricsReport& report);

} // namespace tension::calibration
