#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tension::elastomer {

/// Linear-elastic isotropic material. Defaults are AL7075-T6.
struct Material {
  double elastic_modulus = 71.7e9;  // Pa
  double shear_modulus = 26.9e9;    // Pa
  double shear_coefficient = 5.0 / 6.0;

  void validate() const;
};

/// Half-model dimensions of the symmetric elastomer, all in meters.
///
/// The defaults are the machined part. `a2` has no drawing value; the default
/// is the lever arm that makes the sharp-corner model reproduce the measured
/// 0.04753 mm half-displacement at 200 N (see tests/acceptance_main.cpp).
struct ElastomerGeometry {
  double l1 = 2.0e-3;
  double l2 = 1.5e-3;
  double l3 = 1.4e-3;
  double l4 = 1.6e-3;
  double t1 = 2.0e-3;
  double t2 = 1.9e-3;
  double t3 = 2.5e-3;
  double a1 = 2.55e-3;
  double a2 = 3.144e-3;
  double b1 = 3.0e-3;

  double area1() const { return b1 * t1; }
  double area2() const { return b1 * (t1 + t3); }
  double area3() const { return b1 * t2; }
  double area4() const { return b1 * (t1 / 2.0 + t3); }

  void validate() const;
};

enum class SectionSource { derived, overridden };

/// Bending and shear section constants of the two lever beams.
struct SectionProperties {
  double I1 = 0.0;  // m^4
  double I2 = 0.0;  // m^4
  double A5 = 0.0;  // m^2
  double A6 = 0.0;  // m^2
  SectionSource source = SectionSource::derived;

  /// Rectangular-section values: I = b1*t^3/12, shear area = b1*t.
  static SectionProperties derive(const ElastomerGeometry& geom);

  void validate() const;
};

struct AxialDeflections {
  double d1 = 0.0, d2 = 0.0, d3 = 0.0, d4 = 0.0;
};

struct ShearDeflections {
  double d5 = 0.0;
  double d6 = 0.0;
  /// Set when the raw d6 bracket was negative and d6 was clamped to zero.
  std::optional<std::string> diagnostic;
};

struct DeflectionBreakdown {
  double d1 = 0.0, d2 = 0.0, d3 = 0.0, d4 = 0.0, d5 = 0.0, d6 = 0.0;
  double total_dx = 0.0;  // both halves
  double half_dx = 0.0;
  std::optional<std::string> diagnostic;
};

/// Model inputs bundled for callers that evaluate the beam repeatedly.
struct ElastomerModel {
  ElastomerGeometry geometry;
  SectionProperties section = SectionProperties::derive(ElastomerGeometry{});
  Material material;

  /// Geometry with section properties re-derived from it.
  static ElastomerModel from_geometry(const ElastomerGeometry& geom, const Material& mat = {});

  DeflectionBreakdown displacement(double force_n) const;
  double stiffness() const;
};

/// Largest force the elastomer withstands before yield.
inline constexpr double kAllowableForceN = 207.26;
/// Rated force of the sensor.
inline constexpr double kRatedForceN = 200.0;

AxialDeflections axial_deflections(double force_n, const ElastomerGeometry& geom, const Material& mat);

ShearDeflections shear_deflections(double force_n, const ElastomerGeometry& geom,
                                   const SectionProperties& sec, const Material& mat);

DeflectionBreakdown total_displacement(double force_n, const ElastomerGeometry& geom,
                                       const SectionProperties& sec, const Material& mat);

/// Axial stiffness F / total_dx in N/m.
double stiffness(const ElastomerGeometry& geom, const SectionProperties& sec, const Material& mat);

enum class Allowable { within_limit, overload };

Allowable check_allowable(double force_n);

// --- geometry sweeps -------------------------------------------------------

/// Inclusive grid lo, lo+step, ... <= hi over one geometry field.
struct ParamRange {
  std::string name;  // l1..l4, t1..t3, a1, a2, b1
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;

  std::vector<double> values() const;
};

struct SweepRecord {
  std::string param_values;  // "b1=0.002;l1=0.0015", or "base"
  ElastomerGeometry geometry;
  double half_dx = 0.0;
  double stiffness = 0.0;
  Allowable allowable = Allowable::within_limit;
};

struct SkippedPoint {
  std::string param_values;
  std::string reason;
};

struct SweepResult {
  std::vector<SweepRecord> records;  // sorted by half_dx, largest first
  std::vector<SkippedPoint> skipped;
};

/// Cartesian sweep over `ranges`. Section properties are re-derived per grid
/// point unless `section_override` is given.
SweepResult sweep_geometry(const ElastomerGeometry& base, const std::vector<ParamRange>& ranges,
                           double force_n, const Material& mat,
                           const std::optional<SectionProperties>& section_override = std::nullopt);

/// Mutable access to a geometry field by its symbol; throws InputError on unknown names.
double& geometry_field(ElastomerGeometry& geom, const std::string& name);

/// Parse "b1=2mm:4mm:0.5mm" (units m, mm, um; bare numbers are meters).
ParamRange parse_param_range(const std::string& text);

std::string sweep_csv(const SweepResult& result);

} // namespace tension::elastomer
