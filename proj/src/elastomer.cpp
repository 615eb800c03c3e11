#include "tension/elastomer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tension/errors.hpp"
#include "tension/text.hpp"

namespace tension::elastomer {

namespace {

void require_positive(double v, const char* name) {
  if (!(std::isfinite(v) && v > 0.0)) {
    throw DomainError(std::string(name) + " must be finite and > 0 (got " + text::format_double(v) + ")");
  }
}

void require_force(double force_n) {
  if (!std::isfinite(force_n) || force_n < 0.0) {
    throw DomainError("force must be finite and >= 0 N (got " + text::format_double(force_n) + ")");
  }
}

// Compliance term a*(a/(E*I) + 1/(ks*G*A)) shared by both lever beams.
double lever_term(double a, double I, double A, const Material& mat) {
  return a * (a / (mat.elastic_modulus * I) + 1.0 / (mat.shear_coefficient * mat.shear_modulus * A));
}

} // namespace

void Material::validate() const {
  require_positive(elastic_modulus, "elastic_modulus");
  require_positive(shear_modulus, "shear_modulus");
  if (!(shear_coefficient > 0.0 && shear_coefficient <= 1.0)) {
    throw DomainError("shear_coefficient must lie in (0, 1]");
  }
}

void ElastomerGeometry::validate() const {
  require_positive(l1, "l1");
  require_positive(l2, "l2");
  require_positive(l3, "l3");
  require_positive(l4, "l4");
  require_positive(t1, "t1");
  require_positive(t2, "t2");
  require_positive(t3, "t3");
  require_positive(a1, "a1");
  require_positive(a2, "a2");
  require_positive(b1, "b1");
  require_positive(area1(), "A1");
  require_positive(area2(), "A2");
  require_positive(area3(), "A3");
  require_positive(area4(), "A4");
}

SectionProperties SectionProperties::derive(const ElastomerGeometry& geom) {
  SectionProperties sec;
  sec.I1 = geom.b1 * geom.t1 * geom.t1 * geom.t1 / 12.0;
  sec.I2 = geom.b1 * geom.t2 * geom.t2 * geom.t2 / 12.0;
  sec.A5 = geom.b1 * geom.t1;
  sec.A6 = geom.b1 * geom.t2;
  sec.source = SectionSource::derived;
  return sec;
}

void SectionProperties::validate() const {
  require_positive(I1, "I1");
  require_positive(I2, "I2");
  require_positive(A5, "A5");
  require_positive(A6, "A6");
}

ElastomerModel ElastomerModel::from_geometry(const ElastomerGeometry& geom, const Material& mat) {
  return ElastomerModel{geom, SectionProperties::derive(geom), mat};
}

DeflectionBreakdown ElastomerModel::displacement(double force_n) const {
  return total_displacement(force_n, geometry, section, material);
}

double ElastomerModel::stiffness() const {
  return elastomer::stiffness(geometry, section, material);
}

AxialDeflections axial_deflections(double force_n, const ElastomerGeometry& geom, const Material& mat) {
  require_force(force_n);
  geom.validate();
  mat.validate();
  const double e = mat.elastic_modulus;
  return AxialDeflections{
      force_n * geom.l1 / (e * geom.area1()),
      force_n * geom.l2 / (e * geom.area2()),
      force_n * geom.l3 / (e * geom.area3()),
      force_n * geom.l4 / (e * geom.area4()),
  };
}

ShearDeflections shear_deflections(double force_n, const ElastomerGeometry& geom,
                                   const SectionProperties& sec, const Material& mat) {
  require_force(force_n);
  geom.validate();
  sec.validate();
  mat.validate();

  const double inner = lever_term(geom.a1, sec.I1, sec.A5, mat);
  const double outer = lever_term(geom.a2, sec.I2, sec.A6, mat);

  ShearDeflections out;
  out.d5 = force_n * geom.a1 * inner;
  const double d6 = force_n * geom.a2 * (outer - inner);
  if (d6 < 0.0) {
    std::ostringstream os;
    os << "d6 bracket negative (raw d6 = " << d6 << " m); clamped to 0";
    out.diagnostic = os.str();
    out.d6 = 0.0;
  } else {
    out.d6 = d6;
  }
  return out;
}

DeflectionBreakdown total_displacement(double force_n, const ElastomerGeometry& geom,
                                       const SectionProperties& sec, const Material& mat) {
  const AxialDeflections ax = axial_deflections(force_n, geom, mat);
  ShearDeflections sh = shear_deflections(force_n, geom, sec, mat);

  DeflectionBreakdown b;
  b.d1 = ax.d1;
  b.d2 = ax.d2;
  b.d3 = ax.d3;
  b.d4 = ax.d4;
  b.d5 = sh.d5;
  b.d6 = sh.d6;
  b.half_dx = b.d1 + b.d2 + b.d3 + b.d4 + b.d5 + b.d6;
  b.total_dx = 2.0 * b.half_dx;
  b.diagnostic = std::move(sh.diagnostic);
  return b;
}

double stiffness(const ElastomerGeometry& geom, const SectionProperties& sec, const Material& mat) {
  const double dx = total_displacement(1.0, geom, sec, mat).total_dx;
  if (!(dx > 0.0) || !std::isfinite(dx)) {
    throw DomainError("degenerate elastomer: zero deflection under load");
  }
  return 1.0 / dx;
}

Allowable check_allowable(double force_n) {
  return force_n <= kAllowableForceN ? Allowable::within_limit : Allowable::overload;
}

// --- sweeps ----------------------------------------------------------------

std::vector<double> ParamRange::values() const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) {
    throw InputError("sweep range for " + name + " is not finite");
  }
  if (hi < lo) throw InputError("sweep range for " + name + " has hi < lo");
  if (step <= 0.0) {
    if (hi == lo) return {lo};
    throw InputError("sweep range for " + name + " needs a positive step");
  }
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

double& geometry_field(ElastomerGeometry& geom, const std::string& name) {
  if (name == "l1") return geom.l1;
  if (name == "l2") return geom.l2;
  if (name == "l3") return geom.l3;
  if (name == "l4") return geom.l4;
  if (name == "t1") return geom.t1;
  if (name == "t2") return geom.t2;
  if (name == "t3") return geom.t3;
  if (name == "a1") return geom.a1;
  if (name == "a2") return geom.a2;
  if (name == "b1") return geom.b1;
  throw InputError("unknown geometry parameter '" + name + "'");
}

namespace {

double parse_length(std::string_view s) {
  s = text::trim(s);
  double scale = 1.0;
  if (s.ends_with("mm")) {
    scale = 1e-3;
    s.remove_suffix(2);
  } else if (s.ends_with("um")) {
    scale = 1e-6;
    s.remove_suffix(2);
  } else if (s.ends_with("m")) {
    s.remove_suffix(1);
  }
  auto v = text::parse_double(s);
  if (!v) throw InputError("bad length '" + std::string(s) + "'");
  return *v * scale;
}

} // namespace

ParamRange parse_param_range(const std::string& spec_text) {
  const auto eq = spec_text.find('=');
  if (eq == std::string::npos) throw InputError("expected name=lo:hi:step, got '" + spec_text + "'");
  ParamRange r;
  r.name = std::string(text::trim(std::string_view(spec_text).substr(0, eq)));
  ElastomerGeometry probe;
  (void)geometry_field(probe, r.name);
  const auto parts = text::split(std::string_view(spec_text).substr(eq + 1), ':');
  if (parts.size() != 3) throw InputError("expected name=lo:hi:step, got '" + spec_text + "'");
  r.lo = parse_length(parts[0]);
  r.hi = parse_length(parts[1]);
  r.step = parse_length(parts[2]);
  (void)r.values();
  return r;
}

SweepResult sweep_geometry(const ElastomerGeometry& base, const std::vector<ParamRange>& ranges,
                           double force_n, const Material& mat,
                           const std::optional<SectionProperties>& section_override) {
  require_force(force_n);
  mat.validate();

  std::vector<std::vector<double>> grids;
  grids.reserve(ranges.size());
  for (const auto& r : ranges) {
    ElastomerGeometry probe;
    (void)geometry_field(probe, r.name);
    grids.push_back(r.values());
  }

  SweepResult result;
  std::vector<std::size_t> index(ranges.size(), 0);
  while (true) {
    ElastomerGeometry geom = base;
    std::string label;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      const double v = grids[i][index[i]];
      geometry_field(geom, ranges[i].name) = v;
      if (!label.empty()) label += ';';
      label += ranges[i].name + "=" + text::format_double(v);
    }
    if (label.empty()) label = "base";

    try {
      const SectionProperties sec = section_override.value_or(SectionProperties::derive(geom));
      const DeflectionBreakdown b = total_displacement(force_n, geom, sec, mat);
      result.records.push_back(SweepRecord{label, geom, b.half_dx, stiffness(geom, sec, mat),
                                           check_allowable(force_n)});
    } catch (const DomainError& e) {
      result.skipped.push_back(SkippedPoint{label, e.what()});
    }

    // odometer increment, last range fastest
    std::size_t k = ranges.size();
    while (k > 0) {
      --k;
      if (++index[k] < grids[k].size()) break;
      index[k] = 0;
      if (k == 0) {
        k = ranges.size() + 1;
        break;
      }
    }
    if (ranges.empty() || k == ranges.size() + 1) break;
  }

  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const SweepRecord& a, const SweepRecord& b) { return a.half_dx > b.half_dx; });
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "param_values,half_dx_m,stiffness_n_per_m,allowable\n";
  for (const auto& r : result.records) {
    out += r.param_values;
    out += ',';
    out += text::format_double(r.half_dx);
    out += ',';
    out += text::format_double(r.stiffness);
    out += ',';
    out += r.allowable == Allowable::within_limit ? "within_limit" : "overload";
    out += '\n';
  }
  return out;
}

} // namespace tension::elastomer
