#include "tension/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "json.hpp"
#include "tension/errors.hpp"

namespace tension::calibration {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<double> derivative(std::span<const double> c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  return d;
}

struct Line {
  double intercept = 0.0;
  double slope = 0.0;
};

Line least_squares_line(std::span<const CurvePoint> pts) {
  const double n = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.reference_n;
    my += p.measured_n;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sxx += (p.reference_n - mx) * (p.reference_n - mx);
    sxy += (p.reference_n - mx) * (p.measured_n - my);
  }
  const double slope = sxy / sxx;
  return Line{my - slope * mx, slope};
}

std::vector<CurvePoint> sorted_by_reference(std::span<const CurvePoint> pts) {
  std::vector<CurvePoint> out(pts.begin(), pts.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.reference_n < b.reference_n; });
  return out;
}

double interpolate(const std::vector<CurvePoint>& curve, double x) {
  auto it = std::lower_bound(curve.begin(), curve.end(), x,
                             [](const CurvePoint& p, double v) { return p.reference_n < v; });
  if (it == curve.end()) return curve.back().measured_n;
  if (it->reference_n == x || it == curve.begin()) return it->measured_n;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (x - lo.reference_n) / (hi.reference_n - lo.reference_n);
  return lo.measured_n + w * (hi.measured_n - lo.measured_n);
}

void require_finite(std::span<const CurvePoint> pts, const char* what) {
  for (const auto& p : pts) {
    if (!std::isfinite(p.reference_n) || !std::isfinite(p.measured_n)) {
      throw InputError(std::string(what) + " contains non-finite values");
    }
  }
}

} // namespace

double evaluate(std::span<const double> coefficients, double x) {
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * x + *it;
  return acc;
}

bool CalibrationPoly::monotone_over_fit_range() const {
  const auto d = derivative(coefficients);
  if (d.empty()) return true;
  std::vector<double> probes{fit_min_v, fit_max_v};
  if (d.size() == 2 && d[1] != 0.0) {
    probes.push_back(-d[0] / d[1]);
  } else if (d.size() == 3 && d[2] != 0.0) {
    probes.push_back(-d[1] / (2.0 * d[2]));  // extremum of the derivative
  } else if (d.size() > 3) {
    for (int i = 1; i < 1000; ++i) probes.push_back(fit_min_v + (fit_max_v - fit_min_v) * i / 1000.0);
  }
  bool pos = false, neg = false;
  for (double v : probes) {
    if (v < fit_min_v || v > fit_max_v) continue;
    const double s = evaluate(d, v);
    pos = pos || s > 0.0;
    neg = neg || s < 0.0;
  }
  return !(pos && neg);
}

CalibrationPoly fit_poly(std::span<const CalibrationPair> pairs, int degree) {
  if (degree < 0) throw InputError("degree must be >= 0");
  std::set<double> distinct;
  for (const auto& p : pairs) {
    if (!std::isfinite(p.voltage) || !std::isfinite(p.force_n)) throw InputError("calibration pairs must be finite");
    distinct.insert(p.voltage);
  }
  const auto terms = static_cast<std::size_t>(degree) + 1;
  if (distinct.size() < terms) {
    throw InputError("degree " + std::to_string(degree) + " fit needs at least " + std::to_string(terms) +
                     " distinct voltages (got " + std::to_string(distinct.size()) + ")");
  }

  const double vmin = *distinct.begin();
  const double vmax = *distinct.rbegin();
  double mean = 0.0;
  for (const auto& p : pairs) mean += p.voltage;
  mean /= static_cast<double>(pairs.size());
  const double scale = degree == 0 ? 1.0 : std::max((vmax - vmin) / 2.0, 1e-300);

  Eigen::MatrixXd a(pairs.size(), terms);
  Eigen::VectorXd b(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double u = (pairs[i].voltage - mean) / scale;
    double pw = 1.0;
    for (std::size_t k = 0; k < terms; ++k) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pw;
      pw *= u;
    }
    b(static_cast<Eigen::Index>(i)) = pairs[i].force_n;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < static_cast<Eigen::Index>(terms)) {
    throw FitError("calibration system is rank deficient (rank " + std::to_string(qr.rank()) + ")");
  }
  const Eigen::VectorXd scaled = qr.solve(b);
  if (!scaled.allFinite()) throw FitError("calibration solve produced non-finite coefficients");

  // p(v) = sum_j s_j ((v - m)/h)^j, expanded into powers of v
  CalibrationPoly poly;
  poly.coefficients.assign(terms, 0.0);
  for (std::size_t j = 0; j < terms; ++j) {
    const double sj = scaled(static_cast<Eigen::Index>(j)) / std::pow(scale, static_cast<double>(j));
    for (std::size_t k = 0; k <= j; ++k) {
      poly.coefficients[k] += sj * binomial(static_cast<int>(j), static_cast<int>(k)) *
                              std::pow(-mean, static_cast<double>(j - k));
    }
  }
  poly.fit_min_v = vmin;
  poly.fit_max_v = vmax;

  double ss = 0.0;
  for (const auto& p : pairs) {
    const double r = evaluate(poly.coefficients, p.voltage) - p.force_n;
    ss += r * r;
  }
  poly.residual_rmse = std::sqrt(ss / static_cast<double>(pairs.size()));
  return poly;
}

ForceEstimate apply_poly(const CalibrationPoly& poly, double voltage) {
  return ForceEstimate{evaluate(poly.coefficients, voltage),
                       voltage < poly.fit_min_v || voltage > poly.fit_max_v};
}

double rmse(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) {
    throw InputError("rmse: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                     std::to_string(truth.size()) + ")");
  }
  if (predicted.empty()) throw InputError("rmse: empty series");
  double ss = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - truth[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(predicted.size()));
}

double nonlinearity(std::span<const CurvePoint> loading, double full_scale_n) {
  if (loading.size() < 2) throw InputError("nonlinearity needs at least 2 points");
  if (!(full_scale_n > 0.0)) throw InputError("full scale must be > 0");
  require_finite(loading, "loading curve");
  for (std::size_t i = 1; i < loading.size(); ++i) {
    if (loading[i].reference_n < loading[i - 1].reference_n) {
      throw InputError("loading curve must be ordered by reference force");
    }
  }
  if (loading.front().reference_n == loading.back().reference_n) {
    throw DegenerateInputError("loading curve spans a single reference force");
  }
  const Line line = least_squares_line(loading);
  double worst = 0.0;
  for (const auto& p : loading) {
    worst = std::max(worst, std::abs(p.measured_n - (line.intercept + line.slope * p.reference_n)));
  }
  return worst / full_scale_n * 100.0;
}

double hysteresis(std::span<const CurvePoint> loading, std::span<const CurvePoint> unloading,
                  double full_scale_n) {
  if (loading.empty() || unloading.empty()) throw InputError("hysteresis needs both curves");
  if (!(full_scale_n > 0.0)) throw InputError("full scale must be > 0");
  require_finite(loading, "loading curve");
  require_finite(unloading, "unloading curve");
  const auto up = sorted_by_reference(loading);
  const auto down = sorted_by_reference(unloading);
  const double lo = std::max(up.front().reference_n, down.front().reference_n);
  const double hi = std::min(up.back().reference_n, down.back().reference_n);
  if (lo > hi) throw InputError("loading and unloading curves do not overlap");

  std::vector<double> grid;
  for (const auto* curve : {&up, &down}) {
    for (const auto& p : *curve) {
      if (p.reference_n >= lo && p.reference_n <= hi) grid.push_back(p.reference_n);
    }
  }
  double worst = 0.0;
  for (double x : grid) worst = std::max(worst, std::abs(interpolate(up, x) - interpolate(down, x)));
  return worst / full_scale_n * 100.0;
}

Resolution resolution(std::span<const double> stationary_force, double full_scale_n) {
  if (stationary_force.size() < 2) throw InputError("resolution needs at least 2 samples");
  const double n = static_cast<double>(stationary_force.size());
  const double mean = std::accumulate(stationary_force.begin(), stationary_force.end(), 0.0) / n;
  double ss = 0.0;
  for (double f : stationary_force) ss += (f - mean) * (f - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw DegenerateInputError("stationary series has zero variance; resolution is undefined");
  return Resolution{sd, static_cast<long long>(std::floor(full_scale_n / sd))};
}

LoadingCurves bin_sweep(std::span<const double> reference_n, std::span<const double> measured_n, double bin_n) {
  if (reference_n.size() != measured_n.size()) throw InputError("sweep series length mismatch");
  if (reference_n.empty()) throw InputError("empty sweep");
  if (!(bin_n > 0.0)) throw InputError("bin width must be > 0");
  const auto peak = static_cast<std::size_t>(
      std::distance(reference_n.begin(), std::max_element(reference_n.begin(), reference_n.end())));

  auto bin_range = [&](std::size_t from, std::size_t to) {
    std::map<long long, std::array<double, 3>> bins;  // sum ref, sum meas, count
    for (std::size_t i = from; i < to; ++i) {
      auto& b = bins[static_cast<long long>(std::floor(reference_n[i] / bin_n))];
      b[0] += reference_n[i];
      b[1] += measured_n[i];
      b[2] += 1.0;
    }
    std::vector<CurvePoint> out;
    out.reserve(bins.size());
    for (const auto& [key, b] : bins) out.push_back(CurvePoint{b[0] / b[2], b[1] / b[2]});
    return out;
  };
  return LoadingCurves{bin_range(0, peak + 1), bin_range(peak, reference_n.size())};
}

// --- serialization ---------------------------------------------------------

std::string to_json(const CalibrationPoly& poly) {
  nlohmann::ordered_json j;
  j["degree"] = poly.degree();
  j["coefficients"] = poly.coefficients;
  j["fit_range"] = {poly.fit_min_v, poly.fit_max_v};
  j["residual_rmse"] = poly.residual_rmse;
  return j.dump(2) + "\n";
}

CalibrationPoly poly_from_json(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    CalibrationPoly poly;
    poly.coefficients = j.at("coefficients").get<std::vector<double>>();
    const auto range = j.at("fit_range").get<std::vector<double>>();
    if (range.size() != 2) throw InputError("calibration document: fit_range needs two values");
    poly.fit_min_v = range[0];
    poly.fit_max_v = range[1];
    poly.residual_rmse = j.value("residual_rmse", 0.0);
    if (poly.coefficients.empty()) throw InputError("calibration document: no coefficients");
    if (j.contains("degree") && j.at("degree").get<int>() != poly.degree()) {
      throw InputError("calibration document: degree does not match coefficient count");
    }
    return poly;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("calibration document: ") + e.what());
  }
}

std::string to_json(const MetricsReport& report, const std::vector<std::pair<std::string, std::string>>& config) {
  nlohmann::ordered_json j;
  if (!config.empty()) {
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    j["config"] = cfg;
  }
  j["rmse_n"] = report.rmse;
  j["nonlinearity_pct"] = report.nonlinearity_pct;
  j["hysteresis_pct"] = report.hysteresis_pct;
  j["resolution_n"] = report.resolution ? nlohmann::ordered_json(*report.resolution) : nlohmann::ordered_json();
  j["resolution_steps"] =
      report.resolution_steps ? nlohmann::ordered_json(*report.resolution_steps) : nlohmann::ordered_json();
  j["full_scale_n"] = report.full_scale;
  j["percent_full_scale_n"] = report.percent_full_scale;
  j["sample_rate_hz"] = report.sample_rate_hz;
  return j.dump(2) + "\n";
}

std::string summary_table(const MetricsReport& report) {
  char buf[128];
  std::string out = "Performance metric        Value\n";
  auto row = [&](const char* name, const char* value) {
    std::snprintf(buf, sizeof buf, "%-26s%s\n", name, value);
    out += buf;
  };
  char v[96];
  std::snprintf(v, sizeof v, "%.4f N", report.rmse);
  row("RMSE", v);
  std::snprintf(v, sizeof v, "%.2f %%", report.nonlinearity_pct);
  row("Nonlinearity", v);
  std::snprintf(v, sizeof v, "%.2f %%", report.hysteresis_pct);
  row("Hysteresis", v);
  if (report.resolution) {
    std::snprintf(v, sizeof v, "%.3f mN", *report.resolution * 1e3);
    row("Standard deviation", v);
    row("Resolution", v);
    std::snprintf(v, sizeof v, "%lld steps (%.1f bit)", *report.resolution_steps,
                  std::log2(static_cast<double>(*report.resolution_steps)));
    row("Resolution (step)", v);
  } else {
    row("Resolution", "n/a (no stationary log)");
  }
  std::snprintf(v, sizeof v, "%.0f Hz", report.sample_rate_hz);
  row("Sample rate", v);
  return out;
}

} // namespace tension::calibration
