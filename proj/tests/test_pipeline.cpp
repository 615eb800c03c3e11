#include <doctest.h>

#include <cmath>

#include "tension/errors.hpp"
#include "tension/pipeline.hpp"

using namespace tension;
using namespace tension::pipeline;

TEST_CASE("force profiles") {
  CHECK(parse_force_profile("const:50", 10)(3.0) == 50.0);
  const auto tri = parse_force_profile("triangle:70", 140);
  CHECK(tri(0) == 0.0);
  CHECK(tri(35) == doctest::Approx(35.0));
  CHECK(tri(70) == doctest::Approx(70.0));
  CHECK(tri(105) == doctest::Approx(35.0));
  CHECK(tri(140) == doctest::Approx(0.0));
  CHECK(tri(150) == 0.0);
  const auto ramp = parse_force_profile("ramp:100", 10);
  CHECK(ramp(5) == doctest::Approx(50.0));
  CHECK(ramp(20) == doctest::Approx(100.0));
  CHECK(parse_force_profile("rsine:20:0.5", 10)(0.5) == doctest::Approx(20.0));
  CHECK(parse_force_profile("rsine:20:0.5", 10)(1.5) == doctest::Approx(20.0));
  CHECK_THROWS_AS(parse_force_profile("const", 10), InputError);
  CHECK_THROWS_AS(parse_force_profile("const:x", 10), InputError);
  CHECK_THROWS_AS(parse_force_profile("square:1", 10), InputError);
}

TEST_CASE("alignment") {
  daq::SampleLog log;
  for (std::uint64_t k = 0; k < 5; ++k) log.rows.push_back({k * 1000, 0, 1.0 + k, std::nullopt});
  std::vector<daq::ReferenceRow> ref;
  for (std::uint64_t k = 0; k < 5; ++k) ref.push_back({k * 1000 + 300, 10.0 * k});
  const auto pairs = align(log, ref);
  REQUIRE(pairs.size() == 5);
  CHECK(pairs[2].voltage == 3.0);
  CHECK(pairs[2].force_n == 20.0);

  // denser reference: nearest wins
  std::vector<daq::ReferenceRow> dense;
  for (std::uint64_t t = 0; t <= 4000; t += 100) dense.push_back({t, double(t)});
  CHECK(align(log, dense)[3].force_n == 3000.0);

  // too far off
  ref[3].timestamp_us = 3700;
  try {
    align(log, ref);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("t=0.003000") != std::string::npos);
  }
  CHECK_THROWS_AS(align(log, {}), InputError);
}

TEST_CASE("rate estimate") {
  daq::SampleLog log;
  CHECK(estimate_rate_hz(log) == 0.0);
  for (std::uint64_t k = 0; k < 10; ++k) log.rows.push_back({k * 200, 0, 0, std::nullopt});
  CHECK(estimate_rate_hz(log) == doctest::Approx(5000.0));
}

TEST_CASE("default calibration sweep") {
  const ModelConfig cfg;
  const auto cal = calibrate_from_sweep(cfg, 1);
  CHECK(cal.log.rows.size() == 140000);
  CHECK(cal.poly.degree() == 3);
  CHECK(cal.poly.residual_rmse < 0.455);
  CHECK(cal.poly.monotone_over_fit_range());
  const auto m = compute_metrics(cal.log, cal.reference, cal.poly);
  CHECK(m.rmse == doctest::Approx(cal.poly.residual_rmse));
  CHECK(m.sample_rate_hz == doctest::Approx(1000.0));
  CHECK(m.nonlinearity_pct < 0.05);
  CHECK(m.hysteresis_pct < 0.05);
  CHECK_FALSE(m.resolution);
}

TEST_CASE("noiseless pair calibrates exactly") {
  // reference taken as a cubic of the logged voltage: the fit has nothing left over
  ModelConfig cfg;
  cfg.noise_sigma_v = 0.0;
  auto cal = calibrate_from_sweep(cfg, 1, 1000, 20);
  for (std::size_t i = 0; i < cal.log.rows.size(); ++i) {
    const double v = cal.log.rows[i].voltage_v;
    cal.reference[i].force_n = 1000 - 300 * v + 20 * v * v - 1.5 * v * v * v;
  }
  const auto poly = calibration::fit_poly(align(cal.log, cal.reference), 3);
  CHECK(poly.residual_rmse < 1e-6);
}
