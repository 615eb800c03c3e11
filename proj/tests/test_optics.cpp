#include <doctest.h>

#include <cmath>
#include <vector>

#include "tension/errors.hpp"
#include "tension/optics.hpp"

using namespace tension;
using namespace tension::optics;

TEST_CASE("response curve values") {
  const PhotoReflectorModel m;
  CHECK(response_voltage(0.2e-3, m) == doctest::Approx(1.4165).epsilon(1e-4));
  CHECK(response_voltage(m.d_peak, m) == doctest::Approx(m.v_peak));
  CHECK(response_voltage(0.0, m) == 0.0);
  CHECK(response_voltage(0.4e-3, m) == doctest::Approx(2.738).epsilon(1e-3));
  CHECK_THROWS_AS(response_voltage(-1e-6, m), DomainError);
}

TEST_CASE("response is monotone across the window") {
  const PhotoReflectorModel m;
  double prev = -1.0;
  for (double d = m.window_min; d <= m.window_max; d += 1e-6) {
    const double v = response_voltage(d, m);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("gap under load") {
  const SensingChain chain;
  CHECK(gap_from_force(0.0, chain.reflector, chain.elastomer) == doctest::Approx(0.4e-3));
  CHECK(gap_from_force(200.0, chain.reflector, chain.elastomer) == doctest::Approx(0.3049e-3).epsilon(1e-3));

  // a soft beam pushes the gap out of the window
  auto soft = chain;
  soft.elastomer.material.elastic_modulus /= 10;
  soft.elastomer.material.shear_modulus /= 10;
  try {
    gap_from_force(200.0, soft.reflector, soft.elastomer);
    FAIL("expected OutOfWindowError");
  } catch (const OutOfWindowError& e) {
    CHECK(e.force_n() == 200.0);
    CHECK(e.gap_m() < soft.reflector.window_min);
  }
}

TEST_CASE("temperature offset") {
  const PhotoReflectorModel m;
  CHECK(apply_temperature(1.0, 35.0, m) - 1.0 == doctest::Approx(0.04375));
  CHECK(apply_temperature(1.0, 25.0, m) == 1.0);
  CHECK(apply_temperature(1.0, 15.0, m) - 1.0 == doctest::Approx(-0.04375));
}

TEST_CASE("sensor voltage") {
  const SensingChain chain;
  CHECK(sensor_voltage(0.0, 25.0, chain, nullptr) == doctest::Approx(2.738).epsilon(1e-3));
  CHECK(sensor_voltage(70.0, 25.0, chain, nullptr) == doctest::Approx(2.597).epsilon(1e-3));
  CHECK(sensor_voltage(200.0, 25.0, chain, nullptr) == doctest::Approx(2.248).epsilon(1e-3));
  CHECK_THROWS_AS(sensor_voltage(210.0, 25.0, chain, nullptr), DomainError);
  CHECK_THROWS_AS(sensor_voltage(-1.0, 25.0, chain, nullptr), DomainError);
}

TEST_CASE("sensitivity is negative and grows in magnitude with load") {
  const SensingChain chain;
  CHECK(sensitivity(0.0, chain) == doctest::Approx(-1.78e-3).epsilon(0.02));
  double prev = 0.0;
  for (double f = 0.0; f <= 200.0; f += 5.0) {
    const double s = sensitivity(f, chain);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("noise source") {
  NoiseSource zero({0.0, 3});
  for (int i = 0; i < 10; ++i) CHECK(zero.draw() == 0.0);

  NoiseSource a({1e-3, 42}), b({1e-3, 42}), c({1e-3, 43});
  std::vector<double> xs;
  bool differs = false;
  for (int i = 0; i < 20000; ++i) {
    const double x = a.draw();
    CHECK(x == b.draw());
    differs |= x != c.draw();
    xs.push_back(x);
  }
  CHECK(differs);
  double mean = 0, ss = 0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  for (double x : xs) ss += (x - mean) * (x - mean);
  CHECK(std::sqrt(ss / (xs.size() - 1)) == doctest::Approx(1e-3).epsilon(0.03));
  CHECK_THROWS_AS(NoiseSource({-1.0, 0}), DomainError);
}

TEST_CASE("reflector validation") {
  PhotoReflectorModel m;
  m.rest_gap = 0.6e-3;
  CHECK_THROWS_AS(m.validate(), DomainError);
  m = {};
  m.d_peak = 0.45e-3;
  CHECK_THROWS_AS(m.validate(), DomainError);
  m = {};
  m.gap_sign = 0;
  CHECK_THROWS_AS(m.validate(), DomainError);
}
