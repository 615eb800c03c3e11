#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "tension/daq.hpp"
#include "tension/errors.hpp"

using namespace tension;
using namespace tension::daq;

namespace {

std::vector<SensorSample> run_of(std::uint32_t seq, std::uint64_t t0, std::uint16_t dt, std::size_t n,
                                 std::mt19937_64& rng) {
  std::vector<SensorSample> s;
  for (std::size_t k = 0; k < n; ++k) {
    s.push_back({seq + static_cast<std::uint32_t>(k), t0 + k * dt, static_cast<std::uint16_t>(rng())});
  }
  return s;
}

} // namespace

TEST_CASE("quantize") {
  const AdcConfig adc;
  CHECK(adc.max_counts() == 65535u);
  CHECK(adc.lsb() == doctest::Approx(50.35e-6).epsilon(1e-3));
  CHECK(quantize(1.65, adc) == 32767u);
  CHECK(quantize(0.0, adc) == 0u);
  CHECK(quantize(-1.0, adc) == 0u);
  CHECK(quantize(3.3, adc) == 65535u);
  CHECK(quantize(10.0, adc) == 65535u);
  CHECK(quantize(NAN, adc) == 0u);
  CHECK(counts_to_voltage(65535, adc) == doctest::Approx(3.3));
  CHECK_THROWS_AS(counts_to_voltage(65536, adc), DomainError);
}

TEST_CASE("quantize roundtrip stays within one LSB") {
  const AdcConfig adc;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, adc.v_ref);
  for (int i = 0; i < 20000; ++i) {
    const double v = u(rng);
    const double back = counts_to_voltage(quantize(v, adc), adc);
    CHECK(back <= v + 1e-15);
    CHECK(v - back <= adc.lsb());
  }
}

TEST_CASE("quantize is monotone") {
  const AdcConfig adc{12, 2.5};
  std::uint32_t prev = 0;
  for (double v = -0.1; v < 2.6; v += 1e-4) {
    const auto c = quantize(v, adc);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("frame layout") {
  std::mt19937_64 rng(1);
  const auto s = run_of(0x01020304, 0x1122334455667788ull, 200, 24, rng);
  const auto bytes = encode_frame(s);
  REQUIRE(bytes.size() == 64);
  CHECK(bytes.size() == kMaxFrameBytes);
  CHECK(bytes[0] == 0x04);
  CHECK(bytes[3] == 0x01);
  CHECK(bytes[4] == 0x88);
  CHECK(bytes[11] == 0x11);
  CHECK(bytes[12] == 200);
  CHECK(bytes[13] == 0);
  CHECK(bytes[14] == 24);
  CHECK(bytes[15] == 0);
  CHECK(bytes[16] == (s[0].counts & 0xFF));
  CHECK(bytes[17] == (s[0].counts >> 8));
  CHECK(encode_frame(std::vector<SensorSample>{}).size() == 16);
}

TEST_CASE("frame encode errors") {
  std::mt19937_64 rng(2);
  CHECK_THROWS_AS(encode_frame(run_of(0, 0, 100, 25, rng)), EncodeError);
  auto gap = run_of(0, 0, 100, 4, rng);
  gap[2].seq = 9;
  CHECK_THROWS_AS(encode_frame(gap), EncodeError);
  auto jitter = run_of(0, 0, 100, 4, rng);
  jitter[3].timestamp_us += 1;
  CHECK_THROWS_AS(encode_frame(jitter), EncodeError);
  std::vector<SensorSample> wide{{0, 0, 1}, {1, 70000, 2}};
  CHECK_THROWS_AS(encode_frame(wide), EncodeError);
}

TEST_CASE("frame roundtrip on random frames") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto n = static_cast<std::size_t>(rng() % 25);
    const auto s = run_of(static_cast<std::uint32_t>(rng()), rng() >> 8, static_cast<std::uint16_t>(rng()), n, rng);
    const auto r = decode_frame(encode_frame(s));
    REQUIRE(r.ok());
    CHECK(r.frame.samples() == s);
    CHECK_FALSE(r.reserved_nonzero);
  }
}

TEST_CASE("decode reports typed errors") {
  std::vector<std::uint8_t> b(10, 0);
  CHECK(decode_frame(b).error == FrameError::truncated_header);
  b.assign(16, 0);
  b[14] = 25;
  CHECK(decode_frame(b).error == FrameError::bad_count);
  b[14] = 2;
  CHECK(decode_frame(b).error == FrameError::length_mismatch);
  b.resize(20);
  CHECK(decode_frame(b).ok());
  b[15] = 7;
  const auto r = decode_frame(b);
  CHECK(r.ok());
  CHECK(r.reserved_nonzero);
  CHECK(std::string(to_string(FrameError::truncated_header)) == "truncated-header");
}

TEST_CASE("decode never throws on garbage") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20000; ++i) {
    std::vector<std::uint8_t> b(rng() % 80);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    const auto r = decode_frame(b);
    if (r.ok()) CHECK(b.size() == kFrameHeaderBytes + 2 * r.frame.counts.size());
  }
}

TEST_CASE("frames_from_samples splits long streams") {
  std::mt19937_64 rng(5);
  const auto s = run_of(0, 0, 1000, 50, rng);
  const auto frames = frames_from_samples(s);
  REQUIRE(frames.size() == 3);
  CHECK(frames[0].counts.size() == 24);
  CHECK(frames[2].counts.size() == 2);
  CHECK(frames[1].seq == 24);
  CHECK(frames[2].t0_us == 48000);
}

TEST_CASE("sample clock") {
  CHECK(sample_period_us(1000) == 1000);
  CHECK(sample_period_us(5000) == 200);
  CHECK(sample_period_us(3000) == 333);
  CHECK_THROWS_AS(sample_period_us(6000), RateLimitError);
  CHECK_THROWS_AS(sample_period_us(0), DomainError);
  try {
    sample_period_us(6000);
  } catch (const RateLimitError& e) {
    CHECK(std::string(e.what()).find("5 kHz") != std::string::npos);
  }
}

TEST_CASE("stream_simulate") {
  const optics::SensingChain chain;
  const AdcConfig adc;
  optics::NoiseSource quiet({0.0, 0});
  const auto log = stream_simulate([](double) { return 50.0; }, {1000, 10, 25}, chain, adc, quiet);
  REQUIRE(log.rows.size() == 10000);
  CHECK(log.rows[1].timestamp_us == 1000);
  CHECK(log.rows.back().timestamp_us == 9999000);
  for (const auto& r : log.rows) CHECK(r.counts == log.rows[0].counts);
  CHECK(log.rows[0].voltage_v == doctest::Approx(optics::sensor_voltage(50, 25, chain, nullptr)).epsilon(1e-4));

  CHECK(stream_simulate([](double) { return 0.0; }, {1000, 0.0, 25}, chain, adc, quiet).rows.empty());
  CHECK(stream_simulate([](double) { return 0.0; }, {1000, 0.0015, 25}, chain, adc, quiet).rows.size() == 2);
  CHECK_THROWS_AS(stream_simulate([](double) { return 0.0; }, {6000, 1, 25}, chain, adc, quiet), RateLimitError);
  CHECK_THROWS_AS(stream_simulate([](double) { return 300.0; }, {1000, 1, 25}, chain, adc, quiet), DomainError);
}

TEST_CASE("stream_simulate is deterministic per seed") {
  const optics::SensingChain chain;
  auto run = [&](std::uint64_t seed) {
    optics::NoiseSource n({2e-5, seed});
    return stream_simulate([](double t) { return 10 * t; }, {2000, 2, 25}, chain, AdcConfig{}, n);
  };
  CHECK(run(9) == run(9));
  CHECK_FALSE(run(9) == run(10));
}

TEST_CASE("log CSV roundtrip") {
  const optics::SensingChain chain;
  optics::NoiseSource n({2e-5, 1});
  auto log = stream_simulate([](double t) { return 20 * t; }, {1000, 1, 25}, chain, AdcConfig{}, n);
  log.rows[3].force_n = 1.25;
  std::stringstream ss;
  write_log(log, ss, {"a = 1", "b = 2"});
  const auto text = ss.str();
  CHECK(text.rfind("# a = 1\n# b = 2\ntime_s,counts,voltage_v,force_n\n0.000000,", 0) == 0);
  CHECK(read_log(ss) == log);
}

TEST_CASE("log CSV parse errors carry line numbers") {
  auto fails_at = [](const std::string& body, std::size_t line) {
    std::istringstream in(body);
    try {
      read_log(in);
    } catch (const ParseError& e) {
      return e.line() == line;
    }
    return false;
  };
  CHECK(fails_at("wrong,header\n", 1));
  CHECK(fails_at("", 1));
  CHECK(fails_at("# x\ntime_s,counts,voltage_v,force_n\n0.000000,1,0.1,\nbad,1,0.1,\n", 4));
  CHECK(fails_at("time_s,counts,voltage_v,force_n\n0.000000,70000,0.1,\n", 2));
  CHECK(fails_at("time_s,counts,voltage_v,force_n\n0.000000,1,0.1\n", 2));
  CHECK(fails_at("time_s,counts,voltage_v,force_n\n0.002000,1,0.1,\n0.001000,1,0.1,\n", 3));
}

TEST_CASE("reference log") {
  const std::vector<ReferenceRow> rows{{0, 0.0}, {1000, 1.5}, {2000, 3.0}};
  std::stringstream ss;
  write_reference(rows, ss);
  CHECK(ss.str() == "time_s,force_n\n0.000000,0\n0.001000,1.5\n0.002000,3\n");
  CHECK(read_reference(ss) == rows);
  std::istringstream back("time_s,force_n\n0.002,1\n0.001,1\n");
  CHECK_THROWS_AS(read_reference(back), ParseError);
}

TEST_CASE("time formatting") {
  CHECK(format_time_s(0) == "0.000000");
  CHECK(format_time_s(1234567) == "1.234567");
  CHECK(format_time_s(200) == "0.000200");
}

TEST_CASE("stationary noise tuning hits the target") {
  const optics::SensingChain chain;
  const AdcConfig adc;
  // linear decode is enough here: local slope at 35 N
  const double v0 = optics::sensor_voltage(35, 25, chain, nullptr);
  const double slope = optics::sensitivity(35, chain);
  const VoltageToForce to_force = [&](double v) { return 35 + (v - v0) / slope; };
  const StreamConfig cfg{1000, 10, 25};
  const auto t0 = std::chrono::steady_clock::now();
  const double sigma = tune_noise_sigma(35, 9.888e-3, chain, adc, to_force, cfg, 7);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 5.0);
  const double sd = stationary_force_std(35, sigma, chain, adc, to_force, cfg, 7);
  CHECK(sd == doctest::Approx(9.888e-3).epsilon(0.01));
  CHECK(sigma > 0.0);
}
