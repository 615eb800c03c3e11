#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "tension/errors.hpp"
#include "tension/text.hpp"

using namespace tension;

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> exp(-20, 20);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::pow(10.0, exp(rng)) * (i % 2 ? -1 : 1);
    const auto back = text::parse_double(text::format_double(v));
    REQUIRE(back);
    CHECK(*back == v);
  }
  CHECK(text::format_double(0.5) == "0.5");
  CHECK(text::format_double(1000) == "1000");
}

TEST_CASE("parse_double is strict") {
  CHECK(text::parse_double("1.5") == 1.5);
  CHECK(text::parse_double("-2e-3") == -2e-3);
  CHECK_FALSE(text::parse_double(""));
  CHECK_FALSE(text::parse_double("1.5x"));
  CHECK_FALSE(text::parse_double("abc"));
  CHECK_FALSE(text::parse_double("1,5"));
}

TEST_CASE("parse_unsigned") {
  CHECK(text::parse_unsigned("42") == 42ull);
  CHECK_FALSE(text::parse_unsigned("-1"));
  CHECK_FALSE(text::parse_unsigned("4.2"));
  CHECK_FALSE(text::parse_unsigned("99999999999999999999999"));
}

TEST_CASE("trim and split") {
  CHECK(text::trim("  a b \t\r") == "a b");
  CHECK(text::trim("") == "");
  const auto parts = text::split("a,,b", ',');
  REQUIRE(parts.size() == 3);
  CHECK(parts[1].empty());
  CHECK(text::split("", ',').size() == 1);
}

TEST_CASE("ParseError carries the line number") {
  const ParseError e(12, "bad thing");
  CHECK(e.line() == 12);
  CHECK(std::string(e.what()).find("line 12") != std::string::npos);
}
