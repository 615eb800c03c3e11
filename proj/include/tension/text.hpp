#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tension::text {

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

/// Strict full-string parse; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::optional<unsigned long long> parse_unsigned(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

} // namespace tension::text
