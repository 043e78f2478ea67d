#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace traceforest {

// Shortest round-trip decimal form of a double; from_chars(format_double(x))
// recovers x bit-exactly, so every text artifact written by the toolkit can
// be re-read without loss.
std::string format_double(double value);

// Strict full-string parse. Accepts leading/trailing whitespace, nothing else.
std::optional<double> parse_double(std::string_view text);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string to_hex16(std::uint64_t v);

} // namespace traceforest
