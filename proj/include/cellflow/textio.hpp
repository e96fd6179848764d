#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cellflow::textio {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// Strict parse of the whole field; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view field);
std::optional<std::int64_t> parse_int(std::string_view field);

/// Splits one comma-separated line. Fields wrapped in double quotes have
/// the quotes removed and may contain commas; `""` inside quotes is a
/// literal quote. A trailing '\r' is ignored.
std::vector<std::string> split_csv(std::string_view line);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string_view trim(std::string_view s);

}  // namespace cellflow::textio
