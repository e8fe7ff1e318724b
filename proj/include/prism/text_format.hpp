#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prism {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

/// Strict full-field parse; nullopt on trailing garbage, empty input, or non-finite results.
std::optional<double> parse_number(std::string_view text);

std::string_view trim(std::string_view s);

/// Splits one CSV record. Handles double-quoted fields with "" escapes; no embedded newlines.
std::vector<std::string> split_csv_line(std::string_view line);

/// Splits a comma-separated list, dropping surrounding whitespace.
std::vector<std::string> split_list(std::string_view text, char sep = ',');

} // namespace prism
