#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dot {

// RFC 4180 subset: fields separated by commas, optionally double-quoted with
// "" as an escaped quote. No embedded newlines.
std::vector<std::string> split_csv_line(std::string_view line);
std::string quote_csv_field(std::string_view field);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);
std::size_t parse_index(std::string_view text);

}  // namespace dot
