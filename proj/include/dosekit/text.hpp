#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dosekit {

// Plain comma splitting; the formats this toolkit writes never quote.
std::vector<std::string> split(std::string_view line, char sep = ',');
std::string trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Shortest round-trip representation (std::to_chars), locale-free.
std::string format_double(double x);
// Fixed significant digits, for human-facing tables.
std::string format_double(double x, int significant);

double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

// Reads a whole file; throws Error{io} on failure.
std::string read_file(const std::string& path);
// Writes via a sibling temp file and rename, so readers never see a partial file.
void write_file(const std::string& path, std::string_view content);

}  // namespace dosekit
