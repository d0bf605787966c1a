#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uqcast {

/// Shortest round-trip decimal form (via to_chars); locale-independent and
/// byte-stable across runs, which the determinism contract relies on.
std::string fmt_double(double v);
std::string fmt_int(int64_t v);

/// Split one CSV line on commas (no quoting; the formats here never need it).
std::vector<std::string> split_csv_line(const std::string& line);
std::string trim(const std::string& s);

} // namespace uqcast
