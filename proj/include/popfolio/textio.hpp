#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace popfolio {

// Shortest round-trip decimal formatting (std::to_chars). Every number the
// engine writes to CSV goes through this, so save -> load is bit-exact and
// bundles are byte-stable across runs.
std::string format_double(double v);

// Split on a single-character delimiter; no quoting (panel CSV needs none).
std::vector<std::string> split(const std::string& line, char delim);

std::string trim(const std::string& s);

// Parses with full precision; returns false on garbage/trailing text.
bool parse_double(const std::string& s, double& out);
bool parse_int(const std::string& s, std::int64_t& out);

// FNV-1a 64-bit; used to stamp evidence bundles.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t v);

} // namespace popfolio
