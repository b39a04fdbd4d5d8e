#pragma once

#include <stdexcept>
#include <string>

namespace popfolio {

// Error taxonomy mirrors the CLI exit codes: config -> 2, data -> 3,
// anything else (including contract violations) -> 4.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller broke an API precondition (dimension mismatch, misaligned dates,
// reading a sealed test slice, ...).
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

} // namespace popfolio
