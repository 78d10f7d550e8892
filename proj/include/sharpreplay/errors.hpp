#pragma once

#include <stdexcept>

namespace sharpreplay {

// Invalid construction-time parameters (dims, capacities, option values).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Incompatible tensor / parameter-vector shapes.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bad runtime data fed to an operation (labels out of range, empty batch, ...).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// API misuse (double-writing a result cell, reading an unfilled one, ...).
struct UsageError : std::logic_error {
    using std::logic_error::logic_error;
};

// Malformed file contents (IDX headers, buffer snapshots).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failures, reported with the offending path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sharpreplay
