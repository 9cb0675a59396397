#pragma once

#include <stdexcept>
#include <string>

namespace meshcnn {

// Malformed input: unparsable files, bad indices, shape mismatches.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric breakdown at runtime: non-finite loss or gradients.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad request from the caller: unknown preset name, invalid config values.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace meshcnn
