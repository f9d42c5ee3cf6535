#pragma once

#include <stdexcept>
#include <string>

namespace ccrisk {

// Ingestion / validation failure. Message carries file, row and column context
// where available.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model fitting failure with a machine-readable kind.
struct FitError : std::runtime_error {
    enum class Kind { separation, no_convergence, bad_input };
    Kind kind;
    FitError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

}  // namespace ccrisk
