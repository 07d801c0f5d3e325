#pragma once

#include <stdexcept>
#include <string>

namespace ran {

// Shape disagreement between operands (vector dims, matrix dims, class counts).
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed text input (manifests, feature files, config files). Messages
// carry the offending line number where one exists.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File that cannot be opened/read/written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Feature-store lookup for a (sample, region) key that is not present.
struct MissingFeatureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value where the contract demands finite (gradients, losses).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ran
