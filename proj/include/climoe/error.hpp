#pragma once

#include <stdexcept>
#include <string>

namespace climoe {

// Input vector length does not match the network or sample layout.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Non-finite loss or gradient encountered during training.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset directory violates the on-disk schema.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Binary or JSON artifact is truncated, corrupt or does not match the expected spec.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A training precondition such as the frozen-pool contract was violated.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace climoe
