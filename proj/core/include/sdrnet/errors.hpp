#pragma once

#include <stdexcept>
#include <string>

namespace sdrnet {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shapes do not line up for the requested operation.
struct DimensionError : Error {
    using Error::Error;
};

// A documented precondition was violated (negative sigma, non-scalar loss, ...).
struct ContractError : Error {
    using Error::Error;
};

// Input data is missing or malformed (IDX parse failures, label out of range).
struct DataError : Error {
    using Error::Error;
};

// Configuration file or flag values are invalid.
struct ConfigError : Error {
    using Error::Error;
};

// Training or evaluation produced non-finite values.
struct NumericalError : Error {
    using Error::Error;
};

// A verification oracle exceeded its tolerance.
struct VerifyError : Error {
    using Error::Error;
};

}  // namespace sdrnet
