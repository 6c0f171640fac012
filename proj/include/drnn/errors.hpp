#pragma once

#include <stdexcept>
#include <string>

namespace drnn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// shape mismatch in a linear-algebra or cell operation
struct DimensionError : Error {
    using Error::Error;
};

// invalid model/task/run configuration
struct ConfigError : Error {
    using Error::Error;
};

// non-finite values, diverged training, failed numeric preconditions
struct NumericError : Error {
    using Error::Error;
};

// label or index out of range
struct IndexError : Error {
    using Error::Error;
};

// file format / IO problems
struct IoError : Error {
    using Error::Error;
};

// a theory-verification suite found a counterexample
struct VerifyError : Error {
    using Error::Error;
};

}  // namespace drnn
