#pragma once

#include <stdexcept>
#include <string>

namespace pumpcast {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration. CLI maps this to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Problems with input data. CLI maps this to exit code 3.
struct DataError : Error {
    using Error::Error;
};

struct MissingColumn : DataError {
    using DataError::DataError;
};
struct EmptyAfterCleaning : DataError {
    using DataError::DataError;
};
struct NonMonotonicAfterSort : DataError {
    using DataError::DataError;
};
struct SeriesTooShort : DataError {
    using DataError::DataError;
};
struct InvalidProfile : ConfigError {
    using ConfigError::ConfigError;
};
struct IncompleteThresholds : ConfigError {
    using ConfigError::ConfigError;
};
struct DegenerateWindow : DataError {
    using DataError::DataError;
};
struct MinorityTooSmall : DataError {
    using DataError::DataError;
};
struct AppliedToTestSplit : Error {
    using Error::Error;
};
struct EmptyInput : DataError {
    using DataError::DataError;
};
struct SingleClassInput : DataError {
    using DataError::DataError;
};
struct DivergenceDetected : Error {
    using Error::Error;
};
struct FeatureOrderMismatch : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};
struct TooFewSamples : DataError {
    using DataError::DataError;
};
// A predictor was invoked without an input its variant requires.
struct MissingInput : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace pumpcast
