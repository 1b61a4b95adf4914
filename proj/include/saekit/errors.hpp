#pragma once

#include <stdexcept>
#include <string>

namespace saekit {

// Root of every error the library throws. The CLI maps any of these to a
// nonzero exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid hyperparameter, dimension mismatch, or bad argument.
class ConfigError : public Error {
public:
    using Error::Error;
};

// NaN/Inf produced during a computation.
class NumericError : public Error {
public:
    using Error::Error;
};

// Malformed SAEACT01 / SAEMDL01 payload. `field()` names the offending part.
class FormatError : public Error {
public:
    FormatError(std::string field, const std::string& what)
        : Error("format error in '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Input for which a metric is mathematically undefined (zero variance,
// zero-norm rows, a vanishing denominator).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace saekit
