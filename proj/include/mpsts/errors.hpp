#pragma once

#include <stdexcept>
#include <string>

namespace mpsts {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Extent or length mismatch between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, overflow, or a failed numerical routine.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Training data with no spread (constant data, zero IQR).
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

/// An observed or selected value has (numerically) zero probability under the model.
class ProbabilityError : public Error {
public:
    ProbabilityError(const std::string& what, int site) : Error(what), site_(site) {}
    [[nodiscard]] int site() const noexcept { return site_; }

private:
    int site_;
};

/// Malformed file or config text.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Model file written by an incompatible format version.
class VersionError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or use of a model for an unsupported task.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input outside what the algorithms support (e.g. a fully missing series).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

}  // namespace mpsts
