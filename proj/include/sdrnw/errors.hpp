#pragma once

#include <stdexcept>
#include <string>

namespace sdrnw {

/// Base for every error raised by the library. The CLI maps the three
/// families below onto exit codes 2 (argument), 3 (data) and 4 (numeric).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Profile or configuration outside the admissible class (e.g. a kernel
/// profile that is not integrable).
class DomainError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

/// No sample carries kernel weight at the evaluation point.
class EmptyWindowError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateFitError : public NumericError {
public:
    using NumericError::NumericError;
};

class AmbiguousRankError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace sdrnw
