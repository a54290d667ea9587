#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace histreg {

// Base for all recoverable failures raised by the library. DataError covers
// bad or inconsistent inputs (CLI exit code 2).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class MalformedRow : public DataError {
public:
    MalformedRow(std::size_t line, const std::string &what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class NonContiguousIndex : public DataError {
public:
    using DataError::DataError;
};

class IoFailure : public DataError {
public:
    using DataError::DataError;
};

class BadMagic : public DataError {
public:
    using DataError::DataError;
};

class TruncatedPayload : public DataError {
public:
    using DataError::DataError;
};

class UnsupportedFormat : public DataError {
public:
    using DataError::DataError;
};

class DecodeFailure : public DataError {
public:
    using DataError::DataError;
};

class DegenerateGeometry : public DataError {
public:
    using DataError::DataError;
};

class TooFewMatches : public DataError {
public:
    using DataError::DataError;
};

class SizeMismatch : public DataError {
public:
    using DataError::DataError;
};

class LengthMismatch : public DataError {
public:
    using DataError::DataError;
};

class NoPairs : public LengthMismatch {
public:
    NoPairs() : LengthMismatch("no landmark pairs to evaluate") {}
};

class MatcherUnavailable : public Error {
public:
    using Error::Error;
};

}  // namespace histreg
