#pragma once

#include <stdexcept>
#include <string>

namespace ccmvn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Sample size is below the minimum at which a covariance block is nonsingular.
class SampleSizeError : public InvalidArgument {
public:
    SampleSizeError(const std::string& what, long required)
        : InvalidArgument(what), required_(required) {}

    long required() const noexcept { return required_; }

private:
    long required_;
};

/// Data matrix is degenerate (rank-deficient covariance, zero variance, ...).
class DegenerateSample : public Error {
public:
    using Error::Error;
};

/// A covariance block could not be inverted.
class SingularBlock : public Error {
public:
    using Error::Error;
};

/// Squared canonical correlation outside [0, 1] beyond the clamping tolerance.
class EigenvalueRange : public Error {
public:
    using Error::Error;
};

/// A distribution lacks the finite moments a computation needs.
class UndefinedMoments : public Error {
public:
    using Error::Error;
};

/// Reading or writing a persisted file failed.
class StoreError : public Error {
public:
    enum class Kind {
        io,               ///< cannot open, read or write
        corrupt,          ///< header unreadable or not a null-table file
        version,          ///< unknown format_version
        integrity,        ///< payload truncated or checksum mismatch
        length_mismatch,  ///< header replication count disagrees with payload length
    };

    StoreError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Malformed input data; row and column are 1-based, 0 when not applicable.
class DataError : public Error {
public:
    DataError(const std::string& what, long row, long column)
        : Error(what), row_(row), column_(column) {}

    long row() const noexcept { return row_; }
    long column() const noexcept { return column_; }

private:
    long row_;
    long column_;
};

}  // namespace ccmvn
