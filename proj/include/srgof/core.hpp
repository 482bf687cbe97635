#pragma once

// Shared types and the error hierarchy used across the library.

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace srgof {

// Sample matrices hold one observation per row.
using Sample = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ============================================================================
// ERRORS
// ============================================================================

// Each error class maps onto one process exit code of the `gof` tool.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept = 0;
};

// Invalid parameter or configuration value (alpha outside (0,1), h <= 0, ...).
class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

// Malformed or inconsistent data (dimension mismatch, too few rows, ...).
class InputError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

// A numerical situation the caller must be told about, e.g. an all-zero spectrum.
class DegenerateError : public InputError {
public:
    using InputError::InputError;
};

// Broken internal invariant.
class InternalError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

inline void require_config(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

inline void require_input(bool ok, const std::string& message) {
    if (!ok) throw InputError(message);
}

inline void ensure(bool ok, const std::string& message) {
    if (!ok) throw InternalError(message);
}

}  // namespace srgof
