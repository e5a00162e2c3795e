#pragma once

#include <stdexcept>
#include <string>

namespace homfv {

/// Base of every error raised by the library. `exit_code()` is the CLI status the error maps to.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

/// Contract violations (mesh mismatch, degenerate meshes, bad argument ranges).
class ContractError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

class AssemblyError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 3; }
};

class UnsupportedDiscretization : public AssemblyError {
public:
    using AssemblyError::AssemblyError;
};

class FactorizationError : public Error {
public:
    FactorizationError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] int exit_code() const noexcept override { return 3; }

private:
    std::size_t row_;
};

class SolverError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 3; }
};

/// Query point outside the region a field covers.
class DomainError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

class IoError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 4; }
};

}  // namespace homfv
