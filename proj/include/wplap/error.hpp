#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wplap {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class DimensionUnsupported : public Error {
public:
    using Error::Error;
};

class DomainMembershipError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

/// p_s <= N or s <= N/(p-N): the embedding regime the theory relies on is violated.
class RegimeError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    using Error::Error;
};

class QuadratureFailure : public Error {
public:
    QuadratureFailure(const std::string& what, std::size_t cell)
        : Error(what + " (cell " + std::to_string(cell) + ")"), cell_(cell) {}

    std::size_t cell() const noexcept { return cell_; }

private:
    std::size_t cell_;
};

class RefinementRequired : public Error {
public:
    using Error::Error;
};

/// Iterative solver gave up; carries the best iterate (interior dof values).
class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, std::vector<double> best_iterate, double best_residual)
        : Error(what), best_(std::move(best_iterate)), best_residual_(best_residual) {}

    const std::vector<double>& best_iterate() const noexcept { return best_; }
    double best_residual() const noexcept { return best_residual_; }

private:
    std::vector<double> best_;
    double best_residual_;
};

/// Energy kept decreasing without bound: the growth hypothesis is likely violated.
class CoercivityViolation : public SolverFailure {
public:
    using SolverFailure::SolverFailure;
};

/// Parse or schema error in a config/report file, with 1-based position.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0, int column = 0)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, int line, int column) {
        if (line <= 0) return what;
        return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
    }

    int line_;
    int column_;
};

}  // namespace wplap
