#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hyperbuild {

enum class ErrorKind {
    InvalidInput,
    Domain,
    Degenerate,
    Coverage,
    ResolutionLimit,
    Capacity,
    Precondition,
    NonConvergence,
    Undersampled,
    UndefinedValue,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base class for every failure raised by the library. The kind is what the
/// CLI serializes into its machine-readable error record.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidInputError : public Error {
public:
    explicit InvalidInputError(const std::string& what) : Error(ErrorKind::InvalidInput, what) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

/// A ray grazes a wall or exits a chamber through a vertex; the caller is
/// expected to perturb the ray and retry.
class DegenerateCrossingError : public Error {
public:
    explicit DegenerateCrossingError(const std::string& what) : Error(ErrorKind::Degenerate, what) {}
};

class CoverageError : public Error {
public:
    CoverageError(const std::string& what, double required_radius)
        : Error(ErrorKind::Coverage, what), required_radius_(required_radius) {}
    double required_radius() const noexcept { return required_radius_; }

private:
    double required_radius_;
};

class ResolutionLimitError : public Error {
public:
    ResolutionLimitError(const std::string& what, double partial_value)
        : Error(ErrorKind::ResolutionLimit, what), partial_value_(partial_value) {}
    double partial_value() const noexcept { return partial_value_; }

private:
    double partial_value_;
};

class CapacityError : public Error {
public:
    explicit CapacityError(const std::string& what) : Error(ErrorKind::Capacity, what) {}
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(ErrorKind::Precondition, what) {}
};

class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double lower, double upper)
        : Error(ErrorKind::NonConvergence, what), lower_(lower), upper_(upper) {}
    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }

private:
    double lower_;
    double upper_;
};

class UndersampledError : public Error {
public:
    explicit UndersampledError(const std::string& what) : Error(ErrorKind::Undersampled, what) {}
};

class UndefinedValueError : public Error {
public:
    explicit UndefinedValueError(const std::string& what) : Error(ErrorKind::UndefinedValue, what) {}
};

}  // namespace hyperbuild
