#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tristage {

enum class ErrorKind {
    Usage,
    Validation,
    Schema,
    Ordering,
    ConstraintData,
    Objective,
    DegenerateLeaf,
    DegenerateRatio,
    Persistence,
    Config,
    Metric,
    Io,
};

/// Stable, machine-parsable name of an error category ("constraint-data", ...).
std::string_view error_category(ErrorKind kind) noexcept;

/// Process exit code the CLI reports for an error category.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace tristage
