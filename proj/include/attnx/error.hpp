#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace attnx {

enum class ErrorKind {
    InvalidInput,
    Shape,
    Protocol,
    ToleranceUnsatisfiable,
    NonIdentifiable,
    ProbeConstruction,
    ProbeRejected,
    OracleInconsistency,
    IllConditioned,
    LearnerFailure,
    UnsupportedConfiguration,
    ConstraintInfeasible,
    Numerical,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the toolkit; the kind drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace attnx
