#pragma once

#include <stdexcept>
#include <string>

namespace deconfound {

// Bad inputs detected before any computation starts. The CLI maps these to
// exit code 2, everything else thrown at runtime to exit code 3.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidParameterError : ValidationError {
    using ValidationError::ValidationError;
};

// A requested (Var(C), Cov(Y,C), Var(Y)) target has no valid bivariate
// normal error covariance. Message carries the offending phi values.
struct InfeasibleMomentsError : ValidationError {
    using ValidationError::ValidationError;
};

// Parameter rejection budget exhausted: no coefficient draw is feasible
// for every requested environment.
struct InfeasibleConfigurationError : ValidationError {
    using ValidationError::ValidationError;
};

struct SingularDesignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CellExhaustedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnmatchableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnweightableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnreachableTargetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateLabelsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UndefinedMetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace deconfound
