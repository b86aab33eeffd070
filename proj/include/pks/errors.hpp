#pragma once

#include <stdexcept>
#include <string>

namespace pks {

// Invalid user-supplied parameters or configuration (CLI exit code 2).
class ParameterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

// Arrays or grids that do not match.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Elliptic problem with no periodic solution.
class SolvabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Broken internal invariant.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace pks
