#pragma once

#include <stdexcept>
#include <string>

namespace cubsde {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The path-wise ODE produced a non-finite state.
class IntegrationFailure : public Error {
public:
    using Error::Error;
};

/// Fixed-point iteration for the implicit backward step did not converge.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

/// The full cubature tree would exceed the configured node budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// A sparse interpolant was queried outside its hypercube.
class OutsideDomain : public Error {
public:
    using Error::Error;
};

}  // namespace cubsde
