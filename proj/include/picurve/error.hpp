#pragma once

#include <stdexcept>
#include <string>

namespace picurve {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unknown model id, wrong parameter roster, or a value outside its domain.
class InvalidParameters : public Error {
public:
    using Error::Error;
};

/// Observations violate the Dataset invariants (or an irradiance is bad).
class DataError : public Error {
public:
    using Error::Error;
};

/// More free parameters than observations.
class UnderdeterminedError : public Error {
public:
    using Error::Error;
};

/// Optimizer or scalar maximizer could not produce a usable result.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Post-fit diagnostics could not be formed (non-finite Hessian, bad covariance).
class InferenceError : public Error {
public:
    using Error::Error;
};

}  // namespace picurve
