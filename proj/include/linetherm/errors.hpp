#pragma once

#include <stdexcept>
#include <string>

namespace linetherm {

/// Base for every domain error raised by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A conductor temperature or derived quantity became NaN/inf during integration.
class NonFiniteState : public Error {
public:
    using Error::Error;
};

/// Steady-state root lies above the configured temperature cap.
class BracketFailure : public Error {
public:
    using Error::Error;
};

/// Solar gain exceeds total cooling at the rating temperature.
class NegativeRadicand : public Error {
public:
    using Error::Error;
};

/// Newton-Raphson power flow did not reach the mismatch tolerance.
class NonConvergence : public Error {
public:
    using Error::Error;
};

/// Markov chain is not irreducible.
class Reducible : public Error {
public:
    using Error::Error;
};

/// Query time lies outside the load curve.
class OutOfHorizon : public Error {
public:
    using Error::Error;
};

/// Pilot run saw no trajectory climb above the initial level.
class InsufficientSignal : public Error {
public:
    using Error::Error;
};

/// Initial monitored value is not inside the first ladder interval.
class LadderMismatch : public Error {
public:
    using Error::Error;
};

/// Scenario configuration failed validation; the message names the field.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace linetherm
