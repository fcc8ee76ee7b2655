#pragma once

#include <stdexcept>
#include <string>

namespace cavitycool {

/// Base for every error the library raises deliberately.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent user input (config files, CLI arguments). CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed: singular solve, divergence, root-finding. CLI exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class InvalidTruncation : public ContractViolation {
public:
    using ContractViolation::ContractViolation;
};

class NonUniqueSteadyState : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class RegressionInstability : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class CalibrationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IntegratorDivergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition)
        throw ContractViolation(message);
}

} // namespace cavitycool
