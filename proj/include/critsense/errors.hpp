#pragma once

#include <stdexcept>
#include <string>

namespace critsense {

// Input outside the mathematical domain of an operation (e.g. epsilon >= 1).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Operands whose shapes do not fit together.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Base for failures that come from the numerics rather than the inputs.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StiffnessError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IntegrationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class AccuracyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConditioningError : public NumericalError {
public:
    ConditioningError(const std::string& what, double condition_number)
        : NumericalError(what), condition_number_(condition_number) {}
    double condition_number() const { return condition_number_; }

private:
    double condition_number_;
};

// A matrix that must be inverted has (numerically) zero determinant.
class SingularMatrixError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace critsense
