#pragma once

#include <stdexcept>
#include <string>

namespace llrm {

// Common base so callers can catch everything the engine throws in one place.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- input / data errors ---------------------------------------------------

class ParseError : public Error {
public:
    using Error::Error;
};

class RadialityError : public Error {
public:
    using Error::Error;
};

class BaseError : public Error {
public:
    using Error::Error;
};

class MismatchError : public Error {
public:
    using Error::Error;
};

class StepError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class OverReductionError : public Error {
public:
    using Error::Error;
};

// --- power-flow errors -----------------------------------------------------

class DegenerateNetwork : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

// Reading voltages/currents off a result whose converged flag is false.
class NotConverged : public Error {
public:
    using Error::Error;
};

// --- market / settlement errors --------------------------------------------

class InvalidLevel : public Error {
public:
    using Error::Error;
};

class OverCapacity : public Error {
public:
    using Error::Error;
};

// Curtailment-only baseline cannot meet the request even at full capacity.
class Infeasible : public Error {
public:
    using Error::Error;
};

// --- solver errors ---------------------------------------------------------

// No decision vector can satisfy the request's active constraints.
class InfeasibleProblem : public Error {
public:
    using Error::Error;
};

// Exhaustive enumeration would exceed the search-space guard.
class SpaceTooLarge : public Error {
public:
    using Error::Error;
};

} // namespace llrm
