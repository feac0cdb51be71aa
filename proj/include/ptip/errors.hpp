#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ptip/state.hpp"

namespace ptip {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Step-size underflow, non-finite values or runaway step counts.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double t, State last)
        : Error(what), time(t), last_state(last) {}
    double time;
    State last_state;
};

/// A population went negative beyond the clamping threshold.
class NumericalViolation : public IntegrationError {
public:
    using IntegrationError::IntegrationError;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class CoexistenceUndefined : public Error {
public:
    using Error::Error;
};

class UndefinedPhase : public Error {
public:
    using Error::Error;
};

class NoCycleError : public Error {
public:
    using Error::Error;
};

class PathInvalid : public Error {
public:
    PathInvalid(const std::string& what, double r_bad) : Error(what), r(r_bad) {}
    double r;
};

class NotBistable : public Error {
public:
    using Error::Error;
};

/// Backward manifold integration failed before leaving the bounding box.
class ManifoldFailure : public Error {
public:
    ManifoldFailure(const std::string& what, std::vector<State> partial)
        : Error(what), partial_polyline(std::move(partial)) {}
    std::vector<State> partial_polyline;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

class BracketError : public Error {
public:
    using Error::Error;
};

class AmbiguousBracket : public BracketError {
public:
    using BracketError::BracketError;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class ClassificationUndefined : public Error {
public:
    using Error::Error;
};

/// Invalid configuration; `key` is the dotted path of the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string k, const std::string& what) : Error(what), key(std::move(k)) {}
    std::string key;
};

}  // namespace ptip
