#pragma once

#include <stdexcept>
#include <string>

namespace hydra {

// Base for all errors raised by the library. Subclasses tag the failure
// category so callers (and the CLI) can map them to stages/exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration value or incompatible option combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input file. Messages carry a line number where applicable.
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally invalid or insufficient data (empty trace, too few windows,
// single-class input, bad split).
class DataError : public Error {
public:
    using Error::Error;
};

// Training could not proceed (e.g. single-class training set).
class TrainError : public Error {
public:
    using Error::Error;
};

// Argument outside a mathematical domain (e.g. logit of q outside (0,1)).
class DomainError : public Error {
public:
    using Error::Error;
};

// Solver received an unusable problem (non-finite entries, shape mismatch).
class SolverError : public Error {
public:
    using Error::Error;
};

} // namespace hydra
