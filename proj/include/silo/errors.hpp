#pragma once

#include <stdexcept>
#include <string>

namespace silo {

// Base class for all recoverable failures raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration: unknown channel labels, bad bounds, missing keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Dataset schema or content problems (missing channels, malformed rows).
class DataError : public Error {
public:
    using Error::Error;
};

// Invalid numeric input to a model operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Numerical blow-up during a simulation or observer run. `step` is the
// index of the failing step when known, -1 otherwise.
class IntegrationError : public Error {
public:
    explicit IntegrationError(const std::string& what, long step = -1)
        : Error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

// xbridge wire-protocol violations (handshake, framing, dimensions).
class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace silo
