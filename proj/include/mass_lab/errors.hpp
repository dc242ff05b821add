#pragma once

#include <stdexcept>
#include <string>

namespace mass_lab {

// Base of every error raised by the library. The CLI maps SolverError to
// exit status 3 and everything else to 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class CapabilityError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class MeshError : public Error {
public:
    using Error::Error;
};

class DegeneracyError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

class EmbeddingError : public PreconditionError {
public:
    EmbeddingError(const std::string& what, double witness_theta)
        : PreconditionError(what), witness_theta_(witness_theta) {}
    [[nodiscard]] double witness_theta() const noexcept { return witness_theta_; }

private:
    double witness_theta_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mass_lab
