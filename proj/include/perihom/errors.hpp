#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace perihom {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// geometry
struct GeometryError : Error {
    using Error::Error;
};
struct QualityFailure : Error {
    using Error::Error;
};
struct TilingError : Error {
    using Error::Error;
};

// fem
struct EvalError : Error {
    using Error::Error;
};
struct ConstraintConflict : Error {
    using Error::Error;
};
struct NoConvergence : Error {
    using Error::Error;
};

// expression language
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " (at byte " + std::to_string(offset) + ")"), byte_offset(offset) {}
    std::size_t byte_offset;
};
struct ArityError : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};

// cell problems
struct SolvabilityViolation : Error {
    using Error::Error;
};

// corrector lab
struct MeshMismatch : Error {
    using Error::Error;
};
struct InsufficientPoints : Error {
    using Error::Error;
};

// configuration
struct ConfigError : Error {
    ConfigError(const std::string& msg, int line) : Error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    int line_number;
};
struct ValidationError : Error {
    using Error::Error;
};

}  // namespace perihom
