#pragma once

#include <stdexcept>
#include <string>

namespace ponderlab {

// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Contrastive extraction produced a (near-)zero aggregate difference.
struct DegenerateContrast : Error {
    explicit DegenerateContrast(const std::string& msg) : Error(msg) {}
};

struct SerializationError : Error {
    explicit SerializationError(const std::string& msg) : Error(msg) {}
};

} // namespace ponderlab
