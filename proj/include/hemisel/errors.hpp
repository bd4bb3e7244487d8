#pragma once

#include <stdexcept>
#include <string>

namespace hemisel {

/// Requested feature is outside what this build supports (e.g. unsupported
/// dimension or degree beyond a basis' kmax).
class capability_error : public std::runtime_error {
public:
    explicit capability_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed configuration (CLI exit code 2).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or insufficient input data (CLI exit code 3).
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure at runtime (CLI exit code 4).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace hemisel
