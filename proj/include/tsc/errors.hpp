#pragma once

#include <stdexcept>
#include <string>

namespace tsc {

// Exit-code contract used by the CLI: 2 config, 3 data, 4 numeric.
class Error : public std::runtime_error {
public:
    Error(std::string msg, int exit_code)
        : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg, 2) {}
};

// Tensor/layer width mismatches.
class ShapeError : public ConfigError {
public:
    explicit ShapeError(const std::string& msg) : ConfigError(msg) {}
};

// Backward requested without a recorded forward pass, and similar misuse.
class StateError : public ConfigError {
public:
    explicit StateError(const std::string& msg) : ConfigError(msg) {}
};

// Topology documents that fail schema or referential checks.
class ValidationError : public ConfigError {
public:
    explicit ValidationError(const std::string& msg) : ConfigError(msg) {}
};

class ActionError : public ConfigError {
public:
    explicit ActionError(const std::string& msg) : ConfigError(msg) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg, 3) {}
};

class RoutingError : public DataError {
public:
    explicit RoutingError(const std::string& msg) : DataError(msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg, 4) {}
};

class SingularityError : public NumericError {
public:
    explicit SingularityError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace tsc
