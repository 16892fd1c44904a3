#pragma once

#include <stdexcept>
#include <string>

namespace hydra {

// Bad usage or configuration. CLI exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data. CLI exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem and serialization failures. CLI exit code 3.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint files that open but do not decode.
struct CheckpointError : IoError {
    explicit CheckpointError(const std::string& msg) : IoError(msg) {}
};

}  // namespace hydra
