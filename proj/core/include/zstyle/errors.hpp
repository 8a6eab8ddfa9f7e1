#pragma once

#include <stdexcept>
#include <string>

namespace zstyle {

// Shared error taxonomy. Messages are single-line and carry a stable prefix
// so the CLI can map each category to a distinct exit code.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched extents or rank.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

// Input outside an operation's mathematical domain.
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error("domain error: " + msg) {}
};

// Invalid configuration value or combination.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

// A pluggable component (denoiser, override, extractor) broke its contract.
struct ContractError : Error {
    explicit ContractError(const std::string& msg) : Error("contract error: " + msg) {}
};

struct TrainingError : Error {
    explicit TrainingError(const std::string& msg) : Error("training error: " + msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error("usage error: " + msg) {}
};

}  // namespace zstyle
