#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mglstm {

/// Malformed or truncated file content. Carries the offending path and the
/// byte offset where parsing stopped.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& path, std::size_t offset, const std::string& what)
        : std::runtime_error(path + " @" + std::to_string(offset) + ": " + what),
          path_(path),
          offset_(offset) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::string path_;
    std::size_t offset_;
};

class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Depth value of 0 (no sensor return) where a valid depth is required.
class InvalidDepthError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Caller broke a documented precondition (shape mismatch, out-of-bounds rect).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A configuration value violates its documented invariant.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mglstm
