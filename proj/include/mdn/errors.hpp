#pragma once

#include <stdexcept>
#include <string>

namespace mdn {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorCategory : int {
    config = 1,
    data = 2,
    numeric = 3,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}
    ErrorCategory category() const { return category_; }
    int exit_code() const { return static_cast<int>(category_); }

private:
    ErrorCategory category_;
};

// Dimension or size mismatch between tensors.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

// Invalid option value, malformed config text, violated preconditions on settings.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

// Out-of-range labels, empty batches and similar bad-input conditions.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// A (target, bias) group or a group side required by an operation is empty.
class CoverageError : public Error {
public:
    explicit CoverageError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// Malformed file contents (bad magic, truncation).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

}  // namespace mdn
