#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace grople {

/// Base class for everything thrown by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (ARFF, XML, CSV). Carries a 1-based line number
/// when one is known (0 otherwise).
class parse_error : public error {
public:
    parse_error(const std::string& what, std::size_t line = 0)
        : error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Matrix/vector shapes do not conform.
class dimension_error : public error {
public:
    using error::error;
};

/// An argument value violates a documented precondition.
class value_error : public error {
public:
    using error::error;
};

/// A linear solve or iterative method failed numerically (singular system,
/// NaN in iterates, eigensolver non-convergence).
class numerical_error : public error {
public:
    using error::error;
};

/// Filesystem- or stream-level failure.
class io_error : public error {
public:
    using error::error;
};

/// Experiment configuration rejected; lists every violated field.
class config_error : public error {
public:
    explicit config_error(std::vector<std::string> issues)
        : error(join(issues)), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out = "invalid configuration:";
        for (const auto& s : issues) out += "\n  - " + s;
        return out;
    }

    std::vector<std::string> issues_;
};

} // namespace grople
