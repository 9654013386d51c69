#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nlhj {

// Invalid problem description or configuration document.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// An operation was called with arguments that do not fit together
// (grid mismatch, too few samples, unsupported family for the call).
class UsageError : public std::logic_error {
public:
    explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

// Arithmetic outside the representable range, e.g. exp overflow.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

class BlowUpError : public std::runtime_error {
public:
    BlowUpError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, std::vector<double> residual_history)
        : std::runtime_error(what), history_(std::move(residual_history)) {}

    const std::vector<double>& residual_history() const noexcept { return history_; }
    double last_residual() const noexcept { return history_.empty() ? 0.0 : history_.back(); }

private:
    std::vector<double> history_;
};

}  // namespace nlhj
