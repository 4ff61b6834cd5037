#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csr {

// Caller broke a documented precondition (shape mismatch, invalid label, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A gradient, loss or parameter became NaN/Inf. Carries the epoch so the
// trainer can report the last good snapshot.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(const std::string& what, int epoch)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

// Numerically undefined quantity (degenerate normalization, empty set, ...).
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace csr
