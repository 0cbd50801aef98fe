#pragma once

#include <stdexcept>
#include <string>

namespace pslab {

// Validation failures (bad shapes, ranges, config values). CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// File / format problems. CLI exit code 3.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values produced during optimization. CLI exit code 4.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN / Inf detected inside a computation. A ValidationError at the op level;
// the trainer rethrows it as DivergenceError when it appears mid-run.
class NonFiniteError : public ValidationError {
public:
    explicit NonFiniteError(const std::string& msg) : ValidationError(msg) {}
};

}  // namespace pslab
