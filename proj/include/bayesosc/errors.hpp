#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bayesosc {

// Base class for all library errors. `module_name` qualifies the origin so the
// CLI can report module-level failures distinctly.
class Error : public std::runtime_error {
public:
    Error(std::string module_name, const std::string& what)
        : std::runtime_error(module_name + ": " + what),
          module_(std::move(module_name)) {}

    const std::string& module_name() const { return module_; }

private:
    std::string module_;
};

// Invalid argument or configuration value.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Bayesian update with zero total evidence (the observation is impossible
// under the current belief and model).
class ContradictionError : public Error {
public:
    using Error::Error;
};

// A requested computation exceeds a size/budget guard.
class SizeError : public Error {
public:
    using Error::Error;
};

// An iterative solver produced non-finite state.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// A matrix factorization failed even after regularization.
class ConditioningError : public Error {
public:
    using Error::Error;
};

// Population leaked into the top truncated level beyond the configured bound.
class TruncationError : public Error {
public:
    using Error::Error;
};

// An internal consistency check failed (bug guard, not a user error).
class InternalError : public Error {
public:
    using Error::Error;
};

// Config parsing collects every problem before failing so users can fix a
// file in one pass.
class ConfigError : public Error {
public:
    ConfigError(std::string module_name, std::vector<std::string> errors)
        : Error(std::move(module_name), join(errors)),
          errors_(std::move(errors)) {}

    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& errs) {
        std::string out;
        for (size_t i = 0; i < errs.size(); ++i) {
            if (i) out += "; ";
            out += errs[i];
        }
        return out;
    }

    std::vector<std::string> errors_;
};

}  // namespace bayesosc
