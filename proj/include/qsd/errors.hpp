#pragma once

#include <stdexcept>
#include <string>

namespace qsd {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// rho(s, A) == 0: the state leaves [0, A] almost surely in one step.
class DegenerateKernelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every grid row survives with probability one, so A is never exceeded.
class VacuousThresholdError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The propagated distribution lost all of its mass in one step.
class ExtinctionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration. `field()` names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace qsd
