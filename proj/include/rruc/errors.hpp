#pragma once

#include <stdexcept>
#include <string>

namespace rruc {

/// Malformed input: bad file, bad field, or a violated data invariant.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The problem as posed has no feasible commitment.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(std::string constraint, const std::string& what)
        : std::runtime_error(what), constraint_(std::move(constraint)) {}

    /// Name of the constraint that cannot be met ("reserve", "demand", ...).
    const std::string& constraint() const noexcept { return constraint_; }

private:
    std::string constraint_;
};

}  // namespace rruc
