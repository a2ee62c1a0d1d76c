#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ocmdp {

/// Input has the wrong shape (row counts, table sizes, empty vectors).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Data fails a structural validity check (row sums, bound caps, bad JSON).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A two-phase slot API call arrived out of order.
class SequencingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An iterative solver hit its cap.  Carries the best iterate so callers can
/// inspect how far it got.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, std::vector<double> best_iterate)
        : std::runtime_error(what), best(std::move(best_iterate)) {}
    std::vector<double> best;
};

/// A per-slot correctness inequality failed during a checked run.
class InvariantViolation : public std::runtime_error {
public:
    InvariantViolation(const std::string& name, long slot, double lhs, double rhs)
        : std::runtime_error("invariant '" + name + "' violated at slot " +
                             std::to_string(slot) + ": lhs=" + std::to_string(lhs) +
                             " rhs=" + std::to_string(rhs)),
          invariant(name), slot(slot), lhs(lhs), rhs(rhs) {}
    std::string invariant;
    long slot;
    double lhs;
    double rhs;
};

}  // namespace ocmdp
