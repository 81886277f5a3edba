#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftlabel {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or out-of-contract input (bad votes, wrong shapes, bad files).
class InputError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside an estimation routine.
class NumericError : public Error {
public:
    using Error::Error;
};

class OutOfDomainVoteError : public InputError {
public:
    OutOfDomainVoteError(std::size_t row_, std::size_t col_, int value_)
        : InputError("vote out of domain at (" + std::to_string(row_) + ", " +
                     std::to_string(col_) + "): " + std::to_string(value_)),
          row(row_), col(col_), value(value_) {}
    std::size_t row;
    std::size_t col;
    int value;
};

class TooFewSourcesError : public InputError {
public:
    explicit TooFewSourcesError(std::size_t m)
        : InputError("need at least 3 sources, got " + std::to_string(m)) {}
};

class InvalidClassError : public InputError {
public:
    InvalidClassError(int class_index, int num_classes)
        : InputError("class " + std::to_string(class_index) + " outside {1,...," +
                     std::to_string(num_classes) + "}") {}
};

class DegenerateBatchError : public InputError {
public:
    explicit DegenerateBatchError(std::size_t q)
        : InputError("covariance needs at least 2 examples, got " + std::to_string(q)) {}
};

class NotInvertibleError : public NumericError {
public:
    explicit NotInvertibleError(double condition_)
        : NumericError("matrix numerically singular (condition estimate " +
                       std::to_string(condition_) + ")"),
          condition(condition_) {}
    double condition;
};

class NoConvergenceError : public NumericError {
public:
    NoConvergenceError(const std::string& where, std::size_t iterations_, double residual_)
        : NumericError(where + " did not converge after " + std::to_string(iterations_) +
                       " iterations (residual " + std::to_string(residual_) + ")"),
          iterations(iterations_), residual(residual_) {}
    std::size_t iterations;
    double residual;
};

/// Masked z-fit has fewer constraints than unknowns.
class UnderdeterminedError : public NumericError {
public:
    UnderdeterminedError(std::size_t mask_size, std::size_t m)
        : NumericError("masked fit underdetermined: |mask| = " + std::to_string(mask_size) +
                       " < m = " + std::to_string(m)) {}
};

/// Sign-consistency graph over the mask is disconnected; carries the components.
class SignAmbiguityError : public NumericError {
public:
    explicit SignAmbiguityError(std::vector<std::vector<int>> components_)
        : NumericError("sign-consistency graph disconnected into " +
                       std::to_string(components_.size()) + " components"),
          components(std::move(components_)) {}
    std::vector<std::vector<int>> components;
};

class NonPositiveCError : public NumericError {
public:
    explicit NonPositiveCError(double c_)
        : NumericError("estimated c is not positive: " + std::to_string(c_)), c(c_) {}
    double c;
};

class NoCoverageError : public InputError {
public:
    explicit NoCoverageError(std::size_t source_)
        : InputError("source " + std::to_string(source_) +
                     " never votes; accuracy undefined"),
          source(source_) {}
    std::size_t source;
};

class LengthMismatchError : public InputError {
public:
    LengthMismatchError(std::size_t lhs, std::size_t rhs)
        : InputError("length mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)) {}
};

class TooFewExamplesError : public InputError {
public:
    TooFewExamplesError(std::size_t n, std::size_t needed)
        : InputError("too few examples: " + std::to_string(n) + " < " + std::to_string(needed)) {}
};

/// Enumeration bound exceeded in the brute-force oracle.
class TooLargeError : public InputError {
public:
    TooLargeError(std::size_t m, std::size_t bound)
        : InputError("enumeration bound exceeded: m = " + std::to_string(m) + " > " +
                     std::to_string(bound)) {}
};

/// State snapshot written by a newer format than this build understands.
class StateVersionError : public InputError {
public:
    StateVersionError(int found, int supported)
        : InputError("state format version " + std::to_string(found) +
                     " is newer than supported version " + std::to_string(supported)) {}
};

class StateNotFoundError : public InputError {
public:
    explicit StateNotFoundError(const std::string& path)
        : InputError("state file not found: " + path) {}
};

class StateIncompatibleError : public InputError {
public:
    explicit StateIncompatibleError(const std::string& why)
        : InputError("state incompatible: " + why) {}
};

}  // namespace driftlabel
