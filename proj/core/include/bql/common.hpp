#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace bql {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

//----------------------------------------------------------------------------
// Error hierarchy. Every failure surfaced by the library derives from Error so
// that callers (the Monte Carlo harness in particular) can isolate failures.
//----------------------------------------------------------------------------
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration values (negative intensities, k_n > b_n, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Not enough (or inconsistent) observations.
class DataError : public Error {
public:
    using Error::Error;
};

/// Factorization or finite-difference failure.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, long block = -1)
        : Error(what), block_(block) {}
    /// 1-based block index the failure refers to, or -1.
    long block() const noexcept { return block_; }

private:
    long block_;
};

/// Every optimizer start failed.
class EstimationError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; carries the 1-based offending line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

/// Axis-aligned parameter box clos(Lambda).
struct Box {
    Vec lower;
    Vec upper;

    Box() = default;
    Box(Vec lo, Vec hi);

    Eigen::Index dim() const { return lower.size(); }
    bool contains(const Vec& x) const;
    Vec project(const Vec& x) const;
    Vec width() const { return upper - lower; }
};

/// SplitMix64 finalizer; used to derive independent seeds from (seed, stream).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Hessian by central differences of `grad` with h_j = 1e-4 (1 + |x_j|), symmetrized.
Mat central_hessian(const std::function<Vec(const Vec&)>& grad, const Vec& x);

}  // namespace bql
