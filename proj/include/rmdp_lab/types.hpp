// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmdp_lab {

/// Default precision used throughout the library.
using prec_t = double;
/// Dense vector of values.
using numvec = std::vector<prec_t>;
/// Vector of indices (states, actions, model ids).
using indvec = std::vector<std::size_t>;

/// Tolerance used when validating that probability vectors sum to one.
inline constexpr prec_t kProbTol = 1e-12;

/**
 * Base class for all errors raised by the library. Carries a plain
 * human-readable message; subclasses indicate which contract was violated.
 */
class RmdpError : public std::runtime_error {
public:
    explicit RmdpError(const std::string& message) : std::runtime_error(message) {}
};

/// Raised when a model, instance, or policy fails structural validation
/// (dimension mismatches, invalid distributions, discount out of range, ...).
class ModelError : public RmdpError {
public:
    explicit ModelError(const std::string& message) : RmdpError(message) {}
};

/// Raised when text input (instance JSON, DIMACS CNF, policy files) cannot be
/// parsed; the message names the offending location when known.
class ParseError : public RmdpError {
public:
    explicit ParseError(const std::string& message) : RmdpError(message) {}
};

/// Raised when an algorithm cannot complete: non-convergence, enumeration
/// caps exceeded, infeasible or unbounded linear programs, unsupported
/// operation for an uncertainty kind.
class SolveError : public RmdpError {
public:
    explicit SolveError(const std::string& message) : RmdpError(message) {}
};

/**
 * Minimal dense row-major matrix. Used for cost tables, policies, action
 * values and gradients, which are all (states x actions) tables. Values are
 * stored in a flat vector so the type serializes and compares trivially.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, prec_t fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, numvec values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        if (data_.size() != rows_ * cols_)
            throw ModelError("Matrix: data size " + std::to_string(data_.size()) +
                             " does not match shape " + std::to_string(rows_) + "x" +
                             std::to_string(cols_));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    prec_t& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    prec_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    numvec& data() { return data_; }
    const numvec& data() const { return data_; }

    /// Returns row r as a freshly allocated vector.
    numvec row(std::size_t r) const {
        return numvec(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
                      data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_));
    }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    numvec data_;
};

/**
 * Minimal dense rank-3 tensor, row-major in the last index. Used for
 * transition kernels indexed as (state, action, next state) and for factor
 * coefficient tables indexed as (state, action, factor).
 */
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t d0, std::size_t d1, std::size_t d2, prec_t fill = 0.0)
        : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, fill) {}

    std::size_t dim0() const { return d0_; }
    std::size_t dim1() const { return d1_; }
    std::size_t dim2() const { return d2_; }
    std::size_t size() const { return data_.size(); }

    prec_t& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * d1_ + j) * d2_ + k];
    }
    prec_t operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * d1_ + j) * d2_ + k];
    }

    numvec& data() { return data_; }
    const numvec& data() const { return data_; }

    /// Returns the slice (i, j, :) as a freshly allocated vector.
    numvec row(std::size_t i, std::size_t j) const {
        const std::size_t off = (i * d1_ + j) * d2_;
        return numvec(data_.begin() + static_cast<std::ptrdiff_t>(off),
                      data_.begin() + static_cast<std::ptrdiff_t>(off + d2_));
    }

    bool operator==(const Tensor3& other) const = default;

private:
    std::size_t d0_ = 0;
    std::size_t d1_ = 0;
    std::size_t d2_ = 0;
    numvec data_;
};

/// Inner product of two equally sized vectors.
inline prec_t dot(const numvec& a, const numvec& b) {
    prec_t s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Max-norm distance between two equally sized vectors.
inline prec_t linf_dist(const numvec& a, const numvec& b) {
    prec_t m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const prec_t d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > m) m = d;
    }
    return m;
}

/// Euclidean norm of a vector.
inline prec_t l2_norm(const numvec& a) {
    prec_t s = 0.0;
    for (const prec_t x : a) s += x * x;
    return std::sqrt(s);
}

} // namespace rmdp_lab
