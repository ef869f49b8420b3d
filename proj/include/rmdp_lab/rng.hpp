// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/**
 * Deterministic random source with a fully pinned stream.
 *
 * The engine is std::mt19937_64, whose output sequence for a given seed is
 * specified exactly by the C++ standard, so every draw below is reproducible
 * bit-for-bit across platforms and standard libraries. The standard library's
 * *distributions* are deliberately not used (their streams are
 * implementation-defined); every mapping from raw 64-bit words to samples is
 * defined here:
 *
 *  - uniform():        (word >> 11) * 2^-53, a double in [0, 1).
 *  - uniform(lo, hi):  lo + (hi - lo) * uniform().
 *  - uniform_index(n): floor(uniform() * n), clamped to n - 1.
 *  - exponential():    -log1p(-uniform()), a unit-rate exponential.
 *  - dirichlet(n):     n unit exponentials normalized by their sum
 *                      (the flat Dirichlet(1, ..., 1) on the simplex).
 *
 * Each sample consumes a fixed number of engine words (one per scalar draw),
 * so interleaving calls never shifts downstream streams.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    prec_t uniform() {
        return static_cast<prec_t>(next_word() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    prec_t uniform(prec_t lo, prec_t hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in {0, ..., n-1}; n must be positive.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw ModelError("Rng::uniform_index: n must be positive");
        std::size_t i = static_cast<std::size_t>(uniform() * static_cast<prec_t>(n));
        return i >= n ? n - 1 : i;
    }

    /// Unit-rate exponential sample (always finite: uniform() < 1).
    prec_t exponential() { return -std::log1p(-uniform()); }

    /**
     * Sample from the flat Dirichlet distribution on the n-simplex, i.e. a
     * uniformly distributed stochastic vector. Consumes exactly n draws.
     */
    numvec dirichlet(std::size_t n) {
        numvec x(n);
        prec_t total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = exponential();
            total += x[i];
        }
        for (std::size_t i = 0; i < n; ++i) x[i] /= total;
        return x;
    }

    /// Raw 64-bit engine word (mt19937_64 stream).
    std::uint64_t next_word() { return state_(); }

private:
    std::mt19937_64 state_;
};

} // namespace rmdp_lab
