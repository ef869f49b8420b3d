// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "rmdp_lab/constants.hpp"
#include "rmdp_lab/instances.hpp"
#include "rmdp_lab/model.hpp"
#include "rmdp_lab/projection.hpp"
#include "rmdp_lab/rng.hpp"
#include "rmdp_lab/types.hpp"

#include "oracles.hpp"

using namespace rmdp_lab;

TEST_CASE("matrix and tensor shapes and access", "[core]") {
    Matrix m(2, 3, 1.5);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    m(1, 2) = -4.0;
    REQUIRE(m(1, 2) == -4.0);
    REQUIRE(m(0, 0) == 1.5);

    Tensor3 t(2, 3, 4);
    t(1, 2, 3) = 7.0;
    REQUIRE(t(1, 2, 3) == 7.0);
    REQUIRE(t(0, 0, 0) == 0.0);
}

TEST_CASE("rng streams are deterministic and in range", "[core]") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 1000; ++i) {
        const prec_t u = a.uniform();
        REQUIRE(u == b.uniform());
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    // A different seed gives a different stream.
    Rng a2(42);
    bool differs = false;
    for (int i = 0; i < 10; ++i) differs = differs || (a2.uniform() != c.uniform());
    REQUIRE(differs);
}

TEST_CASE("rng dirichlet rows are distributions", "[core]") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        const numvec p = rng.dirichlet(4);
        prec_t sum = 0.0;
        for (const prec_t x : p) {
            REQUIRE(x >= 0.0);
            sum += x;
        }
        REQUIRE(std::fabs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("rng uniform_index covers the range", "[core]") {
    Rng rng(11);
    std::set<std::size_t> seen;
    for (int i = 0; i < 200; ++i) {
        const std::size_t k = rng.uniform_index(3);
        REQUIRE(k < 3);
        seen.insert(k);
    }
    REQUIRE(seen.size() == 3);
    REQUIRE_THROWS_AS(rng.uniform_index(0), ModelError);
}

TEST_CASE("simplex projection matches bisection oracle", "[core]") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        numvec v(4);
        for (prec_t& x : v) x = rng.uniform(-3.0, 3.0);
        const numvec p = project_simplex(v);
        const numvec q = oracle::project_simplex_bisect(v);
        prec_t sum = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            REQUIRE(p[k] >= 0.0);
            sum += p[k];
            REQUIRE(std::fabs(p[k] - q[k]) < 1e-9);
        }
        REQUIRE(std::fabs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("simplex projection fixes feasible points exactly", "[core]") {
    const numvec p = {0.3, 0.45, 0.25};
    const numvec q = project_simplex(p);
    // Bitwise identity: projecting a distribution must not perturb it.
    REQUIRE(q == p);
}

TEST_CASE("simplex projection closed forms", "[core]") {
    // All mass pulled to the largest coordinate when it dominates by > 1.
    const numvec q = project_simplex({5.0, 0.0, 0.0});
    REQUIRE(q[0] == 1.0);
    REQUIRE(q[1] == 0.0);
    REQUIRE(q[2] == 0.0);
    // Symmetric vector projects to the uniform distribution.
    const numvec u = project_simplex({2.0, 2.0});
    REQUIRE(std::fabs(u[0] - 0.5) < 1e-15);
    REQUIRE(std::fabs(u[1] - 0.5) < 1e-15);
}

TEST_CASE("projection is a contraction toward the simplex", "[core]") {
    Rng rng(17);
    for (int i = 0; i < 50; ++i) {
        numvec v(3), w(3);
        for (prec_t& x : v) x = rng.uniform(-2.0, 2.0);
        for (prec_t& x : w) x = rng.uniform(-2.0, 2.0);
        const numvec pv = project_simplex(v), pw = project_simplex(w);
        prec_t dp = 0.0, dv = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            dp += (pv[k] - pw[k]) * (pv[k] - pw[k]);
            dv += (v[k] - w[k]) * (v[k] - w[k]);
        }
        REQUIRE(dp <= dv + 1e-12);
    }
}

TEST_CASE("policy validation rejects malformed tables", "[core]") {
    Policy bad = uniform_policy(3, 2);
    bad(0, 0) = 0.7; // row no longer sums to one
    REQUIRE_THROWS_AS(validate_policy(bad, 3, 2), ModelError);
    Policy neg = uniform_policy(3, 2);
    neg(1, 0) = -0.25;
    neg(1, 1) = 1.25;
    REQUIRE_THROWS_AS(validate_policy(neg, 3, 2), ModelError);
    Policy wrong_shape = uniform_policy(2, 2);
    REQUIRE_THROWS_AS(validate_policy(wrong_shape, 3, 2), ModelError);
    REQUIRE_NOTHROW(validate_policy(uniform_policy(3, 2), 3, 2));
}

TEST_CASE("instance validation rejects broken kernels and costs", "[core]") {
    RmdpInstance inst = build_counterexample();
    REQUIRE_NOTHROW(validate_instance(inst));
    auto& models = std::get<FiniteSet>(inst.uncertainty.value).models;
    models[0].kernel(0, 0, 0) = 0.5; // row sums to 0.5 now
    REQUIRE_THROWS_AS(validate_instance(inst), ModelError);

    RmdpInstance bad_gamma = build_counterexample();
    bad_gamma.gamma = 1.0;
    REQUIRE_THROWS_AS(validate_instance(bad_gamma), ModelError);

    RmdpInstance bad_mu = build_counterexample();
    bad_mu.mu = {0.5, 0.5, 0.5};
    REQUIRE_THROWS_AS(validate_instance(bad_mu), ModelError);
}

TEST_CASE("constants match their closed forms", "[core]") {
    const RmdpInstance inst = build_counterexample(); // gamma 0.9, A = 2
    const RateConstants k = compute_constants(inst);
    const prec_t g = 0.9;
    REQUIRE(std::fabs(k.ell - 2.0 * g * 2.0 / std::pow(1.0 - g, 3)) < 1e-9);
    REQUIRE(std::fabs(k.lip - std::sqrt(2.0) / std::pow(1.0 - g, 2)) < 1e-9);
    REQUIRE(std::fabs(k.mu_min - 0.1) < 1e-15);
    REQUIRE(std::fabs(k.dom - 1.0 / ((1.0 - g) * 0.1)) < 1e-9);
    REQUIRE(std::fabs(k.f_max - 1.0 / (1.0 - g)) < 1e-12);
    REQUIRE(std::fabs(k.nu - 1.0 / (2.0 * k.ell)) < 1e-15);
    // D' = 2 D sqrt(S) + 2 ell sqrt(A) / (1-gamma)^2.
    const prec_t dprime =
        2.0 * k.dom * std::sqrt(3.0) + 2.0 * k.ell * std::sqrt(2.0) / 0.01;
    REQUIRE(std::fabs(k.dom_moreau - dprime) < 1e-6);
    // C = D' sqrt(4/(1-gamma) + 4 gamma A^2 / (1-gamma)^7).
    const prec_t c =
        dprime * std::sqrt(4.0 / 0.1 + 4.0 * 0.9 * 4.0 / std::pow(0.1, 7));
    REQUIRE(std::fabs(k.rate - c) / c < 1e-12);

    RmdpInstance no_support = build_counterexample();
    no_support.mu = {0.5, 0.5, 0.0};
    REQUIRE_THROWS_AS(compute_constants(no_support), ModelError);
}

TEST_CASE("decay bound follows the stated closed form", "[core]") {
    const RateConstants k = compute_constants(build_counterexample());
    const prec_t expected =
        std::pow(10000.0, -0.25) *
        std::sqrt(4.0 / 0.1 + 4.0 * 0.9 * 4.0 / std::pow(0.1, 7));
    REQUIRE(std::fabs(k.stationary_decay_bound(10000) - expected) / expected <
            1e-12);
}
