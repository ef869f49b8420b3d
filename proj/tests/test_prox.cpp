// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rmdp_lab/constants.hpp"
#include "rmdp_lab/evaluate.hpp"
#include "rmdp_lab/instances.hpp"
#include "rmdp_lab/prox.hpp"
#include "rmdp_lab/rng.hpp"

#include "oracles.hpp"

using namespace rmdp_lab;

namespace {

prec_t frob_dist(const Matrix& a, const Matrix& b) {
    prec_t out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const prec_t d = a.data()[i] - b.data()[i];
        out += d * d;
    }
    return std::sqrt(out);
}

} // namespace

TEST_CASE("prox rejects smoothing levels outside (0, 1/ell)", "[prox]") {
    const RmdpInstance inst = build_cost_ambiguous_example();
    const Policy anchor = uniform_policy(2, 2);
    const prec_t ell = smoothness_modulus(inst.gamma, inst.num_actions);

    REQUIRE_THROWS_AS(prox_point(inst, anchor, 0.0), ModelError);
    REQUIRE_THROWS_AS(prox_point(inst, anchor, -1e-3), ModelError);
    REQUIRE_THROWS_AS(prox_point(inst, anchor, 1.0 / ell), ModelError);
    REQUIRE_THROWS_AS(prox_point(inst, anchor, 2.0 / ell), ModelError);
    // Strictly inside the admissible interval is fine.
    REQUIRE_NOTHROW(prox_point(inst, anchor, 0.5 / ell, 1e-6, 200));
}

TEST_CASE("prox result satisfies its defining identities", "[prox]") {
    const RmdpInstance inst = random_instance(7, 3, 2, 2, RandomStructure::finite);
    const prec_t ell = smoothness_modulus(inst.gamma, inst.num_actions);
    const prec_t nu = 0.25 / ell;
    Rng rng(11);
    Policy anchor(inst.num_states, inst.num_actions);
    for (std::size_t s = 0; s < inst.num_states; ++s) {
        const numvec row = rng.dirichlet(inst.num_actions);
        for (std::size_t a = 0; a < inst.num_actions; ++a) anchor(s, a) = row[a];
    }

    const ProxResult res = prox_point(inst, anchor, nu);

    // moreau_grad is (anchor - prox) / nu, entry by entry, and the reported
    // norm matches.
    prec_t norm2 = 0.0;
    for (std::size_t i = 0; i < anchor.size(); ++i) {
        const prec_t g = (anchor.data()[i] - res.prox.data()[i]) / nu;
        REQUIRE(std::fabs(res.moreau_grad.data()[i] - g) < 1e-12);
        norm2 += g * g;
    }
    REQUIRE(std::fabs(res.moreau_grad_norm - std::sqrt(norm2)) < 1e-12);

    // The reported objective is the prox objective at the returned point.
    const prec_t d = frob_dist(res.prox, anchor);
    const prec_t recomputed = robust_cost(inst, res.prox) + d * d / (2.0 * nu);
    REQUIRE(std::fabs(res.prox_objective - recomputed) < 1e-10);

    // The prox point never does worse than the anchor on the prox objective,
    // hence also on the raw robust cost.
    const prec_t at_anchor = robust_cost(inst, anchor);
    REQUIRE(res.prox_objective <= at_anchor + 1e-12);
    REQUIRE(robust_cost(inst, res.prox) <= at_anchor + 1e-12);

    REQUIRE(res.iterations >= 1);
    REQUIRE(res.iterations <= kProxMaxInner);
}

TEST_CASE("prox is deterministic and bounded by the Lipschitz modulus", "[prox]") {
    const RmdpInstance inst = random_instance(21, 3, 3, 2, RandomStructure::finite);
    const RateConstants rc = compute_constants(inst);
    Rng rng(5);
    Policy anchor(inst.num_states, inst.num_actions);
    for (std::size_t s = 0; s < inst.num_states; ++s) {
        const numvec row = rng.dirichlet(inst.num_actions);
        for (std::size_t a = 0; a < inst.num_actions; ++a) anchor(s, a) = row[a];
    }

    const ProxResult first = prox_point(inst, anchor);
    const ProxResult second = prox_point(inst, anchor);
    REQUIRE(first.iterations == second.iterations);
    REQUIRE(first.moreau_grad_norm == second.moreau_grad_norm);
    for (std::size_t i = 0; i < first.prox.size(); ++i)
        REQUIRE(first.prox.data()[i] == second.prox.data()[i]);

    // ||prox - anchor||^2 / (2 nu) <= J(anchor) - J(prox) <= L ||prox - anchor||
    // gives ||moreau_grad|| <= 2 L for any admissible nu.
    REQUIRE(first.moreau_grad_norm <= 2.0 * rc.lip + 1.0);
}

TEST_CASE("prox fixes the symmetric minimizer of the mirrored-cost example",
          "[prox]") {
    // J_U(pi) = max(pi(s0,a1), pi(s0,a2)); the half-half policy is the global
    // minimizer, so the prox operator must return the anchor itself and the
    // Moreau gradient must vanish.
    const RmdpInstance inst = build_cost_ambiguous_example();
    const Policy anchor = uniform_policy(2, 2);

    const ProxResult res = prox_point(inst, anchor);
    REQUIRE(res.converged);
    REQUIRE(frob_dist(res.prox, anchor) < 1e-9);
    REQUIRE(res.moreau_grad_norm < 1e-5);
}

TEST_CASE("prox certifies the trap policy as smoothed-stationary", "[prox]") {
    // The always-switch policy of the two-kernel example is a stationary point
    // of the robust cost even though it is far from optimal. Because the prox
    // objective is strongly convex and zero lies in its subdifferential at the
    // anchor, the prox point is the anchor itself: the Moreau gradient cannot
    // distinguish this trap from a genuine minimum.
    const RmdpInstance inst = build_counterexample();
    const Policy trap = counterexample_pi2();

    const ProxResult res = prox_point(inst, trap);
    REQUIRE(res.converged);
    REQUIRE(frob_dist(res.prox, trap) < 1e-9);
    REQUIRE(res.moreau_grad_norm < 1e-5);

    // An interior policy nearby is NOT stationary: its Moreau gradient is
    // bounded away from zero.
    const Policy interior = counterexample_policy_xy(0.5, 0.5);
    const ProxResult moving = prox_point(inst, interior, std::nullopt, 1e-7, 50000);
    REQUIRE(moving.moreau_grad_norm > 1e-2);
    // And the prox step strictly improves the robust cost from there.
    REQUIRE(robust_cost(inst, moving.prox) < robust_cost(inst, interior) - 1e-6);
}

TEST_CASE("prox stops early when the iteration budget is tiny", "[prox]") {
    const RmdpInstance inst = random_instance(33, 3, 2, 2, RandomStructure::finite);
    const Policy anchor = counterexample_policy_xy(0.3, 0.7);

    const ProxResult res = prox_point(inst, anchor, std::nullopt, 1e-12, 3);
    REQUIRE_FALSE(res.converged);
    REQUIRE(res.iterations == 3);
}
