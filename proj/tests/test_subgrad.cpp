// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rmdp_lab/evaluate.hpp"
#include "rmdp_lab/instances.hpp"
#include "rmdp_lab/rng.hpp"
#include "rmdp_lab/subgrad.hpp"

#include "oracles.hpp"

using namespace rmdp_lab;

namespace {

Policy random_policy(Rng& rng, std::size_t S, std::size_t A) {
    Policy pi(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        const numvec row = rng.dirichlet(A);
        for (std::size_t a = 0; a < A; ++a) pi(s, a) = row[a];
    }
    return pi;
}

} // namespace

TEST_CASE("policy gradient matches central finite differences", "[subgrad]") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng rng(seed);
        const std::size_t S = 2 + rng.uniform_index(3); // 2..4
        const std::size_t A = 2 + rng.uniform_index(3); // 2..4
        const RmdpInstance inst =
            random_instance(seed + 100, S, A, 1, RandomStructure::singleton);
        const Model& m = inst.uncertainty.finite().models.front();
        const Policy pi = random_policy(rng, S, A);

        const Matrix g = policy_gradient(m, pi, inst);
        const Matrix fd =
            oracle::gradient_fd(m.cost, m.kernel, pi, inst.mu, inst.gamma, 1e-6);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                REQUIRE(std::fabs(g(s, a) - fd(s, a)) <=
                        1e-5 * (1.0 + std::fabs(fd(s, a))));
    }
}

TEST_CASE("gradient assembles occupancy and action values", "[subgrad]") {
    const RmdpInstance inst = build_counterexample();
    const Model& m = inst.uncertainty.finite().models.front();
    const Policy pi = uniform_policy(3, 2);
    const EvalBundle b = evaluate_fixed(m, pi, inst);
    const Matrix g = policy_gradient_from_bundle(b, inst);
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t a = 0; a < 2; ++a)
            REQUIRE(std::fabs(g(s, a) - b.state_occupancy[s] * b.qvalue(s, a) /
                                            (1.0 - inst.gamma)) < 1e-14);
}

TEST_CASE("subdifferential holds one vertex per active model", "[subgrad]") {
    const RmdpInstance inst = build_counterexample();
    const SubgradientSet at_trap = subdifferential(inst, counterexample_pi2());
    REQUIRE(at_trap.vertices.size() == 2);
    REQUIRE(at_trap.active_models == indvec{0, 1});
    REQUIRE(std::fabs(at_trap.robust_cost - 0.505) < 1e-9);

    // Tilted policy: only one model stays active.
    const SubgradientSet tilted =
        subdifferential(inst, counterexample_policy_xy(0.2, 0.0));
    REQUIRE(tilted.vertices.size() == 1);
}

TEST_CASE("subdifferential vertices are the active-model gradients", "[subgrad]") {
    const RmdpInstance inst = build_counterexample();
    const Policy pi = counterexample_pi2();
    const SubgradientSet set = subdifferential(inst, pi);
    for (std::size_t i = 0; i < set.active_models.size(); ++i) {
        const Model& m = inst.uncertainty.finite().models[set.active_models[i]];
        const Matrix g = policy_gradient(m, pi, inst);
        for (std::size_t k = 0; k < g.size(); ++k)
            REQUIRE(std::fabs(set.vertices[i].data()[k] - g.data()[k]) < 1e-12);
    }
}

TEST_CASE("kl subdifferential is the equivalent-model gradient", "[subgrad]") {
    const RmdpInstance inst = random_instance(5, 3, 2, 1, RandomStructure::kl_reg);
    Rng rng(50);
    const Policy pi = random_policy(rng, 3, 2);
    const SubgradientSet set = subdifferential(inst, pi);
    REQUIRE(set.vertices.size() == 1);
    REQUIRE(set.active_models == indvec{0});

    const KlEvalResult kl = kl_soft_evaluate(inst.uncertainty.kl_reg(), pi, inst);
    const Matrix g =
        policy_gradient(Model{kl.modified_cost, kl.worst_kernel}, pi, inst);
    for (std::size_t k = 0; k < g.size(); ++k)
        REQUIRE(std::fabs(set.vertices.front().data()[k] - g.data()[k]) < 1e-8);
}

TEST_CASE("kl gradient matches finite differences of the soft cost", "[subgrad]") {
    // Danskin: the gradient through the optimal adversary response equals
    // the gradient of the robust cost itself.
    const RmdpInstance inst = random_instance(21, 2, 2, 1, RandomStructure::kl_reg);
    Rng rng(210);
    const Policy pi = random_policy(rng, 2, 2);
    const Matrix g = subdifferential(inst, pi).vertices.front();

    const prec_t h = 1e-6;
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t a = 0; a < 2; ++a) {
            // Perturb within the simplex tangent (shift mass between the two
            // actions) to keep rows stochastic.
            Policy hi = pi, lo = pi;
            const std::size_t other = 1 - a;
            hi(s, a) += h;
            hi(s, other) -= h;
            lo(s, a) -= h;
            lo(s, other) += h;
            const prec_t jh =
                kl_soft_evaluate(inst.uncertainty.kl_reg(), hi, inst).total_cost;
            const prec_t jl =
                kl_soft_evaluate(inst.uncertainty.kl_reg(), lo, inst).total_cost;
            const prec_t directional = (jh - jl) / (2.0 * h);
            REQUIRE(std::fabs((g(s, a) - g(s, other)) - directional) <
                    1e-4 * (1.0 + std::fabs(directional)));
        }
}

TEST_CASE("average subgradient is the vertex mean", "[subgrad]") {
    const RmdpInstance inst = build_counterexample();
    const SubgradientSet set = subdifferential(inst, counterexample_pi2());
    const Matrix avg = average_subgradient(set);
    for (std::size_t k = 0; k < avg.size(); ++k)
        REQUIRE(std::fabs(avg.data()[k] - 0.5 * (set.vertices[0].data()[k] +
                                                 set.vertices[1].data()[k])) <
                1e-14);
}

TEST_CASE("rectangular subdifferentials flatten to finite sets", "[subgrad]") {
    const RmdpInstance sa =
        random_instance(9, 2, 2, 2, RandomStructure::sa_rect_finite);
    Rng rng(90);
    const Policy pi = random_policy(rng, 2, 2);
    const SubgradientSet set = subdifferential(sa, pi);
    REQUIRE(set.vertices.size() >= 1);
    const auto flat = flatten_uncertainty(sa);
    const oracle::RobustFinite ref =
        oracle::robust_finite(flat, pi, sa.mu, sa.gamma);
    REQUIRE(std::fabs(set.robust_cost - ref.robust_cost) < 1e-9);
}
