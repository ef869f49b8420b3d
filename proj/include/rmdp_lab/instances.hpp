// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <cstdint>
#include <string>

#include "rmdp_lab/evaluate.hpp"
#include "rmdp_lab/model.hpp"
#include "rmdp_lab/rng.hpp"
#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

namespace detail {

/// Deterministic kernel helper: sets kernel(s, a, :) = e_target.
inline void set_edge(Tensor3& kernel, std::size_t s, std::size_t a, std::size_t target) {
    for (std::size_t s2 = 0; s2 < kernel.dim2(); ++s2) kernel(s, a, s2) = 0.0;
    kernel(s, a, target) = 1.0;
}

} // namespace detail

/// Parameters of the three-state trap construction; defaults reproduce the
/// canonical landscape with robust costs 0.505 (always-a2) and 0.1 (always-a1).
struct CounterexampleSpec {
    prec_t gamma = 0.9;
    numvec mu = {0.45, 0.45, 0.1};
};

/**
 * The three-state, two-action, two-kernel instance on which projected
 * subgradient descent gets trapped at a strictly suboptimal local minimum.
 *
 * States are (s1, s2, s+) = (0, 1, 2); the cost is +1 in s+ under either
 * action and 0 elsewhere. Both kernels are deterministic:
 *
 *   P1:  s1: a1 -> s1,  a2 -> s+      P2 is P1 with the roles of s1 and s2
 *        s2: a1 -> s1,  a2 -> s2          swapped everywhere.
 *        s+: a1 -> s1,  a2 -> s2
 *
 * The always-a2 policy is a strict local minimum with robust cost 0.505
 * (at the default discount 0.9), while always-a1 achieves 0.1; plain PSD
 * started at always-a2 stays within 3*eta of it for any small step size.
 */
inline RmdpInstance build_counterexample(const CounterexampleSpec& spec = {}) {
    const std::size_t S = 3, A = 2;
    const std::size_t s1 = 0, s2 = 1, sp = 2;

    Matrix cost(S, A, 0.0);
    cost(sp, 0) = 1.0;
    cost(sp, 1) = 1.0;

    Tensor3 p1(S, A, S), p2(S, A, S);
    detail::set_edge(p1, s1, 0, s1);
    detail::set_edge(p1, s1, 1, sp);
    detail::set_edge(p1, s2, 0, s1);
    detail::set_edge(p1, s2, 1, s2);
    detail::set_edge(p1, sp, 0, s1);
    detail::set_edge(p1, sp, 1, s2);

    detail::set_edge(p2, s2, 0, s2);
    detail::set_edge(p2, s2, 1, sp);
    detail::set_edge(p2, s1, 0, s2);
    detail::set_edge(p2, s1, 1, s1);
    detail::set_edge(p2, sp, 0, s2);
    detail::set_edge(p2, sp, 1, s1);

    RmdpInstance inst;
    inst.num_states = S;
    inst.num_actions = A;
    inst.mu = spec.mu;
    inst.gamma = spec.gamma;
    inst.uncertainty.value = FiniteSet{{Model{cost, p1}, Model{cost, p2}}};
    validate_instance(inst);
    return inst;
}

/// The always-a1 policy of the trap instance (robust cost 0.1).
inline Policy counterexample_pi1() { return deterministic_policy(3, 2, {0, 0, 0}); }

/// The always-a2 policy of the trap instance: the strict local minimum with
/// robust cost 0.505 that traps projected subgradient descent.
inline Policy counterexample_pi2() { return deterministic_policy(3, 2, {1, 1, 1}); }

/**
 * The two-coordinate perturbation family around the trap policy:
 * pi(a1|s1) = x, pi(a1|s2) = y, with the remaining mass on a2 and the
 * s+ row pinned at a2. (0, 0) is the trap policy; (1, 1) plays a1 at both
 * transient states.
 */
inline Policy counterexample_policy_xy(prec_t x, prec_t y) {
    if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
        throw ModelError("counterexample_policy_xy: coordinates must lie in [0, 1]");
    Policy pi(3, 2, 0.0);
    pi(0, 0) = x;
    pi(0, 1) = 1.0 - x;
    pi(1, 0) = y;
    pi(1, 1) = 1.0 - y;
    pi(2, 1) = 1.0;
    return pi;
}

/**
 * Copies an instance with its uncertainty set flattened to an explicit
 * finite set of models (subject to the flattening cap).
 */
inline RmdpInstance make_finite_instance(const RmdpInstance& inst,
                                         std::size_t cap = kFlattenCap) {
    RmdpInstance out;
    out.num_states = inst.num_states;
    out.num_actions = inst.num_actions;
    out.mu = inst.mu;
    out.gamma = inst.gamma;
    out.uncertainty.value = FiniteSet{flatten_uncertainty(inst, cap)};
    validate_instance(out);
    return out;
}

/**
 * Three states, one action, zero cost, two kernels that disagree only on
 * where state 0 transitions (to state 1 vs state 2); states 1 and 2 absorb.
 * Every policy has both kernels worst-case (all costs vanish), so the worst
 * kernel is NOT unique, yet all worst-case action values coincide (identically
 * zero), so the worst action value IS unique. Initial mass sits on state 0.
 */
inline RmdpInstance build_kernel_ambiguous_example(prec_t gamma = 0.9) {
    const std::size_t S = 3, A = 1;
    Matrix cost(S, A, 0.0);
    Tensor3 p1(S, A, S), p2(S, A, S);
    detail::set_edge(p1, 0, 0, 1);
    detail::set_edge(p2, 0, 0, 2);
    for (std::size_t s = 1; s < S; ++s) {
        detail::set_edge(p1, s, 0, s);
        detail::set_edge(p2, s, 0, s);
    }
    RmdpInstance inst;
    inst.num_states = S;
    inst.num_actions = A;
    inst.mu = {1.0, 0.0, 0.0};
    inst.gamma = gamma;
    inst.uncertainty.value = FiniteSet{{Model{cost, p1}, Model{cost, p2}}};
    validate_instance(inst);
    return inst;
}

/**
 * Two states, two actions, a single deterministic kernel (state 0 moves to
 * the absorbing, costless state 1 under both actions) and two mirrored cost
 * tables: c1 charges action a2 at state 0, c2 charges action a1. Under the
 * uniform policy both models are worst-case with identical kernels (so the
 * worst kernel is unique) but their action values at (s0, a1) differ: 0
 * under c1 versus 1 under c2 — the worst action value is NOT unique.
 */
inline RmdpInstance build_cost_ambiguous_example(prec_t gamma = 0.9) {
    const std::size_t S = 2, A = 2;
    Tensor3 kernel(S, A, S);
    detail::set_edge(kernel, 0, 0, 1);
    detail::set_edge(kernel, 0, 1, 1);
    detail::set_edge(kernel, 1, 0, 1);
    detail::set_edge(kernel, 1, 1, 1);
    Matrix c1(S, A, 0.0), c2(S, A, 0.0);
    c1(0, 1) = 1.0;
    c2(0, 0) = 1.0;
    RmdpInstance inst;
    inst.num_states = S;
    inst.num_actions = A;
    inst.mu = {1.0, 0.0};
    inst.gamma = gamma;
    inst.uncertainty.value = FiniteSet{{Model{c1, kernel}, Model{c2, kernel}}};
    validate_instance(inst);
    return inst;
}

/**
 * The mirrored two-state example: state 0 is free, state 1 absorbs with
 * cost 1, and the two kernels disagree on which action keeps the agent at
 * state 0 (P1: a1 stays / a2 falls; P2: a1 falls / a2 stays). The
 * uncertainty involves a single state, so the set is s-rectangular. At the
 * coin-flip policy both kernels are worst-case and their action values
 * disagree, so neither uniqueness property holds there, yet the robust cost
 * still satisfies the gap-based dominance inequality. Initial mass on
 * state 0.
 */
inline RmdpInstance build_srect_mirror_example(prec_t gamma = 0.9) {
    const std::size_t S = 2, A = 2;
    Matrix cost(S, A, 0.0);
    cost(1, 0) = 1.0;
    cost(1, 1) = 1.0;
    Tensor3 p1(S, A, S), p2(S, A, S);
    detail::set_edge(p1, 0, 0, 0);
    detail::set_edge(p1, 0, 1, 1);
    detail::set_edge(p2, 0, 0, 1);
    detail::set_edge(p2, 0, 1, 0);
    detail::set_edge(p1, 1, 0, 1);
    detail::set_edge(p1, 1, 1, 1);
    detail::set_edge(p2, 1, 0, 1);
    detail::set_edge(p2, 1, 1, 1);
    RmdpInstance inst;
    inst.num_states = S;
    inst.num_actions = A;
    inst.mu = {1.0, 0.0};
    inst.gamma = gamma;
    inst.uncertainty.value = FiniteSet{{Model{cost, p1}, Model{cost, p2}}};
    validate_instance(inst);
    return inst;
}

/// Families supported by random_instance.
enum class RandomStructure { singleton, finite, sa_rect_finite, r_rect, kl_reg };

inline RandomStructure random_structure_from_string(const std::string& name) {
    if (name == "singleton") return RandomStructure::singleton;
    if (name == "finite") return RandomStructure::finite;
    if (name == "sa_rect_finite" || name == "sa-rect") return RandomStructure::sa_rect_finite;
    if (name == "r_rect" || name == "r-rect") return RandomStructure::r_rect;
    if (name == "kl_reg" || name == "kl") return RandomStructure::kl_reg;
    throw ParseError("unknown random structure '" + name + "'");
}

/**
 * Seeded random instance generator. Draws occur in a fixed, documented
 * order from a single Rng(seed) stream, so instances are reproducible
 * bit-for-bit across platforms:
 *
 *   1. mu: one Dirichlet draw of size num_states, mixed with the uniform
 *      floor as mu = 0.1/S + 0.9 * Dirichlet (guarantees full support);
 *   2. per model (finite kinds): cost entries row-major, each uniform in
 *      [0, 1], then kernel rows in (s, a)-lexicographic order, each a
 *      Dirichlet draw of size num_states;
 *   3. sa_rect_finite: one cost table as above, then for each (s, a) in
 *      lexicographic order, num_models candidate rows (Dirichlet);
 *   4. r_rect: one cost table, then phi rows (Dirichlet over 2 factors) in
 *      (s, a) order, then per factor num_models candidate distributions;
 *   5. kl_reg: one cost table, then nominal kernel rows as in (2);
 *      tau is fixed to 1 (adjust on the returned instance if needed).
 *
 * `num_models` means: number of models (finite), candidate rows per
 * state-action pair (sa_rect_finite), candidate distributions per factor
 * (r_rect); it is ignored for singleton and kl_reg.
 */
inline RmdpInstance random_instance(std::uint64_t seed, std::size_t num_states,
                                    std::size_t num_actions, std::size_t num_models,
                                    RandomStructure structure, prec_t gamma = 0.9) {
    if (num_states == 0 || num_actions == 0)
        throw ModelError("random_instance: dimensions must be positive");
    if (num_models == 0 && (structure == RandomStructure::finite ||
                            structure == RandomStructure::sa_rect_finite ||
                            structure == RandomStructure::r_rect))
        throw ModelError("random_instance: num_models must be positive");
    Rng rng(seed);
    const std::size_t S = num_states, A = num_actions;

    RmdpInstance inst;
    inst.num_states = S;
    inst.num_actions = A;
    inst.gamma = gamma;
    const numvec base = rng.dirichlet(S);
    inst.mu.resize(S);
    for (std::size_t s = 0; s < S; ++s)
        inst.mu[s] = 0.1 / static_cast<prec_t>(S) + 0.9 * base[s];

    auto random_cost = [&]() {
        Matrix c(S, A);
        for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform();
        return c;
    };
    auto random_kernel = [&]() {
        Tensor3 k(S, A, S);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const numvec row = rng.dirichlet(S);
                for (std::size_t s2 = 0; s2 < S; ++s2) k(s, a, s2) = row[s2];
            }
        return k;
    };

    switch (structure) {
    case RandomStructure::singleton: {
        FiniteSet u;
        u.models.push_back(Model{random_cost(), random_kernel()});
        inst.uncertainty.value = std::move(u);
        break;
    }
    case RandomStructure::finite: {
        FiniteSet u;
        for (std::size_t m = 0; m < num_models; ++m)
            u.models.push_back(Model{random_cost(), random_kernel()});
        inst.uncertainty.value = std::move(u);
        break;
    }
    case RandomStructure::sa_rect_finite: {
        SaRectFiniteSet u;
        u.costs.push_back(random_cost());
        u.kernel_rows.assign(S, std::vector<std::vector<numvec>>(A));
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t i = 0; i < num_models; ++i)
                    u.kernel_rows[s][a].push_back(rng.dirichlet(S));
        inst.uncertainty.value = std::move(u);
        break;
    }
    case RandomStructure::r_rect: {
        RRectSet u;
        u.cost = random_cost();
        const std::size_t F = 2;
        u.phi = Tensor3(S, A, F);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const numvec row = rng.dirichlet(F);
                for (std::size_t i = 0; i < F; ++i) u.phi(s, a, i) = row[i];
            }
        u.factors.assign(F, {});
        for (std::size_t i = 0; i < F; ++i)
            for (std::size_t c = 0; c < num_models; ++c)
                u.factors[i].push_back(rng.dirichlet(S));
        inst.uncertainty.value = std::move(u);
        break;
    }
    case RandomStructure::kl_reg: {
        KlRegSet u;
        u.cost = random_cost();
        u.nominal = random_kernel();
        u.tau = 1.0;
        inst.uncertainty.value = std::move(u);
        break;
    }
    }
    validate_instance(inst);
    return inst;
}

} // namespace rmdp_lab
