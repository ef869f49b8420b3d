// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "rmdp_lab/constants.hpp"
#include "rmdp_lab/instances.hpp"
#include "rmdp_lab/psd.hpp"

#include "oracles.hpp"

using namespace rmdp_lab;

namespace {

prec_t linf_policy_dist(const Policy& a, const Policy& b) {
    prec_t out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        out = std::max(out, std::fabs(a.data()[i] - b.data()[i]));
    return out;
}

} // namespace

TEST_CASE("psd rejects degenerate configurations", "[psd]") {
    const RmdpInstance inst = build_counterexample();
    const Policy init = uniform_policy(3, 2);

    PsdConfig cfg;
    cfg.iterations = 0;
    REQUIRE_THROWS_AS(psd_run(inst, init, cfg), ModelError);

    cfg.iterations = 10;
    cfg.record_every = 0;
    REQUIRE_THROWS_AS(psd_run(inst, init, cfg), ModelError);

    cfg.record_every = 1;
    cfg.step_rule = StepRule::constant; // eta left at 0
    REQUIRE_THROWS_AS(psd_run(inst, init, cfg), ModelError);
}

TEST_CASE("psd step rules set the advertised step size", "[psd]") {
    const RmdpInstance inst = random_instance(3, 2, 2, 2, RandomStructure::finite);
    const Policy init = uniform_policy(2, 2);

    PsdConfig cfg;
    cfg.iterations = 64;
    const PsdTrace sqrt_rule = psd_run(inst, init, cfg);
    REQUIRE(sqrt_rule.eta == 1.0 / 8.0);

    cfg.step_rule = StepRule::constant;
    cfg.eta = 0.037;
    const PsdTrace fixed_rule = psd_run(inst, init, cfg);
    REQUIRE(fixed_rule.eta == 0.037);
}

TEST_CASE("psd records the advertised iterations and self-consistent costs",
          "[psd]") {
    const RmdpInstance inst = random_instance(9, 3, 2, 2, RandomStructure::finite);
    const Policy init = uniform_policy(3, 2);

    PsdConfig cfg;
    cfg.iterations = 30;
    cfg.record_every = 7;
    const PsdTrace trace = psd_run(inst, init, cfg);

    std::vector<std::size_t> expected = {1, 8, 15, 22, 29, 30};
    REQUIRE(trace.records.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        REQUIRE(trace.records[i].t == expected[i]);
        // Each record carries the iterate it claims: recomputing the robust
        // cost from the stored policy reproduces the stored cost.
        REQUIRE(std::fabs(robust_cost(inst, trace.records[i].policy) -
                          trace.records[i].cost) < 1e-12);
        REQUIRE_FALSE(trace.records[i].active.empty());
    }
    REQUIRE(trace.records.front().t == 1);
    REQUIRE(trace.records.back().t == 30);
    REQUIRE(std::fabs(robust_cost(inst, trace.final_policy) - trace.final_cost) <
            1e-12);

    // With every iterate recorded, best_cost/best_t match the record stream.
    cfg.record_every = 1;
    const PsdTrace dense = psd_run(inst, init, cfg);
    prec_t best = std::numeric_limits<prec_t>::infinity();
    std::size_t best_t = 0;
    for (const PsdRecord& r : dense.records)
        if (r.cost < best) {
            best = r.cost;
            best_t = r.t;
        }
    REQUIRE(dense.best_cost == best);
    REQUIRE(dense.best_t == best_t);
}

TEST_CASE("psd traps at the switching policy under every tie-break", "[psd]") {
    // Initialized at the always-switch policy, projected subgradient descent
    // with step 1/sqrt(T) never escapes an O(eta) neighborhood: the iterates
    // stay within 3 eta in the sup norm, for every tie-breaking rule, even
    // though a policy with a fifth of the cost exists.
    const RmdpInstance inst = build_counterexample();
    const Policy trap = counterexample_pi2();

    for (const TieBreak tb :
         {TieBreak::first_active, TieBreak::average, TieBreak::random}) {
        PsdConfig cfg;
        cfg.iterations = 1600; // eta = 0.025
        cfg.tie_break = tb;
        cfg.seed = 17;
        cfg.reference = trap;
        const PsdTrace trace = psd_run(inst, trap, cfg);

        REQUIRE(trace.max_ref_dist_inf <= 3.0 * trace.eta + 1e-12);
        REQUIRE(linf_policy_dist(trace.final_policy, trap) <=
                3.0 * trace.eta + 1e-12);
        // Nothing close to the superior always-stay policy (cost 0.1) is ever
        // visited.
        REQUIRE(trace.best_cost > 0.45);
        REQUIRE(trace.final_cost > 0.45);
    }
}

TEST_CASE("psd reference tracking matches a direct recomputation", "[psd]") {
    const RmdpInstance inst = build_counterexample();
    const Policy init = uniform_policy(3, 2);
    const Policy ref = counterexample_pi1();

    PsdConfig cfg;
    cfg.iterations = 40;
    cfg.record_every = 1;
    cfg.reference = ref;
    const PsdTrace trace = psd_run(inst, init, cfg);

    prec_t max_seen = 0.0;
    for (const PsdRecord& r : trace.records) {
        const prec_t direct = linf_policy_dist(r.policy, ref);
        REQUIRE(std::fabs(r.ref_dist_inf - direct) < 1e-15);
        max_seen = std::max(max_seen, direct);
    }
    REQUIRE(trace.max_ref_dist_inf == max_seen);

    // Without a reference, the distance fields stay NaN.
    cfg.reference.reset();
    const PsdTrace bare = psd_run(inst, init, cfg);
    REQUIRE(std::isnan(bare.max_ref_dist_inf));
    REQUIRE(std::isnan(bare.records.front().ref_dist_inf));
}

TEST_CASE("psd random tie-break is seed-reproducible", "[psd]") {
    const RmdpInstance inst = build_counterexample();
    const Policy trap = counterexample_pi2();

    PsdConfig cfg;
    cfg.iterations = 50;
    cfg.tie_break = TieBreak::random;
    cfg.record_every = 1;

    cfg.seed = 101;
    const PsdTrace a = psd_run(inst, trap, cfg);
    const PsdTrace b = psd_run(inst, trap, cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        REQUIRE(a.records[i].cost == b.records[i].cost);
        REQUIRE(a.records[i].chosen == b.records[i].chosen);
    }
    REQUIRE(linf_policy_dist(a.final_policy, b.final_policy) == 0.0);

    // A different seed picks a different active model somewhere and the
    // trajectories separate.
    cfg.seed = 102;
    const PsdTrace c = psd_run(inst, trap, cfg);
    REQUIRE(linf_policy_dist(a.final_policy, c.final_policy) > 1e-12);
}

TEST_CASE("psd random tie-break never draws when the choice is forced", "[psd]") {
    // On a singleton set there is exactly one active model at every iterate,
    // so the random rule consumes no randomness and coincides with
    // first_active regardless of seed.
    const RmdpInstance inst = random_instance(13, 3, 2, 1, RandomStructure::singleton);
    const Policy init = uniform_policy(3, 2);

    PsdConfig first;
    first.iterations = 60;
    first.tie_break = TieBreak::first_active;
    const PsdTrace base = psd_run(inst, init, first);

    PsdConfig rnd = first;
    rnd.tie_break = TieBreak::random;
    rnd.seed = 999;
    const PsdTrace drawn = psd_run(inst, init, rnd);

    REQUIRE(linf_policy_dist(base.final_policy, drawn.final_policy) == 0.0);
    REQUIRE(base.final_cost == drawn.final_cost);
    for (std::size_t i = 0; i < base.records.size(); ++i)
        REQUIRE(drawn.records[i].chosen == 0);
}

TEST_CASE("psd makes progress on an easy single-model instance", "[psd]") {
    // With mild discounting the subgradient method closes most of the gap to
    // the Bellman optimum within a few thousand iterations.
    const RmdpInstance inst =
        random_instance(27, 3, 2, 1, RandomStructure::singleton, 0.6);
    const Model& model = inst.uncertainty.finite().models.front();
    const numvec vstar = oracle::optimal_value(model, 3, 2, inst.gamma);
    const prec_t opt = dot(vstar, inst.mu);

    PsdConfig cfg;
    cfg.iterations = 4000;
    cfg.record_every = 4000;
    const PsdTrace trace = psd_run(inst, uniform_policy(3, 2), cfg);

    REQUIRE(trace.best_cost >= opt - 1e-9); // optimum is a hard floor
    REQUIRE(trace.best_cost <= opt + 0.25);
}

TEST_CASE("psd moreau tracking records the envelope gradient", "[psd]") {
    const RmdpInstance inst = build_counterexample();
    const Policy trap = counterexample_pi2();

    PsdConfig cfg;
    cfg.iterations = 8;
    cfg.record_every = 4;
    cfg.track_moreau = true;
    cfg.prox_inner_tol = 1e-7;
    cfg.prox_max_inner = 20000;
    const PsdTrace trace = psd_run(inst, trap, cfg);

    REQUIRE_FALSE(std::isnan(trace.min_moreau_grad_norm));
    prec_t min_seen = std::numeric_limits<prec_t>::infinity();
    for (const PsdRecord& r : trace.records) {
        REQUIRE_FALSE(std::isnan(r.moreau_grad_norm));
        min_seen = std::min(min_seen, r.moreau_grad_norm);
    }
    REQUIRE(trace.min_moreau_grad_norm == min_seen);
    // The trap is a stationary point, so the envelope gradient at the initial
    // record (t = 1, the trap itself) vanishes.
    REQUIRE(trace.records.front().t == 1);
    REQUIRE(trace.records.front().moreau_grad_norm < 1e-5);

    // Without tracking, the fields stay NaN.
    cfg.track_moreau = false;
    const PsdTrace bare = psd_run(inst, trap, cfg);
    REQUIRE(std::isnan(bare.min_moreau_grad_norm));
    REQUIRE(std::isnan(bare.records.front().moreau_grad_norm));
}

TEST_CASE("moreau decay report compares against the theoretical bound", "[psd]") {
    const RmdpInstance inst = build_counterexample();
    const RateConstants rc = compute_constants(inst);

    PsdConfig cfg;
    cfg.iterations = 16;
    cfg.record_every = 4;
    cfg.track_moreau = true;
    cfg.prox_inner_tol = 1e-6;
    cfg.prox_max_inner = 20000;
    const PsdTrace trace = psd_run(inst, uniform_policy(3, 2), cfg);

    const MoreauDecayReport report = moreau_decay_report(trace, rc);
    REQUIRE(report.iterations == 16);
    REQUIRE(report.bound == rc.stationary_decay_bound(16));
    REQUIRE(report.min_norm == trace.min_moreau_grad_norm);
    REQUIRE(report.within);

    // A trace without Moreau tracking cannot certify the bound.
    cfg.track_moreau = false;
    const MoreauDecayReport empty =
        moreau_decay_report(psd_run(inst, uniform_policy(3, 2), cfg), rc);
    REQUIRE_FALSE(empty.within);
    REQUIRE(std::isnan(empty.min_norm));
}
