// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "rmdp_lab/cnf.hpp"
#include "rmdp_lab/instances.hpp"
#include "rmdp_lab/model.hpp"
#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/// Which encoding of a 3-CNF formula into a robust MDP is used.
enum class ReductionVariant { finite_p, sa_rect };

inline std::string reduction_variant_name(ReductionVariant v) {
    return v == ReductionVariant::finite_p ? "finite_p" : "sa_rect";
}

/**
 * A 3-CNF formula encoded as a robust MDP, together with the bookkeeping
 * needed to translate between assignments and policies. The instance is
 * constructed so that satisfiable formulas admit a policy with robust cost
 * exactly 0 while unsatisfiable formulas force a robust cost of at least
 * `threshold` for every policy — so comparing the optimal robust cost to the
 * threshold decides satisfiability.
 */
struct ReductionArtifact {
    RmdpInstance instance;
    CnfFormula formula;
    ReductionVariant variant = ReductionVariant::finite_p;
    std::size_t ini_state = 0;
    indvec clause_states;       ///< one per clause, in clause order
    indvec var_states;          ///< one per variable, in variable order
    std::size_t zero_sink = 0;  ///< finite_p only: absorbing zero-cost state
    std::size_t cost_sink = 0;  ///< finite_p only: absorbing unit-cost state
    prec_t threshold = 0.0;     ///< unsat cost floor
};

namespace detail {

/// Per-clause polarity lookup: +1 positive, -1 negative, 0 absent.
/// Throws when a variable occurs in both polarities within one clause (such
/// tautological clauses cannot be encoded: the construction must give the
/// variable's state a single polarity-dependent row per clause kernel).
inline std::vector<int> clause_polarities(const CnfFormula& f, std::size_t m) {
    std::vector<int> pol(f.num_vars, 0);
    for (const int lit : f.clauses[m]) {
        const std::size_t v = static_cast<std::size_t>(lit > 0 ? lit : -lit) - 1;
        const int p = lit > 0 ? 1 : -1;
        if (pol[v] != 0 && pol[v] != p)
            throw ModelError("reduction: clause " + std::to_string(m + 1) +
                             " contains variable " + std::to_string(v + 1) +
                             " in both polarities and cannot be encoded; "
                             "remove tautological clauses first");
        pol[v] = p;
    }
    return pol;
}

inline void check_formula(const CnfFormula& f) {
    for (std::size_t m = 0; m < f.clauses.size(); ++m) {
        for (const int lit : f.clauses[m]) {
            if (lit == 0) throw ModelError("reduction: zero literal in clause");
            const std::size_t v = static_cast<std::size_t>(lit > 0 ? lit : -lit);
            if (v > f.num_vars)
                throw ModelError("reduction: literal out of range in clause " +
                                 std::to_string(m + 1));
        }
        clause_polarities(f, m); // rejects tautological clauses
    }
    if (f.clauses.empty())
        throw ModelError("reduction: formula has no clauses (vacuously satisfiable; "
                         "nothing to encode)");
}

} // namespace detail

/**
 * Encodes a 3-CNF formula as a robust MDP with one deterministic kernel per
 * clause (a finite uncertainty set; costs are shared).
 *
 * Layout: an initial state, one state per clause, one state per variable,
 * a zero-cost absorbing sink and a unit-cost absorbing sink; 3 actions.
 * Under kernel m the initial state moves to clause m's state (all actions);
 * every clause state sends action i to the state of the variable in its
 * i-th literal (identically across kernels); a variable state under kernel
 * m sends the truth-assigning action (action 0 = "true"; actions 1 and 2 =
 * "false") to the zero sink when that value satisfies the variable's
 * occurrence in clause m and to the cost sink otherwise (variables absent
 * from clause m get the positive pattern; they are unreachable under that
 * kernel).
 *
 * A policy that encodes a satisfying assignment reaches the zero sink under
 * every kernel (robust cost 0); when the formula is unsatisfiable every
 * policy pays at least 0.5 gamma^3 / (1-gamma) — the threshold stored in
 * the artifact.
 */
inline ReductionArtifact build_reduction_finite_p(const CnfFormula& f,
                                                  prec_t gamma = 0.9) {
    detail::check_formula(f);
    const std::size_t M = f.clauses.size(), N = f.num_vars;
    const std::size_t S = 1 + M + N + 2, A = 3;

    ReductionArtifact art;
    art.formula = f;
    art.variant = ReductionVariant::finite_p;
    art.ini_state = 0;
    art.clause_states.resize(M);
    for (std::size_t m = 0; m < M; ++m) art.clause_states[m] = 1 + m;
    art.var_states.resize(N);
    for (std::size_t v = 0; v < N; ++v) art.var_states[v] = 1 + M + v;
    art.zero_sink = 1 + M + N;
    art.cost_sink = 1 + M + N + 1;
    art.threshold = 0.5 * gamma * gamma * gamma / (1.0 - gamma);

    Matrix cost(S, A, 0.0);
    for (std::size_t a = 0; a < A; ++a) cost(art.cost_sink, a) = 1.0;

    FiniteSet u;
    for (std::size_t m = 0; m < M; ++m) {
        Tensor3 kernel(S, A, S);
        for (std::size_t a = 0; a < A; ++a)
            detail::set_edge(kernel, art.ini_state, a, art.clause_states[m]);
        for (std::size_t c = 0; c < M; ++c)
            for (std::size_t i = 0; i < A; ++i) {
                const int lit = f.clauses[c][i];
                const std::size_t v = static_cast<std::size_t>(lit > 0 ? lit : -lit) - 1;
                detail::set_edge(kernel, art.clause_states[c], i, art.var_states[v]);
            }
        const std::vector<int> pol = detail::clause_polarities(f, m);
        for (std::size_t v = 0; v < N; ++v) {
            const bool positive = pol[v] >= 0; // absent variables: positive pattern
            const std::size_t on_true = positive ? art.zero_sink : art.cost_sink;
            const std::size_t on_false = positive ? art.cost_sink : art.zero_sink;
            detail::set_edge(kernel, art.var_states[v], 0, on_true);
            detail::set_edge(kernel, art.var_states[v], 1, on_false);
            detail::set_edge(kernel, art.var_states[v], 2, on_false);
        }
        for (std::size_t a = 0; a < A; ++a) {
            detail::set_edge(kernel, art.zero_sink, a, art.zero_sink);
            detail::set_edge(kernel, art.cost_sink, a, art.cost_sink);
        }
        u.models.push_back(Model{cost, std::move(kernel)});
    }

    art.instance.num_states = S;
    art.instance.num_actions = A;
    art.instance.mu.assign(S, 0.0);
    art.instance.mu[art.ini_state] = 1.0;
    art.instance.gamma = gamma;
    art.instance.uncertainty.value = std::move(u);
    validate_instance(art.instance);
    return art;
}

/**
 * Encodes a 3-CNF formula as a robust MDP with an (s,a)-rectangular
 * uncertainty set: the kernel is ambiguous only at the initial state (one
 * candidate row per clause, identical for every action) and there is one
 * candidate cost table per clause.
 *
 * Layout: an initial state, one state per clause, one absorbing state per
 * variable; 3 actions. Clause states send action i to the state of their
 * i-th literal's variable (a single candidate row); variable states absorb.
 * Cost table m charges -1/(1-gamma) at every other clause state (making
 * clause m the adversary's unique best choice at the initial state), zero
 * at clause m's state, and at the variable states of clause m's literals it
 * charges 1 on the actions that violate the literal (action 0 asserts
 * "true", actions 1 and 2 assert "false").
 *
 * Satisfiable formulas admit robust cost 0; unsatisfiable ones force at
 * least 0.5 gamma^2 / (1-gamma) — the threshold stored in the artifact.
 */
inline ReductionArtifact build_reduction_sa_rect(const CnfFormula& f,
                                                 prec_t gamma = 0.9) {
    detail::check_formula(f);
    const std::size_t M = f.clauses.size(), N = f.num_vars;
    const std::size_t S = 1 + M + N, A = 3;

    ReductionArtifact art;
    art.formula = f;
    art.variant = ReductionVariant::sa_rect;
    art.ini_state = 0;
    art.clause_states.resize(M);
    for (std::size_t m = 0; m < M; ++m) art.clause_states[m] = 1 + m;
    art.var_states.resize(N);
    for (std::size_t v = 0; v < N; ++v) art.var_states[v] = 1 + M + v;
    art.zero_sink = S; // not used by this variant
    art.cost_sink = S;
    art.threshold = 0.5 * gamma * gamma / (1.0 - gamma);

    SaRectFiniteSet u;
    u.kernel_rows.assign(S, std::vector<std::vector<numvec>>(A));
    auto unit_row = [S](std::size_t target) {
        numvec row(S, 0.0);
        row[target] = 1.0;
        return row;
    };
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t m = 0; m < M; ++m)
            u.kernel_rows[art.ini_state][a].push_back(unit_row(art.clause_states[m]));
        for (std::size_t c = 0; c < M; ++c) {
            const int lit = f.clauses[c][a];
            const std::size_t v = static_cast<std::size_t>(lit > 0 ? lit : -lit) - 1;
            u.kernel_rows[art.clause_states[c]][a].push_back(unit_row(art.var_states[v]));
        }
        for (std::size_t v = 0; v < N; ++v)
            u.kernel_rows[art.var_states[v]][a].push_back(unit_row(art.var_states[v]));
    }

    const prec_t penalty = -1.0 / (1.0 - gamma);
    for (std::size_t m = 0; m < M; ++m) {
        Matrix cost(S, A, 0.0);
        for (std::size_t c = 0; c < M; ++c)
            if (c != m)
                for (std::size_t a = 0; a < A; ++a)
                    cost(art.clause_states[c], a) = penalty;
        const std::vector<int> pol = detail::clause_polarities(f, m);
        for (std::size_t v = 0; v < N; ++v) {
            if (pol[v] == 0) continue;
            if (pol[v] > 0) {
                cost(art.var_states[v], 1) = 1.0;
                cost(art.var_states[v], 2) = 1.0;
            } else {
                cost(art.var_states[v], 0) = 1.0;
            }
        }
        u.costs.push_back(std::move(cost));
    }

    art.instance.num_states = S;
    art.instance.num_actions = A;
    art.instance.mu.assign(S, 0.0);
    art.instance.mu[art.ini_state] = 1.0;
    art.instance.gamma = gamma;
    art.instance.uncertainty.value = std::move(u);
    validate_instance(art.instance);
    return art;
}

/// Dispatch helper over the variant enum.
inline ReductionArtifact build_reduction(const CnfFormula& f, ReductionVariant variant,
                                         prec_t gamma = 0.9) {
    return variant == ReductionVariant::finite_p ? build_reduction_finite_p(f, gamma)
                                                 : build_reduction_sa_rect(f, gamma);
}

/**
 * The deterministic policy encoding a truth assignment: variable states play
 * action 0 when their variable is true and action 1 otherwise; each clause
 * state plays the first literal position satisfied by the assignment
 * (action 0 when the clause is violated); every remaining state plays
 * action 0. For a satisfying assignment this policy attains robust cost 0.
 */
inline Policy assignment_policy(const ReductionArtifact& art,
                                const std::vector<bool>& assignment) {
    const CnfFormula& f = art.formula;
    if (assignment.size() != f.num_vars)
        throw ModelError("assignment_policy: assignment size mismatch");
    indvec actions(art.instance.num_states, 0);
    for (std::size_t v = 0; v < f.num_vars; ++v)
        actions[art.var_states[v]] = assignment[v] ? 0 : 1;
    for (std::size_t m = 0; m < f.clauses.size(); ++m) {
        std::size_t act = 0;
        for (std::size_t i = 0; i < 3; ++i) {
            const int lit = f.clauses[m][i];
            const std::size_t v = static_cast<std::size_t>(lit > 0 ? lit : -lit) - 1;
            if ((lit > 0) == assignment[v]) {
                act = i;
                break;
            }
        }
        actions[art.clause_states[m]] = act;
    }
    return deterministic_policy(art.instance.num_states, art.instance.num_actions,
                                actions);
}

/// A constrained-feasibility encoding of satisfiability: the artifact's
/// instance supplies the constraint block and `budget` the feasibility cut.
struct RcmdpFeasibility {
    ReductionArtifact artifact;
    prec_t budget = 0.0;
};

/**
 * Satisfiability as robust-constraint feasibility: using the
 * (s,a)-rectangular encoding, the robust constraint "worst-case cost <=
 * budget" with budget = 0.5 gamma^2 / (1-gamma) separates the two cases by
 * a strict margin test. A policy built from a satisfying assignment meets
 * the budget with maximal slack (cost exactly 0); when the formula is
 * unsatisfiable no policy gets strictly below the budget (the floor itself
 * remains attainable by hedging policies, so the satisfiable case is
 * recognized by cost < budget, not <=). Certifying strict feasibility is
 * therefore as hard as satisfiability.
 */
inline RcmdpFeasibility rcmdp_feasibility_instance(const CnfFormula& f,
                                                   prec_t gamma = 0.9) {
    RcmdpFeasibility out;
    out.artifact = build_reduction_sa_rect(f, gamma);
    out.budget = 0.5 * gamma * gamma / (1.0 - gamma);
    return out;
}

} // namespace rmdp_lab
