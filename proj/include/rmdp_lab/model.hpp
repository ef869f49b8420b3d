// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/**
 * A single tabular cost/transition model (c, P): cost is a (states x actions)
 * table and kernel a (states x actions x states) stochastic tensor.
 */
struct Model {
    Matrix cost;    ///< cost(s, a)
    Tensor3 kernel; ///< kernel(s, a, s') = P(s' | s, a)
};

/// A finite uncertainty set: an explicit list of (cost, kernel) models.
struct FiniteSet {
    std::vector<Model> models;
};

/**
 * An (s, a)-rectangular uncertainty set with finite per-coordinate pieces:
 * a finite list of candidate cost tables and, independently for every
 * (state, action), a finite list of candidate transition rows. The induced
 * set is the product over coordinates; its kernels mix rows freely.
 */
struct SaRectFiniteSet {
    std::vector<Matrix> costs; ///< candidate cost tables (at least one)
    /// kernel_rows[s][a] = candidate rows over next states for (s, a)
    std::vector<std::vector<std::vector<numvec>>> kernel_rows;
};

/**
 * An r-rectangular uncertainty set: kernels factor as
 *   P(s' | s, a) = sum_i phi(s, a, i) * w_i(s'),
 * where phi is a fixed stochastic coefficient tensor over factors and every
 * factor distribution w_i ranges over its own finite candidate list,
 * independently across factors. The cost table is fixed.
 */
struct RRectSet {
    Matrix cost;
    Tensor3 phi; ///< phi(s, a, i), rows (s, a, :) stochastic over factors
    /// factors[i] = candidate distributions over next states for factor i
    std::vector<std::vector<numvec>> factors;
};

/**
 * A KL-regularized neighborhood of a nominal model: the adversary may pick
 * any kernel but pays tau * KL(P(.|s,a) || nominal(.|s,a)) per visit,
 * subtracted from the stage cost it collects. Worst-case responses stay
 * absolutely continuous w.r.t. the nominal rows.
 */
struct KlRegSet {
    Matrix cost;
    Tensor3 nominal;
    prec_t tau = 1.0;
};

/// Discriminant for UncertaintySet.
enum class UncertaintyKind { finite, sa_rect_finite, r_rect, kl_reg };

/**
 * Tagged union over the supported uncertainty-set families. The active
 * member is fixed at construction; kind() reports it.
 */
struct UncertaintySet {
    std::variant<FiniteSet, SaRectFiniteSet, RRectSet, KlRegSet> value;

    UncertaintyKind kind() const {
        return static_cast<UncertaintyKind>(value.index());
    }
    const FiniteSet& finite() const { return std::get<FiniteSet>(value); }
    const SaRectFiniteSet& sa_rect() const { return std::get<SaRectFiniteSet>(value); }
    const RRectSet& r_rect() const { return std::get<RRectSet>(value); }
    const KlRegSet& kl_reg() const { return std::get<KlRegSet>(value); }
};

/// Human-readable name of an uncertainty kind (used in errors and JSON).
inline std::string kind_name(UncertaintyKind k) {
    switch (k) {
    case UncertaintyKind::finite: return "finite";
    case UncertaintyKind::sa_rect_finite: return "sa_rect_finite";
    case UncertaintyKind::r_rect: return "r_rect";
    case UncertaintyKind::kl_reg: return "kl_reg";
    }
    return "unknown";
}

/**
 * A robust MDP instance: dimensions, initial distribution, discount, and an
 * uncertainty set. Validation is explicit via validate(); constructors do
 * not validate so that builders can assemble instances piecewise.
 */
struct RmdpInstance {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    numvec mu;           ///< initial state distribution
    prec_t gamma = 0.0;  ///< discount in (0, 1)
    UncertaintySet uncertainty;

    /// True when every state has positive initial mass (required by the
    /// gradient-dominance constant D).
    bool full_support() const {
        if (mu.size() != num_states || mu.empty()) return false;
        for (const prec_t m : mu)
            if (!(m > 0.0)) return false;
        return true;
    }
};

/// A (stationary, randomized) policy is a (states x actions) stochastic table.
using Policy = Matrix;

namespace detail {

inline void check_distribution(const numvec& p, const std::string& what) {
    prec_t total = 0.0;
    for (const prec_t x : p) {
        if (!std::isfinite(x) || x < -kProbTol)
            throw ModelError(what + ": entries must be finite and nonnegative");
        total += x;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw ModelError(what + ": entries sum to " + std::to_string(total) +
                         ", expected 1");
}

inline void check_kernel(const Tensor3& kernel, std::size_t ns, std::size_t na,
                         const std::string& what) {
    if (kernel.dim0() != ns || kernel.dim1() != na || kernel.dim2() != ns)
        throw ModelError(what + ": kernel shape mismatch");
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a)
            check_distribution(kernel.row(s, a),
                               what + ": row (" + std::to_string(s) + "," +
                                   std::to_string(a) + ")");
}

inline void check_cost(const Matrix& cost, std::size_t ns, std::size_t na,
                       const std::string& what) {
    if (cost.rows() != ns || cost.cols() != na)
        throw ModelError(what + ": cost shape mismatch");
    for (const prec_t c : cost.data())
        if (!std::isfinite(c)) throw ModelError(what + ": cost entries must be finite");
}

} // namespace detail

/// Validates a model against instance dimensions; throws ModelError.
inline void validate_model(const Model& model, std::size_t ns, std::size_t na,
                           const std::string& what = "model") {
    detail::check_cost(model.cost, ns, na, what);
    detail::check_kernel(model.kernel, ns, na, what);
}

/// Validates a policy table: shape and row-stochasticity; throws ModelError.
inline void validate_policy(const Policy& policy, std::size_t ns, std::size_t na) {
    if (policy.rows() != ns || policy.cols() != na)
        throw ModelError("policy: shape mismatch, expected " + std::to_string(ns) +
                         "x" + std::to_string(na));
    for (std::size_t s = 0; s < ns; ++s)
        detail::check_distribution(policy.row(s), "policy row " + std::to_string(s));
}

/// Validates every component of an instance; throws ModelError on failure.
inline void validate_instance(const RmdpInstance& inst) {
    const std::size_t ns = inst.num_states, na = inst.num_actions;
    if (ns == 0 || na == 0)
        throw ModelError("instance: num_states and num_actions must be positive");
    if (!(inst.gamma > 0.0 && inst.gamma < 1.0))
        throw ModelError("instance: gamma must lie in (0, 1)");
    if (inst.mu.size() != ns) throw ModelError("instance: mu size mismatch");
    detail::check_distribution(inst.mu, "instance: mu");

    switch (inst.uncertainty.kind()) {
    case UncertaintyKind::finite: {
        const auto& u = inst.uncertainty.finite();
        if (u.models.empty())
            throw ModelError("finite uncertainty set: needs at least one model");
        for (std::size_t m = 0; m < u.models.size(); ++m)
            validate_model(u.models[m], ns, na, "model " + std::to_string(m));
        break;
    }
    case UncertaintyKind::sa_rect_finite: {
        const auto& u = inst.uncertainty.sa_rect();
        if (u.costs.empty())
            throw ModelError("sa-rect set: needs at least one cost table");
        for (std::size_t i = 0; i < u.costs.size(); ++i)
            detail::check_cost(u.costs[i], ns, na, "sa-rect cost " + std::to_string(i));
        if (u.kernel_rows.size() != ns)
            throw ModelError("sa-rect set: kernel_rows must have one entry per state");
        for (std::size_t s = 0; s < ns; ++s) {
            if (u.kernel_rows[s].size() != na)
                throw ModelError("sa-rect set: kernel_rows[" + std::to_string(s) +
                                 "] must have one entry per action");
            for (std::size_t a = 0; a < na; ++a) {
                const auto& rows = u.kernel_rows[s][a];
                if (rows.empty())
                    throw ModelError("sa-rect set: empty candidate list at (" +
                                     std::to_string(s) + "," + std::to_string(a) + ")");
                for (const numvec& row : rows) {
                    if (row.size() != ns)
                        throw ModelError("sa-rect set: candidate row size mismatch");
                    detail::check_distribution(row, "sa-rect candidate row");
                }
            }
        }
        break;
    }
    case UncertaintyKind::r_rect: {
        const auto& u = inst.uncertainty.r_rect();
        detail::check_cost(u.cost, ns, na, "r-rect cost");
        const std::size_t nf = u.factors.size();
        if (nf == 0) throw ModelError("r-rect set: needs at least one factor");
        if (u.phi.dim0() != ns || u.phi.dim1() != na || u.phi.dim2() != nf)
            throw ModelError("r-rect set: phi shape mismatch");
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t a = 0; a < na; ++a)
                detail::check_distribution(u.phi.row(s, a),
                                           "r-rect phi row (" + std::to_string(s) +
                                               "," + std::to_string(a) + ")");
        for (std::size_t i = 0; i < nf; ++i) {
            if (u.factors[i].empty())
                throw ModelError("r-rect set: factor " + std::to_string(i) +
                                 " has no candidates");
            for (const numvec& w : u.factors[i]) {
                if (w.size() != ns)
                    throw ModelError("r-rect set: factor candidate size mismatch");
                detail::check_distribution(w, "r-rect factor candidate");
            }
        }
        break;
    }
    case UncertaintyKind::kl_reg: {
        const auto& u = inst.uncertainty.kl_reg();
        detail::check_cost(u.cost, ns, na, "kl-reg cost");
        detail::check_kernel(u.nominal, ns, na, "kl-reg nominal");
        if (!(u.tau > 0.0) || !std::isfinite(u.tau))
            throw ModelError("kl-reg set: tau must be positive and finite");
        break;
    }
    }
}

/// The uniform policy: every action equally likely in every state.
inline Policy uniform_policy(std::size_t ns, std::size_t na) {
    return Policy(ns, na, 1.0 / static_cast<prec_t>(na));
}

/// Deterministic policy playing action(s) = actions[s].
inline Policy deterministic_policy(std::size_t ns, std::size_t na, const indvec& actions) {
    if (actions.size() != ns)
        throw ModelError("deterministic_policy: one action per state required");
    Policy pi(ns, na, 0.0);
    for (std::size_t s = 0; s < ns; ++s) {
        if (actions[s] >= na) throw ModelError("deterministic_policy: action out of range");
        pi(s, actions[s]) = 1.0;
    }
    return pi;
}

/// Deterministic policy playing the same action everywhere.
inline Policy constant_policy(std::size_t ns, std::size_t na, std::size_t action) {
    return deterministic_policy(ns, na, indvec(ns, action));
}

} // namespace rmdp_lab
