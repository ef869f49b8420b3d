// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <cstddef>
#include <vector>

#include "rmdp_lab/constants.hpp"
#include "rmdp_lab/evaluate.hpp"
#include "rmdp_lab/model.hpp"
#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/**
 * Exact policy gradient of the fixed-model cost J_{c,P} with respect to the
 * policy table, read as a free (states x actions) variable:
 *   dJ / dpi(a|s) = d(s) * Q(s,a) / (1 - gamma),
 * where d is the discounted state occupancy of pi under P.
 */
inline Matrix policy_gradient(const Model& model, const Policy& policy,
                              const RmdpInstance& inst) {
    const EvalBundle b = evaluate_fixed(model, policy, inst);
    const std::size_t S = inst.num_states, A = inst.num_actions;
    Matrix grad(S, A);
    const prec_t scale = 1.0 / (1.0 - inst.gamma);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            grad(s, a) = scale * b.state_occupancy[s] * b.qvalue(s, a);
    return grad;
}

/// Same as policy_gradient but reuses an existing evaluation bundle.
inline Matrix policy_gradient_from_bundle(const EvalBundle& b,
                                          const RmdpInstance& inst) {
    const std::size_t S = b.qvalue.rows(), A = b.qvalue.cols();
    Matrix grad(S, A);
    const prec_t scale = 1.0 / (1.0 - inst.gamma);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            grad(s, a) = scale * b.state_occupancy[s] * b.qvalue(s, a);
    return grad;
}

/**
 * A polytope of subgradients: the convex hull of the fixed-model gradients
 * taken at the worst-case models that attain the robust cost. `vertices`
 * holds one gradient table per active model; `active_models` gives the
 * indices of those models in the flattened model list (for finite and
 * flattenable rectangular sets) or is {0} for KL-regularized sets, whose
 * adversary has a unique smooth response.
 */
struct SubgradientSet {
    std::vector<Matrix> vertices;
    indvec active_models;
    prec_t robust_cost = 0.0;
};

/**
 * The subdifferential of the robust cost at a policy, as the convex hull of
 * active-model gradients (a max-of-smooth composition). For finite sets the
 * active set is determined by active_tol; rectangular sets are flattened
 * first (subject to the product cap); KL-regularized sets contribute the
 * single gradient of their equivalent fixed model — the adversary response
 * is unique, so the robust cost is differentiable there.
 */
inline SubgradientSet subdifferential(const RmdpInstance& inst, const Policy& policy,
                                      prec_t active_tol = kActiveTol) {
    SubgradientSet out;
    switch (inst.uncertainty.kind()) {
    case UncertaintyKind::finite:
    case UncertaintyKind::sa_rect_finite:
    case UncertaintyKind::r_rect: {
        const std::vector<Model> models = flatten_uncertainty(inst);
        const RobustFiniteResult r = robust_cost_finite(models, policy, inst, active_tol);
        out.robust_cost = r.robust_cost;
        out.active_models = r.active;
        out.vertices.reserve(r.active.size());
        for (const std::size_t m : r.active)
            out.vertices.push_back(policy_gradient_from_bundle(r.bundles[m], inst));
        return out;
    }
    case UncertaintyKind::kl_reg: {
        const KlEvalResult kl =
            kl_soft_evaluate(inst.uncertainty.kl_reg(), policy, inst);
        Model equivalent;
        equivalent.cost = kl.modified_cost;
        equivalent.kernel = kl.worst_kernel;
        out.robust_cost = kl.total_cost;
        out.active_models = {0};
        out.vertices.push_back(policy_gradient(equivalent, policy, inst));
        return out;
    }
    }
    throw ModelError("subdifferential: unknown uncertainty kind");
}

/// Uniform average of the vertices of a subgradient set.
inline Matrix average_subgradient(const SubgradientSet& set) {
    if (set.vertices.empty())
        throw SolveError("average_subgradient: empty subgradient set");
    const std::size_t S = set.vertices.front().rows();
    const std::size_t A = set.vertices.front().cols();
    Matrix avg(S, A, 0.0);
    for (const Matrix& v : set.vertices)
        for (std::size_t i = 0; i < avg.size(); ++i) avg.data()[i] += v.data()[i];
    const prec_t w = 1.0 / static_cast<prec_t>(set.vertices.size());
    for (std::size_t i = 0; i < avg.size(); ++i) avg.data()[i] *= w;
    return avg;
}

} // namespace rmdp_lab
