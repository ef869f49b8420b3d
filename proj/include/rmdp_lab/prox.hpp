// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

#include "rmdp_lab/constants.hpp"
#include "rmdp_lab/projection.hpp"
#include "rmdp_lab/stationarity.hpp"
#include "rmdp_lab/subgrad.hpp"
#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/// Default inner-solver settings for proximal-point computations.
inline constexpr prec_t kProxInnerTol = 1e-8;
inline constexpr std::size_t kProxMaxInner = 200000;

/// Result of a proximal-point computation on the robust cost.
struct ProxResult {
    Policy prox;               ///< approximate minimizer of the prox objective
    Matrix moreau_grad;        ///< (anchor - prox) / nu, the Moreau-envelope gradient
    prec_t moreau_grad_norm = 0.0; ///< Frobenius norm of moreau_grad
    prec_t prox_objective = 0.0;   ///< J_U(prox) + ||prox - anchor||^2 / (2 nu)
    bool converged = false;    ///< inner stopping rule fired before the cap
    std::size_t iterations = 0;
};

/**
 * Proximal point of the robust cost at `anchor` with smoothing level nu:
 * minimizes h(p) = J_U(p) + ||p - anchor||_F^2 / (2 nu) over the policy
 * polytope. Since J_U is ell-weakly convex, h is strongly convex with
 * modulus 1/nu - ell whenever nu < 1/ell; the default nu = 1/(2 ell) makes
 * the modulus exactly ell.
 *
 * The inner solver is projected subgradient descent with the step sizes
 * 2 / ((1/nu - ell)(k+1)) and k-weighted iterate averaging, the standard
 * scheme for strongly convex nonsmooth minimization. It stops when the
 * weighted average moves by at most inner_tol (Frobenius) between
 * iterations, or after max_inner steps (converged=false in that case). The
 * returned point is whichever of (weighted average, best visited iterate)
 * has the lower objective, so h(prox) <= h(anchor) always holds.
 *
 * The gradient of the Moreau envelope at the anchor is
 * (anchor - prox) / nu; its norm bounds the distance from zero to the
 * subdifferential of the restricted objective at the prox point, which makes
 * it a certificate of near-stationarity.
 */
inline ProxResult prox_point(const RmdpInstance& inst, const Policy& anchor,
                             std::optional<prec_t> nu_opt = std::nullopt,
                             prec_t inner_tol = kProxInnerTol,
                             std::size_t max_inner = kProxMaxInner,
                             prec_t active_tol = kActiveTol) {
    validate_policy(anchor, inst.num_states, inst.num_actions);
    const prec_t ell = smoothness_modulus(inst.gamma, inst.num_actions);
    const prec_t nu = nu_opt.value_or(1.0 / (2.0 * ell));
    if (!(nu > 0.0) || !(nu < 1.0 / ell))
        throw ModelError("prox_point: nu must lie in (0, 1/ell) for strong convexity");
    const prec_t modulus = 1.0 / nu - ell;
    const std::size_t S = inst.num_states, A = inst.num_actions;

    Policy x = anchor;       // current iterate
    Policy avg = anchor;     // k-weighted running average
    prec_t weight_sum = 0.0;
    Policy best = anchor;
    prec_t best_obj = std::numeric_limits<prec_t>::infinity();
    bool converged = false;
    std::size_t used = 0;

    for (std::size_t k = 1; k <= max_inner; ++k) {
        used = k;
        const SubgradientSet sub = subdifferential(inst, x, active_tol);
        // Objective at the current iterate (robust cost already computed).
        prec_t quad = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const prec_t d = x.data()[i] - anchor.data()[i];
            quad += d * d;
        }
        const prec_t obj = sub.robust_cost + quad / (2.0 * nu);
        if (obj < best_obj) {
            best_obj = obj;
            best = x;
        }

        // Subgradient of h at x: averaged vertex plus the proximal term.
        Matrix g = average_subgradient(sub);
        for (std::size_t i = 0; i < g.size(); ++i)
            g.data()[i] += (x.data()[i] - anchor.data()[i]) / nu;

        const prec_t step = 2.0 / (modulus * static_cast<prec_t>(k + 1));
        Matrix moved(S, A);
        for (std::size_t i = 0; i < moved.size(); ++i)
            moved.data()[i] = x.data()[i] - step * g.data()[i];
        x = project_policy(moved);

        // Update the k-weighted average and test the stopping rule.
        const prec_t w = static_cast<prec_t>(k);
        weight_sum += w;
        prec_t shift = 0.0;
        for (std::size_t i = 0; i < avg.size(); ++i) {
            const prec_t prev = avg.data()[i];
            avg.data()[i] += (w / weight_sum) * (x.data()[i] - prev);
            const prec_t d = avg.data()[i] - prev;
            shift += d * d;
        }
        if (k >= 2 && std::sqrt(shift) <= inner_tol) {
            converged = true;
            break;
        }
    }

    // Candidate 1: the weighted average (projected for safety; it is a convex
    // combination of feasible points, so this is a no-op up to rounding).
    const Policy avg_proj = project_policy(avg);
    prec_t avg_quad = 0.0;
    for (std::size_t i = 0; i < avg_proj.size(); ++i) {
        const prec_t d = avg_proj.data()[i] - anchor.data()[i];
        avg_quad += d * d;
    }
    const prec_t avg_obj = robust_cost(inst, avg_proj) + avg_quad / (2.0 * nu);

    ProxResult out;
    if (avg_obj < best_obj) {
        out.prox = avg_proj;
        out.prox_objective = avg_obj;
    } else {
        out.prox = best;
        out.prox_objective = best_obj;
    }
    out.converged = converged;
    out.iterations = used;
    out.moreau_grad = Matrix(S, A);
    prec_t norm2 = 0.0;
    for (std::size_t i = 0; i < out.moreau_grad.size(); ++i) {
        const prec_t g = (anchor.data()[i] - out.prox.data()[i]) / nu;
        out.moreau_grad.data()[i] = g;
        norm2 += g * g;
    }
    out.moreau_grad_norm = std::sqrt(norm2);
    return out;
}

} // namespace rmdp_lab
