// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <algorithm>
#include <cmath>

#include "rmdp_lab/model.hpp"
#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/**
 * Problem constants governing smoothness, Lipschitz continuity, gradient
 * dominance and the stationarity-rate bound of the robust objective for
 * costs in [0, 1]. All are derived from (S, A, gamma, mu) only:
 *
 *   ell     = 2 gamma A / (1-gamma)^3      (weak-convexity / smoothness modulus)
 *   lip     = sqrt(A) / (1-gamma)^2        (Lipschitz constant of J in pi)
 *   dom     = 1 / ((1-gamma) min_s mu(s))  (gradient-dominance constant D)
 *   dom_moreau = 2 dom sqrt(S) + 2 ell sqrt(A) / (1-gamma)^2   (D')
 *   rate    = dom_moreau * sqrt(4/(1-gamma) + 4 gamma A^2/(1-gamma)^7)
 *             (constant C in the T^{-1/4} best-iterate guarantee)
 *   f_max   = 1/(1-gamma)                  (range bound on the objective)
 *   nu      = 1/(2 ell)                    (default Moreau smoothing level)
 */
struct RateConstants {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    prec_t gamma = 0.0;
    prec_t mu_min = 0.0;

    prec_t ell = 0.0;
    prec_t lip = 0.0;
    prec_t dom = 0.0;
    prec_t dom_moreau = 0.0;
    prec_t rate = 0.0;
    prec_t f_max = 0.0;
    prec_t nu = 0.0;

    /// Best-iterate stationarity bound after T iterations with step 1/sqrt(T):
    /// T^{-1/4} * sqrt(4/(1-gamma) + 4 gamma A^2 / (1-gamma)^7).
    prec_t stationary_decay_bound(std::size_t iterations) const {
        const prec_t g = gamma;
        const prec_t A = static_cast<prec_t>(num_actions);
        const prec_t inner =
            4.0 / (1.0 - g) + 4.0 * g * A * A / std::pow(1.0 - g, 7);
        return std::pow(static_cast<prec_t>(iterations), -0.25) * std::sqrt(inner);
    }
};

/// Smoothness modulus 2 gamma A / (1-gamma)^3 from dimensions alone (does not
/// require a full-support initial distribution).
inline prec_t smoothness_modulus(prec_t gamma, std::size_t num_actions) {
    return 2.0 * gamma * static_cast<prec_t>(num_actions) / std::pow(1.0 - gamma, 3);
}

/**
 * Computes all rate constants for an instance. Requires a full-support
 * initial distribution (otherwise the dominance constant D is undefined) and
 * throws ModelError naming the requirement when it fails.
 */
inline RateConstants compute_constants(const RmdpInstance& inst) {
    if (!(inst.gamma > 0.0 && inst.gamma < 1.0))
        throw ModelError("compute_constants: gamma must lie in (0, 1)");
    if (!inst.full_support())
        throw ModelError("compute_constants: initial distribution must have full "
                         "support (min_s mu(s) > 0)");
    RateConstants k;
    k.num_states = inst.num_states;
    k.num_actions = inst.num_actions;
    k.gamma = inst.gamma;
    k.mu_min = *std::min_element(inst.mu.begin(), inst.mu.end());

    const prec_t g = inst.gamma;
    const prec_t S = static_cast<prec_t>(inst.num_states);
    const prec_t A = static_cast<prec_t>(inst.num_actions);
    k.ell = smoothness_modulus(g, inst.num_actions);
    k.lip = std::sqrt(A) / std::pow(1.0 - g, 2);
    k.dom = 1.0 / ((1.0 - g) * k.mu_min);
    k.dom_moreau = 2.0 * k.dom * std::sqrt(S) + 2.0 * k.ell * std::sqrt(A) / std::pow(1.0 - g, 2);
    k.rate = k.dom_moreau *
             std::sqrt(4.0 / (1.0 - g) + 4.0 * g * A * A / std::pow(1.0 - g, 7));
    k.f_max = 1.0 / (1.0 - g);
    k.nu = 1.0 / (2.0 * k.ell);
    return k;
}

} // namespace rmdp_lab
