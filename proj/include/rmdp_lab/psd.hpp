// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "rmdp_lab/constants.hpp"
#include "rmdp_lab/projection.hpp"
#include "rmdp_lab/prox.hpp"
#include "rmdp_lab/rng.hpp"
#include "rmdp_lab/subgrad.hpp"
#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/// How PSD resolves the choice among active-model subgradients.
enum class TieBreak { first_active, average, random };

/// Step-size schedule for PSD.
enum class StepRule { one_over_sqrt_T, constant };

/// Configuration for a projected-subgradient-descent run.
struct PsdConfig {
    std::size_t iterations = 1000;            ///< T
    StepRule step_rule = StepRule::one_over_sqrt_T;
    prec_t eta = 0.0;                          ///< step size when constant
    TieBreak tie_break = TieBreak::first_active;
    std::uint64_t seed = 0;                    ///< for the random tie-break
    std::size_t record_every = 1;              ///< record t = 1, 1+r, 1+2r, ... and T
    prec_t active_tol = kActiveTol;
    std::optional<Policy> reference;           ///< track ||pi_t - ref||_inf when set
    bool track_moreau = false;                 ///< Moreau gradient norm at records
    std::optional<prec_t> moreau_nu;           ///< smoothing level (default 1/(2 ell))
    prec_t prox_inner_tol = kProxInnerTol;
    std::size_t prox_max_inner = kProxMaxInner;
};

/// One recorded PSD iterate.
struct PsdRecord {
    std::size_t t = 0;       ///< iteration index, 1-based
    Policy policy;           ///< pi_t
    prec_t cost = 0.0;       ///< J_U(pi_t)
    indvec active;           ///< active model indices at pi_t
    long chosen = -1;        ///< position chosen in `active` (-1 for average)
    prec_t ref_dist_inf = std::numeric_limits<prec_t>::quiet_NaN();
    prec_t moreau_grad_norm = std::numeric_limits<prec_t>::quiet_NaN();
};

/// Full trace and summary of a PSD run.
struct PsdTrace {
    std::vector<PsdRecord> records;
    Policy final_policy;     ///< pi_{T+1}
    prec_t final_cost = 0.0; ///< J_U(pi_{T+1})
    prec_t best_cost = std::numeric_limits<prec_t>::infinity(); ///< min_t J_U(pi_t)
    std::size_t best_t = 0;  ///< first t attaining best_cost
    prec_t max_ref_dist_inf = std::numeric_limits<prec_t>::quiet_NaN();
    prec_t min_moreau_grad_norm = std::numeric_limits<prec_t>::quiet_NaN();
    std::size_t iterations = 0;
    prec_t eta = 0.0;        ///< step size actually used
};

/**
 * Projected subgradient descent on the robust cost:
 *   pi_{t+1} = proj( pi_t - eta * g_t ),   g_t in the subdifferential at pi_t,
 * for t = 1..T, with g_t selected among the active-model gradients by the
 * configured tie-break:
 *   - first_active: the active model with the lowest index;
 *   - average:      the uniform average of all active-model gradients;
 *   - random:       a uniformly random active model, one seeded draw per
 *                   iteration with two or more active models (none otherwise,
 *                   so the stream is reproducible and documented).
 *
 * The default step size is 1/sqrt(T). Costs are tracked at every iterate;
 * best_cost/best_t give the best visited iterate over t in [T] (the final
 * policy pi_{T+1} is reported separately and not included in the minimum).
 * Records are taken at t = 1, 1+record_every, ..., and always at t = T;
 * when track_moreau is set, each record carries the Moreau-envelope gradient
 * norm at that iterate, computed by prox_point with the configured inner
 * settings.
 */
inline PsdTrace psd_run(const RmdpInstance& inst, const Policy& initial,
                        const PsdConfig& config) {
    validate_policy(initial, inst.num_states, inst.num_actions);
    if (config.iterations == 0)
        throw ModelError("psd_run: iterations must be positive");
    if (config.record_every == 0)
        throw ModelError("psd_run: record_every must be positive");
    prec_t eta = 0.0;
    switch (config.step_rule) {
    case StepRule::one_over_sqrt_T:
        eta = 1.0 / std::sqrt(static_cast<prec_t>(config.iterations));
        break;
    case StepRule::constant:
        if (!(config.eta > 0.0))
            throw ModelError("psd_run: constant step rule requires eta > 0");
        eta = config.eta;
        break;
    }
    if (config.reference)
        validate_policy(*config.reference, inst.num_states, inst.num_actions);

    Rng rng(config.seed);
    const std::size_t T = config.iterations;
    PsdTrace trace;
    trace.iterations = T;
    trace.eta = eta;
    trace.records.reserve(T / config.record_every + 2);

    Policy x = initial;
    for (std::size_t t = 1; t <= T; ++t) {
        const SubgradientSet sub = subdifferential(inst, x, config.active_tol);
        const prec_t cost = sub.robust_cost;
        if (cost < trace.best_cost) {
            trace.best_cost = cost;
            trace.best_t = t;
        }

        prec_t ref_dist = std::numeric_limits<prec_t>::quiet_NaN();
        if (config.reference) {
            ref_dist = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                ref_dist = std::max(ref_dist, std::fabs(x.data()[i] -
                                                        config.reference->data()[i]));
            if (std::isnan(trace.max_ref_dist_inf) || ref_dist > trace.max_ref_dist_inf)
                trace.max_ref_dist_inf = ref_dist;
        }

        // Subgradient selection.
        Matrix g;
        long chosen = -1;
        switch (config.tie_break) {
        case TieBreak::first_active:
            chosen = 0;
            g = sub.vertices.front();
            break;
        case TieBreak::average:
            g = average_subgradient(sub);
            break;
        case TieBreak::random: {
            const std::size_t k = sub.vertices.size();
            const std::size_t pick = k > 1 ? rng.uniform_index(k) : 0;
            chosen = static_cast<long>(pick);
            g = sub.vertices[pick];
            break;
        }
        }

        const bool due = ((t - 1) % config.record_every == 0) || t == T;
        if (due) {
            PsdRecord rec;
            rec.t = t;
            rec.policy = x;
            rec.cost = cost;
            rec.active = sub.active_models;
            rec.chosen = chosen;
            rec.ref_dist_inf = ref_dist;
            if (config.track_moreau) {
                const ProxResult pr =
                    prox_point(inst, x, config.moreau_nu, config.prox_inner_tol,
                               config.prox_max_inner, config.active_tol);
                rec.moreau_grad_norm = pr.moreau_grad_norm;
                if (std::isnan(trace.min_moreau_grad_norm) ||
                    pr.moreau_grad_norm < trace.min_moreau_grad_norm)
                    trace.min_moreau_grad_norm = pr.moreau_grad_norm;
            }
            trace.records.push_back(std::move(rec));
        }

        Matrix moved(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i)
            moved.data()[i] = x.data()[i] - eta * g.data()[i];
        x = project_policy(moved);
    }

    trace.final_policy = x;
    trace.final_cost = robust_cost(inst, x);
    return trace;
}

/// Comparison of the recorded Moreau gradient norms against the theoretical
/// best-iterate decay bound for T iterations at step 1/sqrt(T).
struct MoreauDecayReport {
    prec_t min_norm = std::numeric_limits<prec_t>::quiet_NaN();
    prec_t bound = 0.0;
    bool within = false;
    std::size_t iterations = 0;
};

/**
 * Summarizes a track_moreau PSD trace: the smallest recorded Moreau-envelope
 * gradient norm, the decay bound T^{-1/4} * sqrt(4/(1-gamma) +
 * 4 gamma A^2/(1-gamma)^7), and whether the recorded minimum stays within it.
 */
inline MoreauDecayReport moreau_decay_report(const PsdTrace& trace,
                                             const RateConstants& constants) {
    MoreauDecayReport out;
    out.iterations = trace.iterations;
    out.bound = constants.stationary_decay_bound(trace.iterations);
    out.min_norm = trace.min_moreau_grad_norm;
    out.within = !std::isnan(out.min_norm) && out.min_norm <= out.bound;
    return out;
}

} // namespace rmdp_lab
