// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "rmdp_lab/model.hpp"
#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/// Default max-norm tolerance for fixed-point evaluations.
inline constexpr prec_t kFixedPointTol = 1e-12;
/// Default relative tolerance for deciding which models attain the max cost.
inline constexpr prec_t kActiveTol = 1e-9;
/// Cap on the number of product models materialized by flatten_uncertainty.
inline constexpr std::size_t kFlattenCap = 4096;

/**
 * Everything policy evaluation yields for one fixed model (c, P):
 * the value vector V with (I - gamma P_pi) V = c_pi, action values
 * Q(s,a) = c(s,a) + gamma sum_{s'} P(s'|s,a) V(s'), the advantage
 * A(s,a) = V(s) - Q(s,a), the discounted state occupancy
 * d = (1-gamma)(I - gamma P_pi^T)^{-1} mu, the state-action occupancy
 * d(s) pi(a|s), and the total discounted cost J = mu^T V.
 */
struct EvalBundle {
    numvec value;            ///< V(s)
    Matrix qvalue;           ///< Q(s, a)
    Matrix advantage;        ///< V(s) - Q(s, a)
    numvec state_occupancy;  ///< d(s), sums to 1
    Matrix occupancy;        ///< d(s) * pi(a|s)
    prec_t total_cost = 0.0; ///< J = mu^T V
};

namespace detail {

inline void check_eval_inputs(const Model& model, const Policy& policy,
                              const RmdpInstance& inst) {
    if (!(inst.gamma > 0.0 && inst.gamma < 1.0))
        throw ModelError("evaluate: gamma must lie in (0, 1)");
    if (inst.mu.size() != inst.num_states)
        throw ModelError("evaluate: mu size mismatch");
    if (model.cost.rows() != inst.num_states || model.cost.cols() != inst.num_actions)
        throw ModelError("evaluate: cost shape mismatch");
    if (model.kernel.dim0() != inst.num_states ||
        model.kernel.dim1() != inst.num_actions ||
        model.kernel.dim2() != inst.num_states)
        throw ModelError("evaluate: kernel shape mismatch");
    if (policy.rows() != inst.num_states || policy.cols() != inst.num_actions)
        throw ModelError("evaluate: policy shape mismatch");
}

} // namespace detail

/**
 * Exact policy evaluation for a fixed model by dense LU with partial
 * pivoting. Cost is O(S^3); at tabular scale this is both faster and more
 * accurate than value iteration.
 *
 * @param model   cost table and transition kernel
 * @param policy  row-stochastic (states x actions) table
 * @param inst    supplies mu and gamma (uncertainty set is ignored)
 * @return        the full evaluation bundle
 */
inline EvalBundle evaluate_fixed(const Model& model, const Policy& policy,
                                 const RmdpInstance& inst) {
    detail::check_eval_inputs(model, policy, inst);
    const std::size_t S = inst.num_states, A = inst.num_actions;
    const prec_t g = inst.gamma;

    // Policy-averaged kernel and cost.
    Eigen::MatrixXd P_pi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S),
                                                 static_cast<Eigen::Index>(S));
    Eigen::VectorXd c_pi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const prec_t w = policy(s, a);
            if (w == 0.0) continue;
            c_pi(static_cast<Eigen::Index>(s)) += w * model.cost(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2)
                P_pi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s2)) +=
                    w * model.kernel(s, a, s2);
        }
    }

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(
        static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    const Eigen::MatrixXd M = I - g * P_pi;
    const Eigen::VectorXd V = Eigen::PartialPivLU<Eigen::MatrixXd>(M).solve(c_pi);

    const Eigen::Map<const Eigen::VectorXd> mu(inst.mu.data(),
                                               static_cast<Eigen::Index>(S));
    const Eigen::MatrixXd Mt = I - g * P_pi.transpose();
    const Eigen::VectorXd d =
        (1.0 - g) * Eigen::PartialPivLU<Eigen::MatrixXd>(Mt).solve(mu);

    EvalBundle out;
    out.value.assign(V.data(), V.data() + S);
    out.qvalue = Matrix(S, A);
    out.advantage = Matrix(S, A);
    out.occupancy = Matrix(S, A);
    out.state_occupancy.assign(d.data(), d.data() + S);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            prec_t q = model.cost(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2)
                q += g * model.kernel(s, a, s2) * out.value[s2];
            out.qvalue(s, a) = q;
            out.advantage(s, a) = out.value[s] - q;
            out.occupancy(s, a) = out.state_occupancy[s] * policy(s, a);
        }
    }
    out.total_cost = dot(inst.mu, out.value);
    return out;
}

/**
 * Iterative policy evaluation (Bellman fixed point) for a fixed model.
 * Provided as a cross-check for the direct solver; stops when the sup-norm
 * step is at most tol * (1-gamma) / gamma, which bounds the distance to the
 * fixed point by tol.
 */
inline numvec evaluate_fixed_vi(const Model& model, const Policy& policy,
                                const RmdpInstance& inst, prec_t tol = kFixedPointTol,
                                std::size_t max_iter = 1000000) {
    detail::check_eval_inputs(model, policy, inst);
    const std::size_t S = inst.num_states, A = inst.num_actions;
    const prec_t g = inst.gamma;
    const prec_t stop = tol * (1.0 - g) / g;
    numvec V(S, 0.0), next(S, 0.0);
    for (std::size_t it = 0; it < max_iter; ++it) {
        for (std::size_t s = 0; s < S; ++s) {
            prec_t v = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                const prec_t w = policy(s, a);
                if (w == 0.0) continue;
                prec_t q = model.cost(s, a);
                for (std::size_t s2 = 0; s2 < S; ++s2)
                    q += g * model.kernel(s, a, s2) * V[s2];
                v += w * q;
            }
            next[s] = v;
        }
        const prec_t delta = linf_dist(next, V);
        V = next;
        if (delta <= stop) return V;
    }
    throw SolveError("evaluate_fixed_vi: no convergence within max_iter");
}

/// Result of evaluating a policy against a finite set of models.
struct RobustFiniteResult {
    prec_t robust_cost = 0.0;         ///< max_m J_m
    indvec active;                    ///< models within tolerance of the max
    std::vector<EvalBundle> bundles;  ///< one bundle per model, in input order
};

/**
 * Evaluates a policy against every model of a finite set and reports the
 * worst-case cost together with the active set. A model m is active when
 * J_m >= max_k J_k - active_tol * (1 + |max_k J_k|).
 */
inline RobustFiniteResult robust_cost_finite(const std::vector<Model>& models,
                                             const Policy& policy,
                                             const RmdpInstance& inst,
                                             prec_t active_tol = kActiveTol) {
    if (models.empty())
        throw ModelError("robust_cost_finite: needs at least one model");
    RobustFiniteResult out;
    out.bundles.reserve(models.size());
    prec_t best = -std::numeric_limits<prec_t>::infinity();
    for (const Model& m : models) {
        out.bundles.push_back(evaluate_fixed(m, policy, inst));
        best = std::max(best, out.bundles.back().total_cost);
    }
    out.robust_cost = best;
    const prec_t threshold = best - active_tol * (1.0 + std::fabs(best));
    for (std::size_t i = 0; i < models.size(); ++i)
        if (out.bundles[i].total_cost >= threshold) out.active.push_back(i);
    return out;
}

/// Result of the (s,a)-rectangular fixed-point evaluator for one cost table.
struct SaRectEvalResult {
    numvec value;        ///< robust value vector V
    Tensor3 worst_kernel; ///< maximizing candidate row per (s, a)
    indvec choice;        ///< flat (s*A + a) -> chosen candidate index
};

/**
 * Robust policy evaluation under (s,a)-rectangular kernel uncertainty with a
 * fixed cost table, by iterating the robust Bellman operator
 *   (T V)(s) = sum_a pi(a|s) [ c(s,a) + gamma * max_{p in rows(s,a)} p^T V ]
 * from V = 0. The operator is a gamma-contraction in the sup norm; iteration
 * stops when the step is at most tol * (1-gamma) / gamma, so the returned V
 * is within tol of the exact fixed point. Ties in the inner max go to the
 * lowest candidate index.
 */
inline SaRectEvalResult robust_eval_sa_rect(const SaRectFiniteSet& set,
                                            const Matrix& cost, const Policy& policy,
                                            const RmdpInstance& inst,
                                            prec_t tol = kFixedPointTol) {
    const std::size_t S = inst.num_states, A = inst.num_actions;
    if (set.kernel_rows.size() != S)
        throw ModelError("robust_eval_sa_rect: kernel_rows must have one entry per state");
    if (cost.rows() != S || cost.cols() != A)
        throw ModelError("robust_eval_sa_rect: cost shape mismatch");
    if (policy.rows() != S || policy.cols() != A)
        throw ModelError("robust_eval_sa_rect: policy shape mismatch");
    const prec_t g = inst.gamma;
    const prec_t stop = tol * (1.0 - g) / g;

    numvec V(S, 0.0), next(S, 0.0);
    indvec choice(S * A, 0);
    for (std::size_t it = 0; it < 1000000; ++it) {
        for (std::size_t s = 0; s < S; ++s) {
            prec_t v = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                const auto& rows = set.kernel_rows[s][a];
                prec_t best = -std::numeric_limits<prec_t>::infinity();
                std::size_t best_i = 0;
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    const prec_t val = dot(rows[i], V);
                    if (val > best) {
                        best = val;
                        best_i = i;
                    }
                }
                choice[s * A + a] = best_i;
                v += policy(s, a) * (cost(s, a) + g * best);
            }
            next[s] = v;
        }
        const prec_t delta = linf_dist(next, V);
        V = next;
        if (delta <= stop) {
            SaRectEvalResult out;
            out.value = V;
            out.choice = choice;
            out.worst_kernel = Tensor3(S, A, S);
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t a = 0; a < A; ++a) {
                    const numvec& row = set.kernel_rows[s][a][choice[s * A + a]];
                    for (std::size_t s2 = 0; s2 < S; ++s2)
                        out.worst_kernel(s, a, s2) = row[s2];
                }
            return out;
        }
    }
    throw SolveError("robust_eval_sa_rect: no convergence within iteration cap");
}

/// Result of the r-rectangular fixed-point evaluator.
struct RRectEvalResult {
    numvec value;         ///< robust value vector V
    numvec beta;          ///< beta_i = max_w w^T V per factor
    indvec choice;        ///< chosen candidate index per factor
    Tensor3 worst_kernel; ///< kernel induced by the chosen factor candidates
};

/**
 * Robust policy evaluation under r-rectangular uncertainty by iterating
 *   (T V)(s) = sum_a pi(a|s) [ c(s,a) + gamma * sum_i phi(s,a,i) * beta_i(V) ],
 *   beta_i(V) = max_{w in factors[i]} w^T V,
 * from V = 0, with the same contraction-based stopping rule as the
 * (s,a)-rectangular evaluator. Ties go to the lowest candidate index.
 * The returned beta belongs to the final V; under a unique maximizer it is
 * shared by every worst-case kernel of the set.
 */
inline RRectEvalResult robust_eval_r_rect(const RRectSet& set, const Policy& policy,
                                          const RmdpInstance& inst,
                                          prec_t tol = kFixedPointTol) {
    const std::size_t S = inst.num_states, A = inst.num_actions;
    const std::size_t F = set.factors.size();
    if (set.phi.dim0() != S || set.phi.dim1() != A || set.phi.dim2() != F)
        throw ModelError("robust_eval_r_rect: phi shape mismatch");
    if (policy.rows() != S || policy.cols() != A)
        throw ModelError("robust_eval_r_rect: policy shape mismatch");
    const prec_t g = inst.gamma;
    const prec_t stop = tol * (1.0 - g) / g;

    numvec V(S, 0.0), next(S, 0.0), beta(F, 0.0);
    indvec choice(F, 0);
    for (std::size_t it = 0; it < 1000000; ++it) {
        for (std::size_t i = 0; i < F; ++i) {
            prec_t best = -std::numeric_limits<prec_t>::infinity();
            std::size_t best_i = 0;
            for (std::size_t c = 0; c < set.factors[i].size(); ++c) {
                const prec_t val = dot(set.factors[i][c], V);
                if (val > best) {
                    best = val;
                    best_i = c;
                }
            }
            beta[i] = best;
            choice[i] = best_i;
        }
        for (std::size_t s = 0; s < S; ++s) {
            prec_t v = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                prec_t mix = 0.0;
                for (std::size_t i = 0; i < F; ++i) mix += set.phi(s, a, i) * beta[i];
                v += policy(s, a) * (set.cost(s, a) + g * mix);
            }
            next[s] = v;
        }
        const prec_t delta = linf_dist(next, V);
        V = next;
        if (delta <= stop) {
            // Recompute beta/choice at the final V so they are consistent.
            RRectEvalResult out;
            out.value = V;
            out.beta = numvec(F);
            out.choice = indvec(F);
            for (std::size_t i = 0; i < F; ++i) {
                prec_t best = -std::numeric_limits<prec_t>::infinity();
                std::size_t best_i = 0;
                for (std::size_t c = 0; c < set.factors[i].size(); ++c) {
                    const prec_t val = dot(set.factors[i][c], V);
                    if (val > best) {
                        best = val;
                        best_i = c;
                    }
                }
                out.beta[i] = best;
                out.choice[i] = best_i;
            }
            out.worst_kernel = Tensor3(S, A, S);
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t a = 0; a < A; ++a)
                    for (std::size_t s2 = 0; s2 < S; ++s2) {
                        prec_t p = 0.0;
                        for (std::size_t i = 0; i < F; ++i)
                            p += set.phi(s, a, i) * set.factors[i][out.choice[i]][s2];
                        out.worst_kernel(s, a, s2) = p;
                    }
            return out;
        }
    }
    throw SolveError("robust_eval_r_rect: no convergence within iteration cap");
}

/// Worst-case response of the KL-regularized adversary for one row.
struct KlRowResult {
    numvec worst_row;  ///< argmax_p p^T V - tau KL(p || nominal)
    prec_t soft_value; ///< tau * log sum_s' nominal(s') exp(V(s')/tau)
};

/**
 * Closed-form worst case for a single transition row under KL regularization:
 * the maximizer of p^T V - tau KL(p || nominal) is
 *   p*(s') = nominal(s') exp(V(s')/tau) / Z,
 * and the attained value is the soft maximum tau * log Z' (computed in
 * log-space with the max subtracted, so large V/tau never overflows).
 * Entries outside the nominal support stay exactly zero.
 */
inline KlRowResult kl_worst_case(const numvec& nominal_row, const numvec& V,
                                 prec_t tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw ModelError("kl_worst_case: tau must be positive and finite");
    if (nominal_row.size() != V.size())
        throw ModelError("kl_worst_case: size mismatch");
    for (const prec_t v : V)
        if (!std::isfinite(v)) throw ModelError("kl_worst_case: non-finite value input");

    prec_t shift = -std::numeric_limits<prec_t>::infinity();
    for (std::size_t s = 0; s < V.size(); ++s)
        if (nominal_row[s] > 0.0) shift = std::max(shift, V[s] / tau);
    if (!std::isfinite(shift))
        throw ModelError("kl_worst_case: nominal row has empty support");

    KlRowResult out;
    out.worst_row.assign(V.size(), 0.0);
    prec_t z = 0.0;
    for (std::size_t s = 0; s < V.size(); ++s) {
        if (nominal_row[s] <= 0.0) continue;
        const prec_t w = nominal_row[s] * std::exp(V[s] / tau - shift);
        out.worst_row[s] = w;
        z += w;
    }
    for (prec_t& w : out.worst_row) w /= z;
    out.soft_value = tau * (shift + std::log(z));
    return out;
}

/// Result of evaluating a policy under KL-regularized uncertainty.
struct KlEvalResult {
    numvec value;          ///< fixed point of the soft Bellman operator
    Tensor3 worst_kernel;  ///< adversary's optimal kernel P*
    Matrix modified_cost;  ///< c(s,a) - gamma tau KL(P*(.|s,a) || nominal(.|s,a))
    Matrix soft_q;         ///< c(s,a) + gamma * soft value of row (s,a)
    prec_t total_cost = 0.0;
};

/**
 * Evaluates a policy under KL-regularized uncertainty by iterating the soft
 * Bellman operator
 *   (T V)(s) = sum_a pi(a|s) [ c(s,a) + gamma * tau log sum_{s'} P0(s'|s,a) e^{V(s')/tau} ]
 * to its fixed point (gamma-contraction; same stopping rule as the other
 * evaluators). The worst-case kernel P* and the KL-adjusted cost c~ returned
 * alongside constitute an equivalent fixed model: evaluating (c~, P*) with
 * evaluate_fixed reproduces the same value vector.
 */
inline KlEvalResult kl_soft_evaluate(const KlRegSet& set, const Policy& policy,
                                     const RmdpInstance& inst,
                                     prec_t tol = kFixedPointTol) {
    const std::size_t S = inst.num_states, A = inst.num_actions;
    if (set.cost.rows() != S || set.cost.cols() != A)
        throw ModelError("kl_soft_evaluate: cost shape mismatch");
    if (set.nominal.dim0() != S || set.nominal.dim1() != A || set.nominal.dim2() != S)
        throw ModelError("kl_soft_evaluate: nominal kernel shape mismatch");
    if (policy.rows() != S || policy.cols() != A)
        throw ModelError("kl_soft_evaluate: policy shape mismatch");
    const prec_t g = inst.gamma;
    const prec_t stop = tol * (1.0 - g) / g;

    numvec V(S, 0.0), next(S, 0.0);
    for (std::size_t it = 0; it < 1000000; ++it) {
        for (std::size_t s = 0; s < S; ++s) {
            prec_t v = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                if (policy(s, a) == 0.0) continue;
                const KlRowResult r = kl_worst_case(set.nominal.row(s, a), V, set.tau);
                v += policy(s, a) * (set.cost(s, a) + g * r.soft_value);
            }
            next[s] = v;
        }
        const prec_t delta = linf_dist(next, V);
        V = next;
        if (delta <= stop) break;
        if (it + 1 == 1000000)
            throw SolveError("kl_soft_evaluate: no convergence within iteration cap");
    }

    KlEvalResult out;
    out.value = V;
    out.worst_kernel = Tensor3(S, A, S);
    out.modified_cost = Matrix(S, A);
    out.soft_q = Matrix(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const numvec nominal = set.nominal.row(s, a);
            const KlRowResult r = kl_worst_case(nominal, V, set.tau);
            prec_t kl = 0.0;
            for (std::size_t s2 = 0; s2 < S; ++s2) {
                out.worst_kernel(s, a, s2) = r.worst_row[s2];
                if (r.worst_row[s2] > 0.0)
                    kl += r.worst_row[s2] * std::log(r.worst_row[s2] / nominal[s2]);
            }
            out.modified_cost(s, a) = set.cost(s, a) - g * set.tau * kl;
            out.soft_q(s, a) = set.cost(s, a) + g * r.soft_value;
        }
    }
    out.total_cost = dot(inst.mu, V);
    return out;
}

/**
 * Worst-case discounted cost of a policy over the instance's uncertainty
 * set. Dispatches on the set kind; rectangular kinds use their fixed-point
 * evaluators (maximizing over candidate cost tables where applicable).
 */
inline prec_t robust_cost(const RmdpInstance& inst, const Policy& policy,
                          prec_t tol = kFixedPointTol) {
    switch (inst.uncertainty.kind()) {
    case UncertaintyKind::finite:
        return robust_cost_finite(inst.uncertainty.finite().models, policy, inst)
            .robust_cost;
    case UncertaintyKind::sa_rect_finite: {
        const auto& u = inst.uncertainty.sa_rect();
        prec_t best = -std::numeric_limits<prec_t>::infinity();
        for (const Matrix& cost : u.costs) {
            const SaRectEvalResult r = robust_eval_sa_rect(u, cost, policy, inst, tol);
            best = std::max(best, dot(inst.mu, r.value));
        }
        return best;
    }
    case UncertaintyKind::r_rect: {
        const RRectEvalResult r =
            robust_eval_r_rect(inst.uncertainty.r_rect(), policy, inst, tol);
        return dot(inst.mu, r.value);
    }
    case UncertaintyKind::kl_reg:
        return kl_soft_evaluate(inst.uncertainty.kl_reg(), policy, inst, tol).total_cost;
    }
    throw ModelError("robust_cost: unknown uncertainty kind");
}

/**
 * Materializes a rectangular uncertainty set as the explicit finite list of
 * its product models, in a deterministic order (for (s,a)-rectangular sets:
 * cost table index slowest, then per-(s,a) candidate indices with the last
 * coordinate fastest; for r-rectangular sets: factor indices, last factor
 * fastest). Finite sets are returned as-is. Throws SolveError when the
 * product would exceed cap, and for KL-regularized sets (a continuum).
 */
inline std::vector<Model> flatten_uncertainty(const RmdpInstance& inst,
                                              std::size_t cap = kFlattenCap) {
    const std::size_t S = inst.num_states, A = inst.num_actions;
    switch (inst.uncertainty.kind()) {
    case UncertaintyKind::finite:
        return inst.uncertainty.finite().models;
    case UncertaintyKind::sa_rect_finite: {
        const auto& u = inst.uncertainty.sa_rect();
        std::size_t count = u.costs.size();
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t n = u.kernel_rows[s][a].size();
                if (count > cap / n + 1) count = cap + 1; // saturate, avoid overflow
                else count *= n;
                if (count > cap)
                    throw SolveError(
                        "flatten_uncertainty: product size exceeds cap of " +
                        std::to_string(cap));
            }
        std::vector<Model> out;
        out.reserve(count);
        indvec idx(S * A, 0);
        for (const Matrix& cost : u.costs) {
            std::fill(idx.begin(), idx.end(), 0);
            bool done = false;
            while (!done) {
                Model m;
                m.cost = cost;
                m.kernel = Tensor3(S, A, S);
                for (std::size_t s = 0; s < S; ++s)
                    for (std::size_t a = 0; a < A; ++a) {
                        const numvec& row = u.kernel_rows[s][a][idx[s * A + a]];
                        for (std::size_t s2 = 0; s2 < S; ++s2)
                            m.kernel(s, a, s2) = row[s2];
                    }
                out.push_back(std::move(m));
                // Mixed-radix increment, last coordinate fastest.
                done = true;
                for (std::size_t k = idx.size(); k-- > 0;) {
                    const std::size_t s = k / A, a = k % A;
                    if (++idx[k] < u.kernel_rows[s][a].size()) {
                        done = false;
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
        return out;
    }
    case UncertaintyKind::r_rect: {
        const auto& u = inst.uncertainty.r_rect();
        const std::size_t F = u.factors.size();
        std::size_t count = 1;
        for (std::size_t i = 0; i < F; ++i) {
            const std::size_t n = u.factors[i].size();
            if (count > cap / n + 1) count = cap + 1;
            else count *= n;
            if (count > cap)
                throw SolveError("flatten_uncertainty: product size exceeds cap of " +
                                 std::to_string(cap));
        }
        std::vector<Model> out;
        out.reserve(count);
        indvec idx(F, 0);
        bool done = false;
        while (!done) {
            Model m;
            m.cost = u.cost;
            m.kernel = Tensor3(S, A, S);
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t a = 0; a < A; ++a)
                    for (std::size_t s2 = 0; s2 < S; ++s2) {
                        prec_t p = 0.0;
                        for (std::size_t i = 0; i < F; ++i)
                            p += u.phi(s, a, i) * u.factors[i][idx[i]][s2];
                        m.kernel(s, a, s2) = p;
                    }
            out.push_back(std::move(m));
            done = true;
            for (std::size_t k = F; k-- > 0;) {
                if (++idx[k] < u.factors[k].size()) {
                    done = false;
                    break;
                }
                idx[k] = 0;
            }
        }
        return out;
    }
    case UncertaintyKind::kl_reg:
        throw SolveError("flatten_uncertainty: kl_reg sets are a continuum and "
                         "cannot be flattened to a finite model list");
    }
    throw ModelError("flatten_uncertainty: unknown uncertainty kind");
}

} // namespace rmdp_lab
