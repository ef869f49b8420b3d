// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "rmdp_lab/simplex_lp.hpp"
#include "rmdp_lab/subgrad.hpp"
#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/// Stationarity gap together with the minimizing subgradient weights.
struct GapResult {
    prec_t gap = 0.0;  ///< G(pi) >= 0; zero iff pi is stationary
    numvec alpha;      ///< weights over the active-model gradients
};

/**
 * First-order suboptimality of g over the policy polytope:
 *   linear_gap(pi, g) = max_{pi'} <pi - pi', g>
 *                     = sum_s ( <pi(.|s), g(s,.)> - min_a g(s,a) ),
 * the best linear improvement any policy offers against the fixed table g.
 */
inline prec_t linear_gap(const Policy& policy, const Matrix& g) {
    prec_t total = 0.0;
    for (std::size_t s = 0; s < policy.rows(); ++s) {
        prec_t inner = 0.0;
        prec_t lo = std::numeric_limits<prec_t>::infinity();
        for (std::size_t a = 0; a < policy.cols(); ++a) {
            inner += policy(s, a) * g(s, a);
            lo = std::min(lo, g(s, a));
        }
        total += inner - lo;
    }
    return total;
}

/// Convex combination sum_i alpha_i * vertices[i].
inline Matrix mix_vertices(const std::vector<Matrix>& vertices, const numvec& alpha) {
    if (vertices.empty() || vertices.size() != alpha.size())
        throw ModelError("mix_vertices: size mismatch");
    Matrix out(vertices.front().rows(), vertices.front().cols(), 0.0);
    for (std::size_t i = 0; i < vertices.size(); ++i)
        for (std::size_t k = 0; k < out.size(); ++k)
            out.data()[k] += alpha[i] * vertices[i].data()[k];
    return out;
}

/**
 * Stationarity gap of a policy:
 *   G(pi) = min_{g in conv(vertices)} max_{pi'} <pi - pi', g>,
 * computed as a linear program over the simplex of vertex weights alpha and
 * per-state epigraph variables t_s:
 *
 *   min_alpha,t  sum_{s,a} pi(a|s) g_alpha(s,a) - sum_s t_s
 *   s.t.         t_s <= g_alpha(s,a)           for all (s, a),
 *                alpha in the probability simplex,
 *
 * where g_alpha = sum_i alpha_i v_i. At the optimum t_s = min_a g_alpha(s,a),
 * so the objective equals G(pi). G is zero exactly when some subgradient
 * certifies first-order stationarity of pi over the policy polytope.
 */
inline GapResult stationarity_gap_from_set(const Policy& policy,
                                           const SubgradientSet& set) {
    const std::size_t k = set.vertices.size();
    if (k == 0) throw SolveError("stationarity_gap: empty subgradient set");
    const std::size_t S = policy.rows(), A = policy.cols();

    if (k == 1) {
        GapResult out;
        out.gap = linear_gap(policy, set.vertices.front());
        out.alpha = {1.0};
        return out;
    }

    // Variable layout: [ alpha (k) | u (S) | w (S) | slack z (S*A) ],
    // with t_s = u_s - w_s (free variable split).
    const std::size_t n = k + 2 * S + S * A;
    const std::size_t m = S * A + 1;
    std::vector<numvec> Alp(m, numvec(n, 0.0));
    numvec b(m, 0.0), c(n, 0.0);

    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t row = s * A + a;
            for (std::size_t i = 0; i < k; ++i) Alp[row][i] = set.vertices[i](s, a);
            Alp[row][k + s] = -1.0;          // -u_s
            Alp[row][k + S + s] = 1.0;       // +w_s
            Alp[row][k + 2 * S + row] = -1.0; // -z_{sa}
        }
    for (std::size_t i = 0; i < k; ++i) Alp[m - 1][i] = 1.0;
    b[m - 1] = 1.0;

    for (std::size_t i = 0; i < k; ++i) {
        prec_t q = 0.0;
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                q += policy(s, a) * set.vertices[i](s, a);
        c[i] = q;
    }
    for (std::size_t s = 0; s < S; ++s) {
        c[k + s] = -1.0;    // -u_s
        c[k + S + s] = 1.0; // +w_s
    }

    const LpResult lp = solve_lp_standard(std::move(Alp), std::move(b), std::move(c));
    GapResult out;
    out.gap = lp.objective;
    out.alpha.assign(lp.x.begin(), lp.x.begin() + static_cast<std::ptrdiff_t>(k));
    return out;
}

/**
 * Stationarity gap of a policy for an instance: computes the subdifferential
 * (active-model gradients) and minimizes the linear improvement over its
 * convex hull. Returns the gap and the optimal vertex weights.
 */
inline GapResult stationarity_gap(const RmdpInstance& inst, const Policy& policy,
                                  prec_t active_tol = kActiveTol) {
    return stationarity_gap_from_set(policy, subdifferential(inst, policy, active_tol));
}

} // namespace rmdp_lab
