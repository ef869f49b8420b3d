// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <algorithm>
#include <cmath>

#include "rmdp_lab/model.hpp"
#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/**
 * Euclidean projection of v onto the probability simplex
 * { p : p >= 0, sum p = 1 } by the classic sort-and-threshold rule:
 * with u = sort(v, descending) and rho the largest index such that
 * u_rho + (1 - sum_{i<=rho} u_i) / rho > 0, the projection is
 * max(v_i - theta, 0) with theta = (sum_{i<=rho} u_i - 1) / rho.
 *
 * Points already on the simplex are returned unchanged (theta = 0 up to
 * floating error; the implementation short-circuits exactness by checking
 * feasibility first so feasible inputs are bitwise preserved).
 */
inline numvec project_simplex(const numvec& v) {
    if (v.empty()) throw ModelError("project_simplex: empty vector");
    // Fast path: already feasible -> identity (keeps fixed points exact).
    prec_t total = 0.0;
    bool nonneg = true;
    for (const prec_t x : v) {
        if (!std::isfinite(x)) throw ModelError("project_simplex: non-finite entry");
        if (x < 0.0) nonneg = false;
        total += x;
    }
    if (nonneg && std::fabs(total - 1.0) <= 1e-15) return v;

    numvec u(v);
    std::sort(u.begin(), u.end(), std::greater<prec_t>());
    prec_t cum = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cum += u[i];
        const prec_t t = (cum - 1.0) / static_cast<prec_t>(i + 1);
        if (u[i] - t > 0.0) theta = t;
    }
    numvec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
    // Guard against accumulated rounding: renormalize the support mass.
    prec_t mass = 0.0;
    for (const prec_t x : out) mass += x;
    if (mass > 0.0 && std::fabs(mass - 1.0) > 1e-14)
        for (prec_t& x : out) x /= mass;
    return out;
}

/// Row-wise Euclidean projection of a (states x actions) table onto the
/// product of per-state probability simplices.
inline Policy project_policy(const Matrix& table) {
    Policy out(table.rows(), table.cols());
    for (std::size_t s = 0; s < table.rows(); ++s) {
        const numvec p = project_simplex(table.row(s));
        for (std::size_t a = 0; a < table.cols(); ++a) out(s, a) = p[a];
    }
    return out;
}

} // namespace rmdp_lab
