// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/// Solution of a standard-form linear program.
struct LpResult {
    numvec x;                ///< optimal primal point
    prec_t objective = 0.0;  ///< optimal value c^T x
};

/**
 * Dense two-phase primal simplex for standard-form problems
 *     min c^T x   s.t.  A x = b,  x >= 0,
 * with Bland's anti-cycling rule (lowest-index entering variable; ties in
 * the ratio test break toward the lowest basic variable index), which
 * guarantees finite termination. Right-hand sides may have any sign; rows
 * are flipped internally. Throws SolveError when the program is infeasible
 * or unbounded. Intended for the small, dense programs that arise from
 * stationarity-gap computations (tens of variables), not as a general
 * production LP code.
 */
class SimplexLp {
public:
    SimplexLp(std::vector<numvec> A, numvec b, numvec c)
        : m_(A.size()), n_(c.size()), A_(std::move(A)), b_(std::move(b)),
          c_(std::move(c)) {
        if (b_.size() != m_) throw ModelError("SimplexLp: b size mismatch");
        for (const numvec& row : A_)
            if (row.size() != n_) throw ModelError("SimplexLp: A row size mismatch");
        for (std::size_t i = 0; i < m_; ++i)
            if (b_[i] < 0.0) {
                b_[i] = -b_[i];
                for (prec_t& v : A_[i]) v = -v;
            }
    }

    LpResult solve() {
        build_phase1();
        run_simplex(/*phase1=*/true);
        const prec_t infeas = -tab_[m_][cols_ - 1];
        if (infeas > 1e-8)
            throw SolveError("SimplexLp: infeasible (phase-1 residual " +
                             std::to_string(infeas) + ")");
        drop_artificials();
        build_phase2_objective();
        run_simplex(/*phase1=*/false);

        LpResult out;
        out.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_) out.x[basis_[i]] = tab_[i][cols_ - 1];
        out.objective = -tab_[m_][cols_ - 1];
        return out;
    }

private:
    static constexpr prec_t kPivotEps = 1e-11;

    std::size_t m_, n_;
    std::vector<numvec> A_;
    numvec b_, c_;

    std::size_t cols_ = 0;          // usable columns + rhs
    std::size_t limit_ = 0;         // columns eligible to enter the basis
    std::vector<numvec> tab_;       // m_ constraint rows + 1 objective row
    std::vector<std::size_t> basis_;

    void build_phase1() {
        cols_ = n_ + m_ + 1;
        limit_ = n_ + m_;
        tab_.assign(m_ + 1, numvec(cols_, 0.0));
        basis_.assign(m_, 0);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) tab_[i][j] = A_[i][j];
            tab_[i][n_ + i] = 1.0;
            tab_[i][cols_ - 1] = b_[i];
            basis_[i] = n_ + i;
        }
        // Phase-1 reduced costs: minimize the sum of artificials.
        for (std::size_t j = 0; j < cols_; ++j) {
            prec_t z = 0.0;
            for (std::size_t i = 0; i < m_; ++i) z += tab_[i][j];
            tab_[m_][j] = (j >= n_ && j < n_ + m_) ? 1.0 - z : -z;
        }
    }

    void drop_artificials() {
        // Pivot basic artificials out where possible; redundant rows keep a
        // zero-level artificial, which is harmless once barred from entering.
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            std::size_t enter = n_;
            for (std::size_t j = 0; j < n_; ++j)
                if (std::fabs(tab_[i][j]) > kPivotEps) {
                    enter = j;
                    break;
                }
            if (enter < n_) pivot(i, enter);
        }
        limit_ = n_; // artificials may never re-enter
    }

    void build_phase2_objective() {
        numvec& z = tab_[m_];
        std::fill(z.begin(), z.end(), 0.0);
        for (std::size_t j = 0; j < n_; ++j) z[j] = c_[j];
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t bj = basis_[i];
            const prec_t cb = bj < n_ ? c_[bj] : 0.0;
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < cols_; ++j) z[j] -= cb * tab_[i][j];
        }
    }

    void run_simplex(bool phase1) {
        const std::size_t max_iter = 50000;
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            // Bland: entering variable = lowest index with negative reduced cost.
            std::size_t enter = limit_;
            for (std::size_t j = 0; j < limit_; ++j)
                if (tab_[m_][j] < -1e-10) {
                    enter = j;
                    break;
                }
            if (enter == limit_) return; // optimal

            // Ratio test; ties toward the lowest basic variable index.
            std::size_t leave = m_;
            prec_t best_ratio = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (tab_[i][enter] <= kPivotEps) continue;
                const prec_t ratio = tab_[i][cols_ - 1] / tab_[i][enter];
                if (leave == m_ || ratio < best_ratio - 1e-14 ||
                    (std::fabs(ratio - best_ratio) <= 1e-14 &&
                     basis_[i] < basis_[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave == m_)
                throw SolveError(phase1 ? "SimplexLp: phase-1 subproblem unbounded"
                                        : "SimplexLp: objective unbounded below");
            pivot(leave, enter);
        }
        throw SolveError("SimplexLp: iteration cap exceeded");
    }

    void pivot(std::size_t row, std::size_t col) {
        numvec& pr = tab_[row];
        const prec_t p = pr[col];
        for (prec_t& v : pr) v /= p;
        pr[col] = 1.0; // exact
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == row) continue;
            const prec_t f = tab_[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < cols_; ++j) tab_[i][j] -= f * pr[j];
            tab_[i][col] = 0.0; // exact
        }
        basis_[row] = col;
    }
};

/// Convenience wrapper: min c^T x s.t. A x = b, x >= 0.
inline LpResult solve_lp_standard(std::vector<numvec> A, numvec b, numvec c) {
    return SimplexLp(std::move(A), std::move(b), std::move(c)).solve();
}

} // namespace rmdp_lab
