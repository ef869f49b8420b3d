// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/// Default variable cap for the exact satisfiability search.
inline constexpr std::size_t kSatVarCap = 24;

/**
 * A 3-CNF formula. Literals use DIMACS conventions: +v for variable v,
 * -v for its negation, with variables numbered 1..num_vars. Every clause
 * has exactly three literals (repetition allowed).
 */
struct CnfFormula {
    std::size_t num_vars = 0;
    std::vector<std::array<int, 3>> clauses;
};

/**
 * Parses DIMACS CNF text: optional 'c' comment lines, one 'p cnf V C'
 * header, then clauses as whitespace-separated literals each terminated by
 * 0 (clauses may span lines). Enforces the 3-literal arity, variable range,
 * and header consistency; errors carry the offending line number.
 */
inline CnfFormula parse_dimacs(std::istream& in) {
    CnfFormula out;
    bool header_seen = false;
    std::size_t declared_clauses = 0;
    std::vector<int> pending;
    std::string line;
    std::size_t lineno = 0;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "c" || first[0] == 'c') continue;
        if (first == "p") {
            if (header_seen)
                throw ParseError("dimacs line " + std::to_string(lineno) +
                                 ": duplicate header");
            std::string fmt;
            long nv = -1, nc = -1;
            if (!(ls >> fmt >> nv >> nc) || fmt != "cnf" || nv < 0 || nc < 0)
                throw ParseError("dimacs line " + std::to_string(lineno) +
                                 ": malformed header, expected 'p cnf <vars> <clauses>'");
            out.num_vars = static_cast<std::size_t>(nv);
            declared_clauses = static_cast<std::size_t>(nc);
            header_seen = true;
            continue;
        }
        if (!header_seen)
            throw ParseError("dimacs line " + std::to_string(lineno) +
                             ": clause data before 'p cnf' header");
        // Re-scan the whole line as literals (the first token included).
        std::istringstream body(line);
        int lit = 0;
        while (body >> lit) {
            if (lit == 0) {
                if (pending.size() != 3)
                    throw ParseError("dimacs line " + std::to_string(lineno) +
                                     ": clause has " + std::to_string(pending.size()) +
                                     " literals, expected exactly 3");
                out.clauses.push_back({pending[0], pending[1], pending[2]});
                pending.clear();
            } else {
                const long v = lit > 0 ? lit : -static_cast<long>(lit);
                if (static_cast<std::size_t>(v) > out.num_vars)
                    throw ParseError("dimacs line " + std::to_string(lineno) +
                                     ": literal " + std::to_string(lit) +
                                     " exceeds declared variable count");
                pending.push_back(lit);
            }
        }
        if (body.fail() && !body.eof())
            throw ParseError("dimacs line " + std::to_string(lineno) +
                             ": non-integer token in clause data");
    }
    if (!header_seen) throw ParseError("dimacs: missing 'p cnf' header");
    if (!pending.empty())
        throw ParseError("dimacs: unterminated clause at end of input");
    if (out.clauses.size() != declared_clauses)
        throw ParseError("dimacs: header declares " + std::to_string(declared_clauses) +
                         " clauses but " + std::to_string(out.clauses.size()) +
                         " were given");
    return out;
}

/// Convenience overload for in-memory text.
inline CnfFormula parse_dimacs(const std::string& text) {
    std::istringstream in(text);
    return parse_dimacs(in);
}

/// Serializes a formula back to DIMACS text (one clause per line).
inline std::string to_dimacs(const CnfFormula& f) {
    std::ostringstream out;
    out << "p cnf " << f.num_vars << ' ' << f.clauses.size() << '\n';
    for (const auto& cl : f.clauses)
        out << cl[0] << ' ' << cl[1] << ' ' << cl[2] << " 0\n";
    return out.str();
}

/// Outcome of the exact satisfiability search.
struct SatResult {
    bool satisfiable = false;
    std::vector<bool> assignment; ///< 0-indexed by variable-1; valid when satisfiable
};

namespace detail {

// assignment values: -1 unassigned, 0 false, 1 true
inline bool dpll_recurse(const CnfFormula& f, std::vector<int>& assign) {
    // Unit propagation to a fixed point.
    std::vector<std::pair<std::size_t, int>> trail; // (var index, previous value)
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& cl : f.clauses) {
            int unassigned = 0;
            int unit_lit = 0;
            bool satisfied = false;
            for (const int lit : cl) {
                const std::size_t v = static_cast<std::size_t>(lit > 0 ? lit : -lit) - 1;
                const int val = assign[v];
                if (val == -1) {
                    if (unit_lit != lit) ++unassigned; // repeated literal counts once
                    unit_lit = lit;
                } else if ((lit > 0) == (val == 1)) {
                    satisfied = true;
                    break;
                }
            }
            if (satisfied) continue;
            if (unassigned == 0) {
                for (auto it = trail.rbegin(); it != trail.rend(); ++it)
                    assign[it->first] = it->second;
                return false; // conflict
            }
            if (unassigned == 1) {
                const std::size_t v =
                    static_cast<std::size_t>(unit_lit > 0 ? unit_lit : -unit_lit) - 1;
                trail.emplace_back(v, assign[v]);
                assign[v] = unit_lit > 0 ? 1 : 0;
                changed = true;
            }
        }
    }

    // Branch on the lowest-index unassigned variable, true first.
    std::size_t branch = f.num_vars;
    for (std::size_t v = 0; v < f.num_vars; ++v)
        if (assign[v] == -1) {
            branch = v;
            break;
        }
    if (branch == f.num_vars) return true; // everything assigned, no conflict

    for (const int value : {1, 0}) {
        assign[branch] = value;
        if (dpll_recurse(f, assign)) return true;
    }
    assign[branch] = -1;
    for (auto it = trail.rbegin(); it != trail.rend(); ++it)
        assign[it->first] = it->second;
    return false;
}

} // namespace detail

/**
 * Exact satisfiability decision by depth-first search with unit propagation,
 * branching on the lowest-index unassigned variable with `true` tried first
 * (so the returned witness is deterministic). Refuses formulas above
 * `var_cap` variables — the search is exponential and meant for desk-scale
 * corpora, not as a SAT solver.
 */
inline SatResult dpll_sat(const CnfFormula& f, std::size_t var_cap = kSatVarCap) {
    if (f.num_vars > var_cap)
        throw SolveError("dpll_sat: formula has " + std::to_string(f.num_vars) +
                         " variables, above the cap of " + std::to_string(var_cap));
    SatResult out;
    std::vector<int> assign(f.num_vars, -1);
    out.satisfiable = detail::dpll_recurse(f, assign);
    if (out.satisfiable) {
        out.assignment.resize(f.num_vars);
        // Variables untouched by the search are free; fix them to true for a
        // concrete witness.
        for (std::size_t v = 0; v < f.num_vars; ++v)
            out.assignment[v] = assign[v] != 0;
    }
    return out;
}

/// Evaluates an assignment against a formula (true when every clause holds).
inline bool satisfies(const CnfFormula& f, const std::vector<bool>& assignment) {
    if (assignment.size() != f.num_vars)
        throw ModelError("satisfies: assignment size mismatch");
    for (const auto& cl : f.clauses) {
        bool ok = false;
        for (const int lit : cl) {
            const std::size_t v = static_cast<std::size_t>(lit > 0 ? lit : -lit) - 1;
            if ((lit > 0) == assignment[v]) {
                ok = true;
                break;
            }
        }
        if (!ok) return false;
    }
    return true;
}

} // namespace rmdp_lab
