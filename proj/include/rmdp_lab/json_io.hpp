// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rmdp_lab/model.hpp"
#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

using json = nlohmann::json;

namespace detail {

/// Fetches a required key, throwing ParseError naming the key on absence.
inline const json& require_key(const json& j, const char* key,
                               const char* context) {
    const auto it = j.find(key);
    if (it == j.end())
        throw ParseError(std::string(context) + ": missing key '" + key + "'");
    return *it;
}

inline Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols,
                               const char* context) {
    if (!j.is_array() || j.size() != rows)
        throw ParseError(std::string(context) + ": expected " + std::to_string(rows) +
                         " rows");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != cols)
            throw ParseError(std::string(context) + ": row " + std::to_string(r) +
                             " must have " + std::to_string(cols) + " entries");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c].get<prec_t>();
    }
    return m;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Tensor3 tensor_from_json(const json& j, std::size_t d0, std::size_t d1,
                                std::size_t d2, const char* context) {
    if (!j.is_array() || j.size() != d0)
        throw ParseError(std::string(context) + ": expected " + std::to_string(d0) +
                         " outer entries");
    Tensor3 t(d0, d1, d2);
    for (std::size_t i = 0; i < d0; ++i) {
        const json& mid = j[i];
        if (!mid.is_array() || mid.size() != d1)
            throw ParseError(std::string(context) + ": entry " + std::to_string(i) +
                             " must have " + std::to_string(d1) + " rows");
        for (std::size_t k = 0; k < d1; ++k) {
            const json& row = mid[k];
            if (!row.is_array() || row.size() != d2)
                throw ParseError(std::string(context) + ": entry (" +
                                 std::to_string(i) + ", " + std::to_string(k) +
                                 ") must have " + std::to_string(d2) + " values");
            for (std::size_t v = 0; v < d2; ++v) t(i, k, v) = row[v].get<prec_t>();
        }
    }
    return t;
}

inline json tensor_to_json(const Tensor3& t) {
    json outer = json::array();
    for (std::size_t i = 0; i < t.dim0(); ++i) {
        json mid = json::array();
        for (std::size_t k = 0; k < t.dim1(); ++k) {
            json row = json::array();
            for (std::size_t v = 0; v < t.dim2(); ++v) row.push_back(t(i, k, v));
            mid.push_back(std::move(row));
        }
        outer.push_back(std::move(mid));
    }
    return outer;
}

inline numvec numvec_from_json(const json& j, const char* context) {
    if (!j.is_array())
        throw ParseError(std::string(context) + ": expected an array");
    numvec v;
    v.reserve(j.size());
    for (const auto& x : j) v.push_back(x.get<prec_t>());
    return v;
}

} // namespace detail

/// Serializes an instance. Keys are emitted in sorted order, and numeric
/// values survive a parse/serialize round trip bit-identically.
inline json instance_to_json(const RmdpInstance& inst) {
    json j;
    j["num_states"] = inst.num_states;
    j["num_actions"] = inst.num_actions;
    j["gamma"] = inst.gamma;
    j["mu"] = inst.mu;
    json u;
    u["kind"] = kind_name(inst.uncertainty.kind());
    switch (inst.uncertainty.kind()) {
    case UncertaintyKind::finite: {
        json models = json::array();
        for (const Model& m : inst.uncertainty.finite().models) {
            json jm;
            jm["cost"] = detail::matrix_to_json(m.cost);
            jm["kernel"] = detail::tensor_to_json(m.kernel);
            models.push_back(std::move(jm));
        }
        u["models"] = std::move(models);
        break;
    }
    case UncertaintyKind::sa_rect_finite: {
        const auto& set = inst.uncertainty.sa_rect();
        json costs = json::array();
        for (const Matrix& c : set.costs) costs.push_back(detail::matrix_to_json(c));
        u["costs"] = std::move(costs);
        json rows = json::array();
        for (const auto& per_state : set.kernel_rows) {
            json state = json::array();
            for (const auto& candidates : per_state) {
                json cand = json::array();
                for (const numvec& row : candidates) cand.push_back(row);
                state.push_back(std::move(cand));
            }
            rows.push_back(std::move(state));
        }
        u["kernel_rows"] = std::move(rows);
        break;
    }
    case UncertaintyKind::r_rect: {
        const auto& set = inst.uncertainty.r_rect();
        u["cost"] = detail::matrix_to_json(set.cost);
        u["phi"] = detail::tensor_to_json(set.phi);
        json factors = json::array();
        for (const auto& candidates : set.factors) {
            json cand = json::array();
            for (const numvec& w : candidates) cand.push_back(w);
            factors.push_back(std::move(cand));
        }
        u["factors"] = std::move(factors);
        break;
    }
    case UncertaintyKind::kl_reg: {
        const auto& set = inst.uncertainty.kl_reg();
        u["cost"] = detail::matrix_to_json(set.cost);
        u["nominal"] = detail::tensor_to_json(set.nominal);
        u["tau"] = set.tau;
        break;
    }
    }
    j["uncertainty"] = std::move(u);
    return j;
}

/// Parses and validates an instance; throws ParseError on schema problems
/// and ModelError on semantic ones (via validate_instance).
inline RmdpInstance instance_from_json(const json& j) {
    RmdpInstance inst;
    inst.num_states =
        detail::require_key(j, "num_states", "instance").get<std::size_t>();
    inst.num_actions =
        detail::require_key(j, "num_actions", "instance").get<std::size_t>();
    inst.gamma = detail::require_key(j, "gamma", "instance").get<prec_t>();
    inst.mu = detail::numvec_from_json(detail::require_key(j, "mu", "instance"),
                                       "instance mu");
    const json& u = detail::require_key(j, "uncertainty", "instance");
    const std::string kind =
        detail::require_key(u, "kind", "uncertainty").get<std::string>();
    const std::size_t S = inst.num_states, A = inst.num_actions;
    if (kind == "finite") {
        FiniteSet set;
        const json& models = detail::require_key(u, "models", "finite uncertainty");
        if (!models.is_array() || models.empty())
            throw ParseError("finite uncertainty: 'models' must be a non-empty array");
        for (std::size_t i = 0; i < models.size(); ++i) {
            Model m;
            m.cost = detail::matrix_from_json(
                detail::require_key(models[i], "cost", "model"), S, A, "model cost");
            m.kernel = detail::tensor_from_json(
                detail::require_key(models[i], "kernel", "model"), S, A, S,
                "model kernel");
            set.models.push_back(std::move(m));
        }
        inst.uncertainty = UncertaintySet{std::move(set)};
    } else if (kind == "sa_rect_finite") {
        SaRectFiniteSet set;
        const json& costs = detail::require_key(u, "costs", "sa-rect uncertainty");
        if (!costs.is_array() || costs.empty())
            throw ParseError("sa-rect uncertainty: 'costs' must be a non-empty array");
        for (const auto& c : costs)
            set.costs.push_back(detail::matrix_from_json(c, S, A, "sa-rect cost"));
        const json& rows =
            detail::require_key(u, "kernel_rows", "sa-rect uncertainty");
        if (!rows.is_array() || rows.size() != S)
            throw ParseError("sa-rect uncertainty: 'kernel_rows' must have one entry "
                             "per state");
        set.kernel_rows.resize(S);
        for (std::size_t s = 0; s < S; ++s) {
            if (!rows[s].is_array() || rows[s].size() != A)
                throw ParseError("sa-rect uncertainty: state " + std::to_string(s) +
                                 " must have one candidate list per action");
            set.kernel_rows[s].resize(A);
            for (std::size_t a = 0; a < A; ++a) {
                const json& cand = rows[s][a];
                if (!cand.is_array() || cand.empty())
                    throw ParseError("sa-rect uncertainty: empty candidate list at "
                                     "state " + std::to_string(s) + ", action " +
                                     std::to_string(a));
                for (const auto& row : cand)
                    set.kernel_rows[s][a].push_back(
                        detail::numvec_from_json(row, "sa-rect kernel row"));
            }
        }
        inst.uncertainty = UncertaintySet{std::move(set)};
    } else if (kind == "r_rect") {
        RRectSet set;
        set.cost = detail::matrix_from_json(
            detail::require_key(u, "cost", "r-rect uncertainty"), S, A,
            "r-rect cost");
        const json& factors = detail::require_key(u, "factors", "r-rect uncertainty");
        if (!factors.is_array() || factors.empty())
            throw ParseError("r-rect uncertainty: 'factors' must be a non-empty "
                             "array");
        set.factors.resize(factors.size());
        for (std::size_t i = 0; i < factors.size(); ++i) {
            const json& cand = factors[i];
            if (!cand.is_array() || cand.empty())
                throw ParseError("r-rect uncertainty: factor " + std::to_string(i) +
                                 " has no candidates");
            for (const auto& w : cand)
                set.factors[i].push_back(
                    detail::numvec_from_json(w, "r-rect factor"));
        }
        set.phi = detail::tensor_from_json(
            detail::require_key(u, "phi", "r-rect uncertainty"), S, A,
            set.factors.size(), "r-rect phi");
        inst.uncertainty = UncertaintySet{std::move(set)};
    } else if (kind == "kl_reg") {
        KlRegSet set;
        set.cost = detail::matrix_from_json(
            detail::require_key(u, "cost", "kl uncertainty"), S, A, "kl cost");
        set.nominal = detail::tensor_from_json(
            detail::require_key(u, "nominal", "kl uncertainty"), S, A, S,
            "kl nominal");
        set.tau = detail::require_key(u, "tau", "kl uncertainty").get<prec_t>();
        inst.uncertainty = UncertaintySet{std::move(set)};
    } else {
        throw ParseError("uncertainty: unknown kind '" + kind + "'");
    }
    validate_instance(inst);
    return inst;
}

inline json policy_to_json(const Policy& policy) {
    return detail::matrix_to_json(policy);
}

inline Policy policy_from_json(const json& j, std::size_t num_states,
                               std::size_t num_actions) {
    return detail::matrix_from_json(j, num_states, num_actions, "policy");
}

/// Writes pretty-printed JSON (2-space indent, sorted keys, trailing newline).
inline void save_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw ParseError("failed writing '" + path + "'");
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError("invalid JSON in '" + path + "': " + e.what());
    }
    return j;
}

inline void save_instance(const RmdpInstance& inst, const std::string& path) {
    save_json(instance_to_json(inst), path);
}

inline RmdpInstance load_instance(const std::string& path) {
    try {
        return instance_from_json(load_json(path));
    } catch (const ParseError&) {
        throw;
    } catch (const json::exception& e) {
        throw ParseError("invalid instance in '" + path + "': " + e.what());
    }
}

inline void save_policy(const Policy& policy, const std::string& path) {
    save_json(policy_to_json(policy), path);
}

inline Policy load_policy(const std::string& path, std::size_t num_states,
                          std::size_t num_actions) {
    try {
        return policy_from_json(load_json(path), num_states, num_actions);
    } catch (const json::exception& e) {
        throw ParseError("invalid policy in '" + path + "': " + e.what());
    }
}

} // namespace rmdp_lab
