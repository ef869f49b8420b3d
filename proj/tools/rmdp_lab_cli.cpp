// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
//
// Command-line front end. Every subcommand reads instance/policy artifacts,
// writes machine-readable JSON/CSV payloads, and drops a RunManifest sidecar
// at <out>.manifest.json hashing every input and output file. Payloads are
// deterministic: re-running a command with identical inputs and seed
// reproduces them byte for byte; only the manifest's wall_time_ms differs.
//
// Exit codes:
//   0  success, and every requested check passed
//   1  a requested check failed (certify mismatch, dominance violation,
//      rate bound exceeded)
//   2  usage or input parse error
//   3  model or solver error

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rmdp_lab/rmdp_lab.hpp"

namespace {

using rmdp_lab::indvec;
using rmdp_lab::json;
using rmdp_lab::numvec;
using rmdp_lab::prec_t;
using rmdp_lab::Policy;
using rmdp_lab::RmdpInstance;

/// Reconstructs the command line for the manifest.
std::string join_argv(int argc, char** argv) {
    std::string joined;
    for (int i = 0; i < argc; ++i) {
        if (i) joined += ' ';
        joined += argv[i];
    }
    return joined;
}

/// Tracks a command's inputs/outputs and writes the manifest sidecar.
struct RunContext {
    std::string command;
    std::string seed; ///< empty when the command takes no seed
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start =
        std::chrono::steady_clock::now();

    void finish(const std::string& out_path) const {
        rmdp_lab::RunManifest m;
        m.command = command;
        m.seed = seed;
        m.wall_time_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        for (const std::string& p : inputs) m.add_input(p);
        for (const std::string& p : outputs) m.add_output(p);
        m.save(out_path + ".manifest.json");
    }
};

/// Worker count for sweeps: explicit flag, else RMDP_LAB_THREADS, else 1
/// (single-threaded by default so log ordering is deterministic).
std::size_t sweep_jobs(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RMDP_LAB_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<std::size_t>(n);
    }
    return 1;
}

/// Resolves "uniform" / "pi1" / "pi2" or a JSON file path into a policy.
/// File paths are recorded as manifest inputs.
Policy resolve_policy(const std::string& spec, const RmdpInstance& inst,
                      RunContext& ctx) {
    const std::size_t S = inst.num_states, A = inst.num_actions;
    if (spec == "uniform") return rmdp_lab::uniform_policy(S, A);
    if (spec == "pi1" || spec == "pi2") {
        if (S != 3 || A != 2)
            throw rmdp_lab::ParseError(
                "policy '" + spec + "' names a 3-state, 2-action policy but the "
                "instance has " + std::to_string(S) + " states and " +
                std::to_string(A) + " actions");
        return spec == "pi1" ? rmdp_lab::counterexample_pi1()
                             : rmdp_lab::counterexample_pi2();
    }
    ctx.inputs.push_back(spec);
    return rmdp_lab::load_policy(spec, S, A);
}

RmdpInstance load_instance_input(const std::string& path, RunContext& ctx) {
    ctx.inputs.push_back(path);
    return rmdp_lab::load_instance(path);
}

rmdp_lab::CnfFormula load_cnf_input(const std::string& path, RunContext& ctx) {
    std::ifstream in(path);
    if (!in) throw rmdp_lab::ParseError("cannot open '" + path + "'");
    ctx.inputs.push_back(path);
    return rmdp_lab::parse_dimacs(in);
}

rmdp_lab::ReductionVariant variant_from_string(const std::string& name) {
    if (name == "finite_p" || name == "finite-p")
        return rmdp_lab::ReductionVariant::finite_p;
    if (name == "sa_rect" || name == "sa-rect")
        return rmdp_lab::ReductionVariant::sa_rect;
    throw rmdp_lab::ParseError("unknown reduction variant '" + name +
                               "' (expected finite_p or sa_rect)");
}

rmdp_lab::TieBreak tie_break_from_string(const std::string& name) {
    if (name == "first" || name == "first_active" || name == "first-active")
        return rmdp_lab::TieBreak::first_active;
    if (name == "average") return rmdp_lab::TieBreak::average;
    if (name == "random") return rmdp_lab::TieBreak::random;
    throw rmdp_lab::ParseError("unknown tie-break '" + name +
                               "' (expected first, average, or random)");
}

json numvec_to_json(const numvec& v) {
    json arr = json::array();
    for (const prec_t x : v) arr.push_back(x);
    return arr;
}

// ---------------------------------------------------------------------------
// evaluate

/// Worst-case evaluation of a policy: the robust cost, which models attain
/// it, and the value/action-value tables of the attaining model. Non-finite
/// sets are reduced to their worst fixed model first, so V and Q always
/// describe one concrete (cost, kernel) pair.
struct WorstCaseEval {
    prec_t cost = 0.0;
    indvec active;
    rmdp_lab::EvalBundle bundle;
};

WorstCaseEval evaluate_worst_case(const RmdpInstance& inst, const Policy& pi) {
    using rmdp_lab::UncertaintyKind;
    WorstCaseEval out;
    switch (inst.uncertainty.kind()) {
    case UncertaintyKind::finite: {
        const auto r = rmdp_lab::robust_cost_finite(
            inst.uncertainty.finite().models, pi, inst);
        out.cost = r.robust_cost;
        out.active = r.active;
        out.bundle = r.bundles[static_cast<std::size_t>(r.active.front())];
        return out;
    }
    case UncertaintyKind::sa_rect_finite: {
        const auto& set = inst.uncertainty.sa_rect();
        std::vector<prec_t> values;
        std::vector<rmdp_lab::SaRectEvalResult> evals;
        prec_t best = -std::numeric_limits<prec_t>::infinity();
        std::size_t best_m = 0;
        for (std::size_t m = 0; m < set.costs.size(); ++m) {
            evals.push_back(
                rmdp_lab::robust_eval_sa_rect(set, set.costs[m], pi, inst));
            values.push_back(rmdp_lab::dot(evals.back().value, inst.mu));
            if (values.back() > best) {
                best = values.back();
                best_m = m;
            }
        }
        for (std::size_t m = 0; m < values.size(); ++m)
            if (values[m] >= best - rmdp_lab::kActiveTol * (1.0 + std::fabs(best)))
                out.active.push_back(static_cast<long>(m));
        const rmdp_lab::Model worst{set.costs[best_m], evals[best_m].worst_kernel};
        out.bundle = rmdp_lab::evaluate_fixed(worst, pi, inst);
        out.cost = out.bundle.total_cost;
        return out;
    }
    case UncertaintyKind::r_rect: {
        const auto& set = inst.uncertainty.r_rect();
        const auto r = rmdp_lab::robust_eval_r_rect(set, pi, inst);
        const rmdp_lab::Model worst{set.cost, r.worst_kernel};
        out.bundle = rmdp_lab::evaluate_fixed(worst, pi, inst);
        out.cost = out.bundle.total_cost;
        out.active = {0};
        return out;
    }
    case UncertaintyKind::kl_reg: {
        const auto& set = inst.uncertainty.kl_reg();
        const auto r = rmdp_lab::kl_soft_evaluate(set, pi, inst);
        // The KL-adjusted cost with the adversary's kernel is an equivalent
        // fixed model; its exact evaluation reproduces the soft value.
        const rmdp_lab::Model worst{r.modified_cost, r.worst_kernel};
        out.bundle = rmdp_lab::evaluate_fixed(worst, pi, inst);
        out.cost = out.bundle.total_cost;
        out.active = {0};
        return out;
    }
    }
    throw rmdp_lab::ModelError("evaluate: unknown uncertainty kind");
}

// ---------------------------------------------------------------------------
// landscape

struct Axis {
    std::size_t state = 0;
    std::size_t action = 0;
};

std::size_t parse_index(const std::string& text, const char* what) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(text, &pos);
    } catch (const std::exception&) {
        throw rmdp_lab::ParseError(std::string("invalid ") + what + " '" + text +
                                   "'");
    }
    if (pos != text.size())
        throw rmdp_lab::ParseError(std::string("invalid ") + what + " '" + text +
                                   "'");
    return static_cast<std::size_t>(v);
}

/// Parses "s:a,s:a" into two axes, checking ranges and that neither uses the
/// base action (the last index, which absorbs the remaining probability).
std::vector<Axis> parse_axes(const std::string& text, std::size_t S,
                             std::size_t A) {
    std::vector<Axis> axes;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        const std::size_t comma = text.find(',', begin);
        const std::string token =
            text.substr(begin, comma == std::string::npos ? comma : comma - begin);
        const std::size_t colon = token.find(':');
        if (colon == std::string::npos)
            throw rmdp_lab::ParseError("axis '" + token +
                                       "' must look like state:action");
        Axis ax;
        ax.state = parse_index(token.substr(0, colon), "axis state");
        ax.action = parse_index(token.substr(colon + 1), "axis action");
        if (ax.state >= S || ax.action >= A)
            throw rmdp_lab::ParseError("axis '" + token + "' is out of range for " +
                                       std::to_string(S) + " states and " +
                                       std::to_string(A) + " actions");
        if (ax.action + 1 == A)
            throw rmdp_lab::ParseError(
                "axis '" + token + "' uses the last action, which is the sweep's "
                "base action; pick a different action");
        axes.push_back(ax);
        if (comma == std::string::npos) break;
        begin = comma + 1;
    }
    if (axes.size() != 2)
        throw rmdp_lab::ParseError("--axes needs exactly two state:action pairs");
    if (axes[0].state == axes[1].state && axes[0].action == axes[1].action)
        throw rmdp_lab::ParseError("--axes pairs must be distinct");
    return axes;
}

/// When the instance has exactly two non-base coordinates, they are the
/// default axes; otherwise the caller must choose with --axes.
std::vector<Axis> default_axes(std::size_t S, std::size_t A) {
    if (S * (A - 1) != 2)
        throw rmdp_lab::ParseError(
            "the instance has " + std::to_string(S * (A - 1)) +
            " free coordinates; pass --axes with two state:action pairs");
    std::vector<Axis> axes;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a + 1 < A; ++a) axes.push_back({s, a});
    return axes;
}

/// Grid values k*h for k = 0, 1, ... while below 1, then exactly 1.
numvec grid_points(prec_t h) {
    if (!(h > 0.0 && h <= 1.0))
        throw rmdp_lab::ParseError("--grid resolution must lie in (0, 1]");
    numvec points;
    for (std::size_t k = 0;; ++k) {
        const prec_t v = static_cast<prec_t>(k) * h;
        if (v >= 1.0 - 1e-12) break;
        points.push_back(v);
    }
    points.push_back(1.0);
    return points;
}

/// The swept policy: every state plays the last action except for the two
/// axis coordinates, which receive x and y at their chosen actions.
Policy axis_policy(std::size_t S, std::size_t A, const std::vector<Axis>& axes,
                   prec_t x, prec_t y) {
    Policy pol(S, A, 0.0);
    for (std::size_t s = 0; s < S; ++s) pol(s, A - 1) = 1.0;
    pol(axes[0].state, axes[0].action) += x;
    pol(axes[0].state, A - 1) -= x;
    pol(axes[1].state, axes[1].action) += y;
    pol(axes[1].state, A - 1) -= y;
    // Same-state axes can leave a -0-sized remainder at the base action.
    for (const Axis& ax : axes) {
        prec_t& base = pol(ax.state, A - 1);
        if (base < 0.0 && base > -1e-12) base = 0.0;
    }
    return pol;
}

// ---------------------------------------------------------------------------
// report serialization

json dominance_report_to_json(const rmdp_lab::DominanceReport& rep) {
    json j;
    j["jstar"] = rep.jstar;
    j["dom_const"] = rep.dom_const;
    j["oracle"] = rep.oracle;
    j["oracle_resolution"] = rep.oracle_resolution; // NaN serializes as null
    j["num_samples"] = rep.num_samples;
    j["num_violations"] = rep.num_violations;
    j["max_slack"] = rep.max_slack;
    j["unique_kernel_all"] = rep.unique_kernel_all;
    j["unique_q_all"] = rep.unique_q_all;
    json samples = json::array();
    for (const auto& s : rep.samples) {
        json row;
        row["cost"] = s.cost;
        row["gap"] = s.gap;
        row["slack"] = s.slack;
        row["violation"] = s.violation;
        samples.push_back(std::move(row));
    }
    j["samples"] = std::move(samples);
    return j;
}

json rate_report_to_json(const rmdp_lab::RateReport& rep) {
    json j;
    j["jstar"] = rep.jstar;
    j["rate_constant"] = rep.rate_constant;
    j["bound_checked"] = rep.bound_checked;
    j["skip_reason"] = rep.skip_reason;
    j["all_within"] = rep.all_within;
    j["empirical_slope"] = rep.empirical_slope;
    json entries = json::array();
    for (const auto& e : rep.entries) {
        json row;
        row["T"] = e.iterations;
        row["best_cost"] = e.best_cost;
        row["min_subopt"] = e.min_subopt;
        row["bound"] = e.bound;
        row["within"] = e.within;
        entries.push_back(std::move(row));
    }
    j["entries"] = std::move(entries);
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rmdp-lab: tabular robust-MDP optimization toolkit"};
    app.require_subcommand(1);
    app.add_flag_callback(
        "--version",
        [] {
            std::cout << rmdp_lab::kVersion << '\n';
            throw CLI::Success{};
        },
        "print toolkit version and exit");

    const std::string cmdline = join_argv(argc, argv);
    bool check_failed = false;

    // -- evaluate ------------------------------------------------------------
    auto* cmd_eval = app.add_subcommand(
        "evaluate", "robust cost of a policy, with the worst model's V and Q");
    struct {
        std::string instance, policy = "uniform", out;
    } ev;
    cmd_eval->add_option("--instance", ev.instance, "instance JSON")->required();
    cmd_eval->add_option("--policy", ev.policy,
                         "uniform | pi1 | pi2 | policy JSON path");
    cmd_eval->add_option("--out", ev.out, "output JSON path")->required();
    cmd_eval->callback([&] {
        RunContext ctx;
        ctx.command = cmdline;
        const RmdpInstance inst = load_instance_input(ev.instance, ctx);
        const Policy pi = resolve_policy(ev.policy, inst, ctx);
        const WorstCaseEval w = evaluate_worst_case(inst, pi);
        json j;
        j["J"] = w.cost;
        j["active_models"] = w.active;
        j["V"] = numvec_to_json(w.bundle.value);
        j["Q"] = rmdp_lab::detail::matrix_to_json(w.bundle.qvalue);
        rmdp_lab::save_json(j, ev.out);
        ctx.outputs.push_back(ev.out);
        ctx.finish(ev.out);
    });

    // -- landscape -----------------------------------------------------------
    auto* cmd_land = app.add_subcommand(
        "landscape", "sweep two policy coordinates over [0,1]^2 and tabulate "
                     "the robust cost as CSV (x, y, J)");
    struct {
        std::string instance, axes, out;
        prec_t grid = 0.05;
        std::size_t jobs = 0;
    } la;
    cmd_land->add_option("--jobs", la.jobs,
                         "worker threads (default: RMDP_LAB_THREADS or 1)");
    cmd_land->add_option("--instance", la.instance, "instance JSON")->required();
    cmd_land->add_option("--grid", la.grid, "grid resolution in (0, 1]");
    cmd_land->add_option("--axes", la.axes,
                         "two swept coordinates as state:action,state:action "
                         "(default: the two free coordinates, when exactly two "
                         "exist)");
    cmd_land->add_option("--out", la.out, "output CSV path")->required();
    cmd_land->callback([&] {
        RunContext ctx;
        ctx.command = cmdline;
        const RmdpInstance inst = load_instance_input(la.instance, ctx);
        const std::size_t S = inst.num_states, A = inst.num_actions;
        if (A < 2)
            throw rmdp_lab::ModelError(
                "landscape: the instance needs at least two actions");
        const std::vector<Axis> axes =
            la.axes.empty() ? default_axes(S, A) : parse_axes(la.axes, S, A);
        const numvec points = grid_points(la.grid);

        // Same-state axes share one simplex row; drop infeasible corners.
        struct Cell {
            prec_t x, y;
        };
        std::vector<Cell> cells;
        const bool same_state = axes[0].state == axes[1].state;
        for (const prec_t x : points)
            for (const prec_t y : points) {
                if (same_state && x + y > 1.0 + 1e-12) continue;
                cells.push_back({x, y});
            }
        numvec cost(cells.size(), 0.0);
        rmdp_lab::parallel_for(
            cells.size(),
            [&](std::size_t i) {
                cost[i] = rmdp_lab::robust_cost(
                    inst, axis_policy(S, A, axes, cells[i].x, cells[i].y));
            },
            sweep_jobs(la.jobs));

        rmdp_lab::CsvTable table;
        table.header = {"x", "y", "J"};
        for (std::size_t i = 0; i < cells.size(); ++i)
            table.rows.push_back({cells[i].x, cells[i].y, cost[i]});
        rmdp_lab::save_csv(table, la.out);
        ctx.outputs.push_back(la.out);
        ctx.finish(la.out);
    });

    // -- psd -----------------------------------------------------------------
    auto* cmd_psd = app.add_subcommand(
        "psd", "projected subgradient descent: trace CSV plus summary JSON");
    struct {
        std::string instance, init = "uniform", ref, tie_break = "first", out,
                                    trace;
        std::size_t T = 1000, record_every = 1;
        prec_t eta = 0.0;
        std::uint64_t seed = 0;
        bool track_moreau = false;
    } ps;
    cmd_psd->add_option("--instance", ps.instance, "instance JSON")->required();
    cmd_psd->add_option("--init", ps.init, "uniform | pi1 | pi2 | policy JSON");
    cmd_psd->add_option("--T", ps.T, "iteration count");
    auto* eta_opt = cmd_psd->add_option(
        "--eta", ps.eta, "constant step size (default: the 1/sqrt(T) rule)");
    cmd_psd->add_option("--tie-break", ps.tie_break, "first | average | random");
    cmd_psd->add_option("--seed", ps.seed, "seed for the random tie-break");
    cmd_psd->add_option("--record-every", ps.record_every, "record stride");
    cmd_psd->add_flag("--track-moreau", ps.track_moreau,
                      "record the Moreau-envelope gradient norm");
    cmd_psd->add_option("--ref", ps.ref,
                        "reference policy to track in sup distance");
    cmd_psd->add_option("--out", ps.out, "summary JSON path")->required();
    cmd_psd->add_option("--trace", ps.trace,
                        "trace CSV path (default: <out>.trace.csv)");
    cmd_psd->callback([&] {
        RunContext ctx;
        ctx.command = cmdline;
        ctx.seed = std::to_string(ps.seed);
        const RmdpInstance inst = load_instance_input(ps.instance, ctx);
        const Policy init = resolve_policy(ps.init, inst, ctx);

        rmdp_lab::PsdConfig config;
        config.iterations = ps.T;
        if (eta_opt->count() > 0) {
            config.step_rule = rmdp_lab::StepRule::constant;
            config.eta = ps.eta;
        }
        config.tie_break = tie_break_from_string(ps.tie_break);
        config.seed = ps.seed;
        config.record_every = ps.record_every;
        config.track_moreau = ps.track_moreau;
        if (!ps.ref.empty()) config.reference = resolve_policy(ps.ref, inst, ctx);

        const rmdp_lab::PsdTrace trace = rmdp_lab::psd_run(inst, init, config);

        const std::string trace_path =
            ps.trace.empty() ? ps.out + ".trace.csv" : ps.trace;
        rmdp_lab::CsvTable table;
        table.header = {"t", "cost", "ref_dist_inf", "moreau_grad_norm"};
        for (const auto& rec : trace.records)
            table.rows.push_back({static_cast<prec_t>(rec.t), rec.cost,
                                  rec.ref_dist_inf, rec.moreau_grad_norm});
        rmdp_lab::save_csv(table, trace_path);

        json j;
        j["T"] = trace.iterations;
        j["eta"] = trace.eta;
        j["step_rule"] = eta_opt->count() > 0 ? "constant" : "one_over_sqrt_T";
        j["tie_break"] = ps.tie_break;
        j["seed"] = ps.seed;
        j["best_cost"] = trace.best_cost;
        j["best_t"] = trace.best_t;
        j["final_cost"] = trace.final_cost;
        j["num_records"] = trace.records.size();
        j["max_ref_dist_inf"] = trace.max_ref_dist_inf;
        j["min_moreau_grad_norm"] = trace.min_moreau_grad_norm;
        rmdp_lab::save_json(j, ps.out);

        ctx.outputs.push_back(ps.out);
        ctx.outputs.push_back(trace_path);
        ctx.finish(ps.out);
    });

    // -- hardness ------------------------------------------------------------
    auto* cmd_hard = app.add_subcommand(
        "hardness", "3-CNF to robust-MDP reductions and their certification");
    cmd_hard->require_subcommand(1);

    auto* hard_gen = cmd_hard->add_subcommand(
        "gen", "encode a DIMACS 3-CNF formula as a robust-MDP instance");
    struct {
        std::string cnf, variant = "sa_rect", out;
        prec_t gamma = 0.9;
    } hg;
    hard_gen->add_option("--cnf", hg.cnf, "DIMACS CNF path")->required();
    hard_gen->add_option("--variant", hg.variant, "finite_p | sa_rect");
    hard_gen->add_option("--gamma", hg.gamma, "discount factor");
    hard_gen->add_option("--out", hg.out, "instance JSON path")->required();
    hard_gen->callback([&] {
        RunContext ctx;
        ctx.command = cmdline;
        const rmdp_lab::CnfFormula f = load_cnf_input(hg.cnf, ctx);
        const rmdp_lab::ReductionArtifact art = rmdp_lab::build_reduction(
            f, variant_from_string(hg.variant), hg.gamma);
        rmdp_lab::save_instance(art.instance, hg.out);
        ctx.outputs.push_back(hg.out);
        ctx.finish(hg.out);
    });

    auto* hard_cert = cmd_hard->add_subcommand(
        "certify", "check the reduction's verdict against a DPLL oracle");
    struct {
        std::string cnf, variant = "sa_rect", out;
        prec_t gamma = 0.9;
        std::size_t samples = 200;
        std::uint64_t seed = 0;
    } hc;
    hard_cert->add_option("--cnf", hc.cnf, "DIMACS CNF path")->required();
    hard_cert->add_option("--variant", hc.variant, "finite_p | sa_rect");
    hard_cert->add_option("--gamma", hc.gamma, "discount factor");
    hard_cert->add_option("--samples", hc.samples,
                          "random policies tried in the unsatisfiable case");
    hard_cert->add_option("--seed", hc.seed, "seed for the random policies");
    hard_cert->add_option("--out", hc.out, "verdict JSON path")->required();
    hard_cert->callback([&] {
        RunContext ctx;
        ctx.command = cmdline;
        ctx.seed = std::to_string(hc.seed);
        const rmdp_lab::CnfFormula f = load_cnf_input(hc.cnf, ctx);
        const rmdp_lab::ReductionArtifact art = rmdp_lab::build_reduction(
            f, variant_from_string(hc.variant), hc.gamma);
        const rmdp_lab::SatResult sat = rmdp_lab::dpll_sat(f);

        json j;
        j["sat"] = sat.satisfiable;
        j["variant"] = rmdp_lab::reduction_variant_name(art.variant);
        j["threshold"] = art.threshold;
        j["gamma"] = hc.gamma;
        j["num_vars"] = f.num_vars;
        j["num_clauses"] = f.clauses.size();

        bool consistent = false;
        if (sat.satisfiable) {
            // A satisfying assignment's policy must reach robust cost 0.
            const Policy witness = rmdp_lab::assignment_policy(art, sat.assignment);
            const prec_t cost = rmdp_lab::robust_cost(art.instance, witness);
            j["witness_cost"] = cost;
            j["assignment"] = sat.assignment;
            consistent = cost <= 1e-9;
        } else {
            // No policy may undercut the threshold: try every assignment
            // policy plus seeded random policies.
            prec_t min_cost = std::numeric_limits<prec_t>::infinity();
            std::size_t checked = 0;
            if (f.num_vars <= 20) {
                for (std::uint64_t bits = 0; bits < (1ULL << f.num_vars); ++bits) {
                    std::vector<bool> assignment(f.num_vars);
                    for (std::size_t v = 0; v < f.num_vars; ++v)
                        assignment[v] = (bits >> v) & 1ULL;
                    const Policy pol = rmdp_lab::assignment_policy(art, assignment);
                    min_cost =
                        std::min(min_cost, rmdp_lab::robust_cost(art.instance, pol));
                    ++checked;
                }
            }
            rmdp_lab::Rng rng(hc.seed);
            const std::size_t S = art.instance.num_states;
            const std::size_t A = art.instance.num_actions;
            for (std::size_t i = 0; i < hc.samples; ++i) {
                Policy pol(S, A);
                for (std::size_t s = 0; s < S; ++s) {
                    const numvec row = rng.dirichlet(A);
                    for (std::size_t a = 0; a < A; ++a) pol(s, a) = row[a];
                }
                min_cost =
                    std::min(min_cost, rmdp_lab::robust_cost(art.instance, pol));
                ++checked;
            }
            j["min_cost"] = min_cost;
            j["policies_checked"] = checked;
            consistent = min_cost >= art.threshold - 1e-9;
        }
        j["consistent"] = consistent;
        rmdp_lab::save_json(j, hc.out);
        ctx.outputs.push_back(hc.out);
        ctx.finish(hc.out);
        if (!consistent) check_failed = true;
    });

    // -- dominance -----------------------------------------------------------
    auto* cmd_dom = app.add_subcommand(
        "dominance", "gap-based dominance and decay-rate verification");
    cmd_dom->require_subcommand(1);

    auto* dom_check = cmd_dom->add_subcommand(
        "check", "sample policies and test J - J* <= D * G");
    struct {
        std::string instance, oracle = "grid", policy, out;
        std::size_t samples = 64, starts = 32, iterations = 2000;
        std::uint64_t seed = 0;
        prec_t resolution = 0.01, tolerance = 1e-8;
    } dc;
    dom_check->add_option("--instance", dc.instance, "instance JSON")->required();
    dom_check->add_option("--samples", dc.samples, "random policies to draw");
    dom_check->add_option("--seed", dc.seed, "seed for the policy draws");
    dom_check->add_option("--oracle", dc.oracle, "grid | psd | vi");
    dom_check->add_option("--resolution", dc.resolution,
                          "grid oracle resolution");
    dom_check->add_option("--starts", dc.starts, "psd oracle restarts");
    dom_check->add_option("--iterations", dc.iterations,
                          "psd oracle iterations per restart");
    dom_check->add_option("--tolerance", dc.tolerance, "violation tolerance");
    dom_check->add_option("--policy", dc.policy,
                          "also report worst-case uniqueness flags at this "
                          "policy (uniform | pi1 | pi2 | JSON path)");
    dom_check->add_option("--out", dc.out, "report JSON path")->required();
    dom_check->callback([&] {
        RunContext ctx;
        ctx.command = cmdline;
        ctx.seed = std::to_string(dc.seed);
        const RmdpInstance inst = load_instance_input(dc.instance, ctx);
        rmdp_lab::JstarParams params;
        params.resolution = dc.resolution;
        params.starts = dc.starts;
        params.iterations = dc.iterations;
        params.seed = dc.seed;
        const rmdp_lab::DominanceReport rep = rmdp_lab::verify_dominance(
            inst, dc.samples, dc.seed, rmdp_lab::jstar_oracle_from_string(dc.oracle),
            params, dc.tolerance);
        json j = dominance_report_to_json(rep);

        if (!dc.policy.empty()) {
            const Policy pi = resolve_policy(dc.policy, inst, ctx);
            const auto kernel = rmdp_lab::check_unique_worst_kernel(inst, pi);
            const auto q = rmdp_lab::check_unique_worst_q(inst, pi);
            json flags;
            flags["unique_worst_kernel"] = kernel.holds;
            flags["unique_worst_q"] = q.holds;
            flags["max_kernel_dist"] = kernel.max_kernel_dist;
            flags["max_q_dist"] = q.max_q_dist;
            if (!q.holds) {
                json witness;
                witness["state"] = q.witness_state;
                witness["action"] = q.witness_action;
                witness["value_a"] = q.witness_value_a;
                witness["value_b"] = q.witness_value_b;
                flags["q_witness"] = std::move(witness);
            }
            j["policy_flags"] = std::move(flags);
        }
        rmdp_lab::save_json(j, dc.out);
        ctx.outputs.push_back(dc.out);
        ctx.finish(dc.out);
        if (rep.num_violations > 0) check_failed = true;
    });

    auto* dom_rate = cmd_dom->add_subcommand(
        "rate", "check best-iterate suboptimality against C * T^(-1/4)");
    struct {
        std::string instance, oracle = "grid", init, out;
        std::vector<std::size_t> T_list;
        std::uint64_t seed = 0;
        prec_t resolution = 0.01;
        std::size_t starts = 32, iterations = 2000;
    } dr;
    dom_rate->add_option("--instance", dr.instance, "instance JSON")->required();
    dom_rate->add_option("--T", dr.T_list, "horizons, comma separated")
        ->required()
        ->delimiter(',');
    dom_rate->add_option("--seed", dr.seed, "seed (oracle and PSD runs)");
    dom_rate->add_option("--oracle", dr.oracle, "grid | psd | vi");
    dom_rate->add_option("--resolution", dr.resolution, "grid oracle resolution");
    dom_rate->add_option("--starts", dr.starts, "psd oracle restarts");
    dom_rate->add_option("--iterations", dr.iterations,
                         "psd oracle iterations per restart");
    dom_rate->add_option("--init", dr.init,
                         "initial policy (uniform | pi1 | pi2 | JSON path)");
    dom_rate->add_option("--out", dr.out, "report JSON path")->required();
    dom_rate->callback([&] {
        RunContext ctx;
        ctx.command = cmdline;
        ctx.seed = std::to_string(dr.seed);
        const RmdpInstance inst = load_instance_input(dr.instance, ctx);
        rmdp_lab::JstarParams params;
        params.resolution = dr.resolution;
        params.starts = dr.starts;
        params.iterations = dr.iterations;
        std::optional<Policy> init;
        if (!dr.init.empty()) init = resolve_policy(dr.init, inst, ctx);
        const rmdp_lab::RateReport rep = rmdp_lab::verify_rate(
            inst, dr.T_list, dr.seed, rmdp_lab::jstar_oracle_from_string(dr.oracle),
            params, init);
        rmdp_lab::save_json(rate_report_to_json(rep), dr.out);
        ctx.outputs.push_back(dr.out);
        ctx.finish(dr.out);
        if (rep.bound_checked && !rep.all_within) check_failed = true;
    });

    // -- instance ------------------------------------------------------------
    auto* cmd_inst = app.add_subcommand("instance", "construct named instances");
    cmd_inst->require_subcommand(1);
    auto* inst_emit = cmd_inst->add_subcommand(
        "emit", "write a named or random instance as JSON");
    struct {
        std::string name, structure = "finite", out;
        std::size_t S = 3, A = 2, M = 2;
        std::uint64_t seed = 0;
        prec_t gamma = 0.9;
    } ie;
    inst_emit
        ->add_option("name", ie.name,
                     "counterexample | kernel-ambiguous | cost-ambiguous | "
                     "srect-mirror | random")
        ->required();
    inst_emit->add_option("--structure", ie.structure,
                          "random only: singleton | finite | sa-rect | r-rect | kl");
    inst_emit->add_option("--S", ie.S, "random only: states");
    inst_emit->add_option("--A", ie.A, "random only: actions");
    inst_emit->add_option("--M", ie.M, "random only: models/candidates");
    inst_emit->add_option("--seed", ie.seed, "random only: seed");
    inst_emit->add_option("--gamma", ie.gamma, "discount factor");
    inst_emit->add_option("--out", ie.out, "instance JSON path")->required();
    inst_emit->callback([&] {
        RunContext ctx;
        ctx.command = cmdline;
        RmdpInstance inst;
        if (ie.name == "counterexample") {
            rmdp_lab::CounterexampleSpec spec;
            spec.gamma = ie.gamma;
            inst = rmdp_lab::build_counterexample(spec);
        } else if (ie.name == "kernel-ambiguous") {
            inst = rmdp_lab::build_kernel_ambiguous_example(ie.gamma);
        } else if (ie.name == "cost-ambiguous") {
            inst = rmdp_lab::build_cost_ambiguous_example(ie.gamma);
        } else if (ie.name == "srect-mirror") {
            inst = rmdp_lab::build_srect_mirror_example(ie.gamma);
        } else if (ie.name == "random") {
            ctx.seed = std::to_string(ie.seed);
            inst = rmdp_lab::random_instance(
                ie.seed, ie.S, ie.A, ie.M,
                rmdp_lab::random_structure_from_string(ie.structure), ie.gamma);
        } else {
            throw rmdp_lab::ParseError("unknown instance name '" + ie.name + "'");
        }
        rmdp_lab::save_instance(inst, ie.out);
        ctx.outputs.push_back(ie.out);
        ctx.finish(ie.out);
    });

    // -- dispatch ------------------------------------------------------------
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const rmdp_lab::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const rmdp_lab::ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const rmdp_lab::SolveError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return check_failed ? 1 : 0;
}
