// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
//
// End-to-end tests of the command-line tool; the binary path is injected by
// the build as RMDP_LAB_CLI_PATH.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rmdp_lab/rmdp_lab.hpp"

#include "oracles.hpp"

using namespace rmdp_lab;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

/// Runs the CLI with the given arguments, silencing its streams, and returns
/// the exit code.
int run_cli(const std::string& args) {
    const std::string cmd =
        std::string("\"") + RMDP_LAB_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

} // namespace

TEST_CASE("cli emits instances and evaluates the landmark policies", "[cli]") {
    TempDir tmp("rmdp_lab_cli_eval");
    const std::string inst_path = tmp.file("counterexample.json");
    REQUIRE(run_cli("instance emit counterexample --out " + inst_path) == 0);

    // The emitted artifact is byte-identical to a direct serialization.
    const std::string expected_path = tmp.file("expected.json");
    save_instance(build_counterexample(), expected_path);
    REQUIRE(read_bytes(inst_path) == read_bytes(expected_path));

    const std::string eval_path = tmp.file("eval.json");
    REQUIRE(run_cli("evaluate --instance " + inst_path + " --policy pi2 --out " +
                    eval_path) == 0);
    const json j = load_json(eval_path);
    REQUIRE(std::fabs(j.at("J").get<prec_t>() - 0.505) < 1e-9);
    REQUIRE(j.at("active_models") == json::array({0, 1}));
    REQUIRE(j.at("V").size() == 3);
    REQUIRE(j.at("Q").size() == 3);
    REQUIRE(j.at("Q")[0].size() == 2);

    REQUIRE(run_cli("evaluate --instance " + inst_path + " --policy pi1 --out " +
                    tmp.file("eval1.json")) == 0);
    REQUIRE(std::fabs(load_json(tmp.file("eval1.json")).at("J").get<prec_t>() -
                      0.1) < 1e-9);

    // The manifest hashes every input and output.
    const json manifest = load_json(eval_path + ".manifest.json");
    REQUIRE(manifest.at("version").get<std::string>() == kVersion);
    REQUIRE(manifest.at("command").get<std::string>().find("evaluate") !=
            std::string::npos);
    REQUIRE(manifest.at("inputs").at(inst_path).get<std::string>() ==
            hash_file(inst_path));
    REQUIRE(manifest.at("outputs").at(eval_path).get<std::string>() ==
            hash_file(eval_path));

    // A policy file is accepted and evaluated like the in-process call.
    const RmdpInstance inst = load_instance(inst_path);
    const Policy mixed = counterexample_policy_xy(0.3, 0.7);
    const std::string pol_path = tmp.file("mixed.json");
    save_policy(mixed, pol_path);
    REQUIRE(run_cli("evaluate --instance " + inst_path + " --policy " + pol_path +
                    " --out " + tmp.file("evalm.json")) == 0);
    REQUIRE(std::fabs(load_json(tmp.file("evalm.json")).at("J").get<prec_t>() -
                      robust_cost(inst, mixed)) < 1e-12);
}

TEST_CASE("cli landscape sweeps the named axes", "[cli]") {
    TempDir tmp("rmdp_lab_cli_land");
    const std::string inst_path = tmp.file("inst.json");
    REQUIRE(run_cli("instance emit counterexample --out " + inst_path) == 0);

    // Unit resolution: the four corners only, in x-major order.
    const std::string grid_path = tmp.file("corners.csv");
    REQUIRE(run_cli("landscape --instance " + inst_path +
                    " --grid 1 --axes 0:0,1:0 --out " + grid_path) == 0);
    const CsvTable corners = load_csv(grid_path);
    REQUIRE(corners.header == std::vector<std::string>{"x", "y", "J"});
    REQUIRE(corners.rows.size() == 4);
    REQUIRE(corners.rows[0][0] == 0.0);
    REQUIRE(corners.rows[0][1] == 0.0);
    REQUIRE(std::fabs(corners.rows[0][2] - 0.505) < 1e-9);
    REQUIRE(corners.rows[3][0] == 1.0);
    REQUIRE(corners.rows[3][1] == 1.0);
    REQUIRE(std::fabs(corners.rows[3][2] - 0.1) < 1e-9);

    // Refinement keeps shared grid points bit-identical.
    const std::string fine_path = tmp.file("fine.csv");
    REQUIRE(run_cli("landscape --instance " + inst_path +
                    " --grid 0.5 --axes 0:0,1:0 --jobs 2 --out " + fine_path) ==
            0);
    const CsvTable fine = load_csv(fine_path);
    REQUIRE(fine.rows.size() == 9);
    for (const numvec& coarse_row : corners.rows) {
        bool found = false;
        for (const numvec& fine_row : fine.rows)
            if (fine_row[0] == coarse_row[0] && fine_row[1] == coarse_row[1]) {
                REQUIRE(fine_row[2] == coarse_row[2]);
                found = true;
            }
        REQUIRE(found);
    }

    // Three free coordinates and no --axes is an error, as are bad axes.
    REQUIRE(run_cli("landscape --instance " + inst_path + " --out " +
                    tmp.file("x.csv")) == 2);
    REQUIRE(run_cli("landscape --instance " + inst_path +
                    " --axes 0:1,1:0 --out " + tmp.file("x.csv")) == 2);
    REQUIRE(run_cli("landscape --instance " + inst_path + " --axes 0:0 --out " +
                    tmp.file("x.csv")) == 2);
    REQUIRE(run_cli("landscape --instance " + inst_path +
                    " --grid 0 --axes 0:0,1:0 --out " + tmp.file("x.csv")) == 2);
}

TEST_CASE("cli psd runs are byte-reproducible and reach singleton optima",
          "[cli]") {
    TempDir tmp("rmdp_lab_cli_psd");
    const std::string inst_path = tmp.file("single.json");
    REQUIRE(run_cli("instance emit random --structure singleton --S 3 --A 2 "
                    "--M 1 --seed 11 --gamma 0.6 --out " + inst_path) == 0);

    const std::string args = "psd --instance " + inst_path +
                             " --T 3000 --seed 5 --tie-break random "
                             "--record-every 100";
    REQUIRE(run_cli(args + " --out " + tmp.file("s1.json") + " --trace " +
                    tmp.file("t1.csv")) == 0);
    REQUIRE(run_cli(args + " --out " + tmp.file("s2.json") + " --trace " +
                    tmp.file("t2.csv")) == 0);
    REQUIRE(read_bytes(tmp.file("s1.json")) == read_bytes(tmp.file("s2.json")));
    REQUIRE(read_bytes(tmp.file("t1.csv")) == read_bytes(tmp.file("t2.csv")));

    // Best iterate approaches the value-iteration optimum from above.
    const RmdpInstance inst = load_instance(inst_path);
    const Model& model = inst.uncertainty.finite().models.front();
    const numvec vstar = oracle::optimal_value(model, 3, 2, inst.gamma);
    const prec_t opt = dot(vstar, inst.mu);
    const json summary = load_json(tmp.file("s1.json"));
    const prec_t best = summary.at("best_cost").get<prec_t>();
    REQUIRE(best >= opt - 1e-9);
    REQUIRE(best <= opt + 1e-2);

    // First record is the initial (uniform) policy's cost; the optional
    // columns stay empty when not requested.
    const CsvTable trace = load_csv(tmp.file("t1.csv"));
    REQUIRE(trace.header ==
            std::vector<std::string>{"t", "cost", "ref_dist_inf",
                                     "moreau_grad_norm"});
    REQUIRE(trace.rows.front()[0] == 1.0);
    REQUIRE(std::fabs(trace.rows.front()[1] -
                      robust_cost(inst, uniform_policy(3, 2))) < 1e-12);
    REQUIRE(std::isnan(trace.rows.front()[2]));
    REQUIRE(std::isnan(trace.rows.front()[3]));

    // The manifest lists both payloads.
    const json manifest = load_json(tmp.file("s1.json") + ".manifest.json");
    REQUIRE(manifest.at("outputs").size() == 2);
    REQUIRE(manifest.at("seed").get<std::string>() == "5");

    // Reference tracking through the CLI: a trapped run stays near pi2.
    const std::string trap_path = tmp.file("trap.json");
    REQUIRE(run_cli("instance emit counterexample --out " + trap_path) == 0);
    REQUIRE(run_cli("psd --instance " + trap_path +
                    " --init pi2 --ref pi2 --T 50 --eta 0.001 --out " +
                    tmp.file("trap_run.json")) == 0);
    const json trap = load_json(tmp.file("trap_run.json"));
    REQUIRE(trap.at("max_ref_dist_inf").get<prec_t>() <= 3.0 * 0.001 + 1e-12);
    REQUIRE(trap.at("step_rule").get<std::string>() == "constant");
}

TEST_CASE("cli hardness commands certify both verdicts", "[cli]") {
    TempDir tmp("rmdp_lab_cli_hard");
    const std::string sat_path = tmp.file("sat.cnf");
    write_text(sat_path, "p cnf 3 2\n1 -2 3 0\n-1 2 -3 0\n");
    const std::string unsat_path = tmp.file("unsat.cnf");
    write_text(unsat_path, "p cnf 1 2\n1 1 1 0\n-1 -1 -1 0\n");

    // gen emits a loadable instance with the documented layout.
    const std::string gen_path = tmp.file("reduction.json");
    REQUIRE(run_cli("hardness gen --cnf " + sat_path +
                    " --variant sa-rect --out " + gen_path) == 0);
    const RmdpInstance red = load_instance(gen_path);
    REQUIRE(red.uncertainty.kind() == UncertaintyKind::sa_rect_finite);
    REQUIRE(red.num_states == 1 + 2 + 3); // ini + clauses + variables

    // Satisfiable: the DPLL witness policy reaches cost 0.
    const std::string cert_sat = tmp.file("cert_sat.json");
    REQUIRE(run_cli("hardness certify --cnf " + sat_path +
                    " --variant sa-rect --samples 20 --out " + cert_sat) == 0);
    json j = load_json(cert_sat);
    REQUIRE(j.at("sat").get<bool>());
    REQUIRE(j.at("consistent").get<bool>());
    REQUIRE(j.at("witness_cost").get<prec_t>() <= 1e-9);
    REQUIRE(std::fabs(j.at("threshold").get<prec_t>() - 4.05) < 1e-12);

    // Unsatisfiable: every probed policy pays at least the threshold.
    const std::string cert_unsat = tmp.file("cert_unsat.json");
    REQUIRE(run_cli("hardness certify --cnf " + unsat_path +
                    " --variant finite-p --samples 40 --seed 3 --out " +
                    cert_unsat) == 0);
    j = load_json(cert_unsat);
    REQUIRE_FALSE(j.at("sat").get<bool>());
    REQUIRE(j.at("consistent").get<bool>());
    REQUIRE(std::fabs(j.at("threshold").get<prec_t>() - 3.645) < 1e-12);
    REQUIRE(j.at("min_cost").get<prec_t>() >=
            j.at("threshold").get<prec_t>() - 1e-9);
    REQUIRE(j.at("policies_checked").get<std::size_t>() == 2 + 40);

    // Broken CNF input is a parse failure.
    const std::string bad_path = tmp.file("bad.cnf");
    write_text(bad_path, "p cnf 2 1\n1 2 0\n");
    REQUIRE(run_cli("hardness gen --cnf " + bad_path + " --out " +
                    tmp.file("x.json")) == 2);
    REQUIRE(run_cli("hardness gen --cnf " + tmp.file("absent.cnf") + " --out " +
                    tmp.file("x.json")) == 2);
}

TEST_CASE("cli dominance commands report violations via the exit code",
          "[cli]") {
    TempDir tmp("rmdp_lab_cli_dom");
    const std::string trap_path = tmp.file("trap.json");
    REQUIRE(run_cli("instance emit counterexample --out " + trap_path) == 0);

    // The trap instance violates the gap bound; exit code 1 says so.
    const std::string report_path = tmp.file("dom.json");
    REQUIRE(run_cli("dominance check --instance " + trap_path +
                    " --samples 20 --seed 9 --oracle grid --resolution 0.5 "
                    "--policy pi2 --out " + report_path) == 1);
    const json rep = load_json(report_path);
    REQUIRE(rep.at("num_violations").get<std::size_t>() >= 1);
    REQUIRE(std::fabs(rep.at("jstar").get<prec_t>() - 0.1) < 1e-9);
    REQUIRE(std::fabs(rep.at("dom_const").get<prec_t>() - 100.0) < 1e-9);
    REQUIRE_FALSE(rep.at("policy_flags").at("unique_worst_kernel").get<bool>());
    REQUIRE_FALSE(rep.at("policy_flags").at("unique_worst_q").get<bool>());

    // A singleton passes, and its rate bound is certified.
    const std::string single_path = tmp.file("single.json");
    REQUIRE(run_cli("instance emit random --structure singleton --S 3 --A 2 "
                    "--M 1 --seed 19 --out " + single_path) == 0);
    REQUIRE(run_cli("dominance check --instance " + single_path +
                    " --samples 10 --seed 2 --oracle vi --out " +
                    tmp.file("dom2.json")) == 0);
    REQUIRE(load_json(tmp.file("dom2.json")).at("num_violations").get<std::size_t>() ==
            0);
    REQUIRE(run_cli("dominance rate --instance " + single_path +
                    " --T 20,40 --oracle vi --out " + tmp.file("rate.json")) ==
            0);
    const json rate = load_json(tmp.file("rate.json"));
    REQUIRE(rate.at("bound_checked").get<bool>());
    REQUIRE(rate.at("all_within").get<bool>());
    REQUIRE(rate.at("entries").size() == 2);
}

TEST_CASE("cli exit codes separate usage, parse, and model errors", "[cli]") {
    TempDir tmp("rmdp_lab_cli_codes");
    REQUIRE(run_cli("") == 2);                      // a subcommand is required
    REQUIRE(run_cli("no-such-command") == 2);
    REQUIRE(run_cli("evaluate --bogus-flag 1") == 2);
    REQUIRE(run_cli("--version") == 0);
    REQUIRE(run_cli("instance emit no-such-name --out " + tmp.file("x.json")) ==
            2);
    REQUIRE(run_cli("evaluate --instance " + tmp.file("absent.json") +
                    " --out " + tmp.file("x.json")) == 2);

    // Schema-valid JSON with a broken kernel is a model error (exit 3).
    const std::string inst_path = tmp.file("inst.json");
    REQUIRE(run_cli("instance emit counterexample --out " + inst_path) == 0);
    json j = load_json(inst_path);
    j["uncertainty"]["models"][0]["kernel"][0][0] = json::array({0.7, 0.0, 0.0});
    save_json(j, tmp.file("broken.json"));
    REQUIRE(run_cli("evaluate --instance " + tmp.file("broken.json") +
                    " --out " + tmp.file("x.json")) == 3);

    // A constant-step PSD run with a nonpositive step is a model error.
    REQUIRE(run_cli("psd --instance " + inst_path + " --T 10 --eta 0 --out " +
                    tmp.file("x.json")) == 3);
}
