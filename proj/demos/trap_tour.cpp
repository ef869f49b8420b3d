// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
//
// A guided tour of the three-state trap instance: landmark robust costs,
// the per-model gradient table at the trap policy, the vanishing
// stationarity gap, the grid reference optimum, and a projected subgradient
// run that stays glued to the trap. Build and run:
//
//   cmake --build build --target trap_tour && ./build/trap_tour

#include <cstdio>

#include "rmdp_lab/rmdp_lab.hpp"

using namespace rmdp_lab;

int main() {
    const RmdpInstance inst = build_counterexample();
    const Policy pi1 = counterexample_pi1();
    const Policy pi2 = counterexample_pi2();

    std::printf("Landmark robust costs\n");
    std::printf("  J(always-a1) = %.6f\n", robust_cost(inst, pi1));
    std::printf("  J(always-a2) = %.6f   <- strict local minimum (the trap)\n\n",
                robust_cost(inst, pi2));

    std::printf("Per-model gradients at the trap policy\n");
    const std::vector<Model>& models = inst.uncertainty.finite().models;
    for (std::size_t m = 0; m < models.size(); ++m) {
        const Matrix g = policy_gradient(models[m], pi2, inst);
        std::printf("  model %zu:", m + 1);
        for (std::size_t s = 0; s < inst.num_states; ++s)
            std::printf("  s%zu (%8.5f, %8.5f)", s + 1, g(s, 0), g(s, 1));
        std::printf("\n");
    }
    std::printf("\n");

    const GapResult gap = stationarity_gap(inst, pi2);
    std::printf("Stationarity gap at the trap: G = %.3e (zero => first-order stationary)\n", gap.gap);

    JstarParams params;
    params.resolution = 0.05;
    const prec_t jstar = optimal_cost_oracle(inst, JstarOracle::grid, params);
    std::printf("Grid reference optimum (resolution 0.05): J* = %.6f\n", jstar);
    std::printf("Suboptimality of the trap: J - J* = %.6f, yet G = 0 -- the gap-based\n",
                robust_cost(inst, pi2) - jstar);
    std::printf("dominance inequality cannot hold here with any finite constant.\n\n");

    PsdConfig cfg;
    cfg.iterations = 2000;
    cfg.step_rule = StepRule::constant;
    cfg.eta = 1e-3;
    cfg.reference = pi2;
    const PsdTrace trace = psd_run(inst, pi2, cfg);
    std::printf("PSD from the trap (eta = 1e-3, T = %zu):\n", trace.iterations);
    std::printf("  best cost visited   = %.6f\n", trace.best_cost);
    std::printf("  max ||pi_t - trap|| = %.6f  (<= 3*eta = %.6f: trapped)\n",
                trace.max_ref_dist_inf, 3.0 * cfg.eta);

    const ProxResult prox = prox_point(inst, pi2);
    std::printf("  Moreau gradient norm at the trap = %.3e (near-stationarity certificate)\n",
                prox.moreau_grad_norm);
    return 0;
}
