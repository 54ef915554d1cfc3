// SPDX-License-Identifier: Apache-2.0
// Scratch probe: validate the power block's quadratic model at the
// iteration where the objective regressed.
#include <cstdio>

#include "isac/optimizer.hpp"
#include "isac/sensing.hpp"

using namespace isac;

int main() {
    const double deg = M_PI / 180.0;
    SystemConfig cfg;
    UcaGeometry geom;
    geom.users.push_back({0.5, {21.2, 21.2, 30.0}, 0.25 * 5 * deg, 0.25 * 3 * deg,
                          {0.25 * 0.3, -0.25 * 0.2, 0.25 * 0.1}});
    geom.users.push_back({0.5, {-26.0, 15.0, 30.0}, -0.25 * 4 * deg, 0.25 * 6 * deg,
                          {-0.25 * 0.2, 0.25 * 0.1, 0.25 * 0.2}});
    ScatterScene scene;
    scene.points = {{39.0, 10.0 * deg, 50.0 * deg, 1.0},
                    {25.0, 30.0 * deg, 38.0 * deg, 1.0},
                    {18.0, 55.0 * deg, 16.0 * deg, 1.0}};
    scene.v = 3.0;
    const auto modes = sensing_sweep_modes(cfg.n_t);
    const auto jam_pos = jammer_element_positions(scatter_position(scene.points[0]), 1, 0.1);
    const auto ch_all = build_channel_set(cfg, geom, scene, modes, jam_pos);
    const double noise_var = 1e-6;
    const auto p_sens_full = sensing_power_sizing(ch_all.h_s, 100.0, noise_var);
    VectorXd p_sens_q(cfg.n_f);
    for (int q = 0; q < cfg.n_f; ++q) p_sens_q(q) = p_sens_full(q, 0);
    const double p_total = 1.05 * p_sens_q.sum();
    const double p_jam = 10.0 * cfg.n_t * noise_var / ch_all.h_jam[0][0].squaredNorm();

    const auto alloc = allocate_modes(cfg.n_t, 2, {8, 7}, 1, "c0ffee", 42);
    OptimizerChannels ch;
    ch.h = ch_all.h_comm;
    ch.h_jam = ch_all.h_jam;
    ch.jam_power = p_jam;
    ch.noise_var = {noise_var, noise_var};
    AoConfig aocfg;
    aocfg.total_power = p_total;
    aocfg.power_floor = (p_total - p_sens_q.sum()) / (cfg.n_t * cfg.n_t);

    WmmseProblem pb(ch, alloc, aocfg);
    BeamformerState st = initial_state(pb, p_sens_q);
    for (int it = 1; it <= 60; ++it) {
        update_weights(pb, st);
        for (int k = 0; k < 2; ++k)
            for (int q = 0; q < cfg.n_f; ++q) update_rx(pb, st, k, q);
        for (int q = 0; q < cfg.n_f; ++q) update_tx(pb, st, q);

        const BeamformerState before = st;
        const double wmse_before = weighted_mse(pb, st);
        update_power(pb, st);
        const double wmse_after = weighted_mse(pb, st);
        {
            double tot = st.sensing_power_per_q.sum();
            for (int k = 0; k < 2; ++k)
                for (int q = 0; q < cfg.n_f; ++q)
                    for (int l : alloc.user_modes[k]) tot += st.power[k](mode_slot(l, 16), q);
            std::printf("it=%2d post-power total=%.6f excess=%+.4g eta=%.5g\n", it, tot,
                        tot - p_total, st.eta);
        }
        if (wmse_after > wmse_before + 1e-9) {
            std::printf("it=%d wmse %=.6f -> %.6f REGRESSION\n", it, wmse_before, wmse_after);
            // Compare total power and floors.
            double tot_b = before.sensing_power_per_q.sum(), tot_a = tot_b;
            double minp_a = 1e300;
            for (int k = 0; k < 2; ++k)
                for (int q = 0; q < cfg.n_f; ++q)
                    for (int l : alloc.user_modes[k]) {
                        tot_b += before.power[k](mode_slot(l, 16), q);
                        tot_a += st.power[k](mode_slot(l, 16), q);
                        minp_a = std::min(minp_a, st.power[k](mode_slot(l, 16), q));
                    }
            std::printf("  tot before=%.6g after=%.6g budget=%.6g minp=%.4g floor=%.4g eta=%.4g\n",
                        tot_b, tot_a, p_total, minp_a, aocfg.power_floor, st.eta);
            // Quadratic-model check: apply the previous powers under the new
            // state's gains by swapping power matrices back.
            BeamformerState test = st;
            test.power = before.power;
            std::printf("  wmse(new W, old P)=%.6f\n", weighted_mse(pb, test));
            return 1;
        }
    }
    std::printf("no regression in 60 iterations\n");
    return 0;
}
