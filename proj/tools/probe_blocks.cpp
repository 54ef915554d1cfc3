// SPDX-License-Identifier: Apache-2.0
// Scratch probe: per-block objective movement of the AO loop.
#include <cstdio>

#include "isac/optimizer.hpp"
#include "isac/sensing.hpp"

using namespace isac;

int main(int argc, char** argv) {
    const double comm_scale = argc > 1 ? std::atof(argv[1]) : 0.05;
    const double jnr = argc > 2 ? std::atof(argv[2]) : 10.0;
    const double mis = argc > 3 ? std::atof(argv[3]) : 1.0;
    const double deg = M_PI / 180.0;
    SystemConfig cfg;
    UcaGeometry geom;
    geom.users.push_back({0.5, {21.2, 21.2, 30.0}, mis * 5 * deg, mis * 3 * deg, {mis * 0.3, -mis * 0.2, mis * 0.1}});
    geom.users.push_back({0.5, {-26.0, 15.0, 30.0}, -mis * 4 * deg, mis * 6 * deg, {-mis * 0.2, mis * 0.1, mis * 0.2}});
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
    const double p_total = (1.0 + comm_scale) * p_sens_q.sum();
    const double p_jam = jnr > 0 ? jnr * cfg.n_t * noise_var / ch_all.h_jam[0][0].squaredNorm() : 0.0;

    const auto alloc = allocate_modes(cfg.n_t, 2, {8, 7}, 1, "c0ffee", 42);
    OptimizerChannels ch;
    ch.h = ch_all.h_comm;
    ch.h_jam = ch_all.h_jam;
    ch.jam_power = p_jam;
    if (jnr <= 0) ch.h_jam.clear();
    ch.noise_var = {noise_var, noise_var};
    AoConfig aocfg;
    aocfg.total_power = p_total;
    aocfg.power_floor = (p_total - p_sens_q.sum()) / (cfg.n_t * cfg.n_t);

    WmmseProblem pb(ch, alloc, aocfg);
    BeamformerState st = initial_state(pb, p_sens_q);
    double prev_asr = 0.0;
    for (int it = 1; it <= (argc > 4 ? std::atoi(argv[4]) : 40); ++it) {
        const double o0 = p2_objective(pb, st);
        update_weights(pb, st);
        const double o1 = p2_objective(pb, st);
        for (int k = 0; k < 2; ++k)
            for (int q = 0; q < cfg.n_f; ++q) update_rx(pb, st, k, q);
        const double o2 = p2_objective(pb, st);
        for (int q = 0; q < cfg.n_f; ++q) update_tx(pb, st, q);
        const double o3 = p2_objective(pb, st);
        update_power(pb, st);
        const double o4 = p2_objective(pb, st);
        const double a = asr(pb, st, {8, 7}).total;
        std::printf(
            "it=%2d w:%+9.3f rx:%+9.3f tx:%+9.3f pw:%+9.4f asr=%9.5f dasr=%+.5f sg=%d\n", it,
            o1 - o0, o2 - o1, o3 - o2, o4 - o3, a, a - prev_asr, st.tx_safeguard_hits);
        prev_asr = a;
    }
    return 0;
}
