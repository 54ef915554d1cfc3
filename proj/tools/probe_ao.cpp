// SPDX-License-Identifier: Apache-2.0
// Scratch probe: WMMSE-AO on the two-user configuration.
#include <chrono>
#include <cstdio>

#include "isac/optimizer.hpp"
#include "isac/sensing.hpp"

using namespace isac;

int main(int argc, char** argv) {
    const double comm_scale = argc > 1 ? std::atof(argv[1]) : 1.0;
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
    scene.jammer_index = 0;

    const auto modes = sensing_sweep_modes(cfg.n_t);
    const auto jam_pos = jammer_element_positions(
        scatter_position(scene.points[0]), scene.n_j, scene.jammer_array_radius);
    const auto ch_all = build_channel_set(cfg, geom, scene, modes, jam_pos);

    const double noise_var = 1e-6;
    const auto p_sens_full = sensing_power_sizing(ch_all.h_s, 100.0, noise_var);
    const int slot = 1;
    VectorXd p_sens_q(cfg.n_f);
    for (int q = 0; q < cfg.n_f; ++q) p_sens_q(q) = p_sens_full(q, slot - 1);
    const double p_total = (1.0 + comm_scale) * p_sens_q.sum();

    // jamming power from 10 dB JNR at user 1, subcarrier 0
    const double jnr0 = argc > 2 ? std::atof(argv[2]) : 10.0;
    const double p_jam = jnr0 * cfg.n_t * noise_var / ch_all.h_jam[0][0].squaredNorm();
    std::printf("P_sens=%.4g P_t=%.4g P_J=%.4g |Hj|^2=%.4g\n", p_sens_q.sum(), p_total, p_jam,
                ch_all.h_jam[0][0].squaredNorm());

    const auto alloc = allocate_modes(cfg.n_t, 2, {8, 7}, slot, "c0ffee", 42);

    OptimizerChannels ch;
    ch.h = ch_all.h_comm;
    ch.h_jam = ch_all.h_jam;
    ch.jam_power = p_jam;
    ch.noise_var = {noise_var, noise_var};

    AoConfig aocfg;
    aocfg.total_power = p_total;
    aocfg.power_floor = p_total / (cfg.n_t * cfg.n_t) * (1.0 - p_sens_q.sum() / p_total);
    // P_bar = (P_t - P_sens)/N_t^2 (comm power over N_t^2)
    aocfg.power_floor = (p_total - p_sens_q.sum()) / (cfg.n_t * cfg.n_t);

    if (argc > 4) aocfg.max_iterations = std::atoi(argv[4]);
    WmmseProblem pb(ch, alloc, aocfg);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_ao(pb, {8, 7}, p_sens_q);
    const auto t1 = std::chrono::steady_clock::now();

    std::printf("converged=%d iters=%d elapsed=%.2fs safeguard=%d\n", res.converged,
                res.iterations, std::chrono::duration<double>(t1 - t0).count(),
                res.final_state.tx_safeguard_hits);
    for (const auto& s : res.trace)
        if (s.iteration <= 12 || s.iteration % 50 == 0 || s.iteration + 3 > res.iterations)
            std::printf("  it=%3d obj=%10.4f wmse=%10.4g asr=%10.5f\n", s.iteration,
                        s.p2_objective, s.weighted_mse, s.asr);

    // duality at the mmse state
    double max_dev = 0.0;
    for (int k = 0; k < 2; ++k)
        for (int q = 0; q < cfg.n_f; ++q)
            for (int l : alloc.user_modes[k]) {
                const double gamma = sinr(pb, res.mmse_state, k, q, l);
                const double eps = mse(pb, res.mmse_state, k, q, l);
                max_dev = std::max(max_dev, std::abs(std::log2(1.0 + gamma) + std::log2(eps)));
            }
    std::printf("duality max |log2(1+g) + log2 eps| = %.3g\n", max_dev);

    // constraints
    double total = res.mmse_state.sensing_power_per_q.sum();
    double min_p = 1e300;
    for (int k = 0; k < 2; ++k)
        for (int q = 0; q < cfg.n_f; ++q)
            for (int l : alloc.user_modes[k]) {
                const double p = res.mmse_state.power[k](mode_slot(l, 16), q);
                total += p;
                min_p = std::min(min_p, p);
            }
    std::printf("total=%.6g target=%.6g reldev=%.3g  min_p=%.4g floor=%.4g\n", total, p_total,
                std::abs(total - p_total) / p_total, min_p, aocfg.power_floor);

    double max_tx = 0.0, rx_dev = 0.0;
    for (int k = 0; k < 2; ++k)
        for (int q = 0; q < cfg.n_f; ++q) {
            for (int n = 0; n < 16; ++n) {
                max_tx = std::max(max_tx, res.final_state.w_tx[k][q].col(n).squaredNorm());
                rx_dev = std::max(rx_dev,
                                  std::abs(res.final_state.w_rx[k][q].col(n).norm() - 1.0));
            }
        }
    std::printf("max tx col norm^2 = %.9f, max |rx col norm - 1| = %.3g\n", max_tx, rx_dev);

    // jamming-mitigation ordering: evaluate realized ASR in the true
    // environment for (a) full CSI, (b) jamming-blind AO, (c) identity.
    OptimizerChannels ch_blind = ch;
    ch_blind.h_jam.clear();
    WmmseProblem pb_blind(ch_blind, alloc, aocfg);
    const auto res_blind = run_ao(pb_blind, {8, 7}, p_sens_q);

    const auto realized = [&](const BeamformerState& st) {
        return asr(pb, st, {8, 7}).total;  // pb has the true jamming
    };
    const auto idstate = initial_state(pb, p_sens_q);
    std::printf("ASR full=%.4f blind=%.4f identity=%.4f (realized, jamming on)\n",
                realized(res.mmse_state), realized(res_blind.mmse_state), realized(idstate));
    return 0;
}
