// SPDX-License-Identifier: Apache-2.0
// Scratch probe for pipeline calibration during development.
#include <chrono>
#include <cstdio>

#include "isac/sensing.hpp"

using namespace isac;

int main(int argc, char** argv) {
    const double deg = M_PI / 180.0;
    SystemConfig cfg;
    UcaGeometry geom;
    geom.users.push_back({0.5, {21.2, 21.2, 30.0}, 5 * deg, 3 * deg, {0.3, -0.2, 0.1}});
    geom.users.push_back({0.5, {-26.0, 15.0, 30.0}, -4 * deg, 6 * deg, {-0.2, 0.1, 0.2}});

    ScatterScene scene;
    scene.points = {{39.0, 10.0 * deg, 50.0 * deg, 1.0},
                    {25.0, 30.0 * deg, 38.0 * deg, 1.0},
                    {18.0, 55.0 * deg, 16.0 * deg, 1.0}};
    scene.v = 3.0;
    scene.jammer_index = 0;

    SensingParams params;
    if (argc > 1) params.n_sweeps = std::atoi(argv[1]);
    if (argc > 2) params.g_hat = std::atoi(argv[2]);
    if (argc > 3) params.conventional = std::atoi(argv[3]) != 0;

    const auto t0 = std::chrono::steady_clock::now();
    const auto out = run_sensing(cfg, geom, scene, params, 1);
    const auto t1 = std::chrono::steady_clock::now();

    std::printf("sweeps=%d g_hat=%d conventional=%d  elapsed=%.1fs clamped=%ld\n",
                params.n_sweeps, params.g_hat, params.conventional,
                std::chrono::duration<double>(t1 - t0).count(), out.clamped_cells);
    std::printf("true: (39,10,50) (25,30,38) (18,55,16), v=3\n");
    for (const auto& p : out.estimate.points) {
        std::printf("point: theta=%8.3f phi=%8.3f R=%7.3f det=%d height=%.3g nq=%zu nm=%zu\n",
                    p.theta / deg, p.phi / deg, p.range, p.detected, p.peak_height,
                    p.theta_per_q.size(), p.range_per_mode.size());
    }
    std::printf("v_hat=%.3f\n", out.estimate.v_hat);
    std::printf("oam peaks q0:\n");
    for (const auto& p : out.oam_peaks[0])
        std::printf("  th=%7.2f phi=%7.2f h=%.4g\n", p.axis1_value / deg, p.axis2_value / deg,
                    p.height);
    std::printf("freq peaks slot 7 (l=0):\n");
    for (const auto& p : out.freq_peaks[7])
        std::printf("  phi=%7.2f R=%7.2f h=%.4g\n", p.axis1_value / deg, p.axis2_value, p.height);

    return 0;
}
