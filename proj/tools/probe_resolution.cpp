// SPDX-License-Identifier: Apache-2.0
// Scratch probe: azimuthal resolution vs N_t on the equal-range scene.
#include <cstdio>

#include "isac/sensing.hpp"

using namespace isac;

int main(int argc, char** argv) {
    const double deg = M_PI / 180.0;
    SystemConfig cfg;
    cfg.n_t = argc > 1 ? std::atoi(argv[1]) : 16;
    UcaGeometry geom;

    ScatterScene scene;
    scene.points = {{39.0, 15.8 * deg, 50.0 * deg, 1.0},
                    {39.0, 16.6 * deg, 50.0 * deg, 1.0}};
    scene.v = 3.0;
    scene.jammer_index = 0;

    SensingParams params;
    params.n_sweeps = argc > 2 ? std::atoi(argv[2]) : 16;
    params.g_hat = std::min(2, cfg.n_t - 1);

    const auto out = run_sensing(cfg, geom, scene, params, 1);
    std::printf("n_t=%d sweeps=%d\n", cfg.n_t, params.n_sweeps);
    for (const auto& p : out.estimate.points)
        std::printf("point: theta=%8.3f phi=%8.3f R=%7.3f det=%d h=%.3g\n", p.theta / deg,
                    p.phi / deg, p.range, p.detected, p.peak_height);

    // Count strict local maxima in the window theta [14, 18.4] deg on the
    // phi = 50 deg row of the q0 spectrum.
    const auto& g = out.oam_spectrum_q0;
    const int jphi = static_cast<int>(std::lround((50.0 * deg - g.axis2.start) / g.axis2.step));
    int count = 0;
    for (int i = 1; i + 1 < g.axis1.count(); ++i) {
        const double th = g.axis1.value(i) / deg;
        if (th < 14.0 || th > 18.4) continue;
        if (g.values(i, jphi) > g.values(i - 1, jphi) && g.values(i, jphi) > g.values(i + 1, jphi))
            ++count;
    }
    std::printf("window peaks at phi=50 row: %d\n", count);
    for (int i = 0; i < g.axis1.count(); ++i) {
        const double th = g.axis1.value(i) / deg;
        if (th >= 14.5 && th <= 18.0 && (i % 2 == 0))
            std::printf("  th=%5.2f v=%.4g\n", th, g.values(i, jphi));
    }
    return 0;
}
