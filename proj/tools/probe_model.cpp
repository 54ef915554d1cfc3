// SPDX-License-Identifier: Apache-2.0
// Scratch probe: model-covariance resolution study (Fig.-5 mechanism).
#include <cstdio>

#include "isac/sensing.hpp"

using namespace isac;

int main(int argc, char** argv) {
    const double deg = M_PI / 180.0;
    SystemConfig cfg;
    cfg.n_t = argc > 1 ? std::atoi(argv[1]) : 16;
    UcaGeometry geom;

    ScatterScene scene;
    scene.points = {{39.0, 10.0 * deg, 50.0 * deg, 1.0},
                    {39.0, 15.8 * deg, 50.0 * deg, 1.0},
                    {39.0, 16.6 * deg, 50.0 * deg, 1.0},
                    {39.0, 29.0 * deg, 50.0 * deg, 1.0}};
    scene.v = 0.0;
    scene.jammer_index = 0;

    const auto modes = sensing_sweep_modes(cfg.n_t);
    const int g_hat = std::min(4, cfg.n_t - 1);
    const auto model = model_covariance_oam(cfg, geom, scene, modes, 0, 100.0);
    const auto eig = hermitian_eig(model.r);
    std::printf("n_t=%d g_hat=%d eigs: ", cfg.n_t, g_hat);
    for (int i = 0; i < std::min(8, cfg.n_t); ++i) std::printf("%.3g ", eig.eigenvalues(i));
    std::printf("\n");
    const auto sub = reweight_noise_subspace(eig, g_hat, 1.0, 1.0, false);

    GridAxis theta{"theta", 0.0, M_PI / 2, 0.1 * deg};
    GridAxis phi{"phi", 50.0 * deg, 50.0 * deg, 1.0};  // phi slice at truth
    const auto grid = pseudospectrum_oam(sub, cfg, geom, 0, theta, phi, nullptr, &model.weights);

    int count = 0;
    for (int i = 1; i + 1 < theta.count(); ++i) {
        const double th = theta.value(i) / deg;
        if (th < 14.0 || th > 18.4) continue;
        if (grid.values(i, 0) > grid.values(i - 1, 0) && grid.values(i, 0) > grid.values(i + 1, 0)) {
            ++count;
            std::printf("window peak at th=%.2f v=%.4g\n", th, grid.values(i, 0));
        }
    }
    std::printf("window peaks: %d\n", count);
    const auto peaks = find_peaks(grid, 8, 3);
    for (const auto& p : peaks)
        std::printf("grid peak th=%6.2f h=%.4g\n", p.axis1_value / deg, p.height);
    return 0;
}
