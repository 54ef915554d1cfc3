// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isac/geometry.hpp"
#include "isac/optimizer.hpp"
#include "isac/sensing.hpp"

namespace isac::harness {

// One experiment description: geometry, scene, estimator and optimizer
// settings. Everything omitted in the JSON falls back to the reference
// two-user setup (N_f = 16, delta_f = 200 kHz, r_t = 0.5 m, r_r = 0.25 m,
// f_0 = 2.4 GHz, gamma_s = 20 dB, rho = nu = 1, v = 3 m/s).
struct Scenario {
    std::string experiment = "full-pipeline";
    std::uint64_t seed = 1;

    SystemConfig cfg;
    UcaGeometry geom;
    ScatterScene scene;

    std::vector<int> mode_counts = {8, 7};  // N_k per user
    double noise_var = 1e-6;
    double jnr_db = 10.0;  // jamming-to-noise ratio at user 1

    SensingParams sensing;

    // Mode hopping
    std::uint64_t hop_key = 0x5eedULL;
    std::string index_bits = "c0ffee";
    int ao_slot = 1;

    // Optimizer. total_power <= 0 means "sensing power plus comm_budget_scale
    // of it", which keeps the default scenario feasible at any geometry.
    double total_power = 0.0;
    double comm_budget_scale = 0.05;
    double ao_tol = 1e-4;
    int ao_max_iterations = 100;
};

struct LoadReport {
    std::vector<std::string> warnings;  // unknown fields, one entry each
};

// Parses and validates a scenario JSON string. Throws std::invalid_argument
// with a field path on validation failures; unknown fields are reported in
// the LoadReport and ignored.
Scenario parse_scenario(const std::string& json_text, LoadReport* report = nullptr);

Scenario load_scenario(const std::string& path, LoadReport* report = nullptr);

// Derived quantities shared by the experiments.
struct ScenarioDerived {
    std::vector<int> sweep_modes;
    ChannelSet channels;      // ground-truth channels
    double gamma_s_linear = 0.0;
    VectorXd sensing_power_q;  // for the AO slot
    double total_power = 0.0;
    double power_floor = 0.0;
    double jam_power = 0.0;
};

ScenarioDerived derive(const Scenario& sc);

}  // namespace isac::harness
