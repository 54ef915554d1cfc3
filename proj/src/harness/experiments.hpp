// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "harness/results.hpp"
#include "harness/scenario.hpp"
#include "isac/optimizer.hpp"

namespace isac::harness {

// Experiment identifiers accepted by `isac run --experiment`.
std::vector<std::string> experiment_ids();

ResultBundle run_experiment(const Scenario& sc);

// ---- pieces shared with the acceptance suite ----

// Steering-scheme comparison at a fixed elevation slice.
struct SteeringSlice {
    std::string scheme;      // oam-mimo | oam-miso | mimo | miso
    Grid2D slice;            // 1 x n_theta (axis1 = theta)
    double half_width_deg;   // half-height width of the isolated peak
    double flatness;         // (max - min) / max over the slice
};
std::vector<SteeringSlice> steering_comparison(const Scenario& sc, double phi_deg);

// Model-covariance azimuth slice for the resolution study.
struct ResolutionSlice {
    int n_t = 0;
    Grid2D slice;        // 1 x n_theta at the true elevation row
    int window_peaks = 0;  // strict local maxima with theta in the pair window
};
ResolutionSlice resolution_slice(const Scenario& sc, int n_t, double window_lo_deg,
                                 double window_hi_deg);

// Full pipeline: sensing -> estimate -> reconstructed jamming channel -> AO.
struct PipelineResult {
    SensingOutputs sensing;
    int jammer_point = -1;          // index into sensing.estimate.points
    Eigen::Vector3d jammer_position_est = Eigen::Vector3d::Zero();
    AoResult ao;                    // design side: estimated jamming CSI
    AsrBreakdown realized;          // evaluated against the true environment
    WmmseProblem* eval_problem = nullptr;
};
PipelineResult run_full_pipeline(const Scenario& sc, const ScenarioDerived& d);

// AO variants for the mitigation/convergence stories. All realized ASRs are
// evaluated against the true jamming environment.
struct MitigationResult {
    AoResult full;       // sensed jamming CSI in the design
    AoResult blind;      // jamming-unaware design (no-sensing baseline)
    double asr_full = 0.0;
    double asr_blind = 0.0;
    double asr_identity = 0.0;
};
MitigationResult run_mitigation(const Scenario& sc, const ScenarioDerived& d);

}  // namespace isac::harness
