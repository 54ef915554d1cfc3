// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "isac/channel.hpp"
#include "isac/emusic.hpp"
#include "isac/geometry.hpp"
#include "isac/grid.hpp"
#include "isac/rng.hpp"
#include "isac/waveform.hpp"

namespace isac {

// Parameters of one EMUSIC sensing run. Angles are radians, ranges meters,
// velocities m/s.
struct SensingParams {
    int g_hat = 0;  // assumed target count; 0 means "use the true scene size"
    double rho = 1.0;
    double nu = 1.0;
    bool conventional = false;  // plain MUSIC baseline (no reweighting)

    double gamma_s_db = 20.0;   // per-cell echo SSNR target
    double noise_var = 1e-6;    // receiver noise variance sigma^2
    int n_sweeps = 64;          // full mode sweeps feeding the covariances

    GridAxis theta_axis{"theta", 0.0, M_PI / 2.0, 0.1 * M_PI / 180.0};
    GridAxis phi_axis{"phi", 1.0 * M_PI / 180.0, 89.0 * M_PI / 180.0, 0.1 * M_PI / 180.0};
    GridAxis range_axis{"range", 5.0, 120.0, 0.25};
    GridAxis v_axis{"v", -5.0, 5.0, 0.05};

    int max_points = 6;
    double rel_height = 0.002;       // peak detection floor relative to the grid max
    int min_separation_cells = 3;
    double angle_gate = 2.0 * M_PI / 180.0;
    double range_gate = 3.0;

    // Minimum top-eigenvalue dominance (relative to the noise floor) of an
    // anchor's null-steered beamformed covariance for the anchor to count as
    // a real point rather than a spectrum sidelobe.
    double min_beam_dominance = 6.0;

    // Slow-time Doppler dwell (coherent across n_slow symbols).
    int n_slow = 64;
    double t_slow = 0.0;  // 0 means "choose 128 * T_0"
    int velocity_draws = 16;
};

struct SensingOutputs {
    Estimate estimate;
    MatrixXcd h_s_nominal;      // ground-truth channel used for power sizing
    MatrixXd sensing_power;     // P_{q,i_s} per (subcarrier, sweep slot)
    std::vector<std::vector<Peak>> oam_peaks;   // per subcarrier, (theta, phi)
    std::vector<std::vector<Peak>> freq_peaks;  // per sweep slot, (phi, range)
    Grid2D oam_spectrum_q0;
    Grid2D freq_spectrum_mid;
    VelocitySpectrum velocity;
    long clamped_cells = 0;
    int excluded_cells = 0;  // sensing cells skipped for vanishing channel gain
};

// Sensing power satisfying the SSNR constraint with equality per cell:
// P_{q,i_s} = gamma_s * sigma^2 / |h_{q,i_s}|^2. Cells with a vanishing
// channel gain are excluded (power 0) and counted.
inline MatrixXd sensing_power_sizing(const MatrixXcd& h_s, double gamma_s_linear,
                                     double noise_var, int* excluded = nullptr) {
    MatrixXd p = MatrixXd::Zero(h_s.rows(), h_s.cols());
    int skipped = 0;
    for (Eigen::Index q = 0; q < h_s.rows(); ++q) {
        for (Eigen::Index i = 0; i < h_s.cols(); ++i) {
            const double g2 = std::norm(h_s(q, i));
            if (g2 < 1e-30) {
                ++skipped;
                continue;
            }
            p(q, i) = gamma_s_linear * noise_var / g2;
        }
    }
    if (excluded) *excluded = skipped;
    return p;
}

// Model (infinite-snapshot) OAM-domain covariance of subcarrier q at the
// given SSNR: uncorrelated unit-phase sources with the scene's round-trip
// gains plus the echo-division noise floor of the per-cell power sizing.
// The sample covariance of simulate_echo_snapshots converges to this as the
// sweep count grows.
struct ModelCovariance {
    MatrixXcd r;        // whitened covariance (noise block = identity)
    VectorXd weights;   // inverse noise stds; pass as cell_weights downstream
};

inline ModelCovariance model_covariance_oam(const SystemConfig& cfg, const UcaGeometry& geom,
                                            const ScatterScene& scene,
                                            const std::vector<int>& sweep_modes, int q,
                                            double gamma_s_linear) {
    const MatrixXcd h_nom = sensing_channel(cfg, geom, scene, sweep_modes);
    ModelCovariance out;
    out.weights.resize(cfg.n_t);
    for (int i = 0; i < cfg.n_t; ++i) {
        const double div_var = std::norm(h_nom(q, i)) / gamma_s_linear;
        out.weights(i) = div_var > 0.0 ? 1.0 / std::sqrt(div_var) : 0.0;
    }
    // Source vectors live on the far-field steering manifold (Eq.-29 form,
    // no R-correction inside the Bessel argument) scaled by the physical
    // round-trip amplitude, so the spectrum's poles sit exactly on the
    // manifold the search sweeps.
    out.r = MatrixXcd::Identity(cfg.n_t, cfg.n_t);
    const double lambda = cfg.wavelength(q);
    for (std::size_t g = 0; g < scene.points.size(); ++g) {
        const ScatterPoint& pt = scene.points[g];
        const double dt = std::sqrt(pt.range * pt.range + geom.r_t * geom.r_t);
        const double dr = std::sqrt(pt.range * pt.range + geom.r_r * geom.r_r);
        const double amp = cfg.beta * lambda * cfg.n_t / (4.0 * M_PI * dt * dr) *
                           bessel_j(0, mode_gain_argument(geom.r_r, pt, lambda)) * pt.rcs;
        const VectorXcd steer = steering_oam(cfg, geom, q, pt.azimuth, pt.elevation);
        VectorXcd a(cfg.n_t);
        for (int i = 0; i < cfg.n_t; ++i) a(i) = amp * steer(i) * out.weights(i);
        out.r.noalias() += a * a.adjoint();
    }
    out.r = 0.5 * (out.r + MatrixXcd(out.r.adjoint()));
    return out;
}

// Simulates n_sweeps echo sweeps and produces the OAM-domain (rows) and
// frequency-domain (columns) snapshot sets after echo division. Scatterer
// reflection phases are redrawn per sweep, which realizes the uncorrelated
// source model the covariance analysis assumes; within a sweep the phases
// stay fixed so both snapshot domains share one physical observation.
struct EchoSnapshots {
    SnapshotSet oam;
    SnapshotSet freq;
    std::vector<MatrixXcd> per_sweep;  // divided channel estimate of each sweep
    std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> valid;
};

inline EchoSnapshots simulate_echo_snapshots(const SystemConfig& cfg, const UcaGeometry& geom,
                                             const ScatterScene& scene,
                                             const std::vector<int>& sweep_modes,
                                             const MatrixXd& power, double noise_var,
                                             int n_sweeps, std::uint64_t seed) {
    RandomStream phase_rng(seed, "scatter-phases");
    RandomStream data_rng(seed, "sensing-data");
    RandomStream noise_rng(seed, "sensing-noise");

    EchoSnapshots out;
    out.oam.domain = SnapshotDomain::oam;
    out.freq.domain = SnapshotDomain::frequency;
    out.oam.vectors.reserve(static_cast<std::size_t>(n_sweeps) * cfg.n_f);
    out.freq.vectors.reserve(static_cast<std::size_t>(n_sweeps) * cfg.n_t);

    for (int sweep = 0; sweep < n_sweeps; ++sweep) {
        std::vector<cxd> refl(scene.points.size());
        for (auto& r : refl) r = phase_rng.cphase();
        const MatrixXcd h_true = sensing_channel(cfg, geom, scene, sweep_modes, refl);

        MatrixXcd y(cfg.n_f, cfg.n_t);
        MatrixXcd s(cfg.n_f, cfg.n_t);
        for (int q = 0; q < cfg.n_f; ++q) {
            for (int i = 0; i < cfg.n_t; ++i) {
                s(q, i) = std::sqrt(power(q, i)) * data_rng.qpsk();
                y(q, i) = h_true(q, i) * s(q, i) + std::sqrt(noise_var) * noise_rng.cnormal();
            }
        }
        const auto div = echo_division(y, s);
        out.per_sweep.push_back(div.h);
        out.valid.push_back(div.valid);
    }
    return out;
}

// Rebuilds the row/column snapshot vectors from (possibly phase-compensated)
// sweep matrices, skipping rows or columns with invalid division cells.
inline void assemble_snapshot_vectors(const SystemConfig& cfg, EchoSnapshots& snaps) {
    snaps.oam.vectors.clear();
    snaps.freq.vectors.clear();
    for (std::size_t sw = 0; sw < snaps.per_sweep.size(); ++sw) {
        const MatrixXcd& h = snaps.per_sweep[sw];
        const auto& valid = snaps.valid[sw];
        for (int q = 0; q < cfg.n_f; ++q)
            if (valid.row(q).all()) snaps.oam.vectors.push_back(h.row(q).transpose());
        for (int i = 0; i < cfg.n_t; ++i)
            if (valid.col(i).all()) snaps.freq.vectors.push_back(h.col(i));
    }
}

namespace detail {

inline std::vector<Peak> detected_peaks(const Grid2D& grid, int max_points, int min_sep,
                                        double rel_height) {
    auto peaks = find_peaks(grid, max_points, min_sep);
    if (peaks.empty()) return peaks;
    const double cutoff = rel_height * peaks.front().height;
    std::vector<Peak> kept;
    for (const auto& p : peaks)
        if (p.height >= cutoff) kept.push_back(p);
    return kept;
}

}  // namespace detail

// Velocity dwell: the sensing mode l = 0 observed coherently over n_slow
// symbol periods (scatterers quasi-static over the dwell). The within-sweep
// Doppler aperture (2*pi*f_d*T_s ~ 0.03 rad at 3 m/s) cannot support the
// 0.1 m/s accuracy target, so the dwell spans many symbols.
inline void run_velocity_dwell(const SystemConfig& cfg, const UcaGeometry& geom,
                               const ScatterScene& scene, const SensingParams& params,
                               std::uint64_t seed, SensingOutputs& out) {
    const double gamma_s = std::pow(10.0, params.gamma_s_db / 10.0);
    const double t_slow = params.t_slow > 0.0 ? params.t_slow : 128.0 * cfg.block_time();
    RandomStream vel_noise(seed, "velocity-noise");
    VectorXcd c_q(cfg.n_f);
    for (int q = 0; q < cfg.n_f; ++q) {
        cxd acc = 0.0;
        for (std::size_t g = 0; g < scene.points.size(); ++g) {
            const double tau = scene.delay(static_cast<int>(g), cfg.c);
            acc += sensing_mode_gain(cfg, geom, scene.points[g], q, 0) * scene.points[g].rcs *
                   std::polar(1.0, -2.0 * M_PI * (cfg.f_0 + q * cfg.delta_f) * tau);
        }
        c_q(q) = acc;
    }
    const double f_d = scene.doppler(cfg);
    SnapshotSet slow;
    slow.domain = SnapshotDomain::slow_time;
    for (int draw = 0; draw < params.velocity_draws; ++draw) {
        for (int q = 0; q < cfg.n_f; ++q) {
            const double div_noise_std =
                std::abs(c_q(q)) > 0.0 ? std::abs(c_q(q)) / std::sqrt(gamma_s) : 0.0;
            VectorXcd v(params.n_slow);
            for (int j = 0; j < params.n_slow; ++j)
                v(j) = c_q(q) * std::polar(1.0, 2.0 * M_PI * f_d * j * t_slow) +
                       div_noise_std * vel_noise.cnormal();
            slow.vectors.push_back(std::move(v));
        }
    }
    const auto vel_eig = hermitian_eig(sample_covariance(slow));
    const auto vel_sub =
        reweight_noise_subspace(vel_eig, 1, params.rho, params.nu, params.conventional);
    out.velocity = estimate_velocity(vel_sub, cfg, params.v_axis, t_slow);
}

// Full EMUSIC position-plus-velocity acquisition on a simulated echo run.
inline SensingOutputs run_sensing(const SystemConfig& cfg, const UcaGeometry& geom,
                                  const ScatterScene& scene, const SensingParams& params,
                                  std::uint64_t seed) {
    cfg.validate();
    geom.validate();
    scene.validate(geom, cfg.n_t);

    const auto sweep_modes = sensing_sweep_modes(cfg.n_t);
    const double gamma_s = std::pow(10.0, params.gamma_s_db / 10.0);
    const int g_true = static_cast<int>(scene.points.size());
    const int g_hat = params.g_hat > 0 ? params.g_hat : g_true;

    SensingOutputs out;
    out.h_s_nominal = sensing_channel(cfg, geom, scene, sweep_modes);
    out.sensing_power =
        sensing_power_sizing(out.h_s_nominal, gamma_s, params.noise_var, &out.excluded_cells);

    auto snaps = simulate_echo_snapshots(cfg, geom, scene, sweep_modes, out.sensing_power,
                                         params.noise_var, params.n_sweeps, seed);

    // Velocity first: the slow-time Doppler phase e^{j*2*pi*f_d*i_s*T_0}
    // rides across the mode slots of every sweep and would cap the angular
    // null depth; with v estimated from the coherent dwell the sweeps are
    // de-rotated before any angle processing.
    run_velocity_dwell(cfg, geom, scene, params, seed, out);
    {
        const double f_d_hat = 2.0 * out.estimate.v_hat * cfg.f_0 / cfg.c;
        const double t0 = cfg.block_time();
        for (auto& h : snaps.per_sweep)
            for (int i = 0; i < cfg.n_t; ++i)
                h.col(i) *= std::polar(1.0, -2.0 * M_PI * f_d_hat * (i + 1) * t0);
    }
    assemble_snapshot_vectors(cfg, snaps);

    // OAM domain: covariance, subspace, and (theta, phi) spectrum per
    // subcarrier; snapshot n of subcarrier q is sweep n's divided row q.
    out.oam_peaks.resize(static_cast<std::size_t>(cfg.n_f));
    for (int q = 0; q < cfg.n_f; ++q) {
        // Whitening weights: the division-noise variance per cell is
        // sigma^2 / P_{q,i}, known at the transmitter from its own power
        // sizing. Zero-power (excluded) cells get weight 0.
        VectorXd weights(cfg.n_t);
        for (int i = 0; i < cfg.n_t; ++i)
            weights(i) = std::sqrt(out.sensing_power(q, i)) / std::sqrt(params.noise_var);
        SnapshotSet per_q;
        per_q.domain = SnapshotDomain::oam;
        for (std::size_t sw = 0; sw < snaps.per_sweep.size(); ++sw)
            if (snaps.valid[sw].row(q).all())
                per_q.vectors.push_back(
                    snaps.per_sweep[sw].row(q).transpose().cwiseProduct(weights.cast<cxd>()));
        const auto eig = hermitian_eig(sample_covariance(per_q));
        const auto sub = reweight_noise_subspace(eig, std::min(g_hat, cfg.n_t - 1), params.rho,
                                                 params.nu, params.conventional);
        long clamped = 0;
        Grid2D grid = pseudospectrum_oam(sub, cfg, geom, q, params.theta_axis, params.phi_axis,
                                         &clamped, &weights);
        out.clamped_cells += clamped;
        out.oam_peaks[static_cast<std::size_t>(q)] = detail::detected_peaks(
            grid, params.max_points, params.min_separation_cells, params.rel_height);
        if (q == 0) out.oam_spectrum_q0 = std::move(grid);
    }

    // Anchor directions from the OAM domain alone (theta/phi means per point).
    Estimate fused = fuse_estimates(out.oam_peaks, {}, params.angle_gate, params.range_gate);

    // Anchors without near-full subcarrier support are sidelobes, not
    // points: a real reflect point peaks in (almost) every per-q spectrum.
    const int min_q_support = static_cast<int>(std::ceil(0.9 * cfg.n_f));

    // Frequency domain: the manifold's phi dependence across subcarriers is
    // a fraction of a percent (the band spans ~0.1% of the carrier), so the
    // per-anchor range profiles have to come from data separated in the OAM
    // domain: beamform each sweep's channel estimate toward the anchor's
    // steering vector with nulls on the other anchors (suppresses their
    // 1/R^4 dynamic range), build the anchor's covariance from the
    // beamformed sweeps, and read the per-mode (phi_hat, R) slices against
    // that subspace. Anchors whose null-steered covariance shows no dominant
    // eigenvalue are spectrum sidelobes and are dropped, strongest first.
    const auto beamform_cov = [&](const VectorXcd& steer,
                                  const std::vector<VectorXcd>& null_dirs,
                                  SnapshotSet* snapshots) {
        VectorXcd w = steer;
        if (!null_dirs.empty()) {
            MatrixXcd basis(cfg.n_t, static_cast<Eigen::Index>(null_dirs.size()));
            for (std::size_t b = 0; b < null_dirs.size(); ++b)
                basis.col(static_cast<Eigen::Index>(b)) = null_dirs[b];
            MatrixXcd gram = basis.adjoint() * basis;
            gram.diagonal().array() += 1e-12 * gram.trace().real();
            w -= basis * gram.ldlt().solve(basis.adjoint() * steer);
        }
        SnapshotSet beamformed;
        beamformed.domain = SnapshotDomain::frequency;
        for (const auto& h_sweep : snaps.per_sweep)
            beamformed.vectors.push_back(h_sweep * w.conjugate() / w.squaredNorm());
        const MatrixXcd r = sample_covariance(beamformed);
        if (snapshots) *snapshots = std::move(beamformed);
        return hermitian_eig(r);
    };
    const auto dominance = [&](const EigenDecomposition& eig) {
        const Eigen::Index n = eig.eigenvalues.size();
        const double floor = std::max(eig.eigenvalues(n / 2 + n / 4), 1e-300);
        return eig.eigenvalues(0) / floor;
    };

    // Candidate order: q-supported anchors, strongest first.
    std::vector<std::size_t> order;
    for (std::size_t a = 0; a < fused.points.size(); ++a) {
        if (static_cast<int>(fused.points[a].theta_per_q.size()) < min_q_support) {
            fused.points[a].detected = false;
            continue;
        }
        order.push_back(a);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return fused.points[x].peak_height > fused.points[y].peak_height;
    });

    std::vector<std::size_t> accepted;
    std::vector<VectorXcd> accepted_steer;
    for (std::size_t a : order) {
        PointEstimate& pt = fused.points[a];
        const VectorXcd steer = steering_oam(cfg, geom, 0, pt.theta, pt.phi);
        const auto eig = beamform_cov(steer, accepted_steer, nullptr);
        if (dominance(eig) >= params.min_beam_dominance) {
            accepted.push_back(a);
            accepted_steer.push_back(steer);
        } else {
            pt.detected = false;
        }
    }

    out.freq_peaks.resize(static_cast<std::size_t>(cfg.n_t));
    for (std::size_t idx = 0; idx < accepted.size(); ++idx) {
        const std::size_t a = accepted[idx];
        PointEstimate& pt = fused.points[a];
        const double snapped = params.phi_axis.value(static_cast<int>(
            std::lround((pt.phi - params.phi_axis.start) / params.phi_axis.step)));

        std::vector<VectorXcd> nulls;
        for (std::size_t j = 0; j < accepted.size(); ++j)
            if (j != idx) nulls.push_back(accepted_steer[j]);
        const auto anchor_eig = beamform_cov(accepted_steer[idx], nulls, nullptr);
        const auto anchor_sub =
            reweight_noise_subspace(anchor_eig, 1, params.rho, params.nu, params.conventional);

        const GridAxis row_axis{params.phi_axis.name, snapped, snapped, 1.0};

        // Seed from the mode-0 profile, then per-mode argmax gated around it.
        long clamped = 0;
        const Grid2D seed_slice = pseudospectrum_freq(anchor_sub, cfg, geom, 0, row_axis,
                                                      params.range_axis, &clamped);
        out.clamped_cells += clamped;
        int best = 0;
        for (int jr = 1; jr < params.range_axis.count(); ++jr)
            if (seed_slice.values(0, jr) > seed_slice.values(0, best)) best = jr;
        const double seed = params.range_axis.value(best);
        if (idx == 0) out.freq_spectrum_mid = seed_slice;

        for (int i = 0; i < cfg.n_t; ++i) {
            const int l = sweep_modes[static_cast<std::size_t>(i)];
            const Grid2D slice = pseudospectrum_freq(anchor_sub, cfg, geom, l, row_axis,
                                                     params.range_axis, &clamped);
            const auto peaks = detail::detected_peaks(slice, params.max_points,
                                                      params.min_separation_cells,
                                                      params.rel_height);
            const Peak* chosen = nullptr;
            for (const auto& p : peaks) {
                if (std::abs(p.axis2_value - seed) > params.range_gate) continue;
                if (!chosen || p.height > chosen->height) chosen = &p;
            }
            if (chosen) {
                pt.phi_per_mode.push_back(snapped);
                pt.range_per_mode.push_back(chosen->axis2_value);
                out.freq_peaks[static_cast<std::size_t>(i)].push_back(*chosen);
            }
        }

        // Eq.-34-style means over whatever the gates retained.
        if (!pt.range_per_mode.empty()) {
            double s = 0.0;
            for (double r : pt.range_per_mode) s += r;
            pt.range = s / static_cast<double>(pt.range_per_mode.size());
            double sp = 0.0;
            std::size_t n = pt.phi_per_q.size() + pt.phi_per_mode.size();
            for (double v : pt.phi_per_q) sp += v;
            for (double v : pt.phi_per_mode) sp += v;
            pt.phi = sp / static_cast<double>(n);
        }
        pt.detected = !pt.theta_per_q.empty() && !pt.range_per_mode.empty();
    }
    out.estimate = std::move(fused);

    out.estimate.v_hat = out.velocity.v_hat;
    return out;
}

}  // namespace isac
