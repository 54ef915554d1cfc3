// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "isac/bessel.hpp"
#include "isac/geometry.hpp"
#include "isac/linalg.hpp"

namespace isac {

// Bessel arguments of the round-trip mode gain: 2*pi*r*R*sin(phi) / (lambda*sqrt(R^2+r^2)).
inline double mode_gain_argument(double r, const ScatterPoint& p, double lambda) {
    return 2.0 * M_PI * r * p.range * std::sin(p.elevation) /
           (lambda * std::sqrt(p.range * p.range + r * r));
}

// Round-trip OAM gain A_{q,i_s,g} of one reflect point for sensing mode l:
// amplitude from the two-leg path loss, the fixed round-trip phase, the
// doubled azimuth signature e^{j*2*theta*l} of a flipped-mode echo, and the
// transmit/receive Bessel envelopes. Excludes the radar cross section and
// the delay/Doppler phases, which attach per subcarrier and slot.
inline cxd sensing_mode_gain(const SystemConfig& cfg, const UcaGeometry& geom,
                             const ScatterPoint& p, int q, int l) {
    if (2 * std::abs(l) > cfg.n_t) throw std::invalid_argument("sensing_mode_gain: |l| > n_t/2");
    const double lambda = cfg.wavelength(q);
    const double dt = std::sqrt(p.range * p.range + geom.r_t * geom.r_t);
    const double dr = std::sqrt(p.range * p.range + geom.r_r * geom.r_r);
    const double amp = cfg.beta * lambda * cfg.n_t / (4.0 * M_PI * dt * dr);
    const double round_trip = -2.0 * M_PI * (dt + dr) / lambda;
    const cxd phase = std::polar(1.0, round_trip + 2.0 * p.azimuth * l);
    const double bt = bessel_j(l, mode_gain_argument(geom.r_t, p, lambda));
    const double br = bessel_j(0, mode_gain_argument(geom.r_r, p, lambda));
    return amp * phase * bt * br;
}

// Mono-static sensing channel, one row per subcarrier q and one column per
// sweep slot i_s (slot i_s carries sensing mode sensing_modes[i_s]):
//   h(q, i_s) = sum_g A_{q,i_s,g} * chi_g * refl_g * e^{-j*2*pi*f_0*tau_g}
//               * e^{j*2*pi*f_d*i_s*T_0} * e^{-j*2*pi*q*df*tau_g}.
// refl_g is an optional per-point complex reflectivity fluctuation (used by
// the snapshot simulation); defaults to 1.
inline MatrixXcd sensing_channel(const SystemConfig& cfg, const UcaGeometry& geom,
                                 const ScatterScene& scene, const std::vector<int>& sensing_modes,
                                 const std::vector<cxd>& reflectivity = {}) {
    if (static_cast<int>(sensing_modes.size()) != cfg.n_t)
        throw std::invalid_argument("sensing_channel: need one sensing mode per slot");
    double tau_max = 0.0;
    for (std::size_t g = 0; g < scene.points.size(); ++g)
        tau_max = std::max(tau_max, scene.delay(static_cast<int>(g), cfg.c));
    if (cfg.t_cp < tau_max)
        throw std::invalid_argument("sensing_channel: cyclic prefix shorter than max echo delay");
    if (std::abs(scene.v) >= cfg.c * cfg.delta_f / (2.0 * cfg.f_0))
        throw std::invalid_argument("sensing_channel: |v| outside OFDM validity bound");

    const double f_d = scene.doppler(cfg);
    const double t0 = cfg.block_time();
    MatrixXcd h = MatrixXcd::Zero(cfg.n_f, cfg.n_t);
    for (std::size_t g = 0; g < scene.points.size(); ++g) {
        const ScatterPoint& p = scene.points[g];
        const double tau = scene.delay(static_cast<int>(g), cfg.c);
        const cxd refl = g < reflectivity.size() ? reflectivity[g] : cxd(1.0, 0.0);
        for (int i = 0; i < cfg.n_t; ++i) {
            const cxd slow = std::polar(1.0, 2.0 * M_PI * f_d * (i + 1) * t0);
            for (int q = 0; q < cfg.n_f; ++q) {
                const cxd a = sensing_mode_gain(cfg, geom, p, q, sensing_modes[i]);
                const cxd range_phase =
                    std::polar(1.0, -2.0 * M_PI * (cfg.f_0 + q * cfg.delta_f) * tau);
                h(q, i) += a * p.rcs * refl * range_phase * slow;
            }
        }
    }
    return h;
}

// Discrete-time gain of one point at oversampled instant q_dot (0..n_f_prime-1)
// within slot i_s; keeps the intra-symbol Doppler terms the pipeline drops.
inline cxd discrete_time_gain(const SystemConfig& cfg, const UcaGeometry& geom,
                              const ScatterScene& scene, int g, int q, int l, int i_s,
                              int q_dot) {
    const ScatterPoint& p = scene.points[g];
    const double tau = scene.delay(g, cfg.c);
    const double f_d = scene.doppler(cfg);
    const double t0 = cfg.block_time();
    const double t = static_cast<double>(q_dot) / (cfg.delta_f * cfg.n_f_prime);
    const cxd a = sensing_mode_gain(cfg, geom, p, q, l);
    const double phase = -2.0 * M_PI * cfg.f_0 * tau + 2.0 * M_PI * f_d * t / 1.0 +
                         2.0 * M_PI * f_d * i_s * t0 +
                         2.0 * M_PI * q * cfg.delta_f *
                             (t + i_s * t0 - tau + 2.0 * scene.v / cfg.c * (t + i_s * t0));
    return a * p.rcs * std::polar(1.0, phase);
}

// LoS channel from the transmit UCA to user k's receive UCA at subcarrier q:
// entry (u, n) = beta_k * lambda_q / (4*pi*d) * e^{j*2*pi*d/lambda_q} with d
// the exact 3-D distance from transmit element n to receive element u.
inline MatrixXcd comm_channel(const SystemConfig& cfg, const UcaGeometry& geom, int k, int q) {
    if (k < 0 || k >= static_cast<int>(geom.users.size()))
        throw std::invalid_argument("comm_channel: user index out of range");
    const double lambda = cfg.wavelength(q);
    const double beta = cfg.comm_beta(k);
    MatrixXcd h(cfg.n_t, cfg.n_t);
    for (int u = 0; u < cfg.n_t; ++u) {
        const Eigen::Vector3d ru = user_element_position(geom.users[k], u, cfg.n_t);
        for (int n = 0; n < cfg.n_t; ++n) {
            const double d = (ru - tx_element_position(geom, n, cfg.n_t)).norm();
            h(u, n) = std::polar(beta * lambda / (4.0 * M_PI * d), 2.0 * M_PI * d / lambda);
        }
    }
    return h;
}

// Jamming channel from the jammer array (true or reconstructed element
// positions) to user k: entry (u, n_j) with the same LoS law and beta_{J,k}.
inline MatrixXcd jamming_channel(const SystemConfig& cfg, const UcaGeometry& geom,
                                 const std::vector<Eigen::Vector3d>& jammer_elements, int k,
                                 int q) {
    if (k < 0 || k >= static_cast<int>(geom.users.size()))
        throw std::invalid_argument("jamming_channel: user index out of range");
    const double lambda = cfg.wavelength(q);
    const double beta = cfg.jam_beta(k);
    MatrixXcd h(cfg.n_t, jammer_elements.size());
    for (int u = 0; u < cfg.n_t; ++u) {
        const Eigen::Vector3d ru = user_element_position(geom.users[k], u, cfg.n_t);
        for (std::size_t nj = 0; nj < jammer_elements.size(); ++nj) {
            const double d = (ru - jammer_elements[nj]).norm();
            h(u, static_cast<Eigen::Index>(nj)) =
                std::polar(beta * lambda / (4.0 * M_PI * d), 2.0 * M_PI * d / lambda);
        }
    }
    return h;
}

// All channels of one scenario realization. H_comm and H_jam are indexed
// [user][subcarrier].
struct ChannelSet {
    MatrixXcd h_s;
    std::vector<std::vector<MatrixXcd>> h_comm;
    std::vector<std::vector<MatrixXcd>> h_jam;
};

inline ChannelSet build_channel_set(const SystemConfig& cfg, const UcaGeometry& geom,
                                    const ScatterScene& scene,
                                    const std::vector<int>& sensing_modes,
                                    const std::vector<Eigen::Vector3d>& jammer_elements) {
    ChannelSet out;
    out.h_s = sensing_channel(cfg, geom, scene, sensing_modes);
    const int k_users = static_cast<int>(geom.users.size());
    out.h_comm.resize(k_users);
    out.h_jam.resize(k_users);
    for (int k = 0; k < k_users; ++k) {
        out.h_comm[k].reserve(cfg.n_f);
        out.h_jam[k].reserve(cfg.n_f);
        for (int q = 0; q < cfg.n_f; ++q) {
            out.h_comm[k].push_back(comm_channel(cfg, geom, k, q));
            out.h_jam[k].push_back(jamming_channel(cfg, geom, jammer_elements, k, q));
        }
    }
    return out;
}

}  // namespace isac
