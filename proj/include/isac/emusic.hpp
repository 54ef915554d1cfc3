// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "isac/bessel.hpp"
#include "isac/geometry.hpp"
#include "isac/grid.hpp"
#include "isac/linalg.hpp"
#include "isac/parallel.hpp"
#include "isac/waveform.hpp"

namespace isac {

enum class SnapshotDomain { oam, frequency, slow_time };

struct SnapshotSet {
    SnapshotDomain domain = SnapshotDomain::oam;
    std::vector<VectorXcd> vectors;
};

// R = (1/N) sum_n h_n h_n^H. Hermitian PSD by construction.
inline MatrixXcd sample_covariance(const SnapshotSet& snapshots) {
    if (snapshots.vectors.empty())
        throw std::invalid_argument("sample_covariance: need at least one snapshot");
    const Eigen::Index dim = snapshots.vectors.front().size();
    MatrixXcd r = MatrixXcd::Zero(dim, dim);
    for (const auto& v : snapshots.vectors) {
        if (v.size() != dim)
            throw std::invalid_argument("sample_covariance: inconsistent snapshot lengths");
        r.noalias() += v * v.adjoint();
    }
    r /= static_cast<double>(snapshots.vectors.size());
    // Symmetrize away the accumulation round-off so downstream Hermitian
    // checks see an exactly Hermitian matrix.
    return 0.5 * (r + MatrixXcd(r.adjoint()));
}

// Noise subspace with the enhanced-MUSIC eigenvector reweighting: column
// G_hat+kappa is scaled by (rho * mu_min / mu_{G_hat+kappa})^nu, which keeps
// weak targets that fell below an under-estimated signal dimension visible.
// `conventional = true` skips the reweighting (plain MUSIC baseline).
struct SubspaceModel {
    int signal_dim = 1;  // assumed target count G_hat
    double rho = 1.0;
    double nu = 1.0;
    bool conventional = false;
    MatrixXcd noise_subspace;  // reweighted columns, NOT re-normalized
    EigenDecomposition raw;
};

inline SubspaceModel reweight_noise_subspace(const EigenDecomposition& eig, int g_hat,
                                             double rho, double nu, bool conventional = false) {
    const auto dim = static_cast<int>(eig.eigenvalues.size());
    if (g_hat < 1 || g_hat >= dim)
        throw std::invalid_argument("reweight_noise_subspace: need 1 <= G_hat < dim");
    if (!(rho > 0.0) || rho > 1.0 || !(nu > 0.0))
        throw std::invalid_argument(
            "reweight_noise_subspace: outside validity range rho in (0,1], nu > 0");

    SubspaceModel model;
    model.signal_dim = g_hat;
    model.rho = rho;
    model.nu = nu;
    model.conventional = conventional;
    model.raw = eig;
    model.noise_subspace.resize(dim, dim - g_hat);
    const double mu_max = std::max(eig.eigenvalues(0), 0.0);
    const double floor = 1e-15 * mu_max + 1e-300;  // degenerate all-zero tails scale to 1
    const double mu_min = std::max(eig.eigenvalues(dim - 1), floor);
    for (int kappa = 0; kappa < dim - g_hat; ++kappa) {
        const double mu = std::max(eig.eigenvalues(g_hat + kappa), floor);
        const double scale = conventional ? 1.0 : std::pow(rho * mu_min / mu, nu);
        model.noise_subspace.col(kappa) = scale * eig.eigenvectors.col(g_hat + kappa);
    }
    return model;
}

// OAM-domain steering vector (entries indexed by mode slot):
//   a_l(theta, phi) = e^{j*2*theta*l} * J_l(2*pi*r_t*sin(phi)/lambda_q).
inline VectorXcd steering_oam(const SystemConfig& cfg, const UcaGeometry& geom, int q,
                              double theta, double phi) {
    const double z = 2.0 * M_PI * geom.r_t * std::sin(phi) / cfg.wavelength(q);
    const auto j = bessel_j_all(cfg.n_t / 2, z);
    VectorXcd a(cfg.n_t);
    for (int slot = 0; slot < cfg.n_t; ++slot) {
        const int l = slot_mode(slot, cfg.n_t);
        const int al = std::abs(l);
        const double jl = (l >= 0 || al % 2 == 0) ? j[static_cast<std::size_t>(al)]
                                                  : -j[static_cast<std::size_t>(al)];
        a(slot) = std::polar(jl, 2.0 * theta * l);
    }
    return a;
}

// Frequency-domain steering vector over subcarriers for sensing mode l:
// matches the echo range/elevation structure including subcarrier-dependent
// wavelengths and the 2R/c phase ramp.
inline VectorXcd steering_freq(const SystemConfig& cfg, const UcaGeometry& geom, int l,
                               double phi, double range) {
    if (!(range > 0.0)) throw std::invalid_argument("steering_freq: range must be > 0");
    const double dt = std::sqrt(range * range + geom.r_t * geom.r_t);
    const double dr = std::sqrt(range * range + geom.r_r * geom.r_r);
    const double tau = 2.0 * range / cfg.c;
    VectorXcd b(cfg.n_f);
    for (int q = 0; q < cfg.n_f; ++q) {
        const double lambda = cfg.wavelength(q);
        const double zt = 2.0 * M_PI * geom.r_t * range * std::sin(phi) / (lambda * dt);
        const double zr = 2.0 * M_PI * geom.r_r * range * std::sin(phi) / (lambda * dr);
        const double amp = lambda * bessel_j(l, zt) * bessel_j(0, zr) / (dt * dr);
        const double phase =
            -2.0 * M_PI * (dt + dr) / lambda - 2.0 * M_PI * tau * (cfg.f_0 + q * cfg.delta_f);
        b(q) = std::polar(amp, phase);
    }
    return b;
}

namespace detail {

// Cubic-Hermite table of J_0..J_{l_max}; the grid evaluators hit tens of
// millions of Bessel lookups and the direct series/recurrence path would
// dominate the runtime. Node derivatives come from J'_l = (J_{l-1}-J_{l+1})/2.
class BesselTable {
  public:
    BesselTable(int l_max, double z_max, double step = 2e-3)
        : l_max_(l_max), step_(step), inv_step_(1.0 / step) {
        const int n = static_cast<int>(std::ceil(z_max / step)) + 2;
        values_.resize(static_cast<std::size_t>(l_max + 2));
        for (auto& v : values_) v.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const auto all = bessel_j_all(l_max + 1, i * step);
            for (int l = 0; l <= l_max + 1; ++l)
                values_[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)] =
                    all[static_cast<std::size_t>(l)];
        }
        max_z_ = (n - 2) * step;
    }

    double eval(int l, double z) const {
        const double zz = std::abs(z);
        if (zz > max_z_) return bessel_j(l, zz);
        const int i = static_cast<int>(zz * inv_step_);
        const double t = (zz - i * step_) * inv_step_;
        const auto& v = values_[static_cast<std::size_t>(l)];
        const double y0 = v[static_cast<std::size_t>(i)];
        const double y1 = v[static_cast<std::size_t>(i + 1)];
        const double d0 = deriv(l, i);
        const double d1 = deriv(l, i + 1);
        const double t2 = t * t;
        const double t3 = t2 * t;
        double y = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * step_ * d0 +
                   (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * step_ * d1;
        if (z < 0.0 && l % 2 != 0) y = -y;
        return y;
    }

  private:
    double deriv(int l, int i) const {
        const double jm = l == 0 ? -values_[1][static_cast<std::size_t>(i)]
                                 : values_[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(i)];
        const double jp = values_[static_cast<std::size_t>(l + 1)][static_cast<std::size_t>(i)];
        return 0.5 * (jm - jp);
    }

    int l_max_;
    double step_;
    double inv_step_;
    double max_z_ = 0.0;
    std::vector<std::vector<double>> values_;
};

// Spectrum value from the projection of the normalized steering vector onto
// the noise subspace: 1 / (a^H U_n U_n^H a) with ||a|| = 1. Normalization
// keeps the manifold's 1/R^2-type amplitude trends out of the spectrum shape
// (a signal-free identity subspace reads exactly flat). Denominators below
// 1e-18 clamp there (saturated peak) and are counted.
inline double spectrum_value(double steer_norm2, double proj_norm2, long& flagged) {
    if (steer_norm2 < 1e-300) return 0.0;  // manifold blind at this cell
    const double fraction = proj_norm2 / steer_norm2;
    if (fraction < 1e-18) {
        ++flagged;
        return 1e18;
    }
    return 1.0 / fraction;
}

}  // namespace detail

// P_q(theta, phi) = 1 / (a^H U_n U_n^H a) on the grid (axis1 = theta,
// axis2 = phi), with a normalized. Denominators below 1e-18 clamp
// (saturated peak) and are counted in clamped_cells. cell_weights, when
// given, multiply the steering entries; pass the inverse noise standard
// deviations to run the search in the whitened domain (the echo-division
// noise is heteroscedastic across cells with known variance sigma^2/P).
inline Grid2D pseudospectrum_oam(const SubspaceModel& subspace, const SystemConfig& cfg,
                                 const UcaGeometry& geom, int q, const GridAxis& theta_axis,
                                 const GridAxis& phi_axis, long* clamped_cells = nullptr,
                                 const VectorXd* cell_weights = nullptr) {
    if (subspace.noise_subspace.rows() != cfg.n_t)
        throw std::invalid_argument("pseudospectrum_oam: subspace is not OAM-domain");
    Grid2D grid;
    grid.axis1 = theta_axis;
    grid.axis2 = phi_axis;
    const int n_theta = theta_axis.count();
    const int n_phi = phi_axis.count();
    grid.values.resize(n_theta, n_phi);

    const MatrixXcd un_h = subspace.noise_subspace.adjoint();  // (dim-Ghat) x dim
    const int l_half = cfg.n_t / 2;
    std::vector<long> flagged(static_cast<std::size_t>(n_phi), 0);

    parallel_for(n_phi, [&](int jp) {
        const double phi = phi_axis.value(jp);
        const double z = 2.0 * M_PI * geom.r_t * std::sin(phi) / cfg.wavelength(q);
        const auto jtab = bessel_j_all(l_half, z);
        MatrixXcd manifold(cfg.n_t, n_theta);
        for (int it = 0; it < n_theta; ++it) {
            const double theta = theta_axis.value(it);
            const cxd w = std::polar(1.0, 2.0 * theta);
            // powers w^l for l = -N/2+1 .. N/2
            cxd wl = std::pow(w, -l_half + 1);
            for (int slot = 0; slot < cfg.n_t; ++slot) {
                const int l = slot_mode(slot, cfg.n_t);
                const int al = std::abs(l);
                const double jl = (l >= 0 || al % 2 == 0) ? jtab[static_cast<std::size_t>(al)]
                                                          : -jtab[static_cast<std::size_t>(al)];
                const double cw = cell_weights ? (*cell_weights)(slot) : 1.0;
                manifold(slot, it) = jl * cw * wl;
                wl *= w;
            }
        }
        const MatrixXcd y = un_h * manifold;
        for (int it = 0; it < n_theta; ++it) {
            grid.values(it, jp) =
                detail::spectrum_value(manifold.col(it).squaredNorm(), y.col(it).squaredNorm(),
                                       flagged[static_cast<std::size_t>(jp)]);
        }
    });
    if (clamped_cells) {
        long total = 0;
        for (long f : flagged) total += f;
        *clamped_cells = total;
    }
    return grid;
}

// P_{i_s}(phi, R) = 1 / (b^H U_n U_n^H b) on the grid (axis1 = phi, axis2 = R).
inline Grid2D pseudospectrum_freq(const SubspaceModel& subspace, const SystemConfig& cfg,
                                  const UcaGeometry& geom, int l, const GridAxis& phi_axis,
                                  const GridAxis& r_axis, long* clamped_cells = nullptr,
                                  const VectorXd* cell_weights = nullptr) {
    if (subspace.noise_subspace.rows() != cfg.n_f)
        throw std::invalid_argument("pseudospectrum_freq: subspace is not frequency-domain");
    Grid2D grid;
    grid.axis1 = phi_axis;
    grid.axis2 = r_axis;
    const int n_phi = phi_axis.count();
    const int n_r = r_axis.count();
    grid.values.resize(n_phi, n_r);

    const MatrixXcd un_h = subspace.noise_subspace.adjoint();
    const int al = std::abs(l);
    const double z_max = 2.0 * M_PI * std::max(geom.r_t, geom.r_r) / cfg.wavelength(cfg.n_f - 1);

    std::vector<long> flagged(static_cast<std::size_t>(n_phi), 0);
    parallel_for(n_phi, [&](int ip) {
        // one interpolation table per worker thread, rebuilt only if the
        // argument range or order grows
        static thread_local std::unique_ptr<detail::BesselTable> wtable;
        static thread_local int wlmax = -1;
        static thread_local double wzmax = -1.0;
        if (!wtable || wlmax < al || wzmax < z_max) {
            wtable = std::make_unique<detail::BesselTable>(std::max(al, 8), z_max + 1.0);
            wlmax = std::max(al, 8);
            wzmax = z_max;
        }
        const double phi = phi_axis.value(ip);
        const double sphi = std::sin(phi);
        VectorXcd b(cfg.n_f);
        for (int jr = 0; jr < n_r; ++jr) {
            const double range = r_axis.value(jr);
            const double dt = std::sqrt(range * range + geom.r_t * geom.r_t);
            const double dr = std::sqrt(range * range + geom.r_r * geom.r_r);
            const double tau = 2.0 * range / cfg.c;
            const double inv_dtdr = 1.0 / (dt * dr);
            for (int q = 0; q < cfg.n_f; ++q) {
                const double lambda = cfg.wavelength(q);
                const double zt = 2.0 * M_PI * geom.r_t * range * sphi / (lambda * dt);
                const double zr = 2.0 * M_PI * geom.r_r * range * sphi / (lambda * dr);
                const double sign = (l < 0 && al % 2 != 0) ? -1.0 : 1.0;  // J_{-l} = (-1)^l J_l
                const double amp =
                    lambda * sign * wtable->eval(al, zt) * wtable->eval(0, zr) * inv_dtdr;
                const double phase = -2.0 * M_PI * (dt + dr) / lambda -
                                     2.0 * M_PI * tau * (cfg.f_0 + q * cfg.delta_f);
                b(q) = std::polar(amp * (cell_weights ? (*cell_weights)(q) : 1.0), phase);
            }
            grid.values(ip, jr) = detail::spectrum_value(
                b.squaredNorm(), (un_h * b).squaredNorm(), flagged[static_cast<std::size_t>(ip)]);
        }
    });
    if (clamped_cells) {
        long total = 0;
        for (long f : flagged) total += f;
        *clamped_cells = total;
    }
    return grid;
}

// Doppler steering over uniformly spaced slow-time samples:
// d_j(v) = e^{j*2*pi*(2*v*f_0/c)*j*t_slow}.
inline VectorXcd steering_slow_time(const SystemConfig& cfg, double v, int n_slow,
                                    double t_slow) {
    VectorXcd d(n_slow);
    const double f_d = 2.0 * v * cfg.f_0 / cfg.c;
    for (int j = 0; j < n_slow; ++j) d(j) = std::polar(1.0, 2.0 * M_PI * f_d * j * t_slow);
    return d;
}

struct VelocitySpectrum {
    GridAxis axis;
    VectorXd values;
    double v_hat = 0.0;
};

// 1-D EMUSIC over radial velocity. All scene points share v, so the
// slow-time snapshots are rank one against the pure Doppler ramp.
inline VelocitySpectrum estimate_velocity(const SubspaceModel& subspace, const SystemConfig& cfg,
                                          const GridAxis& v_axis, double t_slow) {
    const double v_bound = cfg.c * cfg.delta_f / (2.0 * cfg.f_0);
    if (std::max(std::abs(v_axis.start), std::abs(v_axis.stop)) >= v_bound)
        throw std::invalid_argument("estimate_velocity: search range outside model validity");
    const auto n_slow = static_cast<int>(subspace.noise_subspace.rows());
    const MatrixXcd un_h = subspace.noise_subspace.adjoint();

    VelocitySpectrum out;
    out.axis = v_axis;
    const int n = v_axis.count();
    out.values.resize(n);
    long flagged = 0;
    int best = 0;
    for (int i = 0; i < n; ++i) {
        const VectorXcd d = steering_slow_time(cfg, v_axis.value(i), n_slow, t_slow);
        out.values(i) =
            detail::spectrum_value(d.squaredNorm(), (un_h * d).squaredNorm(), flagged);
        if (out.values(i) > out.values(best)) best = i;
    }
    out.v_hat = v_axis.value(best);
    return out;
}

// Fused per-point estimate (Eq.-34-style arithmetic means of the per-domain
// peak positions). Undetected points keep detected = false.
struct PointEstimate {
    double theta = 0.0;
    double phi = 0.0;
    double range = 0.0;
    bool detected = false;
    double peak_height = 0.0;
    std::vector<double> theta_per_q;
    std::vector<double> phi_per_q;
    std::vector<double> phi_per_mode;
    std::vector<double> range_per_mode;
};

struct Estimate {
    std::vector<PointEstimate> points;
    double v_hat = 0.0;
};

// Associates per-subcarrier (theta, phi) peaks and per-mode (phi, R) peaks to
// anchor points by nearest-neighbor gating, then averages. Anchors are the
// first subcarrier's peak list. range_seeds, when given per anchor, center
// the range gate (the frequency domain alone cannot tell anchors apart).
inline Estimate fuse_estimates(const std::vector<std::vector<Peak>>& oam_peaks_per_q,
                               const std::vector<std::vector<Peak>>& freq_peaks_per_mode,
                               double angle_gate, double range_gate,
                               const std::vector<double>& range_seeds = {}) {
    Estimate est;
    if (oam_peaks_per_q.empty()) return est;

    std::size_t anchor_idx = 0;
    for (const Peak& anchor : oam_peaks_per_q.front()) {
        PointEstimate pt;
        pt.peak_height = anchor.height;

        for (const auto& peaks : oam_peaks_per_q) {
            const Peak* best = nullptr;
            double best_d = angle_gate;
            for (const Peak& p : peaks) {
                const double d = std::max(std::abs(p.axis1_value - anchor.axis1_value),
                                          std::abs(p.axis2_value - anchor.axis2_value));
                if (d <= best_d) {
                    best_d = d;
                    best = &p;
                }
            }
            if (best) {
                pt.theta_per_q.push_back(best->axis1_value);
                pt.phi_per_q.push_back(best->axis2_value);
            }
        }

        double running_range =
            anchor_idx < range_seeds.size() ? range_seeds[anchor_idx] : -1.0;
        for (const auto& peaks : freq_peaks_per_mode) {
            const Peak* best = nullptr;
            for (const Peak& p : peaks) {
                if (std::abs(p.axis1_value - anchor.axis2_value) > angle_gate) continue;
                if (running_range > 0.0 && std::abs(p.axis2_value - running_range) > range_gate)
                    continue;
                if (!best || p.height > best->height) best = &p;
            }
            if (best) {
                pt.phi_per_mode.push_back(best->axis1_value);
                pt.range_per_mode.push_back(best->axis2_value);
                double sum = 0.0;
                for (double r : pt.range_per_mode) sum += r;
                running_range = sum / static_cast<double>(pt.range_per_mode.size());
            }
        }

        pt.detected = !pt.theta_per_q.empty() && !pt.range_per_mode.empty();
        if (!pt.theta_per_q.empty()) {
            double s = 0.0;
            for (double v : pt.theta_per_q) s += v;
            pt.theta = s / static_cast<double>(pt.theta_per_q.size());
        }
        {
            double s = 0.0;
            std::size_t n = pt.phi_per_q.size() + pt.phi_per_mode.size();
            for (double v : pt.phi_per_q) s += v;
            for (double v : pt.phi_per_mode) s += v;
            if (n > 0) pt.phi = s / static_cast<double>(n);
        }
        if (!pt.range_per_mode.empty()) {
            double s = 0.0;
            for (double v : pt.range_per_mode) s += v;
            pt.range = s / static_cast<double>(pt.range_per_mode.size());
        }
        est.points.push_back(std::move(pt));
        ++anchor_idx;
    }
    return est;
}

}  // namespace isac
