// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace isac {

// Global waveform and physical constants. T, T_0, T_s, and B are derived
// and exposed read-only through accessors.
struct SystemConfig {
    int n_t = 16;           // UCA elements per array == number of OAM modes
    int n_f = 16;           // subcarriers
    int n_f_prime = 16;     // oversampled sample count, >= n_f
    double delta_f = 200e3; // subcarrier spacing [Hz]
    double f_0 = 2.4e9;     // carrier [Hz]
    double t_cp = 1e-6;     // cyclic prefix [s]
    double c = 299792458.0; // light speed [m/s]
    double beta = 1.0;      // sensing attenuation constant
    std::vector<double> beta_k;  // per-user communication attenuation
    std::vector<double> beta_j;  // per-user jamming attenuation

    double symbol_time() const { return 1.0 / delta_f; }          // T
    double block_time() const { return symbol_time() + t_cp; }    // T_0
    double sensing_duration() const { return n_t * block_time(); }  // T_s
    double bandwidth() const { return n_f * delta_f; }
    double freq(int q) const { return f_0 + q * delta_f; }
    double wavelength(int q) const { return c / freq(q); }

    void validate() const {
        if (n_t < 2 || n_t % 2 != 0) throw std::invalid_argument("SystemConfig: n_t must be even and >= 2");
        if (n_f < 1 || n_f_prime < n_f) throw std::invalid_argument("SystemConfig: need n_f_prime >= n_f >= 1");
        if (!(delta_f > 0.0) || !(f_0 > 0.0)) throw std::invalid_argument("SystemConfig: frequencies must be positive");
        if (!(t_cp >= 0.0)) throw std::invalid_argument("SystemConfig: t_cp must be >= 0");
    }

    double comm_beta(int user) const {
        return user < static_cast<int>(beta_k.size()) ? beta_k[user] : 1.0;
    }
    double jam_beta(int user) const {
        return user < static_cast<int>(beta_j.size()) ? beta_j[user] : 1.0;
    }
};

// Receive UCA of one legitimate user. The array is nominally parallel to the
// transmitter plane; misalignment is a rigid yaw/pitch rotation of the
// element circle plus a center offset.
struct UserUca {
    double radius = 0.5;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double yaw = 0.0;    // [rad]
    double pitch = 0.0;  // [rad]
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();
};

struct UcaGeometry {
    double r_t = 0.5;   // transmit UCA radius [m]
    double r_r = 0.25;  // echo-receive UCA radius [m]
    std::vector<UserUca> users;

    void validate() const {
        if (!(r_t > 0.0) || !(r_r > 0.0)) throw std::invalid_argument("UcaGeometry: radii must be > 0");
        for (const auto& u : users)
            if (!(u.radius > 0.0)) throw std::invalid_argument("UcaGeometry: user radius must be > 0");
    }
};

// Spherical coordinates of a reflect point relative to the transmitter
// center: range R, azimuth theta in [0, 2pi), elevation phi measured from
// the array boresight (z axis), so phi -> 0 is straight overhead.
struct ScatterPoint {
    double range = 0.0;    // R_g [m]
    double azimuth = 0.0;  // theta_g [rad]
    double elevation = 0.0;  // phi_g [rad]
    double rcs = 1.0;      // chi_g
};

struct ScatterScene {
    std::vector<ScatterPoint> points;
    double v = 0.0;        // shared radial velocity [m/s]
    int jammer_index = 0;
    int n_j = 1;           // jammer array count
    double jammer_array_radius = 0.1;  // [m]

    void validate(const UcaGeometry& geom, int n_t) const {
        if (points.empty()) throw std::invalid_argument("ScatterScene: no points");
        if (static_cast<int>(points.size()) > n_t)
            throw std::invalid_argument("ScatterScene: more points than OAM modes (G > N_t)");
        if (jammer_index < 0 || jammer_index >= static_cast<int>(points.size()))
            throw std::invalid_argument("ScatterScene: jammer_index out of range");
        if (n_j < 1) throw std::invalid_argument("ScatterScene: n_j must be >= 1");
        const double near = 10.0 * std::max(geom.r_t, geom.r_r);
        for (const auto& p : points) {
            if (!(p.range > near))
                throw std::invalid_argument("ScatterScene: point violates far-field bound R > 10*max(r_t,r_r)");
            if (p.azimuth < 0.0 || p.azimuth >= 2.0 * M_PI)
                throw std::invalid_argument("ScatterScene: azimuth out of [0, 2pi)");
            if (!(p.elevation > 0.0) || !(p.elevation < M_PI / 2.0))
                throw std::invalid_argument("ScatterScene: elevation out of (0, pi/2)");
        }
    }

    double delay(int g, double c) const { return 2.0 * points[g].range / c; }  // tau_g
    double doppler(const SystemConfig& cfg) const { return 2.0 * v * cfg.f_0 / cfg.c; }  // f_d
};

inline Eigen::Vector3d scatter_position(const ScatterPoint& p) {
    const double s = std::sin(p.elevation);
    return {p.range * s * std::cos(p.azimuth), p.range * s * std::sin(p.azimuth),
            p.range * std::cos(p.elevation)};
}

inline double element_azimuth(int n, int count) { return 2.0 * M_PI * n / count; }

inline Eigen::Vector3d tx_element_position(const UcaGeometry& g, int n, int n_t) {
    const double a = element_azimuth(n, n_t);
    return {g.r_t * std::cos(a), g.r_t * std::sin(a), 0.0};
}

inline Eigen::Vector3d rx_element_position(const UcaGeometry& g, int m, int n_t) {
    const double a = element_azimuth(m, n_t);
    return {g.r_r * std::cos(a), g.r_r * std::sin(a), 0.0};
}

inline Eigen::Vector3d user_element_position(const UserUca& u, int idx, int n_t) {
    const double a = element_azimuth(idx, n_t);
    const Eigen::Vector3d local(u.radius * std::cos(a), u.radius * std::sin(a), 0.0);
    const Eigen::Matrix3d rot =
        (Eigen::AngleAxisd(u.yaw, Eigen::Vector3d::UnitZ()) *
         Eigen::AngleAxisd(u.pitch, Eigen::Vector3d::UnitY()))
            .toRotationMatrix();
    return u.center + u.offset + rot * local;
}

// Jammer transmit elements: a small UCA parallel to the x-y plane centered
// at the (true or estimated) jammer position. A single-antenna jammer sits
// exactly at the center.
inline std::vector<Eigen::Vector3d> jammer_element_positions(const Eigen::Vector3d& center,
                                                             int n_j, double radius) {
    std::vector<Eigen::Vector3d> out;
    out.reserve(n_j);
    if (n_j == 1) {
        out.push_back(center);
        return out;
    }
    for (int n = 0; n < n_j; ++n) {
        const double a = element_azimuth(n, n_j);
        out.push_back(center + Eigen::Vector3d(radius * std::cos(a), radius * std::sin(a), 0.0));
    }
    return out;
}

// Law-of-cosines distance between a scatter point and a UCA element at
// (radius r, azimuth alpha) on the transmitter plane.
inline double exact_distance(const ScatterPoint& p, double r, double alpha) {
    if (!(p.range > 0.0)) throw std::invalid_argument("exact_distance: R must be > 0");
    const double d2 = p.range * p.range + r * r -
                      2.0 * r * p.range * std::sin(p.elevation) * std::cos(p.azimuth - alpha);
    return std::sqrt(d2);
}

// First-order Taylor split of the distance: d ~= amplitude - phase_term.
// The amplitude part feeds 1/d path loss, the phase term feeds e^{j...}.
struct ApproxDistance {
    double amplitude = 0.0;
    double phase_term = 0.0;
};

inline ApproxDistance approx_distance(const ScatterPoint& p, double r, double alpha) {
    const double amp = std::sqrt(p.range * p.range + r * r);
    const double phase =
        r * p.range * std::sin(p.elevation) * std::cos(alpha - p.azimuth) / amp;
    return {amp, phase};
}

}  // namespace isac
