// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isac/bisect.hpp"
#include "isac/linalg.hpp"
#include "isac/waveform.hpp"

namespace isac {

// Channels seen by the optimizer. h_jam may be empty (no jamming CSI): the
// beamformer blocks then ignore jamming, which models the no-sensing
// baseline; rate evaluation against the true environment always includes it.
struct OptimizerChannels {
    std::vector<std::vector<MatrixXcd>> h;      // [user][subcarrier], N_t x N_t
    std::vector<std::vector<MatrixXcd>> h_jam;  // [user][subcarrier], N_t x N_J
    double jam_power = 0.0;                     // per-antenna jamming power P_J
    std::vector<double> noise_var;              // sigma_kq^2 per user

    int users() const { return static_cast<int>(h.size()); }
    int subcarriers() const { return h.empty() ? 0 : static_cast<int>(h.front().size()); }
    bool has_jamming(int k) const {
        return jam_power > 0.0 && k < static_cast<int>(h_jam.size()) && !h_jam[k].empty();
    }
};

// Joint Tx/Rx beamformers, power diagonals (stored as per-slot powers, zeros
// off the allocated modes), MSE weights, and dual variables.
struct BeamformerState {
    std::vector<std::vector<MatrixXcd>> w_tx;  // [user][q]
    std::vector<std::vector<MatrixXcd>> w_rx;  // [user][q]
    std::vector<MatrixXd> power;               // [user]: n_t x n_f, P_{q,i_k}
    VectorXd sensing_power_per_q;              // P_{q,i_s} of the active slot
    std::vector<MatrixXd> weights;             // [user]: n_t x n_f, w_{q,i_k}
    std::vector<std::vector<double>> zeta;     // [user][q] tx dual
    double eta = 0.0;                          // power dual
    int tx_safeguard_hits = 0;
};

struct AoConfig {
    double total_power = 0.0;      // P_t
    double power_floor = 0.0;      // P_bar
    double convergence_tol = 1e-4; // relative ASR change
    int max_iterations = 100;
    double monotone_tol = 1e-8;    // P2 objective decrease treated as a bug
    double tx_norm_tol = 1e-6;     // |max column norm^2 - 1| at the tx dual
    double power_eq_tol = 1e-6;    // |total - P_t| / P_t at the eta dual
};

namespace detail {

inline const VectorXcd& mode_vec(const DftBasis& basis, int l, std::vector<VectorXcd>& cache) {
    const auto slot = static_cast<std::size_t>(mode_slot(l, basis.n_t));
    if (cache.empty()) {
        cache.resize(static_cast<std::size_t>(basis.n_t));
        for (int s = 0; s < basis.n_t; ++s)
            cache[static_cast<std::size_t>(s)] = basis.f.row(s).adjoint();
    }
    return cache[slot];
}

}  // namespace detail

// Everything the block updates need about one scenario: allocation, mode
// vectors, and slot bookkeeping.
class WmmseProblem {
  public:
    WmmseProblem(const OptimizerChannels& ch, const ModeAllocation& alloc, AoConfig cfg)
        : ch_(ch), alloc_(alloc), cfg_(cfg), basis_(dft_basis(alloc.n_t)) {
        if (ch_.users() != static_cast<int>(alloc.user_modes.size()))
            throw std::invalid_argument("WmmseProblem: user count mismatch");
        modes_.resize(static_cast<std::size_t>(basis_.n_t));
        for (int s = 0; s < basis_.n_t; ++s)
            modes_[static_cast<std::size_t>(s)] = basis_.f.row(s).adjoint();
    }

    const DftBasis& basis() const { return basis_; }
    const ModeAllocation& alloc() const { return alloc_; }
    const OptimizerChannels& channels() const { return ch_; }
    const AoConfig& config() const { return cfg_; }

    const VectorXcd& mode_vector(int l) const {
        return modes_[static_cast<std::size_t>(mode_slot(l, basis_.n_t))];
    }

    int slot_of(int l) const { return mode_slot(l, basis_.n_t); }

    // Effective mode-to-mode gain u_i^H W_rx,kq^H H_kq W_tx,jq u_m.
    cxd cross_gain(const BeamformerState& st, int k, int q, int l_i, int j, int l_m) const {
        const VectorXcd left = st.w_rx[k][q] * mode_vector(l_i);
        const VectorXcd right = ch_.h[k][q] * (st.w_tx[j][q] * mode_vector(l_m));
        return left.dot(right);  // left^H * right
    }

  private:
    const OptimizerChannels& ch_;
    ModeAllocation alloc_;
    AoConfig cfg_;
    DftBasis basis_;
    std::vector<VectorXcd> modes_;
};

// Interference power of Eq. (39): intra-user inter-mode, inter-user, and the
// expected jamming power P_J ||H_J^H W_rx u||^2 (Gaussian jamming).
inline double interference_power(const WmmseProblem& pb, const BeamformerState& st, int k,
                                 int q, int l_ik) {
    const auto& alloc = pb.alloc();
    double total = 0.0;
    for (int j = 0; j < static_cast<int>(alloc.user_modes.size()); ++j) {
        for (int l_m : alloc.user_modes[static_cast<std::size_t>(j)]) {
            if (j == k && l_m == l_ik) continue;
            const double p = st.power[j](pb.slot_of(l_m), q);
            if (p == 0.0) continue;
            total += p * std::norm(pb.cross_gain(st, k, q, l_ik, j, l_m));
        }
    }
    if (pb.channels().has_jamming(k)) {
        const VectorXcd v = st.w_rx[k][q] * pb.mode_vector(l_ik);
        total += pb.channels().jam_power *
                 (pb.channels().h_jam[k][q].adjoint() * v).squaredNorm();
    }
    return total;
}

// Received SINR of Eq. (38).
inline double sinr(const WmmseProblem& pb, const BeamformerState& st, int k, int q, int l_ik) {
    const double p = st.power[k](pb.slot_of(l_ik), q);
    if (p == 0.0) return 0.0;
    const double sig = p * std::norm(pb.cross_gain(st, k, q, l_ik, k, l_ik));
    const VectorXcd v = st.w_rx[k][q] * pb.mode_vector(l_ik);
    const double noise = pb.channels().noise_var[k] * v.squaredNorm();
    return sig / (noise + interference_power(pb, st, k, q, l_ik));
}

// Per-mode MSE of Eq. (48) with unit-power symbols.
inline double mse(const WmmseProblem& pb, const BeamformerState& st, int k, int q, int l_ik) {
    const double p = st.power[k](pb.slot_of(l_ik), q);
    const cxd r = std::sqrt(p) * pb.cross_gain(st, k, q, l_ik, k, l_ik);
    const VectorXcd v = st.w_rx[k][q] * pb.mode_vector(l_ik);
    return std::norm(r - 1.0) + interference_power(pb, st, k, q, l_ik) +
           pb.channels().noise_var[k] * v.squaredNorm();
}

// P2 surrogate objective in bits, sum_{q,k,i_k} (log2 w + (1 - w*eps)/ln 2).
// This is the natural-log WMMSE objective rescaled to base 2: its exact
// maximizer over w is the Eq.-51 fixed point w = 1/eps (the literal
// "log2 w - w*eps" form would peak at w = 1/(eps*ln 2) instead), and at that
// fixed point the value equals the sum rate. The AO maximizes it and every
// block must keep it non-decreasing.
inline double p2_objective(const WmmseProblem& pb, const BeamformerState& st) {
    double obj = 0.0;
    const double inv_ln2 = 1.0 / std::log(2.0);
    const auto& alloc = pb.alloc();
    for (int k = 0; k < pb.channels().users(); ++k) {
        for (int q = 0; q < pb.channels().subcarriers(); ++q) {
            for (int l : alloc.user_modes[static_cast<std::size_t>(k)]) {
                const double w = st.weights[k](pb.slot_of(l), q);
                obj += std::log2(w) + (1.0 - w * mse(pb, st, k, q, l)) * inv_ln2;
            }
        }
    }
    return obj;
}

inline double weighted_mse(const WmmseProblem& pb, const BeamformerState& st) {
    double obj = 0.0;
    for (int k = 0; k < pb.channels().users(); ++k)
        for (int q = 0; q < pb.channels().subcarriers(); ++q)
            for (int l : pb.alloc().user_modes[static_cast<std::size_t>(k)])
                obj += st.weights[k](pb.slot_of(l), q) * mse(pb, st, k, q, l);
    return obj;
}

// Block 1 (Eq. 51): w = 1 / eps, with eps clamped at 1e-12.
inline void update_weights(const WmmseProblem& pb, BeamformerState& st, int* clamped = nullptr) {
    for (int k = 0; k < pb.channels().users(); ++k) {
        for (int q = 0; q < pb.channels().subcarriers(); ++q) {
            for (int l : pb.alloc().user_modes[static_cast<std::size_t>(k)]) {
                double eps = mse(pb, st, k, q, l);
                if (eps < 1e-12) {
                    eps = 1e-12;
                    if (clamped) ++(*clamped);
                }
                st.weights[k](pb.slot_of(l), q) = 1.0 / eps;
            }
        }
    }
}

namespace detail {

// Element-domain matrix sum_m c_m u_m u_m^H for per-slot coefficients c.
inline MatrixXcd mode_diag_matrix(const WmmseProblem& pb, int k,
                                  const std::function<double(int)>& coeff) {
    const int n_t = pb.basis().n_t;
    MatrixXcd out = MatrixXcd::Zero(n_t, n_t);
    for (int l : pb.alloc().user_modes[static_cast<std::size_t>(k)]) {
        const double c = coeff(pb.slot_of(l));
        if (c == 0.0) continue;
        const VectorXcd& u = pb.mode_vector(l);
        out.noalias() += c * (u * u.adjoint());
    }
    return out;
}

}  // namespace detail

// Block 2 (Eq. 55): the MMSE receiver
//   W_rx = (B + sigma^2 I)^{-1} H W_tx (sum_m sqrt(P_m) u_m u_m^H),
// which solves the stationarity condition of P2.2; rows off the allocated
// modes vanish. B collects every user's transmit covariance through this
// user's channel plus the jamming covariance.
inline void update_rx(const WmmseProblem& pb, BeamformerState& st, int k, int q) {
    const auto& ch = pb.channels();
    const int n_t = pb.basis().n_t;
    MatrixXcd b = MatrixXcd::Zero(n_t, n_t);
    for (int i = 0; i < ch.users(); ++i) {
        const MatrixXcd cov = detail::mode_diag_matrix(
            pb, i, [&](int slot) { return st.power[i](slot, q); });
        const MatrixXcd t = ch.h[k][q] * st.w_tx[i][q];
        b.noalias() += t * cov * t.adjoint();
    }
    if (ch.has_jamming(k))
        b.noalias() += ch.jam_power * (ch.h_jam[k][q] * ch.h_jam[k][q].adjoint());
    b.diagonal().array() += ch.noise_var[k];

    const MatrixXcd sqrt_p = detail::mode_diag_matrix(
        pb, k, [&](int slot) { return std::sqrt(st.power[k](slot, q)); });
    st.w_rx[k][q] = solve_hpd(b, ch.h[k][q] * st.w_tx[k][q] * sqrt_p);
}

// Block 3 (Eq. 59): transmit beamformers with the dual zeta found by
// bisection on the binding column-norm condition (Eq. 58). The candidate at
// a given zeta is W(zeta) = (G + zeta I)^{-1} H^H W_rx (sum w_m/sqrt(P_m) u u^H).
inline void update_tx(const WmmseProblem& pb, BeamformerState& st, int q) {
    const auto& ch = pb.channels();
    const int n_t = pb.basis().n_t;

    MatrixXcd g = MatrixXcd::Zero(n_t, n_t);
    for (int i = 0; i < ch.users(); ++i) {
        const MatrixXcd dw = detail::mode_diag_matrix(
            pb, i, [&](int slot) { return st.weights[i](slot, q); });
        const MatrixXcd t = st.w_rx[i][q].adjoint() * ch.h[i][q];
        g.noalias() += t.adjoint() * dw * t;
    }

    const EigenDecomposition g_eig = hermitian_eig(g);
    const MatrixXcd& gq = g_eig.eigenvectors;
    const VectorXd& gl = g_eig.eigenvalues;

    const auto block_obj = [&] {
        double obj = 0.0;
        for (int i = 0; i < ch.users(); ++i)
            for (int l : pb.alloc().user_modes[static_cast<std::size_t>(i)])
                obj += st.weights[i](pb.slot_of(l), q) * mse(pb, st, i, q, l);
        return obj;
    };
    const auto max_col_norm2 = [](const MatrixXcd& w) {
        double m = 0.0;
        for (Eigen::Index n = 0; n < w.cols(); ++n) m = std::max(m, w.col(n).squaredNorm());
        return m;
    };

    for (int k = 0; k < ch.users(); ++k) {
        const double before = block_obj();
        const MatrixXcd rhs_core = ch.h[k][q].adjoint() * st.w_rx[k][q];

        // The stationarity condition G W S + zeta W = RHS (S the power
        // diagonal) decouples per allocated mode in the mode basis:
        //   W u_m = w_m sqrt(P_m) (P_m G + zeta I)^{-1} H^H W_rx u_m,
        // i.e. Eq. 59's matrix form with per-mode effective dual zeta/P_m.
        // All solves run in G's eigenbasis.
        struct ModeRhs {
            int slot;
            double p;
            double w;
            VectorXcd rhs_eig;  // Q^H (H^H W_rx u_m)
            VectorXcd u;
        };
        std::vector<ModeRhs> mode_rhs;
        for (int l : pb.alloc().user_modes[static_cast<std::size_t>(k)]) {
            ModeRhs m;
            m.slot = pb.slot_of(l);
            m.p = st.power[k](m.slot, q);
            m.w = st.weights[k](m.slot, q);
            m.u = pb.mode_vector(l);
            m.rhs_eig = gq.adjoint() * (rhs_core * m.u);
            mode_rhs.push_back(std::move(m));
        }
        const auto candidate = [&](double zeta) {
            MatrixXcd w = MatrixXcd::Zero(n_t, n_t);
            for (const ModeRhs& m : mode_rhs) {
                if (m.p <= 0.0) continue;
                VectorXcd scaled = m.rhs_eig;
                for (int i = 0; i < n_t; ++i)
                    scaled(i) /= std::max(m.p * std::max(gl(i), 0.0) + zeta, 1e-280);
                w.noalias() += (m.w * std::sqrt(m.p)) * (gq * scaled) * m.u.adjoint();
            }
            return w;
        };

        MatrixXcd w = candidate(std::max(1e-14 * std::abs(g.trace().real()) / n_t, 1e-300));
        double zeta = 0.0;
        if (max_col_norm2(w) > 1.0 + pb.config().tx_norm_tol) {
            double hi = 1e-6 * std::max(1.0, std::abs(g.trace().real()) / n_t);
            int guard = 0;
            while (max_col_norm2(candidate(hi)) > 1.0 && guard++ < 120) hi *= 2.0;
            if (guard >= 120)
                throw std::runtime_error("update_tx: bisection bracket expansion failed");
            zeta = bisect([&](double z) { return max_col_norm2(candidate(z)) - 1.0; }, 0.0, hi,
                          hi * pb.config().tx_norm_tol);
            w = candidate(zeta);
            const double m = max_col_norm2(w);
            if (m > 1.0) w /= std::sqrt(m);  // land on the feasible side
        }
        const MatrixXcd prev = st.w_tx[k][q];
        st.w_tx[k][q] = w;
        st.zeta[k][q] = zeta;

        // The single dual per mode set is exact only when the norm
        // constraint is slack. If the candidate raised the weighted MSE,
        // restart from the previous iterate and run exact cyclic
        // ball-constrained column minimization, which always descends.
        if (block_obj() > before + 1e-12 * std::max(1.0, std::abs(before))) {
            ++st.tx_safeguard_hits;
            MatrixXcd cur = prev;
            // J(W) = tr(W S W^H G) - 2 Re tr(W^H R) + const, columns coupled
            // through S = sum_m P_m u_m u_m^H whose diagonal is uniform:
            // S_jj = sum_m P_m / n_t.
            MatrixXcd s_mat = MatrixXcd::Zero(n_t, n_t);
            MatrixXcd r_mat = MatrixXcd::Zero(n_t, n_t);
            for (const ModeRhs& m : mode_rhs) {
                s_mat.noalias() += m.p * (m.u * m.u.adjoint());
                r_mat.noalias() += (m.w * std::sqrt(m.p)) * ((gq * m.rhs_eig) * m.u.adjoint());
            }
            const double s_diag = s_mat.diagonal().real().mean();
            for (int pass = 0; pass < 3; ++pass) {
                for (int j = 0; j < n_t; ++j) {
                    const VectorXcd t_j = cur * s_mat.col(j) - s_diag * cur.col(j);
                    const VectorXcd b_eig = gq.adjoint() * (r_mat.col(j) - g * t_j);
                    const auto col_at = [&](double mu) {
                        VectorXcd c = b_eig;
                        for (int i = 0; i < n_t; ++i)
                            c(i) /= std::max(s_diag * std::max(gl(i), 0.0) + mu, 1e-280);
                        return VectorXcd(gq * c);
                    };
                    VectorXcd c = col_at(std::max(1e-14 * s_diag * gl(0), 1e-300));
                    if (c.squaredNorm() > 1.0) {
                        double hi = std::max(s_diag * gl(0) * 1e-6, 1e-12);
                        int guard = 0;
                        while (col_at(hi).squaredNorm() > 1.0 && guard++ < 200) hi *= 2.0;
                        const double mu = bisect(
                            [&](double m) { return col_at(m).squaredNorm() - 1.0; }, 0.0, hi,
                            hi * 1e-9);
                        c = col_at(mu);
                        if (c.squaredNorm() > 1.0) c /= c.norm();
                    }
                    cur.col(j) = c;
                }
            }
            st.w_tx[k][q] = cur;
            st.zeta[k][q] = 0.0;
            if (block_obj() > before + 1e-12 * std::max(1.0, std::abs(before))) {
                st.w_tx[k][q] = prev;  // numerically safe fallback
            }
        }
    }
}

// Block 4 (Eq. 61/62): power allocation. The stationarity solution per
// allocated mode is p_m = w_m Re(g_m) / (T_m + eta) with amplitude p = sqrt(P),
// T_m the weighted sum of squared cross gains out of mode m, and eta bisected
// for the total-power equality; floors are enforced by clamping and
// re-bisecting on the unclamped set until the active set is stable.
inline void update_power(const WmmseProblem& pb, BeamformerState& st) {
    const auto& ch = pb.channels();
    const int n_f = ch.subcarriers();

    struct Cell {
        int k, q, slot;
        double num;  // w_m * Re(g_m)
        double t;    // T_m
        bool clamped = false;
    };
    std::vector<Cell> cells;

    for (int q = 0; q < n_f; ++q) {
        // mode-domain cross-gain tables per (i, k): m_tilde = F M F^H with
        // M = W_rx,i^H H_i W_tx,k
        const int users = ch.users();
        std::vector<std::vector<MatrixXcd>> mode_gain(static_cast<std::size_t>(users));
        for (int i = 0; i < users; ++i) {
            mode_gain[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(users));
            for (int k = 0; k < users; ++k) {
                const MatrixXcd m = st.w_rx[i][q].adjoint() * ch.h[i][q] * st.w_tx[k][q];
                mode_gain[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                    pb.basis().f * m * pb.basis().f.adjoint();
            }
        }
        for (int k = 0; k < users; ++k) {
            for (int l_m : pb.alloc().user_modes[static_cast<std::size_t>(k)]) {
                Cell c;
                c.k = k;
                c.q = q;
                c.slot = pb.slot_of(l_m);
                const cxd g_own =
                    mode_gain[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)](c.slot,
                                                                                        c.slot);
                c.num = st.weights[k](c.slot, q) * std::max(0.0, g_own.real());
                c.t = 0.0;
                for (int i = 0; i < users; ++i) {
                    for (int l_i : pb.alloc().user_modes[static_cast<std::size_t>(i)]) {
                        const int slot_i = pb.slot_of(l_i);
                        c.t += st.weights[i](slot_i, q) *
                               std::norm(mode_gain[static_cast<std::size_t>(i)]
                                                  [static_cast<std::size_t>(k)](slot_i, c.slot));
                    }
                }
                cells.push_back(c);
            }
        }
    }

    const double sensing_total = st.sensing_power_per_q.sum();
    const double budget = pb.config().total_power - sensing_total;
    const double floor = pb.config().power_floor;
    if (budget < floor * static_cast<double>(cells.size()) - 1e-12 * pb.config().total_power)
        throw std::runtime_error(
            "update_power: total power cannot cover sensing power plus the per-mode floors");

    const auto unclamped_total = [&](double eta) {
        double total = 0.0;
        for (const Cell& c : cells) {
            if (c.clamped) continue;
            const double p = c.num / (c.t + eta);
            total += p * p;
        }
        return total;
    };

    double eta = 0.0;
    for (int pass = 0; pass < static_cast<int>(cells.size()) + 1; ++pass) {
        double clamped_total = 0.0;
        int n_clamped = 0;
        for (const Cell& c : cells)
            if (c.clamped) {
                clamped_total += floor;
                ++n_clamped;
            }
        const double target = budget - clamped_total;

        eta = 0.0;
        if (unclamped_total(0.0) > target) {
            // The root can sit many orders of magnitude below the bracket
            // top when cells have tiny cross gains, so bisect log(eta).
            double hi = 1.0;
            int guard = 0;
            while (unclamped_total(hi) > target && guard++ < 200) hi *= 2.0;
            const double lo = 1e-300;
            if (unclamped_total(lo) <= target) {
                eta = lo;
            } else {
                double s_lo = std::log(lo);
                double s_hi = std::log(hi);
                for (int it = 0; it < 200 && s_hi - s_lo > 1e-13; ++it) {
                    const double mid = 0.5 * (s_lo + s_hi);
                    if (unclamped_total(std::exp(mid)) > target)
                        s_lo = mid;
                    else
                        s_hi = mid;
                }
                eta = std::exp(0.5 * (s_lo + s_hi));
            }
        }

        bool new_clamp = false;
        for (Cell& c : cells) {
            if (c.clamped) continue;
            const double p = c.num / (c.t + eta);
            if (p * p < floor) {
                c.clamped = true;
                new_clamp = true;
            }
        }
        if (!new_clamp) break;
    }

    for (const Cell& c : cells) {
        const double p = c.num / (c.t + eta);
        st.power[c.k](c.slot, c.q) = c.clamped ? floor : p * p;
    }
    st.eta = eta;
}

// Achievable sum rate of Eq. (45): Shannon terms plus the index-modulation
// information of the mode-hopping pattern.
struct AsrBreakdown {
    double rate_term = 0.0;   // (1/N_f) sum log2(1 + gamma)
    double index_term = 0.0;  // (1/N_f) log2 prod_n C_n
    double total = 0.0;
};

inline AsrBreakdown asr(const WmmseProblem& pb, const BeamformerState& st,
                        const std::vector<int>& sizes) {
    AsrBreakdown out;
    const int n_f = pb.channels().subcarriers();
    for (int k = 0; k < pb.channels().users(); ++k)
        for (int q = 0; q < n_f; ++q)
            for (int l : pb.alloc().user_modes[static_cast<std::size_t>(k)])
                out.rate_term += std::log2(1.0 + sinr(pb, st, k, q, l));
    out.rate_term /= n_f;
    long exponent_sum = 0;
    for (int n = 1; n <= pb.basis().n_t; ++n)
        exponent_sum += count_mode_combinations(pb.basis().n_t, sizes, n).exponent;
    out.index_term = static_cast<double>(exponent_sum) / n_f;
    out.total = out.rate_term + out.index_term;
    return out;
}

struct IterationStats {
    int iteration = 0;
    double p2_objective = 0.0;
    double weighted_mse = 0.0;
    double asr = 0.0;
};

struct AoResult {
    BeamformerState final_state;  // W_rx columns normalized (Eq. 64)
    BeamformerState mmse_state;   // fixed point before the final normalization
    std::vector<IterationStats> trace;
    bool converged = false;
    int iterations = 0;
    AsrBreakdown final_asr;
};

// Feasible deterministic start: mode-subspace projection beamformers with
// exactly unit columns, uniform power over the allocated modes after the
// sensing power is reserved. Starting from plain identity instead works but
// crawls: the transmit blocks then spend dozens of iterations concentrating
// the per-column norm budget onto the allocated modes, which this precoder
// already does in closed form (||W u_m||^2 = N_t / N_k).
inline BeamformerState initial_state(const WmmseProblem& pb, const VectorXd& sensing_power_q,
                                     bool identity_beamformers = false) {
    const auto& ch = pb.channels();
    const int n_t = pb.basis().n_t;
    const int n_f = ch.subcarriers();
    BeamformerState st;
    st.sensing_power_per_q = sensing_power_q;
    st.w_tx.assign(ch.users(), std::vector<MatrixXcd>(n_f, MatrixXcd::Identity(n_t, n_t)));
    if (!identity_beamformers) {
        for (int k = 0; k < ch.users(); ++k) {
            const auto& set = pb.alloc().user_modes[static_cast<std::size_t>(k)];
            MatrixXcd proj = MatrixXcd::Zero(n_t, n_t);
            for (int l : set) {
                const VectorXcd& u = pb.mode_vector(l);
                proj.noalias() += u * u.adjoint();
            }
            proj *= std::sqrt(static_cast<double>(n_t) / static_cast<double>(set.size()));
            for (int q = 0; q < n_f; ++q) st.w_tx[k][q] = proj;
        }
    }
    st.w_rx = st.w_tx;
    st.zeta.assign(ch.users(), std::vector<double>(n_f, 0.0));
    st.power.assign(ch.users(), MatrixXd::Zero(n_t, n_f));
    st.weights.assign(ch.users(), MatrixXd::Zero(n_t, n_f));

    int cells = 0;
    for (const auto& set : pb.alloc().user_modes) cells += static_cast<int>(set.size());
    cells *= n_f;
    const double budget = pb.config().total_power - sensing_power_q.sum();
    if (budget <= 0.0) throw std::runtime_error("initial_state: no power left after sensing");
    const double uniform = budget / cells;
    for (int k = 0; k < ch.users(); ++k)
        for (int q = 0; q < n_f; ++q)
            for (int l : pb.alloc().user_modes[static_cast<std::size_t>(k)]) {
                st.power[k](pb.slot_of(l), q) = uniform;
                st.weights[k](pb.slot_of(l), q) = 1.0;
            }
    return st;
}

// Algorithm 1: cyclic block updates (w, W_rx, W_tx, P) with the P2 objective
// checked after every block, then a final weight/receiver refresh and the
// Eq.-64 column normalization.
inline AoResult run_ao(const WmmseProblem& pb, const std::vector<int>& sizes,
                       const VectorXd& sensing_power_q) {
    BeamformerState st = initial_state(pb, sensing_power_q);
    const auto& ch = pb.channels();
    const int n_f = ch.subcarriers();

    AoResult result;
    double obj = p2_objective(pb, st);
    double prev_asr = asr(pb, st, sizes).total;

    const auto check_monotone = [&](const char* block) {
        const double now = p2_objective(pb, st);
        if (now < obj - pb.config().monotone_tol * std::max(1.0, std::abs(obj)))
            throw std::logic_error(std::string("run_ao: objective decreased after the ") +
                                   block + " block");
        obj = now;
    };

    for (int it = 1; it <= pb.config().max_iterations; ++it) {
        update_weights(pb, st);
        check_monotone("weight");
        for (int k = 0; k < ch.users(); ++k)
            for (int q = 0; q < n_f; ++q) update_rx(pb, st, k, q);
        check_monotone("receive");
        for (int q = 0; q < n_f; ++q) update_tx(pb, st, q);
        check_monotone("transmit");
        update_power(pb, st);
        check_monotone("power");

        const AsrBreakdown a = asr(pb, st, sizes);
        result.trace.push_back({it, obj, weighted_mse(pb, st), a.total});
        result.iterations = it;
        if (std::abs(a.total - prev_asr) < pb.config().convergence_tol * std::abs(prev_asr)) {
            result.converged = true;
            prev_asr = a.total;
            break;
        }
        prev_asr = a.total;
    }

    // One extra weight + receiver refresh puts the state exactly on the MMSE
    // receiver for the final (W_tx, P), where the rate-MSE duality holds.
    update_weights(pb, st);
    check_monotone("final weight");
    for (int k = 0; k < ch.users(); ++k)
        for (int q = 0; q < n_f; ++q) update_rx(pb, st, k, q);
    check_monotone("final receive");
    result.mmse_state = st;
    result.final_asr = asr(pb, st, sizes);

    // Eq. 64: normalize receive columns after convergence.
    for (int k = 0; k < ch.users(); ++k) {
        for (int q = 0; q < n_f; ++q) {
            for (Eigen::Index n = 0; n < st.w_rx[k][q].cols(); ++n) {
                const double norm = st.w_rx[k][q].col(n).norm();
                if (norm > 1e-300)
                    st.w_rx[k][q].col(n) /= norm;
                else
                    st.w_rx[k][q].col(n) = VectorXcd::Unit(pb.basis().n_t, n);
            }
        }
    }
    result.final_state = std::move(st);
    return result;
}

}  // namespace isac
