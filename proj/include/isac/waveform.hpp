// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "isac/linalg.hpp"
#include "isac/rng.hpp"

namespace isac {

// OAM mode orders run l = -N_t/2+1 .. N_t/2 and map to DFT row slots
// 0 .. N_t-1 via slot = l + N_t/2 - 1.
inline int mode_slot(int l, int n_t) {
    if (2 * std::abs(l) > n_t) throw std::invalid_argument("mode_slot: |l| > n_t/2");
    return l + n_t / 2 - 1;
}

inline int slot_mode(int slot, int n_t) {
    if (slot < 0 || slot >= n_t) throw std::invalid_argument("slot_mode: slot out of range");
    return slot - n_t / 2 + 1;
}

// First-order reflection flips the mode sign; -N_t/2 aliases back to +N_t/2
// on an N_t-element array.
inline int flip_mode(int l, int n_t) {
    int m = -l;
    if (m < -n_t / 2 + 1) m += n_t;
    return m;
}

// Sensing sweep: every mode activated exactly once, ascending order.
inline std::vector<int> sensing_sweep_modes(int n_t) {
    std::vector<int> modes(n_t);
    for (int i = 0; i < n_t; ++i) modes[i] = slot_mode(i, n_t);
    return modes;
}

// DFT mode basis F: row mode_slot(l), column n holds e^{-j*2*pi*n*l/N_t}/sqrt(N_t).
// F*F^H = I; F^H e_slot is the element-domain feeding vector of mode l.
struct DftBasis {
    int n_t = 0;
    MatrixXcd f;

    VectorXcd mode_vector(int l) const { return f.row(mode_slot(l, n_t)).adjoint(); }
};

inline DftBasis dft_basis(int n_t) {
    if (n_t < 2) throw std::invalid_argument("dft_basis: n_t must be >= 2");
    DftBasis b;
    b.n_t = n_t;
    b.f.resize(n_t, n_t);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_t));
    for (int slot = 0; slot < n_t; ++slot) {
        const int l = slot_mode(slot, n_t);
        for (int n = 0; n < n_t; ++n)
            b.f(slot, n) = std::polar(scale, -2.0 * M_PI * n * l / n_t);
    }
    return b;
}

// Per-slot assignment of the sensing mode and the K user mode sets.
struct ModeAllocation {
    int n_t = 0;
    int slot = 1;  // 1-based OFDM symbol index within the sweep
    int sensing_mode = 0;
    std::vector<std::vector<int>> user_modes;

    void validate() const {
        std::vector<bool> used(static_cast<std::size_t>(n_t), false);
        used[static_cast<std::size_t>(mode_slot(sensing_mode, n_t))] = true;
        std::size_t total = 1;
        for (const auto& set : user_modes) {
            total += set.size();
            for (int l : set) {
                const auto s = static_cast<std::size_t>(mode_slot(l, n_t));
                if (used[s]) throw std::invalid_argument("ModeAllocation: overlapping mode sets");
                used[s] = true;
            }
        }
        if (total > static_cast<std::size_t>(n_t))
            throw std::invalid_argument("ModeAllocation: more modes than N_t");
    }
};

namespace detail {

inline unsigned long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    unsigned long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<unsigned long long>(n - k + i) / i;
    return r;
}

// index_bits hex string reduced modulo m.
inline std::uint64_t hex_mod(const std::string& hex, std::uint64_t m) {
    if (m <= 1) return 0;
    unsigned __int128 acc = 0;
    for (char c : hex) {
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        else if (c == 'x' || c == 'X') { acc = 0; continue; }  // allow 0x prefix
        else throw std::invalid_argument("allocate_modes: index_bits is not a hex string");
        acc = (acc * 16 + digit) % m;
    }
    return static_cast<std::uint64_t>(acc);
}

// Lexicographic unranking of a k-combination out of n items.
inline std::vector<int> unrank_combination(std::uint64_t rank, int n, int k) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    int item = 0;
    for (int chosen = 0; chosen < k; ++chosen) {
        while (true) {
            const unsigned long long with_item = binomial(n - item - 1, k - chosen - 1);
            if (rank < with_item) break;
            rank -= with_item;
            ++item;
        }
        out.push_back(item);
        ++item;
    }
    return out;
}

}  // namespace detail

// Keyed index-modulation mode hopping. The sensing mode follows the fixed
// sweep; the remaining modes are ordered by a key+slot permutation and the
// index bits choose one of the prod_k C(remaining, N_k) user partitions by
// combinatorial unranking, so distinct effective indices always produce
// distinct allocations.
inline ModeAllocation allocate_modes(int n_t, int k_users, const std::vector<int>& sizes,
                                     int slot, const std::string& index_bits,
                                     std::uint64_t key) {
    if (k_users != static_cast<int>(sizes.size()))
        throw std::invalid_argument("allocate_modes: sizes do not match user count");
    if (slot < 1 || slot > n_t) throw std::invalid_argument("allocate_modes: slot out of range");
    int total = 1;
    for (int s : sizes) {
        if (s < 1) throw std::invalid_argument("allocate_modes: every user needs >= 1 mode");
        total += s;
    }
    if (total > n_t) throw std::invalid_argument("allocate_modes: oversubscribed mode sets");

    ModeAllocation alloc;
    alloc.n_t = n_t;
    alloc.slot = slot;
    alloc.sensing_mode = sensing_sweep_modes(n_t)[slot - 1];

    std::vector<int> pool;
    pool.reserve(static_cast<std::size_t>(n_t) - 1);
    for (int s = 0; s < n_t; ++s) {
        const int l = slot_mode(s, n_t);
        if (l != alloc.sensing_mode) pool.push_back(l);
    }

    RandomStream perm_rng(key ^ splitmix64(static_cast<std::uint64_t>(slot)), "mode-hop-permutation");
    for (std::size_t i = pool.size(); i > 1; --i) {
        const std::size_t j = perm_rng.next_u64() % i;
        std::swap(pool[i - 1], pool[j]);
    }

    unsigned __int128 combos = 1;
    std::vector<std::uint64_t> radix(sizes.size());
    int remaining = n_t - 1;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        radix[k] = detail::binomial(remaining, sizes[k]);
        combos *= radix[k];
        remaining -= sizes[k];
    }
    const auto m = static_cast<std::uint64_t>(
        combos > static_cast<unsigned __int128>(UINT64_MAX) ? UINT64_MAX : combos);
    std::uint64_t e = detail::hex_mod(index_bits, m);

    alloc.user_modes.resize(sizes.size());
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        const std::uint64_t rank = radix[k] > 0 ? e % radix[k] : 0;
        if (radix[k] > 0) e /= radix[k];
        const auto picks = detail::unrank_combination(rank, static_cast<int>(pool.size()), sizes[k]);
        std::vector<int> set;
        set.reserve(picks.size());
        std::vector<int> next_pool;
        next_pool.reserve(pool.size() - picks.size());
        std::size_t pi = 0;
        for (int idx = 0; idx < static_cast<int>(pool.size()); ++idx) {
            if (pi < picks.size() && picks[pi] == idx) {
                set.push_back(pool[static_cast<std::size_t>(idx)]);
                ++pi;
            } else {
                next_pool.push_back(pool[static_cast<std::size_t>(idx)]);
            }
        }
        pool = std::move(next_pool);
        alloc.user_modes[k] = std::move(set);
    }
    alloc.validate();
    return alloc;
}

// Number of OAM-mode combinations C_n for OFDM symbol slot n: the raw count
// (N_t-n+1) * prod_k C(remaining, N_k) rounded down to a power of two. The
// exponent is exact; count saturates to 0 if it cannot fit 64 bits.
struct ModeCombinationCount {
    int exponent = 0;                 // floor(log2(raw count))
    unsigned long long count = 1;     // 2^exponent, 0 when exponent > 63
};

inline ModeCombinationCount count_mode_combinations(int n_t, const std::vector<int>& sizes,
                                                    int slot) {
    if (slot < 1 || slot > n_t) throw std::invalid_argument("count_mode_combinations: slot out of range");
    unsigned __int128 raw = static_cast<unsigned __int128>(n_t - slot + 1);
    int remaining = n_t - 1;
    for (int nk : sizes) {
        raw *= detail::binomial(remaining, nk);
        remaining -= nk;
    }
    if (raw == 0) throw std::invalid_argument("count_mode_combinations: infeasible sizes");
    int exponent = -1;
    for (unsigned __int128 v = raw; v > 0; v >>= 1) ++exponent;
    ModeCombinationCount out;
    out.exponent = exponent;
    out.count = exponent <= 63 ? (1ULL << exponent) : 0ULL;
    return out;
}

// One ISAC OFDM symbol: element-domain transmit vectors x_q (columns) and
// the mode-domain coefficient matrix they were assembled from, so
// x.col(q) = F^H * mode_coeffs.col(q) holds by construction and can be
// checked by decomposition.
struct IsacSymbol {
    MatrixXcd x;            // n_t x n_f
    MatrixXcd mode_coeffs;  // n_t (mode slots) x n_f
    MatrixXd powers;        // n_t x n_f allocated powers used
};

// Assembles the transmit symbol from unit-power data and per-(mode, q)
// powers. The carrier factor e^{j*2*pi*f_q*t} stays analytic (baseband
// model); the 1/sqrt(N_f) subcarrier normalization is applied here.
inline IsacSymbol build_isac_symbol(const DftBasis& basis, const ModeAllocation& alloc,
                                    const MatrixXcd& data, const MatrixXd& powers) {
    const int n_t = basis.n_t;
    const auto n_f = static_cast<int>(powers.cols());
    if (powers.rows() != n_t || data.rows() != n_t || data.cols() != n_f)
        throw std::invalid_argument("build_isac_symbol: shape mismatch");
    if ((powers.array() < 0.0).any())
        throw std::invalid_argument("build_isac_symbol: negative power");

    std::vector<bool> allocated(static_cast<std::size_t>(n_t), false);
    allocated[static_cast<std::size_t>(mode_slot(alloc.sensing_mode, n_t))] = true;
    for (const auto& set : alloc.user_modes)
        for (int l : set) allocated[static_cast<std::size_t>(mode_slot(l, n_t))] = true;

    IsacSymbol sym;
    sym.mode_coeffs = MatrixXcd::Zero(n_t, n_f);
    sym.powers = powers;
    const double nf_scale = 1.0 / std::sqrt(static_cast<double>(n_f));
    for (int s = 0; s < n_t; ++s) {
        for (int q = 0; q < n_f; ++q) {
            if (powers(s, q) == 0.0) continue;
            if (!allocated[static_cast<std::size_t>(s)])
                throw std::invalid_argument("build_isac_symbol: power on unallocated mode");
            if (std::abs(std::abs(data(s, q)) - 1.0) > 1e-9)
                throw std::invalid_argument("build_isac_symbol: data symbols must be unit power");
            sym.mode_coeffs(s, q) = std::sqrt(powers(s, q)) * data(s, q) * nf_scale;
        }
    }
    sym.x = basis.f.adjoint() * sym.mode_coeffs;
    return sym;
}

// Reflected sensing reference: the transmitted sensing coefficient moves to
// the opposite mode order.
inline MatrixXcd reflected_sensing_reference(const DftBasis& basis, const ModeAllocation& alloc,
                                             const IsacSymbol& sym) {
    const int from = mode_slot(alloc.sensing_mode, basis.n_t);
    const int to = mode_slot(flip_mode(alloc.sensing_mode, basis.n_t), basis.n_t);
    MatrixXcd coeffs = MatrixXcd::Zero(sym.mode_coeffs.rows(), sym.mode_coeffs.cols());
    coeffs.row(to) = sym.mode_coeffs.row(from);
    return basis.f.adjoint() * coeffs;
}

// Element-wise division of the received echo by the known sensing symbols.
// Cells with a vanishing divisor are flagged invalid and left at zero so the
// covariance stage can skip them.
struct EchoDivision {
    MatrixXcd h;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
};

inline EchoDivision echo_division(const MatrixXcd& y, const MatrixXcd& s) {
    if (y.rows() != s.rows() || y.cols() != s.cols())
        throw std::invalid_argument("echo_division: shape mismatch");
    EchoDivision out;
    out.h = MatrixXcd::Zero(y.rows(), y.cols());
    out.valid.resize(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        for (Eigen::Index j = 0; j < y.cols(); ++j) {
            const bool ok = std::abs(s(i, j)) > 1e-30;
            out.valid(i, j) = ok;
            if (ok) out.h(i, j) = y(i, j) / s(i, j);
        }
    }
    return out;
}

}  // namespace isac
