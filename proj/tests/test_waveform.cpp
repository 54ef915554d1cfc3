// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "isac/rng.hpp"
#include "isac/waveform.hpp"

using isac::cxd;

TEST_CASE("mode slots and reflection flip") {
    CHECK(isac::mode_slot(0, 16) == 7);
    CHECK(isac::mode_slot(-7, 16) == 0);
    CHECK(isac::mode_slot(8, 16) == 15);
    CHECK(isac::slot_mode(0, 16) == -7);
    CHECK(isac::flip_mode(3, 16) == -3);
    CHECK(isac::flip_mode(8, 16) == 8);  // -8 aliases to +8 on 16 elements
    CHECK_THROWS_AS(isac::mode_slot(9, 16), std::invalid_argument);
}

TEST_CASE("dft_basis N=2 and unitarity") {
    const auto b2 = isac::dft_basis(2);
    // Rows for l=0 and l=1, in mode-slot order.
    CHECK(std::abs(b2.f(0, 0) - cxd(M_SQRT1_2, 0)) < 1e-15);
    CHECK(std::abs(b2.f(0, 1) - cxd(M_SQRT1_2, 0)) < 1e-15);
    CHECK(std::abs(b2.f(1, 0) - cxd(M_SQRT1_2, 0)) < 1e-15);
    CHECK(std::abs(b2.f(1, 1) - cxd(-M_SQRT1_2, 0)) < 1e-15);

    const auto b16 = isac::dft_basis(16);
    CHECK((b16.f * b16.f.adjoint() - isac::MatrixXcd::Identity(16, 16)).norm() <= 1e-12);
    for (int n = 0; n < 16; ++n)
        CHECK(std::abs(b16.f(isac::mode_slot(0, 16), n) - cxd(0.25, 0.0)) < 1e-15);

    // Mode round trip through the basis.
    for (int l = -7; l <= 8; ++l) {
        isac::VectorXcd e = isac::VectorXcd::Zero(16);
        e(isac::mode_slot(l, 16)) = 1.0;
        CHECK((b16.f * (b16.f.adjoint() * e) - e).norm() <= 1e-13);
    }
}

TEST_CASE("sensing sweep covers every mode exactly once") {
    for (int n_t : {4, 8, 16}) {
        const auto modes = isac::sensing_sweep_modes(n_t);
        std::set<int> seen(modes.begin(), modes.end());
        CHECK(static_cast<int>(seen.size()) == n_t);
        for (int l : modes) CHECK(2 * std::abs(l) <= n_t);
    }
}

TEST_CASE("allocate_modes forced partition and determinism") {
    const auto a = isac::allocate_modes(16, 1, {15}, 3, "deadbeef", 42);
    CHECK(static_cast<int>(a.user_modes[0].size()) == 15);
    // All non-sensing modes, regardless of bits.
    const auto b = isac::allocate_modes(16, 1, {15}, 3, "0123456789abcdef", 42);
    CHECK(a.user_modes == b.user_modes);
    CHECK(a.sensing_mode == isac::sensing_sweep_modes(16)[2]);

    const auto c1 = isac::allocate_modes(16, 2, {8, 7}, 1, "cafe", 7);
    const auto c2 = isac::allocate_modes(16, 2, {8, 7}, 1, "cafe", 7);
    CHECK(c1.user_modes == c2.user_modes);
    CHECK(c1.sensing_mode == c2.sensing_mode);
}

namespace {

std::uint64_t test_hex_mod(const std::string& hex, std::uint64_t m) {
    unsigned __int128 acc = 0;
    for (char c : hex) {
        const int d = c <= '9' ? c - '0' : c - 'a' + 10;
        acc = (acc * 16 + d) % m;
    }
    return static_cast<std::uint64_t>(acc);
}

std::string random_hex(isac::RandomStream& rng, int len) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (int i = 0; i < len; ++i) s.push_back(digits[rng.next_u64() % 16]);
    return s;
}

}  // namespace

TEST_CASE("allocate_modes: distinct effective indices give distinct allocations") {
    // N_t=8, K=2, sizes {3,2}: 35*6 = 210 distinct user partitions.
    const std::uint64_t m = 210;
    isac::RandomStream rng(5, "alloc-bits");
    std::vector<std::string> bits;
    for (int i = 0; i < 100; ++i) bits.push_back(random_hex(rng, 12));

    for (std::size_t i = 0; i < bits.size(); ++i) {
        for (std::size_t j = i + 1; j < bits.size(); ++j) {
            const auto ai = isac::allocate_modes(8, 2, {3, 2}, 2, bits[i], 99);
            const auto aj = isac::allocate_modes(8, 2, {3, 2}, 2, bits[j], 99);
            if (test_hex_mod(bits[i], m) == test_hex_mod(bits[j], m)) {
                CHECK(ai.user_modes == aj.user_modes);
            } else {
                CHECK(ai.user_modes != aj.user_modes);
            }
        }
    }
}

TEST_CASE("allocate_modes disjointness over random draws") {
    isac::RandomStream rng(17, "alloc-prop");
    for (int trial = 0; trial < 100; ++trial) {
        const int n_t = (trial % 2 == 0) ? 16 : 8;
        const int slot = static_cast<int>(rng.next_u64() % n_t) + 1;
        const std::vector<int> sizes =
            n_t == 16 ? std::vector<int>{8, 7} : std::vector<int>{3, 2};
        const auto a = isac::allocate_modes(n_t, 2, sizes, slot, random_hex(rng, 8),
                                            rng.next_u64());
        std::set<int> all{a.sensing_mode};
        for (const auto& set : a.user_modes)
            for (int l : set) {
                CHECK(all.count(l) == 0);
                all.insert(l);
            }
    }
}

TEST_CASE("allocate_modes oversubscription error") {
    CHECK_THROWS_AS(isac::allocate_modes(8, 2, {4, 4}, 1, "ff", 0), std::invalid_argument);
}

TEST_CASE("count_mode_combinations matches the paper's setup") {
    const auto c1 = isac::count_mode_combinations(16, {8, 7}, 1);
    CHECK(c1.exponent == 16);
    CHECK(c1.count == 65536);

    const auto last = isac::count_mode_combinations(16, {15}, 16);
    CHECK(last.exponent == 0);
    CHECK(last.count == 1);

    int prev = c1.exponent;
    for (int n = 2; n <= 16; ++n) {
        const auto c = isac::count_mode_combinations(16, {8, 7}, n);
        CHECK(c.exponent <= prev);
        prev = c.exponent;
    }
}

TEST_CASE("build_isac_symbol zero powers and one-hot sensing mode") {
    const auto basis = isac::dft_basis(16);
    const auto alloc = isac::allocate_modes(16, 2, {8, 7}, 1, "ab", 3);
    const isac::MatrixXcd data = isac::MatrixXcd::Constant(16, 16, cxd(1.0, 0.0));

    const auto zero = isac::build_isac_symbol(basis, alloc, data, isac::MatrixXd::Zero(16, 16));
    CHECK(zero.x.norm() == doctest::Approx(0.0));

    isac::MatrixXd p = isac::MatrixXd::Zero(16, 16);
    p(isac::mode_slot(alloc.sensing_mode, 16), 0) = 1.0;
    const auto sym = isac::build_isac_symbol(basis, alloc, data, p);
    const isac::VectorXcd expected = basis.mode_vector(alloc.sensing_mode) / 4.0;  // 1/sqrt(16)
    CHECK((sym.x.col(0) - expected).norm() <= 1e-13);
    CHECK(sym.x.rightCols(15).norm() == doctest::Approx(0.0));
}

TEST_CASE("build_isac_symbol mode-domain energy Parseval check") {
    const auto basis = isac::dft_basis(16);
    const auto alloc = isac::allocate_modes(16, 2, {8, 7}, 1, "1f2e", 3);
    isac::RandomStream rng(23, "symbol");
    isac::MatrixXcd data(16, 16);
    for (int i = 0; i < 16; ++i)
        for (int q = 0; q < 16; ++q) data(i, q) = rng.qpsk();

    isac::MatrixXd p = isac::MatrixXd::Zero(16, 16);
    for (int q = 0; q < 16; ++q) {
        p(isac::mode_slot(alloc.sensing_mode, 16), q) = rng.uniform(0.5, 2.0);
        for (const auto& set : alloc.user_modes)
            for (int l : set) p(isac::mode_slot(l, 16), q) = rng.uniform(0.1, 3.0);
    }
    const auto sym = isac::build_isac_symbol(basis, alloc, data, p);
    for (int q = 0; q < 16; ++q)
        CHECK(sym.x.col(q).squaredNorm() ==
              doctest::Approx(p.col(q).sum() / 16.0).epsilon(1e-12));
}

TEST_CASE("build_isac_symbol rejects power on an unallocated mode") {
    const auto basis = isac::dft_basis(16);
    const auto alloc = isac::allocate_modes(16, 2, {4, 4}, 1, "0", 3);
    const isac::MatrixXcd data = isac::MatrixXcd::Constant(16, 16, cxd(1.0, 0.0));
    isac::MatrixXd p = isac::MatrixXd::Zero(16, 16);

    std::set<int> used{isac::mode_slot(alloc.sensing_mode, 16)};
    for (const auto& set : alloc.user_modes)
        for (int l : set) used.insert(isac::mode_slot(l, 16));
    int free_slot = -1;
    for (int s = 0; s < 16; ++s)
        if (!used.count(s)) free_slot = s;
    REQUIRE(free_slot >= 0);
    p(free_slot, 5) = 1.0;
    CHECK_THROWS_AS(isac::build_isac_symbol(basis, alloc, data, p), std::invalid_argument);
}

TEST_CASE("reflected sensing reference flips the mode") {
    const auto basis = isac::dft_basis(16);
    const auto alloc = isac::allocate_modes(16, 2, {8, 7}, 4, "77", 9);
    const isac::MatrixXcd data = isac::MatrixXcd::Constant(16, 16, cxd(1.0, 0.0));
    isac::MatrixXd p = isac::MatrixXd::Zero(16, 16);
    p(isac::mode_slot(alloc.sensing_mode, 16), 2) = 4.0;
    const auto sym = isac::build_isac_symbol(basis, alloc, data, p);
    const auto refl = isac::reflected_sensing_reference(basis, alloc, sym);
    const int to = isac::mode_slot(isac::flip_mode(alloc.sensing_mode, 16), 16);
    const isac::VectorXcd coeffs = basis.f * refl.col(2);
    CHECK(std::abs(coeffs(to) - cxd(0.5, 0.0)) <= 1e-13);  // sqrt(4)/sqrt(16)
}

TEST_CASE("echo_division exact inverse and zero-cell flagging") {
    isac::RandomStream rng(31, "echo");
    isac::MatrixXcd h(4, 6), s(4, 6);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 6; ++j) {
            h(i, j) = rng.cnormal();
            s(i, j) = 2.0 * rng.qpsk();
        }
    isac::MatrixXcd y = h.cwiseProduct(s);
    const auto div = isac::echo_division(y, s);
    CHECK((div.h - h).norm() <= 1e-13 * h.norm());
    CHECK(div.valid.all());

    s(2, 3) = 0.0;
    const auto div2 = isac::echo_division(y, s);
    CHECK(!div2.valid(2, 3));
    CHECK(div2.valid.count() == 23);
    CHECK(std::abs(div2.h(2, 3)) == 0.0);
    CHECK(std::abs(div2.h(1, 1) - h(1, 1)) <= 1e-13);
}

TEST_CASE("echo_division noise variance scales with 1/P") {
    // S entries of magnitude sqrt(P): after division the noise variance is
    // sigma^2 / P. Monte-Carlo over 1e4 draws, 3% tolerance.
    isac::RandomStream rng(37, "echo-mc");
    const double p = 4.0;
    const double sigma2 = 0.25;
    double acc = 0.0;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const cxd s = std::sqrt(p) * rng.qpsk();
        const cxd n = std::sqrt(sigma2) * rng.cnormal();
        acc += std::norm(n / s);
    }
    CHECK(acc / draws == doctest::Approx(sigma2 / p).epsilon(0.03));
}
