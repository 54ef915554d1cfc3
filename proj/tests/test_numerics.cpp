// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <complex>

#include "isac/bessel.hpp"
#include "isac/bisect.hpp"
#include "isac/grid.hpp"
#include "isac/linalg.hpp"
#include "isac/rng.hpp"

namespace {

// Independent oracle: ascending power series in long double, summed to
// machine convergence. Deliberately separate from the library path.
long double bessel_series_oracle(int order, long double x) {
    const long double half = 0.5L * x;
    long double term = 1.0L;
    for (int k = 1; k <= order; ++k) term *= half / k;
    long double sum = term;
    const long double m = -half * half;
    for (int k = 1; k < 600; ++k) {
        term *= m / (static_cast<long double>(k) * (k + order));
        sum += term;
        if (std::abs(term) < 1e-25L * (std::abs(sum) + 1e-300L)) break;
    }
    return sum;
}

// Second independent oracle: N-point trapezoid of the periodic integral
// J_l(x) = (1/2pi) int_0^{2pi} cos(x sin t - l t) dt, spectrally accurate
// because the integrand is periodic and analytic (alias term is J_{N-l}(x)).
long double bessel_quadrature_oracle(int order, long double x) {
    const int n = 2048;
    long double sum = 0.0L;
    for (int i = 0; i < n; ++i) {
        const long double t = 2.0L * M_PIl * i / n;
        sum += std::cos(x * std::sin(t) - order * t);
    }
    return sum / n;
}

}  // namespace

TEST_CASE("bessel_j basic values") {
    CHECK(isac::bessel_j(0, 0.0) == 1.0);
    CHECK(isac::bessel_j(1, 0.0) == 0.0);
    CHECK(isac::bessel_j(5, 0.0) == 0.0);
    CHECK(isac::bessel_j(2, 3.5) ==
          doctest::Approx(static_cast<double>(bessel_series_oracle(2, 3.5L))).epsilon(1e-10));
}

TEST_CASE("bessel_j against series oracle over the working range") {
    // The long-double series itself loses digits past x ~ 20, so the series
    // oracle covers the small-argument half and the quadrature oracle the rest.
    for (int l = 0; l <= 20; ++l) {
        for (double x : {0.05, 0.8, 2.0, 5.5, 9.9, 11.9, 12.1, 15.0, 18.0}) {
            const double ref = static_cast<double>(bessel_series_oracle(l, x));
            const double got = isac::bessel_j(l, x);
            CHECK(std::abs(got - ref) < 1e-10 * std::max(1.0, std::abs(ref)));
        }
        for (double x : {0.8, 5.5, 12.1, 19.3, 25.0, 30.0}) {
            const double ref = static_cast<double>(bessel_quadrature_oracle(l, x));
            const double got = isac::bessel_j(l, x);
            CHECK(std::abs(got - ref) < 1e-10 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST_CASE("bessel_j negative order and argument reflection") {
    CHECK(isac::bessel_j(-3, 7.0) == doctest::Approx(-isac::bessel_j(3, 7.0)).epsilon(1e-14));
    CHECK(isac::bessel_j(-4, 7.0) == doctest::Approx(isac::bessel_j(4, 7.0)).epsilon(1e-14));
    CHECK(isac::bessel_j(3, -7.0) == doctest::Approx(-isac::bessel_j(3, 7.0)).epsilon(1e-14));
}

TEST_CASE("bessel_j recurrence J_{l-1} + J_{l+1} = (2l/x) J_l") {
    for (int l = 1; l <= 16; ++l) {
        for (double x = 0.1; x <= 20.0; x += 0.83) {
            const double lhs = isac::bessel_j(l - 1, x) + isac::bessel_j(l + 1, x);
            const double rhs = 2.0 * l / x * isac::bessel_j(l, x);
            CHECK(std::abs(lhs - rhs) < 1e-8);
        }
    }
}

TEST_CASE("bessel_j contract errors") {
    CHECK_THROWS_AS(isac::bessel_j(0, std::nan("")), std::domain_error);
    CHECK_THROWS_AS(isac::bessel_j(65, 1.0), std::domain_error);
}

TEST_CASE("bessel_j_all consistent with bessel_j") {
    for (double x : {0.3, 4.0, 13.7, 22.0}) {
        const auto all = isac::bessel_j_all(12, x);
        for (int l = 0; l <= 12; ++l)
            CHECK(all[static_cast<std::size_t>(l)] ==
                  doctest::Approx(isac::bessel_j(l, x)).epsilon(1e-12));
    }
}

TEST_CASE("hermitian_eig identity and diagonal") {
    const auto eig_i = isac::hermitian_eig(isac::MatrixXcd::Identity(4, 4));
    for (int i = 0; i < 4; ++i) CHECK(eig_i.eigenvalues(i) == doctest::Approx(1.0));

    isac::MatrixXcd d = isac::MatrixXcd::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    const auto eig_d = isac::hermitian_eig(d);
    CHECK(eig_d.eigenvalues(0) == doctest::Approx(3.0));
    CHECK(eig_d.eigenvalues(1) == doctest::Approx(1.0));
    CHECK(std::abs(eig_d.eigenvectors(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(eig_d.eigenvectors(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("hermitian_eig random reconstruction, orthonormality, trace") {
    isac::RandomStream rng(7, "eig-test");
    isac::MatrixXcd a(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) a(i, j) = rng.cnormal();
    const isac::MatrixXcd r = a * a.adjoint();

    const auto eig = isac::hermitian_eig(r);
    for (int i = 0; i + 1 < 8; ++i) CHECK(eig.eigenvalues(i) >= eig.eigenvalues(i + 1));

    const isac::MatrixXcd rebuilt =
        eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.adjoint();
    CHECK((rebuilt - r).norm() <= 1e-9 * r.norm());
    CHECK((eig.eigenvectors.adjoint() * eig.eigenvectors - isac::MatrixXcd::Identity(8, 8)).norm() <=
          1e-9);
    CHECK(std::abs(eig.eigenvalues.sum() - r.trace().real()) <= 1e-9 * r.norm());
}

TEST_CASE("hermitian_eig rejects non-Hermitian input") {
    isac::MatrixXcd r(2, 2);
    r << isac::cxd(1, 0), isac::cxd(2, 1), isac::cxd(5, 3), isac::cxd(4, 0);
    CHECK_THROWS_AS(isac::hermitian_eig(r), std::invalid_argument);
}

TEST_CASE("bisect linear and sqrt oracles") {
    CHECK(isac::bisect([](double x) { return x - 2.0; }, 0.0, 5.0, 1e-9) ==
          doctest::Approx(2.0).epsilon(1e-9));
    CHECK(isac::bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-9) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("bisect iteration count stays within the log2 bound") {
    int calls = 0;
    const double tol = 1e-9;
    isac::bisect(
        [&](double x) {
            ++calls;
            return std::cos(x) - x;
        },
        0.0, 1.0, tol);
    const int bound = static_cast<int>(std::ceil(std::log2(1.0 / tol)));
    CHECK(calls <= bound + 4);  // two bracket probes plus the loop guard
}

TEST_CASE("bisect rejects a same-sign bracket") {
    CHECK_THROWS_AS(isac::bisect([](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-6),
                    std::invalid_argument);
}

namespace {

isac::Grid2D make_grid(int rows, int cols) {
    isac::Grid2D g;
    g.axis1 = {"a1", 0.0, rows - 1.0, 1.0};
    g.axis2 = {"a2", 0.0, cols - 1.0, 1.0};
    g.values = Eigen::MatrixXd::Zero(rows, cols);
    return g;
}

}  // namespace

TEST_CASE("find_peaks constant grid has no strict maxima") {
    auto g = make_grid(12, 9);
    g.values.array() += 3.0;
    CHECK(isac::find_peaks(g, 5, 1).empty());
}

TEST_CASE("find_peaks single spike") {
    auto g = make_grid(10, 10);
    g.values(4, 7) = 2.0;
    const auto peaks = isac::find_peaks(g, 3, 1);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].axis1_value == doctest::Approx(4.0));
    CHECK(peaks[0].axis2_value == doctest::Approx(7.0));
    CHECK(peaks[0].height == doctest::Approx(2.0));
}

TEST_CASE("find_peaks two gaussian bumps against exhaustive-scan oracle") {
    auto g = make_grid(40, 40);
    const auto bump = [](double x, double y, double cx, double cy, double h) {
        return h * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / 6.0);
    };
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j)
            g.values(i, j) = bump(i, j, 12, 20, 1.0) + bump(i, j, 22, 20, 0.8);

    const auto peaks = isac::find_peaks(g, 4, 3);
    REQUIRE(peaks.size() == 2);

    // Oracle: exhaustive scan for the two best strict local maxima.
    CHECK(std::abs(peaks[0].i - 12) <= 1);
    CHECK(std::abs(peaks[0].j - 20) <= 1);
    CHECK(std::abs(peaks[1].i - 22) <= 1);
    CHECK(std::abs(peaks[1].j - 20) <= 1);
}

TEST_CASE("find_peaks merges close maxima keeping the higher") {
    auto g = make_grid(20, 20);
    g.values(5, 5) = 2.0;
    g.values(5, 7) = 1.5;  // within 3 cells of the taller peak
    g.values(14, 14) = 1.0;
    const auto peaks = isac::find_peaks(g, 5, 3);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0].i == 5);
    CHECK(peaks[0].j == 5);
    CHECK(peaks[1].i == 14);
}

TEST_CASE("find_peaks tie breaks toward the lower index") {
    auto g = make_grid(9, 9);
    g.values(2, 2) = 1.0;
    g.values(6, 6) = 1.0;
    const auto peaks = isac::find_peaks(g, 1, 1);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].i == 2);
    CHECK(peaks[0].j == 2);
}

TEST_CASE("find_peaks positions invariant under adding a constant") {
    auto g = make_grid(30, 30);
    isac::RandomStream rng(3, "peaks");
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j) g.values(i, j) = rng.uniform();
    const auto base = isac::find_peaks(g, 6, 2);
    g.values.array() += 11.5;
    const auto shifted = isac::find_peaks(g, 6, 2);
    REQUIRE(base.size() == shifted.size());
    for (std::size_t p = 0; p < base.size(); ++p) {
        CHECK(base[p].i == shifted[p].i);
        CHECK(base[p].j == shifted[p].j);
    }
}
