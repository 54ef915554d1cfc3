// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <complex>

#include "isac/emusic.hpp"
#include "isac/rng.hpp"
#include "isac/sensing.hpp"

using isac::cxd;

namespace {
constexpr double kDeg = M_PI / 180.0;

isac::SystemConfig cfg16() {
    isac::SystemConfig cfg;
    return cfg;  // defaults: n_t = n_f = 16
}
}  // namespace

TEST_CASE("sample_covariance basics") {
    isac::RandomStream rng(3, "cov");
    isac::SnapshotSet s;
    s.domain = isac::SnapshotDomain::oam;
    isac::VectorXcd v(4);
    for (int i = 0; i < 4; ++i) v(i) = rng.cnormal();
    s.vectors.push_back(v);

    const auto r1 = isac::sample_covariance(s);
    CHECK((r1 - v * v.adjoint()).norm() <= 1e-12 * r1.norm());
    CHECK(isac::hermitian_eig(r1).eigenvalues(1) <= 1e-12 * v.squaredNorm());

    // Homogeneity: scaling snapshots by c scales R by |c|^2.
    isac::SnapshotSet s2 = s;
    s2.vectors[0] *= cxd(0.0, 2.0);
    CHECK((isac::sample_covariance(s2) - 4.0 * r1).norm() <= 1e-12 * r1.norm());

    // Inconsistent lengths.
    s2.vectors.push_back(isac::VectorXcd::Zero(5));
    CHECK_THROWS_AS(isac::sample_covariance(s2), std::invalid_argument);
}

TEST_CASE("sample_covariance of white noise approaches sigma^2 I") {
    isac::RandomStream rng(5, "white");
    isac::SnapshotSet s;
    s.domain = isac::SnapshotDomain::oam;
    const double sigma2 = 0.7;
    for (int n = 0; n < 10000; ++n) {
        isac::VectorXcd v(6);
        for (int i = 0; i < 6; ++i) v(i) = std::sqrt(sigma2) * rng.cnormal();
        s.vectors.push_back(std::move(v));
    }
    const auto r = isac::sample_covariance(s);
    CHECK((r - sigma2 * isac::MatrixXcd::Identity(6, 6)).norm() <= 0.05 * r.norm());
}

TEST_CASE("reweight_noise_subspace scaling rule") {
    // Eigenvalues (10, 4, 2, 1), G_hat = 1, rho = nu = 1: scales (1/4, 1/2, 1).
    isac::MatrixXcd r = isac::MatrixXcd::Zero(4, 4);
    r.diagonal() << 10.0, 4.0, 2.0, 1.0;
    const auto eig = isac::hermitian_eig(r);
    const auto model = isac::reweight_noise_subspace(eig, 1, 1.0, 1.0);
    CHECK(model.noise_subspace.col(0).norm() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(model.noise_subspace.col(1).norm() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(model.noise_subspace.col(2).norm() == doctest::Approx(1.0).epsilon(1e-12));

    // Equal noise eigenvalues with rho=1: reweighting is the identity.
    isac::MatrixXcd re = isac::MatrixXcd::Zero(4, 4);
    re.diagonal() << 9.0, 3.0, 3.0, 3.0;
    const auto eige = isac::hermitian_eig(re);
    const auto me = isac::reweight_noise_subspace(eige, 1, 1.0, 2.0);
    for (int k = 0; k < 3; ++k)
        CHECK(me.noise_subspace.col(k).norm() == doctest::Approx(1.0).epsilon(1e-12));

    // Validity range.
    CHECK_THROWS_AS(isac::reweight_noise_subspace(eig, 1, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(isac::reweight_noise_subspace(eig, 1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(isac::reweight_noise_subspace(eig, 1, 1.2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(isac::reweight_noise_subspace(eig, 0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(isac::reweight_noise_subspace(eig, 4, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("steering_oam limits and direct evaluation") {
    const auto cfg = cfg16();
    isac::UcaGeometry geom;

    const auto a0 = isac::steering_oam(cfg, geom, 0, 0.7, 1e-12);
    for (int slot = 0; slot < 16; ++slot) {
        if (slot == isac::mode_slot(0, 16))
            CHECK(std::abs(a0(slot) - cxd(1.0, 0.0)) < 1e-9);
        else
            CHECK(std::abs(a0(slot)) < 1e-9);
    }

    // pi-periodicity in theta.
    const auto a1 = isac::steering_oam(cfg, geom, 2, 10.0 * kDeg, 50.0 * kDeg);
    const auto a2 = isac::steering_oam(cfg, geom, 2, 10.0 * kDeg + M_PI, 50.0 * kDeg);
    CHECK((a1 - a2).norm() <= 1e-10 * a1.norm());

    // Entry-wise against the independent bessel evaluation.
    for (int slot = 0; slot < 16; ++slot) {
        const int l = isac::slot_mode(slot, 16);
        const double z = 2.0 * M_PI * geom.r_t * std::sin(50.0 * kDeg) / cfg.wavelength(2);
        const cxd expect = std::polar(isac::bessel_j(l, z), 2.0 * (10.0 * kDeg) * l);
        CHECK(std::abs(a1(slot) - expect) <= 1e-12);
    }
}

TEST_CASE("steering_freq limits") {
    const auto cfg = cfg16();
    isac::UcaGeometry geom;

    // Unambiguous range bound c/(2 df) at the paper's subcarrier spacing.
    CHECK(cfg.c / (2.0 * cfg.delta_f) == doctest::Approx(749.48).epsilon(1e-3));

    const auto b = isac::steering_freq(cfg, geom, 3, 1e-12, 39.0);
    CHECK(b.norm() <= 1e-9);  // J_{l!=0}(0) = 0

    // Normalized correlation decreases as ranges separate (up to ambiguity).
    const auto b0 = isac::steering_freq(cfg, geom, 0, 50.0 * kDeg, 39.0);
    double prev = 1.0;
    for (double dr : {5.0, 15.0, 30.0}) {
        const auto bd = isac::steering_freq(cfg, geom, 0, 50.0 * kDeg, 39.0 + dr);
        const double corr = std::abs((b0.adjoint() * bd)(0)) / (b0.norm() * bd.norm());
        CHECK(corr < prev);
        prev = corr;
    }
}

TEST_CASE("pseudospectrum_oam noiseless single target and flat identity case") {
    const auto cfg = cfg16();
    isac::UcaGeometry geom;
    const double theta_g = 24.0 * kDeg;
    const double phi_g = 41.0 * kDeg;

    const isac::VectorXcd a = isac::steering_oam(cfg, geom, 0, theta_g, phi_g);
    const isac::MatrixXcd r = a * a.adjoint();
    const auto sub = isac::reweight_noise_subspace(isac::hermitian_eig(r), 1, 1.0, 1.0);

    const isac::GridAxis th{"theta", 0.0, 90.0 * kDeg, 0.5 * kDeg};
    const isac::GridAxis ph{"phi", 1.0 * kDeg, 89.0 * kDeg, 0.5 * kDeg};
    const auto grid = isac::pseudospectrum_oam(sub, cfg, geom, 0, th, ph);
    grid.validate();

    // Exhaustive scan oracle for the argmax.
    int bi = 0, bj = 0;
    for (int i = 0; i < th.count(); ++i)
        for (int j = 0; j < ph.count(); ++j)
            if (grid.values(i, j) > grid.values(bi, bj)) { bi = i; bj = j; }
    CHECK(th.value(bi) == doctest::Approx(theta_g).epsilon(1e-12));
    CHECK(ph.value(bj) == doctest::Approx(phi_g).epsilon(1e-12));

    // Identity basis as "noise subspace": flat spectrum.
    isac::SubspaceModel iso;
    iso.signal_dim = 1;
    iso.noise_subspace = isac::MatrixXcd::Identity(16, 16);
    iso.raw = isac::hermitian_eig(isac::MatrixXcd::Identity(16, 16));
    const auto flat = isac::pseudospectrum_oam(iso, cfg, geom, 0, th, ph);
    CHECK((flat.values.array() - 1.0).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("pseudospectrum_freq noiseless single target and flat identity case") {
    const auto cfg = cfg16();
    isac::UcaGeometry geom;
    const double phi_g = 38.0 * kDeg;
    const double r_g = 25.0;

    const isac::VectorXcd b = isac::steering_freq(cfg, geom, 1, phi_g, r_g);
    const isac::MatrixXcd r = b * b.adjoint();
    const auto sub = isac::reweight_noise_subspace(isac::hermitian_eig(r), 1, 1.0, 1.0);

    const isac::GridAxis ph{"phi", 36.0 * kDeg, 40.0 * kDeg, 0.5 * kDeg};
    const isac::GridAxis ra{"range", 10.0, 60.0, 0.25};
    const auto grid = isac::pseudospectrum_freq(sub, cfg, geom, 1, ph, ra);
    grid.validate();
    int bi = 0, bj = 0;
    for (int i = 0; i < ph.count(); ++i)
        for (int j = 0; j < ra.count(); ++j)
            if (grid.values(i, j) > grid.values(bi, bj)) { bi = i; bj = j; }
    CHECK(ph.value(bi) == doctest::Approx(phi_g).epsilon(1e-12));
    CHECK(ra.value(bj) == doctest::Approx(r_g).epsilon(1e-12));

    isac::SubspaceModel iso;
    iso.signal_dim = 1;
    iso.noise_subspace = isac::MatrixXcd::Identity(16, 16);
    iso.raw = isac::hermitian_eig(isac::MatrixXcd::Identity(16, 16));
    const auto flat = isac::pseudospectrum_freq(iso, cfg, geom, 1, ph, ra);
    CHECK((flat.values.array() - 1.0).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("spectrum argmax invariant under snapshot scaling") {
    const auto cfg = cfg16();
    isac::UcaGeometry geom;
    isac::RandomStream rng(11, "scale-inv");
    isac::SnapshotSet snaps;
    snaps.domain = isac::SnapshotDomain::oam;
    const isac::VectorXcd a = isac::steering_oam(cfg, geom, 0, 30.0 * kDeg, 45.0 * kDeg);
    for (int n = 0; n < 50; ++n) {
        isac::VectorXcd v = a * rng.cphase();
        for (int i = 0; i < 16; ++i) v(i) += 0.05 * rng.cnormal();
        snaps.vectors.push_back(std::move(v));
    }
    const isac::GridAxis th{"theta", 0.0, 90.0 * kDeg, 1.0 * kDeg};
    const isac::GridAxis ph{"phi", 5.0 * kDeg, 85.0 * kDeg, 1.0 * kDeg};

    const auto spec_of = [&](const isac::SnapshotSet& s) {
        const auto sub = isac::reweight_noise_subspace(
            isac::hermitian_eig(isac::sample_covariance(s)), 1, 1.0, 1.0);
        return isac::pseudospectrum_oam(sub, cfg, geom, 0, th, ph);
    };
    const auto g1 = spec_of(snaps);
    isac::SnapshotSet scaled = snaps;
    for (auto& v : scaled.vectors) v *= cxd(-1.3, 2.1);
    const auto g2 = spec_of(scaled);

    int bi1 = 0, bj1 = 0, bi2 = 0, bj2 = 0;
    for (int i = 0; i < th.count(); ++i)
        for (int j = 0; j < ph.count(); ++j) {
            if (g1.values(i, j) > g1.values(bi1, bj1)) { bi1 = i; bj1 = j; }
            if (g2.values(i, j) > g2.values(bi2, bj2)) { bi2 = i; bj2 = j; }
        }
    CHECK(bi1 == bi2);
    CHECK(bj1 == bj2);
}

TEST_CASE("EMUSIC reduces to MUSIC for exact covariance with equal noise floor") {
    const auto cfg = cfg16();
    isac::UcaGeometry geom;
    // Exact covariance: equal noise eigenvalues by construction.
    isac::MatrixXcd r = 1e-2 * isac::MatrixXcd::Identity(16, 16);
    const isac::VectorXcd a1 = isac::steering_oam(cfg, geom, 0, 20.0 * kDeg, 40.0 * kDeg);
    const isac::VectorXcd a2 = isac::steering_oam(cfg, geom, 0, 55.0 * kDeg, 30.0 * kDeg);
    r += a1 * a1.adjoint() + 0.5 * a2 * a2.adjoint();
    const auto eig = isac::hermitian_eig(r);

    const auto emusic = isac::reweight_noise_subspace(eig, 2, 1.0, 1.0, false);
    const auto music = isac::reweight_noise_subspace(eig, 2, 1.0, 1.0, true);
    const isac::GridAxis th{"theta", 0.0, 90.0 * kDeg, 1.0 * kDeg};
    const isac::GridAxis ph{"phi", 5.0 * kDeg, 85.0 * kDeg, 1.0 * kDeg};
    const auto ge = isac::pseudospectrum_oam(emusic, cfg, geom, 0, th, ph);
    const auto gm = isac::pseudospectrum_oam(music, cfg, geom, 0, th, ph);
    CHECK(((ge.values - gm.values).array().abs() /
           (gm.values.array().abs() + 1.0)).maxCoeff() <= 1e-9);
}

TEST_CASE("proposition-1 projector mass inequality on random covariances") {
    isac::RandomStream rng(13, "prop1");
    int violations = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int dim = 8 + static_cast<int>(rng.next_u64() % 9);  // 8..16
        const int g_true = 2 + static_cast<int>(rng.next_u64() % 4);  // 2..5
        const int g_hat = 1 + static_cast<int>(rng.next_u64() % (g_true - 1));

        // Random Hermitian covariance with g_true signal eigenvalues above a
        // fluctuating noise floor.
        isac::MatrixXcd q(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) q(i, j) = rng.cnormal();
        const Eigen::HouseholderQR<isac::MatrixXcd> qr(q);
        const isac::MatrixXcd u = qr.householderQ();
        isac::VectorXd evals(dim);
        for (int i = 0; i < g_true; ++i) evals(i) = rng.uniform(3.0, 30.0);
        for (int i = g_true; i < dim; ++i) evals(i) = rng.uniform(0.3, 1.0);
        std::sort(evals.data(), evals.data() + dim, std::greater<double>());
        const isac::MatrixXcd r = u * evals.asDiagonal() * u.adjoint();

        const auto eig = isac::hermitian_eig(r);
        for (double rho : {0.25, 0.5, 1.0}) {
            for (double nu : {0.5, 1.0, 2.0}) {
                const auto model = isac::reweight_noise_subspace(eig, g_hat, rho, nu);
                // Projector masses: misclassified signal columns are the
                // first g_true - g_hat of the reweighted noise subspace,
                // true noise columns the rest.
                double mass_sig = 0.0, mass_noise = 0.0;
                for (int k = 0; k < g_true - g_hat; ++k)
                    mass_sig += model.noise_subspace.col(k).squaredNorm();
                for (int k = g_true - g_hat; k < dim - g_hat; ++k)
                    mass_noise += model.noise_subspace.col(k).squaredNorm();
                const double weighted = mass_sig / mass_noise;
                const double unweighted =
                    static_cast<double>(g_true - g_hat) / static_cast<double>(dim - g_true);
                if (weighted > unweighted * (1.0 + 1e-12)) ++violations;
            }
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("estimate_velocity zero, sign symmetry, and validity") {
    const auto cfg = cfg16();
    const int n_slow = 32;
    const double t_slow = 1e-3;
    const isac::GridAxis vax{"v", -5.0, 5.0, 0.05};

    const auto run = [&](double v_true) {
        isac::RandomStream rng(17, "vel");
        isac::SnapshotSet s;
        s.domain = isac::SnapshotDomain::slow_time;
        for (int d = 0; d < 64; ++d) {
            isac::VectorXcd vec = isac::steering_slow_time(cfg, v_true, n_slow, t_slow);
            vec *= rng.cphase();
            for (int j = 0; j < n_slow; ++j) vec(j) += 0.1 * rng.cnormal();
            s.vectors.push_back(std::move(vec));
        }
        const auto sub = isac::reweight_noise_subspace(
            isac::hermitian_eig(isac::sample_covariance(s)), 1, 1.0, 1.0);
        return isac::estimate_velocity(sub, cfg, vax, t_slow);
    };

    CHECK(std::abs(run(0.0).v_hat) <= 0.05 + 1e-12);
    const double vplus = run(3.0).v_hat;
    const double vminus = run(-3.0).v_hat;
    CHECK(vplus == doctest::Approx(3.0).epsilon(0.05));
    CHECK(vminus == doctest::Approx(-vplus).epsilon(1e-12));

    isac::SubspaceModel dummy;
    dummy.noise_subspace = isac::MatrixXcd::Identity(n_slow, n_slow);
    const isac::GridAxis bad{"v", -2e4, 2e4, 100.0};
    CHECK_THROWS_AS(isac::estimate_velocity(dummy, cfg, bad, t_slow), std::invalid_argument);
}

TEST_CASE("fuse_estimates means and association failure") {
    // Two subcarriers, one anchor: theta values 10 and 12 degrees.
    std::vector<std::vector<isac::Peak>> oam(2);
    oam[0].push_back({10.0 * kDeg, 50.0 * kDeg, 5.0, 0, 0});
    oam[1].push_back({12.0 * kDeg, 50.0 * kDeg, 5.0, 0, 0});
    std::vector<std::vector<isac::Peak>> freq(3);
    for (auto& f : freq) f.push_back({50.0 * kDeg, 39.0, 2.0, 0, 0});

    const auto est = isac::fuse_estimates(oam, freq, 2.5 * kDeg, 3.0);
    REQUIRE(est.points.size() == 1);
    CHECK(est.points[0].theta == doctest::Approx(11.0 * kDeg).epsilon(1e-12));
    CHECK(est.points[0].range == doctest::Approx(39.0).epsilon(1e-12));
    CHECK(est.points[0].detected);
    // phi fuses over per-q and per-mode entries (all 50 deg here).
    CHECK(est.points[0].phi == doctest::Approx(50.0 * kDeg).epsilon(1e-12));

    // No frequency peak within the gate: undetected.
    std::vector<std::vector<isac::Peak>> far(3);
    for (auto& f : far) f.push_back({80.0 * kDeg, 100.0, 2.0, 0, 0});
    const auto est2 = isac::fuse_estimates(oam, far, 2.5 * kDeg, 3.0);
    REQUIRE(est2.points.size() == 1);
    CHECK(!est2.points[0].detected);

    // All identical per-domain values fuse to that value.
    std::vector<std::vector<isac::Peak>> same(4);
    for (auto& f : same) f.push_back({33.0 * kDeg, 50.0 * kDeg, 1.0, 0, 0});
    const auto est3 = isac::fuse_estimates(same, {}, 2.5 * kDeg, 3.0);
    CHECK(est3.points[0].theta == doctest::Approx(33.0 * kDeg).epsilon(1e-12));
}

TEST_CASE("sensing power sizing satisfies the SSNR definition") {
    isac::MatrixXcd h(2, 2);
    h << cxd(1.0, 0.0), cxd(0.0, 0.5), cxd(0.0, 0.0), cxd(2.0, 0.0);
    int excluded = 0;
    const auto p = isac::sensing_power_sizing(h, 100.0, 1.0, &excluded);
    CHECK(p(0, 0) == doctest::Approx(100.0));
    CHECK(p(0, 1) == doctest::Approx(400.0));
    CHECK(p(1, 1) == doctest::Approx(25.0));
    CHECK(p(1, 0) == 0.0);
    CHECK(excluded == 1);
}
