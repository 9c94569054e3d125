#include "tcl4/generators.hpp"
#include "tcl4/oracle.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace tcl4;
using std::numbers::pi;

namespace {

double fro_rel(const std::vector<Mat4>& got, const std::vector<Mat4>& ref, std::size_t upto) {
    double d = 0.0, m = 0.0;
    for (std::size_t j = 0; j <= upto; ++j) {
        d = std::max(d, (got[j] - ref[j]).norm());
        m = std::max(m, ref[j].norm());
    }
    return d / m;
}

std::vector<cplx> sorted(std::vector<cplx> v) {
    std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
        return std::abs(a.real() - b.real()) > 1e-9 ? a.real() < b.real() : a.imag() < b.imag();
    });
    return v;
}

std::vector<cplx> eigenvalues(const Mat4& M) {
    Eigen::ComplexEigenSolver<Mat4> es(M);
    return sorted({es.eigenvalues().begin(), es.eigenvalues().end()});
}

} // namespace

TEST_CASE("discrete bath spec validation") {
    DiscreteBathSpec spec;
    spec.modes = {{0.6, 0.05}, {1.0, 0.07}, {1.5, 0.09}, {2.2, 0.1}};
    CHECK(spec.dimension() == 512);
    CHECK_NOTHROW(spec.validate());
    spec.fock_cut = 1;
    CHECK_THROWS(spec.validate());
    spec.fock_cut = 14;
    CHECK_THROWS_WITH(spec.validate(), doctest::Contains("exceeds cap"));
    spec.fock_cut = 3;
    spec.modes[0].omega = 0.0;
    CHECK_THROWS(spec.validate());
    spec.modes[0].omega = 0.6;
    auto half = spec.scaled(0.25);
    CHECK(half.modes[3].g == doctest::Approx(0.05));
}

TEST_CASE("decoupled bath gives free evolution") {
    auto sys = SystemModel::from_theta(pi / 5);
    DiscreteBathSpec spec;
    spec.modes = {{0.8, 0.0}, {1.3, 0.0}};
    spec.fock_cut = 3;
    spec.temperature = 0.5;
    const Mat2 r0 = initial_state(pi / 5);
    auto traj = exact_discrete_bath(sys, spec, r0, {0.01, 1000});
    for (std::size_t j = 0; j <= 1000; j += 50) {
        const double t = 0.01 * double(j);
        CHECK(std::abs(traj.states[j](0, 0) - r0(0, 0)) < 1e-12);
        CHECK(std::abs(traj.states[j](0, 1) - r0(0, 1) * std::exp(cplx(0, -t))) < 1e-12);
    }

    auto L = extract_exact_tcl_generator(sys, spec, {0.01, 1000});
    double worst = 0.0;
    for (const auto& m : L) worst = std::max(worst, (m - l0(sys)).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-8);
}

TEST_CASE("propagator starts at the identity and the generator at L0") {
    auto sys = SystemModel::from_theta(pi / 4);
    DiscreteBathSpec spec;
    spec.modes = {{1.0, 0.1}};
    spec.fock_cut = 4;
    auto P = exact_reduced_propagator(sys, spec, {0.01, 100});
    CHECK((P.P[0] - Mat4::Identity()).norm() < 1e-13);
    auto L = extract_exact_tcl_generator(sys, spec, {0.01, 100});
    CHECK((L[0] - l0(sys)).norm() < 1e-12);
}

TEST_CASE("independent-boson coherence for one mode") {
    auto sys = SystemModel::from_theta(pi / 2);
    DiscreteBathSpec spec;
    spec.modes = {{1.0, 0.2}};
    spec.fock_cut = 8;
    Mat2 probe;
    probe << 0.5, 0.5, 0.5, 0.5;
    auto traj = exact_discrete_bath(sys, spec, probe, {0.01, 1000});

    SpectralDensity line;
    line.temperature = 0.0;
    line.modes = spec.modes;
    double worst = 0.0;
    for (std::size_t j = 0; j <= 1000; j += 10) {
        const double t = 0.01 * double(j);
        // closed form: exp(−g²(1 − cos ω₀t)/ω₀²) with the free phase
        const cplx closed = std::polar(std::exp(-0.04 * (1 - std::cos(t))), -t);
        worst = std::max(worst, std::abs(2.0 * traj.states[j](0, 1) - closed));
        CHECK(std::abs(pure_dephasing_coherence(line, t) - closed) < 1e-14);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("continuum dephasing exponent") {
    SpectralDensity sd;
    sd.temperature = 1.0;
    CHECK(pure_dephasing_coherence(sd, 0.0) == cplx(1.0, 0.0));

    double prev = 1.0;
    for (double t = 0.25; t <= 15.0; t += 0.25) {
        const double mag = std::abs(pure_dephasing_coherence(sd, t));
        REQUIRE(mag <= prev + 1e-15);
        prev = mag;
    }

    // γ(t) = ∫_0^t Re Γ_0(s) ds on the FFT path
    const std::vector<double> freqs{0.0};
    const std::size_t n = 1000;
    auto tabs = bath_tables(sd, 0.0025, n * 4, freqs, 1 << 21);
    const auto& g0 = tabs.gamma.gamma(0);
    double acc = 0.0;
    for (std::size_t j = 1; j <= 4 * n; ++j) acc += 0.5 * 0.0025 * (g0[j - 1].real() + g0[j].real());
    CHECK(dephasing_exponent(sd, 10.0) == doctest::Approx(acc).epsilon(1e-3));
}

// A mode near resonance with Ω exchanges real quanta with the system, so the
// weak-coupling checks below use an off-resonant line.
TEST_CASE("Fock truncation convergence at weak coupling") {
    auto sys = SystemModel::from_theta(pi / 4);
    DiscreteBathSpec spec;
    spec.modes = {{2.2, 0.1}};
    spec.fock_cut = 3;
    CHECK(truncation_error(sys, spec, initial_state(pi / 4), {0.01, 1000}) <= 1e-6);
}

TEST_CASE("weak-coupling exact generator is dominated by L2") {
    auto sys = SystemModel::from_theta(pi / 4);
    DiscreteBathSpec spec;
    spec.modes = {{2.2, 0.1}};
    spec.fock_cut = 6;
    const std::size_t n = 1000;
    auto L = extract_exact_tcl_generator(sys, spec, {0.01, n});

    SpectralDensity line;
    line.temperature = 0.0;
    line.modes = spec.modes;
    auto tabs = bath_tables(line, 0.01, n, required_frequencies(sys, 2));
    auto series = generator_series(sys, tabs.gamma, n, 2);
    std::vector<Mat4> exact2(n + 1);
    for (std::size_t j = 0; j <= n; ++j) exact2[j] = L[j] - l0(sys);
    CHECK(fro_rel(exact2, series.l2, n) <= 1e-2);
}

TEST_CASE("polynomial fit recovers exact coefficients") {
    const std::vector<double> scales{1.0, 0.75, 0.5, 0.25};
    Mat4 a, b, c;
    for (int k = 0; k < 16; ++k) {
        a(k / 4, k % 4) = cplx(0.1 * k - 0.7, 0.03 * k);
        b(k / 4, k % 4) = cplx(-0.02 * k, 0.5 - 0.04 * k);
        c(k / 4, k % 4) = cplx(0.01 * k, 0.02);
    }
    std::vector<std::vector<Mat4>> quad(scales.size()), cubic(scales.size());
    for (std::size_t k = 0; k < scales.size(); ++k) {
        const double s = scales[k];
        quad[k] = {Mat4::Zero(), s * a + s * s * b};
        cubic[k] = {Mat4::Zero(), s * a + s * s * b + s * s * s * c};
    }
    auto f = fit_orders(quad, scales, false);
    CHECK((f.l2[1] - a).norm() < 1e-13);
    CHECK((f.l4[1] - b).norm() < 1e-13);
    CHECK(f.residual[1] < 1e-13);
    CHECK_FALSE(f.flagged[1]);

    auto g = fit_orders(cubic, scales, true);
    CHECK((g.l2[1] - a).norm() < 1e-12);
    CHECK((g.l4[1] - b).norm() < 1e-12);

    auto h = fit_orders(cubic, scales, false);
    CHECK(h.residual[1] > h.residual_threshold);
    CHECK(h.flagged[1]);

    CHECK_THROWS(fit_orders(quad, {1.0, 0.5}, true));
}

TEST_CASE("λ²-series extraction matches L2 and L4 on a small bath") {
    for (double theta : {0.0, pi / 4}) {
        CAPTURE(theta);
        auto sys = SystemModel::from_theta(theta);
        DiscreteBathSpec spec;
        spec.modes = {{0.6, 0.07}, {1.5, 0.1}};
        spec.fock_cut = 5;
        const std::size_t n = 1000;
        const std::vector<double> scales{1.0, 0.75, 0.5, 0.25};
        auto fit = fit_perturbative_orders(sys, spec, {0.01, n}, scales, true);

        SpectralDensity line;
        line.temperature = 0.0;
        line.modes = spec.modes;
        auto tabs = bath_tables(line, 0.01, n, required_frequencies(sys, 4));
        auto series = generator_series(sys, tabs.gamma, n, 4);
        CHECK(fro_rel(fit.l2, series.l2, n) <= 0.01);
        CHECK(fro_rel(fit.l4, series.l4, n) <= 0.05);
    }
}

TEST_CASE("Bloch-basis generator") {
    RelaxationParams p{0.03, 0.01, 0.02, 0.004, -0.002, 0.001};
    const StationaryGamma g = stationary_gamma(p);
    CHECK(relaxation_params(g).J_plus == doctest::Approx(p.J_plus));
    CHECK(relaxation_params(g).S_minus == doctest::Approx(p.S_minus));

    for (double theta : {0.0, 0.3, pi / 4, pi / 2}) {
        auto sys = SystemModel::from_theta(theta);
        auto B = bloch_redfield_bloch_basis(sys, g);
        CHECK(B.matrix.row(0).cwiseAbs().maxCoeff() <= 1e-14);
        const Mat4 U = bloch_unitary();
        CHECK((U.adjoint() * U - Mat4::Identity()).norm() < 1e-15);
        // the Bloch form is real
        CHECK((U.adjoint() * B.hilbert_schmidt * U).imag().cwiseAbs().maxCoeff() < 1e-15);
        auto ev_b = eigenvalues(B.matrix.cast<cplx>());
        auto ev_h = eigenvalues(B.hilbert_schmidt);
        for (int k = 0; k < 4; ++k) CHECK(std::abs(ev_b[k] - ev_h[k]) < 1e-10);
    }

    auto free = bloch_redfield_bloch_basis(SystemModel::from_theta(pi / 3), StationaryGamma{});
    auto ev = eigenvalues(free.matrix.cast<cplx>());
    const std::vector<cplx> expect = sorted({0.0, 0.0, cplx(0, 1), cplx(0, -1)});
    for (int k = 0; k < 4; ++k) CHECK(std::abs(ev[k] - expect[k]) < 1e-14);
}

TEST_CASE("relaxation eigenvalues") {
    SUBCASE("no coupling") {
        auto r = relaxation_eigenvalues(0, 0, 0, 0, 1.0);
        auto roots = sorted({r.roots.begin(), r.roots.end()});
        CHECK(std::abs(roots[0] - cplx(0, -1)) < 1e-14);
        CHECK(std::abs(roots[1]) < 1e-14);
        CHECK(std::abs(roots[2] - cplx(0, 1)) < 1e-14);
        CHECK_FALSE(r.overdamped);
    }
    SUBCASE("underdamped") {
        const double jp = 0.03, jm = 0.05;
        auto r = relaxation_eigenvalues(jp, jm, 0.01, -0.02, 1.0);
        CHECK_FALSE(r.overdamped);
        int real_roots = 0;
        for (cplx x : r.roots) {
            if (std::abs(x.imag()) < 1e-12) {
                ++real_roots;
                CHECK(x.real() == doctest::Approx(-(jp + jm)).epsilon(1e-12));
            } else {
                CHECK(x.real() == doctest::Approx(-(jp + jm) / 2).epsilon(1e-12));
            }
        }
        CHECK(real_roots == 1);
    }
    SUBCASE("overdamped") {
        auto r = relaxation_eigenvalues(1.5, 1.0, 0.0, 0.0, 1.0);
        CHECK(overdamping_discriminant(1.5, 1.0, 0.0, 0.0, 1.0) > 0.0);
        CHECK(r.overdamped);
    }
    SUBCASE("agree with the assembled generator at θ = 0") {
        RelaxationParams p{0.04, 0.07, 0.0, 0.012, -0.005, 0.0};
        auto sys = SystemModel::from_theta(0.0);
        auto B = bloch_redfield_bloch_basis(sys, stationary_gamma(p));
        auto r = relaxation_eigenvalues(p.J_plus, p.J_minus, p.S_plus, p.S_minus, 1.0);
        std::vector<cplx> mine{0.0, r.roots[0], r.roots[1], r.roots[2]};
        auto ev = eigenvalues(B.matrix.cast<cplx>());
        mine = sorted(mine);
        for (int k = 0; k < 4; ++k) CHECK(std::abs(ev[k] - mine[k]) < 1e-10);
    }
}
