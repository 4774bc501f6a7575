#include <catch_amalgamated.hpp>

#include <cmath>

#include <nlmedium/duffing.hpp>

using namespace nlmedium;
using Catch::Approx;

namespace {

DuffingParams oscillator(double eta, double amp) {
    DuffingParams p;
    p.omega0 = 1.0;
    p.gamma_damp = 0.05;
    p.eta = eta;
    p.drive_amp = amp;
    p.drive_freq = 0.6;
    return p;
}

double period(const DuffingParams& p) { return 2.0 * pi / p.drive_freq; }

}  // namespace

TEST_CASE("linear oscillator settles on the Lorentzian", "[duffing]") {
    const DuffingParams p = oscillator(0.0, 0.3);
    const double T = period(p);
    const auto tr = simulate(p, 40 * T, T / 1024);
    const auto h = harmonic_amplitudes(tr, p.drive_freq, 3);
    const double w = p.drive_freq;
    const double expect = p.drive_amp / std::sqrt(std::pow(1.0 - w * w, 2) + std::pow(p.gamma_damp * w, 2));
    CHECK(std::abs(h.amplitudes.at(1)) == Approx(expect).epsilon(1e-9));
    CHECK(std::abs(h.amplitudes.at(3)) < 1e-10);
}

TEST_CASE("undriven transient decays", "[duffing]") {
    const DuffingParams p = oscillator(0.0, 0.0);
    const auto tr = simulate(p, 800.0, 0.02, InitialState{1.0, 0.0});
    CHECK(std::abs(tr.x.back()) < 1e-6);
}

TEST_CASE("weak anharmonic drive produces a third harmonic", "[duffing]") {
    const DuffingParams p = oscillator(0.5, 0.05);
    const double T = period(p);
    const auto h = harmonic_amplitudes(simulate(p, 64 * T, T / 1024), p.drive_freq, 4);
    const double a1 = std::abs(h.amplitudes.at(1)), a3 = std::abs(h.amplitudes.at(3));
    CHECK(a3 > 1e-8);
    CHECK(a3 < a1);
    CHECK(a3 > 1e3 * std::abs(h.amplitudes.at(2)));
    CHECK(a3 > 1e3 * std::abs(h.amplitudes.at(4)));
}

TEST_CASE("harmonics of a pure cosine", "[duffing]") {
    Trajectory tr;
    const double w = 0.7, dt = 2.0 * pi / w / 256;
    tr.dt = dt;
    for (int j = 0; j <= 256 * 10; ++j) {
        tr.t.push_back(j * dt);
        tr.x.push_back(1.5 * std::cos(w * j * dt));
        tr.v.push_back(0.0);
    }
    const auto h = harmonic_amplitudes(tr, w, 4);
    CHECK(std::abs(h.amplitudes.at(1) - 1.5) < 1e-12);
    for (int n : {0, 2, 3, 4}) CHECK(std::abs(h.amplitudes.at(n)) < 1e-10);
}

TEST_CASE("window alignment is checked", "[duffing]") {
    Trajectory tr;
    tr.dt = 0.3;
    for (int j = 0; j < 5; ++j) tr.t.push_back(j * 0.3), tr.x.push_back(0.0), tr.v.push_back(0.0);
    CHECK_THROWS_AS(harmonic_amplitudes(tr, 1.0, 3), ValidationError);
    tr.t.resize(1);
    CHECK_THROWS_WITH(harmonic_amplitudes(tr, 1.0, 3), "trajectory too short");
}

TEST_CASE("perturbative reference", "[duffing]") {
    CHECK(perturbative_reference(oscillator(0.0, 1.0)) == cplx{0.0, 0.0});
    DuffingParams p = oscillator(0.8, 1.0);
    p.gamma_damp = 0.0;
    p.drive_freq = p.omega0 / 2.0;
    const cplx r = perturbative_reference(p);
    CHECK(r.real() == Approx(0.8 / (5.0 * p.omega0 * p.omega0)).epsilon(1e-15));
    CHECK(r.imag() == 0.0);
    DuffingParams q = p;
    q.eta *= 2.0;
    CHECK(std::abs(perturbative_reference(q) - 2.0 * r) < 1e-15);
    DuffingParams res = oscillator(1.0, 1.0);
    res.drive_freq = res.omega0 / 3.0 + 0.5 * res.gamma_damp;
    CHECK_THROWS_WITH(perturbative_reference(res), "third harmonic resonant; perturbation theory invalid");
}

TEST_CASE("RK4 is fourth order", "[duffing]") {
    const DuffingParams p = oscillator(0.5, 0.3);
    const double dt = 0.04, t_end = 20.0;
    auto final_x = [&](double h) { return simulate(p, t_end, h).x.back(); };
    const double ref = final_x(dt / 4);
    const double e1 = std::abs(final_x(dt) - ref), e2 = std::abs(final_x(dt / 2) - ref);
    CHECK(e1 / e2 == Approx(16.0).epsilon(0.2));
}

TEST_CASE("simulate validation and divergence", "[duffing]") {
    DuffingParams p = oscillator(0.5, 0.3);
    CHECK_THROWS_AS(simulate(p, 10.0, 0.1), ValidationError);
    p.gamma_damp = -1.0;
    CHECK_THROWS_AS(simulate(p, 10.0, 0.01), ValidationError);
    DuffingParams soft = oscillator(-50.0, 1.0);
    CHECK_THROWS_WITH(simulate(soft, 200.0, 0.01), "driven beyond perturbative regime");
}

TEST_CASE("energy balance in steady state", "[duffing]") {
    const DuffingParams p = oscillator(0.5, 0.05);
    const double T = period(p);
    const auto e = energy_balance(p, simulate(p, 64 * T, T / 1024));
    CHECK(e.dissipated > 0.0);
    CHECK(e.relative_error < 5e-3);
}

TEST_CASE("ladder against harmonic balance", "[duffing]") {
    LadderSettings s;
    s.base_amp = 0.01;
    s.steps_per_period = 512;
    s.periods = 64;
    const auto r = compare_chi3(oscillator(0.5, 0.0), s);
    CHECK(r.exponent == Approx(3.0).margin(0.01));
    CHECK(r.ratio_to_reference == Approx(1.0).margin(0.05));
    CHECK(r.worst_energy_error < 5e-3);
    CHECK(r.tolerance_pass);
    CHECK(r.drive_amps.size() == 5);
}

TEST_CASE("linear ladder has no third harmonic", "[duffing]") {
    LadderSettings s;
    s.base_amp = 0.01;
    s.steps_per_period = 512;
    s.periods = 64;
    DuffingParams p = oscillator(0.0, 0.0);
    for (int k = 0; k < 3; ++k) {
        p.drive_amp = s.base_amp * (1 << k);
        const auto h = harmonic_amplitudes(simulate(p, s.periods * period(p), period(p) / s.steps_per_period),
                                           p.drive_freq, 3);
        CHECK(std::abs(h.amplitudes.at(3)) < 1e-12);
    }
    const auto r = compare_chi3(p, s);
    for (double a3 : r.a3_abs) CHECK(a3 < 1e-12);
    CHECK_FALSE(r.tolerance_pass);
}

TEST_CASE("oscillator mapped from a medium", "[duffing]") {
    MediumParams m;
    m.nu_spec = ConstantCoupling{std::sqrt(0.04 / pi), 10.0};
    const Rank4 lam = lambda_isotropic(-64.0, -64.0, -64.0);
    const DuffingParams p = duffing_from_medium(m, lam, 0.2, 1e-3);
    CHECK(p.gamma_damp == Approx(0.02).epsilon(1e-12));
    CHECK(p.eta == Approx(1.0).epsilon(1e-12));
    CHECK(p.coupling == Approx(1.0).epsilon(1e-15));
    LadderSettings s;
    s.ladder = 3;
    s.periods = 64;
    s.steps_per_period = 1024;
    const auto r = compare_chi3(m, lam, 0.2, s);
    CHECK(r.exponent == Approx(3.0).margin(0.01));
    CHECK(r.ratio_to_displacement == Approx(1.0).margin(0.01));
}
