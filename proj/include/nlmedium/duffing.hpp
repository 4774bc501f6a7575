#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "core.hpp"
#include "displacement.hpp"
#include "medium.hpp"
#include "nonlinear.hpp"
#include "parallel.hpp"

namespace nlmedium {

struct DuffingParams {
    double omega0 = 1.0;
    double gamma_damp = 0.0;
    double eta = 0.0;
    double drive_amp = 0.0;
    double drive_freq = 0.5;
    double coupling = 1.0;  // force per unit field

    double force() const { return coupling * drive_amp; }
};

inline void validate(const DuffingParams& p) {
    if (!(p.omega0 > 0.0)) throw ValidationError("omega0 must be positive");
    if (!(p.gamma_damp >= 0.0)) throw ValidationError("gamma_damp must be non-negative");
    if (!(p.drive_amp >= 0.0)) throw ValidationError("drive_amp must be non-negative");
    if (!(p.drive_freq > 0.0)) throw ValidationError("drive_freq must be positive");
    if (!std::isfinite(p.eta) || !std::isfinite(p.coupling)) throw ValidationError("eta and coupling must be finite");
}

struct Trajectory {
    double dt = 0.0;
    std::vector<double> t, x, v;
};

struct InitialState {
    double x = 0.0;
    double v = 0.0;
};

/// Linear steady state x = Re(X e^{i wd t}) at time t.
inline InitialState linear_steady_state(const DuffingParams& p, double t) {
    const double w = p.drive_freq;
    const cplx X = p.force() / cplx{p.omega0 * p.omega0 - w * w, p.gamma_damp * w};
    const cplx ph = std::exp(cplx{0.0, w * t});
    return {std::real(X * ph), std::real(cplx{0.0, w} * X * ph)};
}

/// RK4 for x'' + gamma x' + w0^2 x + eta x^3 = F cos(wd t). Returns the last
/// quarter of the run. Starts from the linear steady state unless told otherwise.
inline Trajectory simulate(const DuffingParams& p, double t_end, double dt, std::optional<InitialState> init = {}) {
    validate(p);
    if (!(dt > 0.0) || !(dt < 0.05 / std::max(p.omega0, p.drive_freq)))
        throw ValidationError("dt must be below 0.05 / max(omega0, drive_freq)");
    if (!(t_end > dt)) throw ValidationError("t_end must exceed dt");
    const InitialState s0 = init ? *init : linear_steady_state(p, 0.0);
    const double F = p.force(), w0sq = p.omega0 * p.omega0, wd = p.drive_freq, gam = p.gamma_damp, eta = p.eta;
    const double bound = 1e6 * std::max({F / w0sq, std::abs(s0.x), std::abs(s0.v) / p.omega0, 1e-300});
    auto acc = [&](double t, double x, double v) { return F * std::cos(wd * t) - gam * v - w0sq * x - eta * x * x * x; };

    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    const std::size_t first = steps - steps / 4;
    Trajectory tr;
    tr.dt = dt;
    double x = s0.x, v = s0.v;
    for (std::size_t n = 0; n <= steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        if (n >= first) {
            tr.t.push_back(t);
            tr.x.push_back(x);
            tr.v.push_back(v);
        }
        if (n == steps) break;
        const double k1x = v, k1v = acc(t, x, v);
        const double k2x = v + 0.5 * dt * k1v, k2v = acc(t + 0.5 * dt, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
        const double k3x = v + 0.5 * dt * k2v, k3v = acc(t + 0.5 * dt, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
        const double k4x = v + dt * k3v, k4v = acc(t + dt, x + dt * k3x, v + dt * k3v);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if (!std::isfinite(x) || std::abs(x) > bound) throw ConvergenceError("driven beyond perturbative regime");
    }
    return tr;
}

struct HarmonicSpectrum {
    std::map<int, cplx> amplitudes;
};

namespace detail {

// Number of samples spanning the largest whole number of drive periods.
inline std::size_t whole_period_samples(const Trajectory& tr, double omega_d) {
    if (tr.t.size() < 2) throw ValidationError("trajectory too short");
    const double period = 2.0 * pi / omega_d;
    const double span = tr.t.back() - tr.t.front();
    const double periods = std::floor(span / period * (1.0 + 1e-12));
    if (periods < 1.0) throw ValidationError("window shorter than one drive period");
    const double k = std::round(periods * period / tr.dt);
    if (std::abs(k * tr.dt / period - periods) > 1e-3 * periods) throw ValidationError("window misaligned");
    if (static_cast<std::size_t>(k) >= tr.t.size()) throw ValidationError("window misaligned");
    return static_cast<std::size_t>(k);
}

}  // namespace detail

/// A_n = (2/T) int x e^{-i n wd t} dt over whole periods of the window.
inline HarmonicSpectrum harmonic_amplitudes(const Trajectory& tr, double omega_d, int n_max) {
    if (!(omega_d > 0.0)) throw ValidationError("drive frequency must be positive");
    if (n_max < 0) throw ValidationError("n_max must be non-negative");
    const std::size_t k = detail::whole_period_samples(tr, omega_d);
    const double T = static_cast<double>(k) * tr.dt;
    HarmonicSpectrum s;
    for (int n = 0; n <= n_max; ++n) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j <= k; ++j) {
            const double wgt = (j == 0 || j == k) ? 0.5 : 1.0;
            acc += wgt * tr.x[j] * std::exp(cplx{0.0, -n * omega_d * tr.t[j]});
        }
        s.amplitudes[n] = 2.0 * acc * tr.dt / T;
    }
    return s;
}

struct EnergyBalance {
    double input = 0.0;
    double dissipated = 0.0;
    double relative_error = 0.0;
};

inline EnergyBalance energy_balance(const DuffingParams& p, const Trajectory& tr) {
    const std::size_t k = detail::whole_period_samples(tr, p.drive_freq);
    double pin = 0.0, pd = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        pin += p.force() * std::cos(p.drive_freq * tr.t[j]) * tr.v[j];
        pd += p.gamma_damp * tr.v[j] * tr.v[j];
    }
    EnergyBalance e{pin / static_cast<double>(k), pd / static_cast<double>(k), 0.0};
    e.relative_error = std::abs(e.input - e.dissipated) / std::max(std::abs(e.dissipated), 1e-300);
    return e;
}

/// First-order harmonic balance A3 / A1^3 with A_n the e^{+i n wd t} coefficient.
inline cplx perturbative_reference(const DuffingParams& p) {
    validate(p);
    const double w = p.drive_freq;
    if (std::abs(3.0 * w - p.omega0) <= 10.0 * p.gamma_damp)
        throw ValidationError("third harmonic resonant; perturbation theory invalid");
    return -p.eta / (4.0 * cplx{p.omega0 * p.omega0 - 9.0 * w * w, 3.0 * p.gamma_damp * w});
}

/// Scalar oscillator implied by a medium: damping from the width of Gamma's
/// resonance and cubic stiffness from lambda_xxxx.
inline DuffingParams duffing_from_medium(const MediumParams& m, const Rank4& lam, double drive_freq,
                                         double drive_amp) {
    validate(m);
    DuffingParams p;
    p.omega0 = m.omega0;
    const double w03 = m.omega0 * m.omega0 * m.omega0;
    p.gamma_damp = w03 * m.eps0 * m.chi_s * std::imag(reservoir_kernel_scalar(m, m.omega0));
    const double a4 = m.alpha * m.alpha * m.alpha * m.alpha;
    p.eta = -a4 * std::real(lam(0, 0, 0, 0)) * m.eps0 * m.chi_s * m.omega0 * m.omega0 / 192.0;
    p.coupling = m.eps0 * m.omega0 * m.omega0 * m.chi_s;
    p.drive_freq = drive_freq;
    p.drive_amp = drive_amp;
    return p;
}

/// A3 / A1^3 predicted by displacement() on a single x-polarized line, in the
/// oscillator's e^{+i wt} convention.
inline cplx displacement_third_harmonic_ratio(const MediumParams& m, const Rank4& lam, double drive_freq,
                                              double field) {
    cvec3 e = cvec3::Zero();
    e(0) = field;
    const FrequencyComb D = displacement(FrequencyComb{{{drive_freq, e}}, 0.0}, m, lam);
    const cplx x1 = gamma_scalar(m, drive_freq) * field;
    const cplx x3 = line_at(D, 3.0 * drive_freq)(0);
    return std::conj(x3 / (x1 * x1 * x1)) / 4.0;
}

struct DuffingReport {
    std::vector<double> drive_amps;
    std::vector<double> a1_abs, a3_abs;
    double exponent = 0.0;
    double r_squared = 0.0;
    cplx measured_ratio = 0.0;
    cplx reference_ratio = 0.0;
    cplx displacement_ratio = 0.0;
    double ratio_to_reference = 0.0;
    double ratio_to_displacement = 0.0;
    double worst_energy_error = 0.0;
    bool tolerance_pass = false;
};

struct LadderSettings {
    double base_amp = 1e-3;     // drive field of the weakest run
    int ladder = 5;             // amplitudes base * 2^k
    int steps_per_period = 2048;
    int periods = 128;
    unsigned threads = 1;
};

inline DuffingReport compare_chi3(const DuffingParams& proto, const LadderSettings& s,
                                  std::optional<cplx> displacement_ratio = {}) {
    validate(proto);
    if (s.ladder < 2) throw ValidationError("ladder needs at least two amplitudes");
    if (!(s.base_amp > 0.0)) throw ValidationError("base amplitude must be positive");
    if (s.steps_per_period < 16 || s.periods < 8) throw ValidationError("ladder resolution too coarse");
    const cplx ref = perturbative_reference(proto);
    const double period = 2.0 * pi / proto.drive_freq;
    const double dt = period / s.steps_per_period;
    const double t_end = period * s.periods;

    struct Run {
        cplx a1, a3;
        double energy_error;
    };
    auto runs = parallel_map(static_cast<std::size_t>(s.ladder), s.threads, [&](std::size_t k) {
        DuffingParams p = proto;
        p.drive_amp = s.base_amp * std::ldexp(1.0, static_cast<int>(k));
        Trajectory tr = simulate(p, t_end, dt);
        HarmonicSpectrum h = harmonic_amplitudes(tr, p.drive_freq, 3);
        return Run{h.amplitudes[1], h.amplitudes[3], energy_balance(p, tr).relative_error};
    });

    DuffingReport r;
    std::vector<double> lx, ly;
    for (int k = 0; k < s.ladder; ++k) {
        const Run& run = runs[static_cast<std::size_t>(k)];
        r.drive_amps.push_back(s.base_amp * std::ldexp(1.0, k));
        r.a1_abs.push_back(std::abs(run.a1));
        r.a3_abs.push_back(std::abs(run.a3));
        r.worst_energy_error = std::max(r.worst_energy_error, run.energy_error);
        if (!(std::abs(run.a3) > 0.0)) throw ConvergenceError("not in perturbative regime");
        lx.push_back(std::log(std::abs(run.a1)));
        ly.push_back(std::log(std::abs(run.a3)));
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i] / n;
        my += ly[i] / n;
    }
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    r.exponent = sxy / sxx;
    r.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 0.0;
    if (!(r.r_squared >= 0.999)) throw ConvergenceError("not in perturbative regime");

    const Run& weak = runs.front();
    r.measured_ratio = weak.a3 / (weak.a1 * weak.a1 * weak.a1);
    r.reference_ratio = ref;
    r.ratio_to_reference = std::abs(r.measured_ratio / ref);
    if (displacement_ratio) {
        r.displacement_ratio = *displacement_ratio;
        r.ratio_to_displacement = std::abs(r.measured_ratio / *displacement_ratio);
    }
    r.tolerance_pass = r.exponent >= 2.99 && r.exponent <= 3.01 && std::abs(r.measured_ratio / ref - 1.0) <= 0.05 &&
                       r.worst_energy_error <= 5e-3;
    return r;
}

/// Ladder on the oscillator mapped from a medium, with the comb prediction attached.
inline DuffingReport compare_chi3(const MediumParams& m, const Rank4& lam, double drive_freq, const LadderSettings& s) {
    DuffingParams p = duffing_from_medium(m, lam, drive_freq, s.base_amp);
    const cplx pred = displacement_third_harmonic_ratio(m, lam, drive_freq, s.base_amp);
    return compare_chi3(p, s, pred);
}

}  // namespace nlmedium
