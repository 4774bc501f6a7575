#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "core.hpp"

namespace nlmedium {

struct ZeroCoupling {};

struct ConstantCoupling {
    double nu0 = 0.0;
    double omega_cut = 0.0;
};

/// nu(w') sampled on an ascending grid, linearly interpolated, zero outside.
struct TabulatedCoupling {
    std::vector<double> grid;
    std::vector<double> values;
};

using CouplingSpec = std::variant<ZeroCoupling, ConstantCoupling, TabulatedCoupling>;

struct MediumParams {
    double omega0 = 1.0;
    double chi_s = 1.0;
    double alpha = 1.0;
    double rho = 1.0;
    CouplingSpec nu_spec = ZeroCoupling{};
    int g = 1;
    double eps0 = 1.0;
    double mu0 = 1.0;
    double loop_cutoff = 20.0;
    double ieps = 1e-9;
};

inline void validate(const MediumParams& p) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(p.omega0)) throw ValidationError("omega0 must be positive");
    if (!positive(p.chi_s)) throw ValidationError("chi_s must be positive");
    if (!positive(p.rho)) throw ValidationError("rho must be positive");
    if (!positive(p.ieps)) throw ValidationError("ieps must be positive");
    if (!positive(p.eps0) || !positive(p.mu0)) throw ValidationError("eps0 and mu0 must be positive");
    if (!std::isfinite(p.alpha)) throw ValidationError("alpha must be finite");
    if (!(p.loop_cutoff > p.omega0) || !std::isfinite(p.loop_cutoff))
        throw ValidationError("loop_cutoff must exceed omega0");
    if (p.g != 0 && p.g != 1) throw ValidationError("g must be 0 or 1");
    if (const auto* c = std::get_if<ConstantCoupling>(&p.nu_spec)) {
        if (!std::isfinite(c->nu0)) throw ValidationError("nu0 must be finite");
        if (!positive(c->omega_cut)) throw ValidationError("omega_cut must be positive");
    }
    if (const auto* t = std::get_if<TabulatedCoupling>(&p.nu_spec)) {
        if (t->grid.size() < 2 || t->grid.size() != t->values.size())
            throw ValidationError("tabulated coupling needs matching grid and values (>= 2 points)");
        if (t->grid.front() < 0.0) throw ValidationError("tabulated coupling grid must be non-negative");
        for (std::size_t i = 1; i < t->grid.size(); ++i)
            if (!(t->grid[i] > t->grid[i - 1])) throw ValidationError("tabulated coupling grid must be strictly increasing");
        for (double v : t->values)
            if (!std::isfinite(v)) throw ValidationError("tabulated coupling values must be finite");
    }
}

namespace detail {

inline double support_edge(const MediumParams& p) {
    return std::visit(
        [&](const auto& c) -> double {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ZeroCoupling>) return 0.0;
            else if constexpr (std::is_same_v<T, ConstantCoupling>) return std::min(c.omega_cut, p.loop_cutoff);
            else return std::min(c.grid.back(), p.loop_cutoff);
        },
        p.nu_spec);
}

inline double tabulated_nu(const TabulatedCoupling& t, double x) {
    if (x < t.grid.front() || x > t.grid.back()) return 0.0;
    auto it = std::upper_bound(t.grid.begin(), t.grid.end(), x);
    if (it == t.grid.end()) return t.values.back();
    std::size_t j = static_cast<std::size_t>(it - t.grid.begin()) - 1;
    double s = (x - t.grid[j]) / (t.grid[j + 1] - t.grid[j]);
    return t.values[j] + s * (t.values[j + 1] - t.values[j]);
}

inline double coupling_sq(const MediumParams& p, double x) {
    x = std::abs(x);
    return std::visit(
        [&](const auto& c) -> double {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ZeroCoupling>) return 0.0;
            else if constexpr (std::is_same_v<T, ConstantCoupling>) return x <= c.omega_cut ? c.nu0 * c.nu0 : 0.0;
            else {
                double v = tabulated_nu(c, x);
                return v * v;
            }
        },
        p.nu_spec);
}

// Breakpoints of the integrand on [0, W]: coupling kinks, the pole and W.
inline std::vector<double> breakpoints(const MediumParams& p, double a, double W) {
    std::vector<double> b{0.0, W};
    if (a > 0.0 && a < W) b.push_back(a);
    if (const auto* t = std::get_if<TabulatedCoupling>(&p.nu_spec))
        for (double x : t->grid)
            if (x > 0.0 && x < W) b.push_back(x);
    std::sort(b.begin(), b.end());
    const double eps = 1e-12 * std::max(W, 1.0);
    std::vector<double> out;
    for (double x : b) {
        if (!out.empty() && x - out.back() <= eps) {
            if (x == a || x == W) out.back() = x;
            continue;
        }
        out.push_back(x);
    }
    return out;
}

inline void require_support(const MediumParams& p, double omega) {
    if (!std::isfinite(omega)) throw ValidationError("frequency must be finite");
    if (std::abs(omega) > p.loop_cutoff) throw ValidationError("frequency outside kernel support");
}

inline cplx finite_or_throw(cplx v) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw ConvergenceError("kernel quadrature failed");
    return v;
}

}  // namespace detail

/// Scalar Sigma(w) via pole-subtracted Gauss-Legendre quadrature; valid for any coupling.
inline cplx reservoir_kernel_quadrature(const MediumParams& p, double omega) {
    detail::require_support(p, omega);
    if (omega == 0.0 || std::holds_alternative<ZeroCoupling>(p.nu_spec)) return {0.0, 0.0};
    const double a = std::abs(omega);
    const double W = detail::support_edge(p);
    const double nua = detail::coupling_sq(p, a);
    using GL = boost::math::quadrature::gauss<double, 10>;
    auto pts = detail::breakpoints(p, a, W);
    double re = 0.0;
    const bool inside = a < W;
    auto f = [&](double x) {
        double d = x * x - a * a;
        if (d == 0.0) return 0.0;
        return inside ? (detail::coupling_sq(p, x) - nua) / d : detail::coupling_sq(p, x) / d;
    };
    // beyond the support the pole sits just past W; keep panels shorter than half their distance to it
    auto panel = [&](auto&& self, double l, double r, int depth) -> double {
        if (!inside && depth < 48 && r - l > 0.5 * (a - r)) {
            const double mid = 0.5 * (l + r);
            return self(self, l, mid, depth + 1) + self(self, mid, r, depth + 1);
        }
        return GL::integrate(f, l, r);
    };
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) re += panel(panel, pts[i], pts[i + 1], 0);
    double im = 0.0;
    if (inside) {
        if (nua != 0.0) re += nua / (2.0 * a) * std::log(std::abs((W - a) / (W + a)));
        im = pi * nua / (2.0 * a);
    }
    double pref = omega * omega / p.rho;
    return detail::finite_or_throw(cplx{pref * re, (omega > 0 ? 1.0 : -1.0) * pref * im});
}

/// Scalar Sigma(w); closed form for Zero and Constant couplings.
inline cplx reservoir_kernel_scalar(const MediumParams& p, double omega) {
    detail::require_support(p, omega);
    if (omega == 0.0) return {0.0, 0.0};
    if (std::holds_alternative<ZeroCoupling>(p.nu_spec)) return {0.0, 0.0};
    if (const auto* c = std::get_if<ConstantCoupling>(&p.nu_spec)) {
        const double W = detail::support_edge(p);
        const double a = std::abs(omega);
        const double n2 = c->nu0 * c->nu0;
        double re = a * n2 / (2.0 * p.rho) * std::log(std::abs((W - a) / (W + a)));
        double im = a < W ? pi * omega * n2 / (2.0 * p.rho) : 0.0;
        return detail::finite_or_throw(cplx{re, im});
    }
    return reservoir_kernel_quadrature(p, omega);
}

inline cmat3 reservoir_kernel(const MediumParams& p, double omega) {
    return reservoir_kernel_scalar(p, omega) * cmat3::Identity();
}

/// Sigma continued to Im z > 0 (analytic couplings only).
inline cplx reservoir_kernel_complex(const MediumParams& p, cplx z) {
    if (std::holds_alternative<ZeroCoupling>(p.nu_spec)) return {0.0, 0.0};
    const auto* c = std::get_if<ConstantCoupling>(&p.nu_spec);
    if (c == nullptr) throw ValidationError("complex frequency requires an analytic coupling");
    if (!(z.imag() > 0.0)) throw ValidationError("complex frequency must lie in the upper half plane");
    const double W = detail::support_edge(p);
    cplx F = (std::log(W - z) - std::log(-z) - std::log(W + z) + std::log(z)) / (2.0 * z);
    return z * z * c->nu0 * c->nu0 / p.rho * F;
}

namespace detail {

inline cplx gamma_from_sigma(const MediumParams& p, cplx omega, cplx sigma) {
    const double w02 = p.omega0 * p.omega0;
    cplx den = w02 - omega * omega - omega * omega * w02 * p.eps0 * p.chi_s * sigma;
    if (std::abs(den) < 1e-14) throw ValidationError("response pole hit");
    return p.eps0 * w02 * p.chi_s / den;
}

}  // namespace detail

inline cplx gamma_scalar(const MediumParams& p, double omega) {
    return detail::gamma_from_sigma(p, omega, reservoir_kernel_scalar(p, omega));
}

inline cplx gamma_scalar_complex(const MediumParams& p, cplx z) {
    return detail::gamma_from_sigma(p, z, reservoir_kernel_complex(p, z));
}

inline cmat3 gamma_response(const MediumParams& p, double omega) {
    return gamma_scalar(p, omega) * cmat3::Identity();
}

inline cplx chi1_scalar(const MediumParams& p, double omega) {
    if (p.g == 0) return {0.0, 0.0};
    return gamma_scalar(p, omega) / p.eps0;
}

inline cmat3 chi1(const MediumParams& p, double omega) {
    return chi1_scalar(p, omega) * cmat3::Identity();
}

inline bool is_isotropic(const cmat3& m, double rel = 1e-12) {
    double diag = std::max({std::abs(m(0, 0)), std::abs(m(1, 1)), std::abs(m(2, 2))});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j && std::abs(m(i, j)) > rel * diag) return false;
    return std::abs(m(0, 0) - m(1, 1)) <= rel * diag && std::abs(m(0, 0) - m(2, 2)) <= rel * diag;
}

struct Rank2Response {
    std::vector<double> freq_grid;
    std::vector<cmat3> values;
};

inline void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw ValidationError("frequency grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ValidationError("frequency grid must be strictly increasing");
}

template <class F>
Rank2Response sample_response(const std::vector<double>& grid, F&& f) {
    check_grid(grid);
    Rank2Response r{grid, {}};
    r.values.reserve(grid.size());
    for (double w : grid) r.values.push_back(f(w));
    return r;
}

/// Re part from Im part of a causal response by a discrete Hilbert transform.
/// The grid must start at w >= 0; Im is extended as an odd function and as zero
/// one step past the last node. Each interval of the piecewise-linear
/// interpolant is integrated exactly, the singular node in closed form.
inline std::vector<double> kk_reconstruct(const std::vector<double>& grid, const std::vector<double>& im) {
    check_grid(grid);
    if (grid.size() != im.size()) throw ValidationError("frequency grid mismatch");
    if (grid.front() < 0.0) throw ValidationError("kk grid must start at a non-negative frequency");
    const std::size_t n = grid.size();
    double peak = 0.0;
    for (double v : im) peak = std::max(peak, std::abs(v));
    std::vector<double> out(n, 0.0);
    if (peak == 0.0) return out;
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (std::abs(im[i + 1] - im[i]) > 0.5 * peak) throw ConvergenceError("grid under-resolves resonance");

    std::vector<double> x, f;
    const double tail = n > 1 ? grid[n - 1] - grid[n - 2] : 1.0;
    x.reserve(2 * n + 2);
    f.reserve(2 * n + 2);
    x.push_back(-(grid.back() + tail));
    f.push_back(0.0);
    for (std::size_t i = n; i-- > 0;) {
        if (grid[i] == 0.0) continue;
        x.push_back(-grid[i]);
        f.push_back(-im[i]);
    }
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        pos[i] = x.size();
        x.push_back(grid[i]);
        f.push_back(grid[i] == 0.0 ? 0.0 : im[i]);
    }
    x.push_back(grid.back() + tail);
    f.push_back(0.0);

    const std::size_t m = x.size();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = pos[k];
        const double w = x[j];
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            if (i + 1 == j || i == j) continue;
            double s = (f[i + 1] - f[i]) / (x[i + 1] - x[i]);
            acc += s * (x[i + 1] - x[i]) + (f[i] + s * (w - x[i])) * std::log(std::abs((x[i + 1] - w) / (x[i] - w)));
        }
        double sl = (f[j] - f[j - 1]) / (x[j] - x[j - 1]);
        double sr = (f[j + 1] - f[j]) / (x[j + 1] - x[j]);
        acc += sl * (w - x[j - 1]) + sr * (x[j + 1] - w) + f[j] * std::log((x[j + 1] - w) / (w - x[j - 1]));
        out[k] = acc / pi;
    }
    return out;
}

}  // namespace nlmedium
