#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "core.hpp"
#include "medium.hpp"
#include "nonlinear.hpp"

namespace nlmedium {

struct CombLine {
    double omega = 0.0;
    cvec3 amp = cvec3::Zero();
};

struct FrequencyComb {
    std::vector<CombLine> lines;
    double tolerance = 0.0;  // <= 0 selects 1e-9 * max|w|
};

inline double comb_tolerance(const std::vector<CombLine>& lines, double tol) {
    if (tol > 0.0) return tol;
    double s = 0.0;
    for (const auto& l : lines) s = std::max(s, std::abs(l.omega));
    return 1e-9 * std::max(s, 1.0);
}

/// Sorts, checks distinctness and mirrors single-sided input so that every
/// line at w has a partner at -w carrying the conjugate amplitude.
inline FrequencyComb conjugate_closed(const FrequencyComb& in) {
    FrequencyComb c = in;
    c.tolerance = comb_tolerance(in.lines, in.tolerance);
    const double tol = c.tolerance;
    std::vector<CombLine> pos;
    for (const auto& l : in.lines) {
        if (!std::isfinite(l.omega) || !l.amp.allFinite()) throw ValidationError("comb line must be finite");
        if (std::abs(l.omega) <= tol) {
            if (l.amp.imag().cwiseAbs().maxCoeff() > 0.0) throw ValidationError("zero-frequency amplitude must be real");
            pos.push_back({0.0, l.amp});
        } else if (l.omega > 0.0) {
            pos.push_back(l);
        }
    }
    std::sort(pos.begin(), pos.end(), [](const CombLine& a, const CombLine& b) { return a.omega < b.omega; });
    for (std::size_t i = 1; i < pos.size(); ++i)
        if (pos[i].omega - pos[i - 1].omega <= tol) throw ValidationError("comb frequencies must be distinct");
    for (const auto& l : in.lines) {
        if (l.omega >= -tol) continue;
        auto it = std::find_if(pos.begin(), pos.end(), [&](const CombLine& p) { return std::abs(p.omega + l.omega) <= tol; });
        if (it == pos.end()) {
            pos.push_back({-l.omega, l.amp.conjugate()});
            std::sort(pos.begin(), pos.end(), [](const CombLine& a, const CombLine& b) { return a.omega < b.omega; });
            for (std::size_t i = 1; i < pos.size(); ++i)
                if (pos[i].omega - pos[i - 1].omega <= tol) throw ValidationError("comb frequencies must be distinct");
        } else if ((it->amp - l.amp.conjugate()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, l.amp.cwiseAbs().maxCoeff())) {
            throw ValidationError("comb is not conjugate-closed");
        }
    }
    c.lines.clear();
    for (auto it = pos.rbegin(); it != pos.rend(); ++it)
        if (it->omega != 0.0) c.lines.push_back({-it->omega, it->amp.conjugate()});
    for (const auto& p : pos) c.lines.push_back(p);
    return c;
}

inline bool is_conjugate_closed(const FrequencyComb& c) {
    const std::size_t n = c.lines.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = c.lines[i];
        const auto& b = c.lines[n - 1 - i];
        if (a.omega != -b.omega) return false;
        if (a.amp != b.amp.conjugate()) return false;
    }
    return true;
}

namespace detail {

// Field values at a set of lines: E slots read `e`, E* slots read `es`.
struct LineFields {
    std::vector<double> omega;
    std::vector<cvec3> e;
    std::vector<cvec3> es;
};

// Nonlinear part at output w for triple (i, j, k): term A uses (w_i, w, w_j, w_k)
// with w_i + w_j - w_k = w; term B uses (w_i, w_j, w_k, w) with w_i - w_j + w_k = w.
inline cvec3 triple_term_a(const Rank4& L, const cvec3& e1, const cvec3& e3, const cvec3& e4s) {
    cvec3 out = cvec3::Zero();
    for (int g = 0; g < 3; ++g) {
        cplx s = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int n = 0; n < 3; ++n)
                for (int m = 0; m < 3; ++m) s += L(a, g, n, m) * e1(a) * e3(n) * e4s(m);
        out(g) = s;
    }
    return out;
}

inline cvec3 triple_term_b(const Rank4& L, const cvec3& e1, const cvec3& e2s, const cvec3& e3) {
    cvec3 out = cvec3::Zero();
    for (int g = 0; g < 3; ++g) {
        cplx s = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int n = 0; n < 3; ++n) s += L(a, b, n, g) * e1(a) * e2s(b) * e3(n);
        out(g) = s;
    }
    return out;
}

inline cvec3 nonlinear_at(const LineFields& F, const MediumParams& m, const Rank4& lam, double w, double tol,
                          const std::vector<std::array<std::size_t, 3>>& order) {
    const double a4 = m.alpha * m.alpha * m.alpha * m.alpha;
    cvec3 acc = cvec3::Zero();
    for (const auto& t : order) {
        const std::size_t i = t[0], j = t[1], k = t[2];
        const double wi = F.omega[i], wj = F.omega[j], wk = F.omega[k];
        cvec3 v = cvec3::Zero();
        if (std::abs(wi + wj - wk - w) <= tol && !(F.e[i].isZero(0.0) || F.e[j].isZero(0.0) || F.es[k].isZero(0.0)))
            v += triple_term_a(lambda0_tensor(lam, m, wi, w, wj, wk) * cplx{a4, 0.0}, F.e[i], F.e[j], F.es[k]);
        if (std::abs(wi - wj + wk - w) <= tol && !(F.e[i].isZero(0.0) || F.es[j].isZero(0.0) || F.e[k].isZero(0.0)))
            v += triple_term_b(lambda0_tensor(lam, m, wi, wj, wk, w) * cplx{a4, 0.0}, F.e[i], F.es[j], F.e[k]);
        acc += v;
    }
    return acc / 16.0;
}

inline cvec3 linear_at(const MediumParams& m, double w, const cvec3& e) {
    cvec3 d = m.eps0 * e;
    if (m.g == 1) d += gamma_response(m, w).transpose() * e;
    return d;
}

inline std::vector<double> output_frequencies(const std::vector<double>& w, double tol) {
    std::vector<double> vals;
    for (double x : w) vals.push_back(std::abs(x));
    for (double a : w)
        for (double b : w)
            for (double c : w) {
                vals.push_back(std::abs(a - b + c));
                vals.push_back(std::abs(a + b - c));
            }
    std::sort(vals.begin(), vals.end());
    std::vector<double> reps;
    for (double v : vals) {
        if (v <= tol) v = 0.0;
        if (reps.empty() || v - reps.back() > tol) reps.push_back(v);
    }
    // a cluster holding an input line reports that line's frequency exactly
    for (double& r : reps)
        for (double x : w)
            if (r != 0.0 && std::abs(std::abs(x) - r) <= tol) r = std::abs(x);
    std::vector<double> out;
    for (auto it = reps.rbegin(); it != reps.rend(); ++it)
        if (*it != 0.0) out.push_back(-*it);
    for (double r : reps) out.push_back(r);
    return out;
}

}  // namespace detail

/// Displacement on a conjugate-closed comb, evaluated line by line. The
/// triple sums for -w visit the mirror images of the triples for +w in the
/// same order, and the w = 0 line pairs each triple with its mirror, so the
/// output is conjugate-closed to the last bit.
inline FrequencyComb displacement(const FrequencyComb& E_in, const MediumParams& m, const Rank4& lam) {
    validate(m);
    const FrequencyComb E = conjugate_closed(E_in);
    const double tol = E.tolerance;
    const std::size_t n = E.lines.size();
    detail::LineFields F;
    for (const auto& l : E.lines) {
        F.omega.push_back(l.omega);
        F.e.push_back(l.amp);
    }
    for (std::size_t i = 0; i < n; ++i) F.es.push_back(F.e[i].conjugate());

    auto mirror = [n](std::size_t i) { return n - 1 - i; };
    std::vector<std::array<std::size_t, 3>> fwd, bwd, zero;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                fwd.push_back({i, j, k});
                bwd.push_back({mirror(i), mirror(j), mirror(k)});
            }

    const bool nonlinear = lam.max_abs() != 0.0 && m.g == 1 && m.alpha != 0.0;
    FrequencyComb out;
    out.tolerance = tol;
    auto outs = detail::output_frequencies(F.omega, tol);
    for (double w : outs) {
        cvec3 d = cvec3::Zero();
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(F.omega[i] - w) <= tol) d += detail::linear_at(m, w, F.e[i]);
        if (nonlinear) {
            if (w > 0.0) {
                d += detail::nonlinear_at(F, m, lam, w, tol, fwd);
            } else if (w < 0.0) {
                d += detail::nonlinear_at(F, m, lam, w, tol, bwd);
            } else {
                cvec3 acc = cvec3::Zero();
                for (std::size_t t = 0; t < fwd.size(); ++t) {
                    const auto& a = fwd[t];
                    const auto& b = bwd[t];
                    if (a > b) continue;
                    cvec3 va = detail::nonlinear_at(F, m, lam, 0.0, tol, {a});
                    if (a == b) acc += va;
                    else acc += va + detail::nonlinear_at(F, m, lam, 0.0, tol, {b});
                }
                d += acc;
            }
        }
        if (!d.isZero(0.0)) out.lines.push_back({w, d});
    }
    return out;
}

/// Displacement on an arbitrary line set with E and E* supplied separately
/// (Wirtinger-independent variables); used by the functional-derivative path.
inline std::map<double, cvec3> displacement_independent(const std::vector<double>& omega, const std::vector<cvec3>& e,
                                                        const std::vector<cvec3>& es, const MediumParams& m,
                                                        const Rank4& lam, const std::vector<double>& outputs,
                                                        double tol) {
    detail::LineFields F{omega, e, es};
    const std::size_t n = omega.size();
    std::vector<std::array<std::size_t, 3>> order;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) order.push_back({i, j, k});
    std::map<double, cvec3> out;
    for (double w : outputs) {
        cvec3 d = cvec3::Zero();
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(omega[i] - w) <= tol) d += detail::linear_at(m, w, e[i]);
        d += detail::nonlinear_at(F, m, lam, w, tol, order);
        out[w] = d;
    }
    return out;
}

inline cvec3 line_at(const FrequencyComb& c, double w) {
    const double tol = comb_tolerance(c.lines, c.tolerance);
    for (const auto& l : c.lines)
        if (std::abs(l.omega - w) <= tol) return l.amp;
    return cvec3::Zero();
}

/// chi1 from a central difference of displacement() on a single-line comb,
/// Richardson-extrapolated over steps h and h/2.
inline cmat3 extract_chi1_fd(const MediumParams& m, const Rank4& lam, double omega, double h) {
    if (!(h >= 1e-8 && h <= 1e-2)) throw ValidationError("step must lie in [1e-8, 1e-2]");
    if (omega == 0.0) throw ValidationError("finite-difference probe needs a nonzero frequency");
    auto column = [&](int b, double step) {
        cvec3 u = cvec3::Zero();
        u(b) = step;
        FrequencyComb plus{{{omega, u}}, 0.0}, minus{{{omega, -u}}, 0.0};
        cvec3 dp = line_at(displacement(plus, m, lam), omega);
        cvec3 dm = line_at(displacement(minus, m, lam), omega);
        return cvec3((dp - dm) / (2.0 * step));
    };
    cmat3 coarse, fine;
    for (int b = 0; b < 3; ++b) {
        coarse.col(b) = column(b, h);
        fine.col(b) = column(b, h / 2.0);
    }
    const double scale = std::max(max_abs(fine), 1e-300);
    if (max_abs(fine - coarse) > 1e-6 * scale) throw ConvergenceError("step too large");
    cmat3 extrap = (4.0 * fine - coarse) / 3.0;
    return extrap / m.eps0 - cmat3::Identity();
}

/// (1/2eps0) d^3 D_a(w) / dE_b(w1) dE*_m(w2) dE_n(w3) at E = 0, by mixed
/// central differences in the Wirtinger-independent amplitudes.
inline Rank4 extract_chi3_fd(const MediumParams& m, const Rank4& lam, double w, double w1, double w2, double w3,
                             double h) {
    detail::check_energy(w, w1, w2, w3);
    if (!(h > 0.0 && h <= 1e-1)) throw ValidationError("step must lie in (0, 0.1]");
    const std::vector<double> omega{w1, w2, w3};
    const double tol = 1e-9 * std::max({std::abs(w), std::abs(w1), std::abs(w2), std::abs(w3), 1.0});
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(omega[static_cast<std::size_t>(i)] - omega[static_cast<std::size_t>(j)]) <= tol)
                throw ValidationError("finite-difference probe needs distinct frequencies");

    auto third = [&](int b, int mu, int nu, double step) {
        cvec3 acc = cvec3::Zero();
        for (int s1 : {1, -1})
            for (int s2 : {1, -1})
                for (int s3 : {1, -1}) {
                    std::vector<cvec3> e(3, cvec3::Zero()), es(3, cvec3::Zero());
                    e[0](b) = s1 * step;
                    es[1](mu) = s2 * step;
                    e[2](nu) = s3 * step;
                    auto d = displacement_independent(omega, e, es, m, lam, {w}, tol);
                    acc += static_cast<double>(s1 * s2 * s3) * d[w];
                }
        return cvec3(acc / (8.0 * step * step * step));
    };
    Rank4 out;
    double worst = 0.0, scale = 0.0;
    for (int b = 0; b < 3; ++b)
        for (int mu = 0; mu < 3; ++mu)
            for (int nu = 0; nu < 3; ++nu) {
                cvec3 c = third(b, mu, nu, h), f = third(b, mu, nu, h / 2.0);
                worst = std::max(worst, (f - c).cwiseAbs().maxCoeff());
                scale = std::max(scale, f.cwiseAbs().maxCoeff());
                cvec3 x = (4.0 * f - c) / 3.0;
                for (int a = 0; a < 3; ++a) out(a, b, mu, nu) = x(a) / (2.0 * m.eps0);
            }
    if (worst > 1e-6 * std::max(scale, 1e-300) && worst > 1e-300) throw ConvergenceError("step too large");
    return out;
}

}  // namespace nlmedium
