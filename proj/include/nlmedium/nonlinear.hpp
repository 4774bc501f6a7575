#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "core.hpp"
#include "medium.hpp"

namespace nlmedium {

inline Rank4 pairwise_exchange(const Rank4& t) { return t.permuted({2, 3, 0, 1}); }

inline bool has_pairwise_exchange_symmetry(const Rank4& t, double tol = 1e-14) {
    return max_abs_diff(t, pairwise_exchange(t)) <= tol * std::max(1.0, t.max_abs());
}

inline Rank4 lambda_isotropic(double l1, double l2, double l3) {
    Rank4 t;
    auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    t(m, n, a, b) = l1 * d(m, n) * d(a, b) + l2 * d(m, a) * d(n, b) + l3 * d(m, b) * d(n, a);
    return (t + pairwise_exchange(t)) * cplx{0.5, 0.0};
}

/// Full 81-entry table in row-major (mu, nu, alpha, beta) order.
inline Rank4 lambda_table(const std::vector<cplx>& entries) {
    if (entries.size() != 81) throw ValidationError("lambda table needs 81 entries");
    Rank4 t;
    for (std::size_t n = 0; n < 81; ++n) t[n] = entries[n];
    if (!has_pairwise_exchange_symmetry(t)) throw ValidationError("lambda table violates pairwise-exchange symmetry");
    return t;
}

/// out_{abcd} = sum T_{pqrs} A_{ap} B_{bq} C_{cr} D_{ds}
inline Rank4 contract_legs(const Rank4& t, const cmat3& A, const cmat3& B, const cmat3& C, const cmat3& D) {
    Rank4 s1, s2, s3, out;
    for (int a = 0; a < 3; ++a)
        for (int q = 0; q < 3; ++q)
            for (int r = 0; r < 3; ++r)
                for (int s = 0; s < 3; ++s) {
                    cplx v = 0.0;
                    for (int p = 0; p < 3; ++p) v += A(a, p) * t(p, q, r, s);
                    s1(a, q, r, s) = v;
                }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int r = 0; r < 3; ++r)
                for (int s = 0; s < 3; ++s) {
                    cplx v = 0.0;
                    for (int q = 0; q < 3; ++q) v += B(b, q) * s1(a, q, r, s);
                    s2(a, b, r, s) = v;
                }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c)
                for (int s = 0; s < 3; ++s) {
                    cplx v = 0.0;
                    for (int r = 0; r < 3; ++r) v += C(c, r) * s2(a, b, r, s);
                    s3(a, b, c, s) = v;
                }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 3; ++d) {
                    cplx v = 0.0;
                    for (int s = 0; s < 3; ++s) v += D(d, s) * s3(a, b, c, s);
                    out(a, b, c, d) = v;
                }
    return out;
}

/// Lambda0 with slot frequencies (w1, w2, w3, w4) on positions (0, 1, 2, 3).
inline Rank4 lambda0_tensor(const Rank4& lam, const MediumParams& m, double w1, double w2, double w3, double w4) {
    if (m.g == 0) return Rank4{};
    Rank4 out = contract_legs(lam, gamma_response(m, w1), gamma_response(m, w2), gamma_response(m, w3),
                              gamma_response(m, w4));
    return out * cplx{1.0 / 24.0, 0.0};
}

/// Lambda = alpha^4 Lambda0.
inline Rank4 lambda_full(const Rank4& lam0, double alpha) {
    return lam0 * cplx{alpha * alpha * alpha * alpha, 0.0};
}

using Rank3 = std::array<cplx, 27>;

struct SourceDressedTensors {
    Rank4 Lambda;
    Rank3 Delta{};
    cmat3 Phi1 = cmat3::Zero();
    cmat3 Phi2 = cmat3::Zero();
    cvec3 Xi = cvec3::Zero();
};

inline SourceDressedTensors source_dressed_tensors(const Rank4& lam0, double alpha, const cvec3& f) {
    SourceDressedTensors s;
    const double a2 = alpha * alpha;
    s.Lambda = lambda_full(lam0, alpha);
    for (int b = 0; b < 3; ++b)
        for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n) {
                cplx d = 0.0;
                for (int a = 0; a < 3; ++a) d += lam0(a, b, m, n) * f(a);
                s.Delta[static_cast<std::size_t>((b * 3 + m) * 3 + n)] = a2 * alpha * d;
            }
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
            cplx p1 = 0.0, p2 = 0.0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    p1 += lam0(a, b, m, n) * f(a) * std::conj(f(b));
                    p2 += lam0(a, b, m, n) * f(a) * f(b);
                }
            s.Phi1(m, n) = a2 * p1;
            s.Phi2(m, n) = alpha * p2;
        }
    for (int n = 0; n < 3; ++n) {
        cplx x = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int m = 0; m < 3; ++m) x += lam0(a, b, m, n) * f(a) * std::conj(f(b)) * f(m);
        s.Xi(n) = x;
    }
    return s;
}

namespace detail {

inline void check_energy(double w, double w1, double w2, double w3) {
    double scale = std::max({std::abs(w), std::abs(w1), std::abs(w2), std::abs(w3)});
    if (std::abs(w - (w1 - w2 + w3)) > 1e-9 * scale) throw ValidationError("energy conservation violated");
}

}  // namespace detail

/// chi3(w; w1, w2, w3) written through chi1 at the four participating frequencies.
inline Rank4 chi3(const MediumParams& m, const Rank4& lam, double w, double w1, double w2, double w3) {
    detail::check_energy(w, w1, w2, w3);
    const cmat3 c1 = chi1(m, w1), c2 = chi1(m, w2), c3 = chi1(m, w3), c0 = chi1(m, w);
    const double a = m.alpha;
    const double pref = m.eps0 * m.eps0 * m.eps0 * (a * a * a * a) / 32.0 / 24.0;
    Rank4 first = contract_legs(lam, c1, c2, c3, c0);
    // second term: lambda_{g k r s} chi_{a g}(w1) chi_{n k}(w2) chi_{m r}(w3) chi_{b s}(w)
    Rank4 second = contract_legs(lam, c1, c2, c3, c0).permuted({0, 3, 2, 1});
    return (first + second) * cplx{pref, 0.0};
}

/// chi3 divided by chi1(w1) chi1(w2) chi1(w3) chi1(w); isotropic media only.
inline Rank4 miller_ratio(const MediumParams& m, const Rank4& lam, double w, double w1, double w2, double w3) {
    Rank4 c = chi3(m, lam, w, w1, w2, w3);
    cplx denom = 1.0;
    for (double x : {w1, w2, w3, w}) {
        cplx v = chi1_scalar(m, x);
        if (std::abs(v) < 1e-14) throw ValidationError("Miller ratio undefined at transparency point");
        denom *= v;
    }
    return c * (1.0 / denom);
}

}  // namespace nlmedium
