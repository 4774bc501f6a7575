#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "core.hpp"
#include "medium.hpp"
#include "nonlinear.hpp"

namespace nlmedium {

using cmat6 = Eigen::Matrix<cplx, 6, 6>;

struct PlaneWaveContext {
    double k = 0.0;
    Eigen::Vector3d polarization = Eigen::Vector3d::UnitX();
    Eigen::Vector3d k_direction = Eigen::Vector3d::UnitZ();
    double omega = 0.0;
};

inline void validate(const PlaneWaveContext& c) {
    if (!(c.k >= 0.0) || !std::isfinite(c.k)) throw ValidationError("k must be non-negative");
    if (std::abs(c.polarization.squaredNorm() - 1.0) > 1e-12) throw ValidationError("polarization must be a unit vector");
    if (std::abs(c.k_direction.squaredNorm() - 1.0) > 1e-12) throw ValidationError("k_direction must be a unit vector");
    if (std::abs(c.polarization.dot(c.k_direction)) > 1e-12) throw ValidationError("polarization must be transverse");
    if (!std::isfinite(c.omega)) throw ValidationError("frequency must be finite");
}

/// Orthonormal 3x2 basis of the plane orthogonal to khat.
inline Eigen::Matrix<double, 3, 2> transverse_basis(const Eigen::Vector3d& khat) {
    Eigen::Vector3d seed = std::abs(khat.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    Eigen::Vector3d e1 = (seed - seed.dot(khat) * khat).normalized();
    Eigen::Vector3d e2 = khat.cross(e1);
    Eigen::Matrix<double, 3, 2> B;
    B.col(0) = e1;
    B.col(1) = e2;
    return B;
}

inline cmat3 transverse_projector(const Eigen::Vector3d& khat) {
    return (Eigen::Matrix3d::Identity() - khat * khat.transpose()).cast<cplx>();
}

inline cmat3 total_kernel(const MediumParams& m, const PlaneWaveContext& c) {
    const double w = c.omega;
    cmat3 K = m.eps0 * w * w * cmat3::Identity() - (c.k * c.k / m.mu0) * transverse_projector(c.k_direction);
    if (m.g == 1) K -= w * w * m.alpha * m.alpha * gamma_response(m, w);
    return K;
}

namespace detail {

inline cmat3 transverse_inverse(const cmat3& K, const Eigen::Vector3d& khat) {
    const Eigen::Matrix<cplx, 3, 2> B = transverse_basis(khat).cast<cplx>();
    Eigen::Matrix2cd Kt = B.transpose() * K * B;
    if (std::abs(Kt.determinant()) < 1e-14) throw ValidationError("propagator pole");
    return B * Kt.inverse() * B.transpose();
}

}  // namespace detail

/// Inverse of K_tot restricted to the transverse plane (zero longitudinally).
inline cmat3 photon_green(const MediumParams& m, const PlaneWaveContext& c) {
    return detail::transverse_inverse(total_kernel(m, c), c.k_direction);
}

inline cvec3 total_source(const MediumParams& m, const cvec3& J, const cvec3& f, double omega) {
    const cplx iw{0.0, omega};
    if (m.g == 0 || f.isZero(0.0)) return iw * J;
    return iw * (J + (m.alpha / 2.0) * gamma_response(m, omega) * f);
}

struct MeanField {
    cvec3 m = cvec3::Zero();
    cvec3 m_prime = cvec3::Zero();
};

inline MeanField mean_fields(const cvec3& L, const cmat3& D, double omega) {
    const cplx iw{0.0, omega};
    return {iw * (D * L.conjugate()), iw * (D * L)};
}

/// 2x2 block matrix over {A, X}.
struct PropagatorMatrix {
    cmat3 AA = cmat3::Zero();
    cmat3 AX = cmat3::Zero();
    cmat3 XA = cmat3::Zero();
    cmat3 XX = cmat3::Zero();

    cmat6 dense() const {
        cmat6 G;
        G << AA, AX, XA, XX;
        return G;
    }
    static PropagatorMatrix from_dense(const cmat6& G) {
        return {G.topLeftCorner<3, 3>(), G.topRightCorner<3, 3>(), G.bottomLeftCorner<3, 3>(),
                G.bottomRightCorner<3, 3>()};
    }
};

inline PropagatorMatrix tree_propagators(const MediumParams& m, const PlaneWaveContext& c) {
    const double w = c.omega;
    const cmat3 D = photon_green(m, c);
    PropagatorMatrix G;
    G.AA = D;
    if (m.g == 0) return G;
    const cmat3 Gam = gamma_response(m, w);
    const double aw = m.alpha * w;
    G.XX = Gam + aw * aw * Gam * D * Gam;
    G.AX = aw * D * Gam;
    G.XA = aw * Gam * D;
    return G;
}

/// Quartic vertex with 0, 2 or 4 legs converted to photon legs by (alpha w D).
inline Rank4 vertex(const Rank4& lam0, double alpha, double omega, const cmat3& D) {
    const cmat3 I = cmat3::Identity();
    const cmat3 C = alpha * omega * D;
    Rank4 V;
    for (unsigned mask = 0; mask < 16; ++mask) {
        int k = __builtin_popcount(mask);
        if (k % 2) continue;
        auto leg = [&](int s) -> const cmat3& { return (mask & (1u << s)) ? C : I; };
        V += contract_legs(lam0, leg(0), leg(1), leg(2), leg(3));
    }
    return V;
}

inline cmat3 contract_vertex(const Rank4& V, const cmat3& M) {
    cmat3 P = cmat3::Zero();
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int mu = 0; mu < 3; ++mu)
                for (int g = 0; g < 3; ++g) P(a, g) += V(a, b, mu, g) * M(b, mu);
    return P;
}

struct LoopQuadrature {
    int n_points = 4097;
    double cutoff = 0.0;  // 0 selects medium.loop_cutoff
};

struct SelfEnergy {
    cmat3 value = cmat3::Zero();
    double error_estimate = 0.0;
    double discretization_error = 0.0;
    double cutoff_error = 0.0;
    cmat3 loop_moment = cmat3::Zero();  // integral dW/2pi of the time-ordered G_XX
};

/// Retarded G_XX(W) at real W, with the W = 0, k = 0 limit taken analytically.
inline cmat3 matter_propagator(const MediumParams& m, double W, const PlaneWaveContext& c) {
    const cmat3 Gam = gamma_response(m, W);
    if (m.alpha == 0.0 || m.g == 0) return Gam;
    const double a2 = m.alpha * m.alpha;
    cmat3 mix;
    if (W != 0.0) {
        PlaneWaveContext cc = c;
        cc.omega = W;
        mix = a2 * W * W * photon_green(m, cc);
    } else if (c.k > 0.0) {
        return Gam;
    } else {
        cmat3 K = m.eps0 * cmat3::Identity() - a2 * Gam;
        mix = a2 * detail::transverse_inverse(K, c.k_direction);
    }
    return Gam + Gam * mix * Gam;
}

namespace detail {

// Trapezoid sums of the even integrand G_XX(|W|) over [-c, c] at steps h and 2h
// and over [-c/2, c/2] at step h.
struct LoopSums {
    cmat3 fine = cmat3::Zero();
    cmat3 coarse = cmat3::Zero();
    cmat3 half = cmat3::Zero();
};

inline LoopSums loop_sums(const MediumParams& m, const PlaneWaveContext& c, int N, double cutoff) {
    const double h = cutoff / N;
    std::vector<cmat3> f(static_cast<std::size_t>(N) + 1);
    for (int j = 0; j <= N; ++j) f[static_cast<std::size_t>(j)] = matter_propagator(m, j * h, c);
    auto trap = [&](int last, int stride) {
        cmat3 s = f[0] + f[static_cast<std::size_t>(last)];
        for (int j = stride; j < last; j += stride) s += 2.0 * f[static_cast<std::size_t>(j)];
        return cmat3(s * (h * stride));
    };
    return {trap(N, 1), trap(N, 2), trap(N / 2, 1)};
}

}  // namespace detail

/// One-loop Pi(w) = V(w) : integral dW/2pi G_XX,F(W) over [-cutoff, cutoff].
inline SelfEnergy self_energy(const MediumParams& m, const Rank4& lam, double omega, LoopQuadrature q,
                              const PlaneWaveContext& ctx = {}) {
    const double cutoff = q.cutoff > 0.0 ? q.cutoff : m.loop_cutoff;
    if (q.n_points < 64) throw ValidationError("loop quadrature needs at least 64 points");
    if (cutoff > m.loop_cutoff) throw ValidationError("frequency outside kernel support");
    SelfEnergy out;
    if (m.g == 0 || lam.max_abs() == 0.0) return out;

    int N = (q.n_points - 1) / 2;
    N += N % 4 == 0 ? 0 : 4 - N % 4;
    const auto sums = detail::loop_sums(m, ctx, N, cutoff);
    out.loop_moment = sums.fine / (2.0 * pi);

    const Rank4 lam0 = lambda0_tensor(lam, m, omega, omega, omega, omega);
    cmat3 D = cmat3::Zero();
    if (m.alpha != 0.0) {
        PlaneWaveContext cc = ctx;
        cc.omega = omega;
        D = photon_green(m, cc);
    }
    const Rank4 V = vertex(lam0, m.alpha, omega, D);
    out.value = contract_vertex(V, out.loop_moment);
    out.discretization_error = max_abs(contract_vertex(V, (sums.fine - sums.coarse) / (2.0 * pi))) / 3.0;
    out.cutoff_error = max_abs(contract_vertex(V, (sums.fine - sums.half) / (2.0 * pi)));
    out.error_estimate = out.discretization_error + out.cutoff_error;
    if (!std::isfinite(out.error_estimate) || out.error_estimate > 0.1 * max_abs(out.value))
        throw ConvergenceError("loop integral not converged at this cutoff");
    return out;
}

struct DysonResult {
    PropagatorMatrix single;
    PropagatorMatrix resummed;
};

/// Pi enters as iPi in the XX block only.
inline DysonResult dyson_dress(const PropagatorMatrix& g0, const cmat3& Pi) {
    const cmat6 G = g0.dense();
    cmat6 P = cmat6::Zero();
    P.bottomRightCorner<3, 3>() = cplx{0.0, 1.0} * Pi;
    DysonResult r;
    r.single = PropagatorMatrix::from_dense(G + G * P * G);
    Eigen::FullPivLU<cmat6> lu(cmat6::Identity() - P * G);
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-14) throw ConvergenceError("Dyson resummation pole");
    r.resummed = PropagatorMatrix::from_dense(G * lu.inverse());
    return r;
}

/// Argument-principle count (zeros minus poles) of f inside a rectangle.
inline int winding_number(const std::function<cplx(cplx)>& f, double re_lo, double re_hi, double im_lo,
                          double im_hi, int n_per_side = 4000) {
    std::vector<cplx> corners{{re_lo, im_lo}, {re_hi, im_lo}, {re_hi, im_hi}, {re_lo, im_hi}};
    double total = 0.0;
    cplx prev = f(corners[0]);
    for (int side = 0; side < 4; ++side) {
        cplx a = corners[static_cast<std::size_t>(side)], b = corners[static_cast<std::size_t>((side + 1) % 4)];
        for (int j = 1; j <= n_per_side; ++j) {
            cplx v = f(a + (b - a) * (static_cast<double>(j) / n_per_side));
            total += std::arg(v / prev);
            prev = v;
        }
    }
    return static_cast<int>(std::lround(total / (2.0 * pi)));
}

/// Inverse of the resummed scalar G_XX at complex z for a decoupled (alpha = 0)
/// isotropic medium: 1/Gamma(z) - i Pi(z), with Pi(z) = V(z) : M.
inline cplx resummed_xx_inverse(const MediumParams& m, const Rank4& lam, const cmat3& loop_moment, cplx z) {
    const cplx gz = gamma_scalar_complex(m, z);
    const cmat3 G = gz * cmat3::Identity();
    Rank4 lam0 = contract_legs(lam, G, G, G, G) * cplx{1.0 / 24.0, 0.0};
    cmat3 Pi = contract_vertex(lam0, loop_moment);
    return 1.0 / gz - cplx{0.0, 1.0} * Pi(0, 0);
}

}  // namespace nlmedium
