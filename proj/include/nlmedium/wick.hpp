#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"

namespace nlmedium {

enum class Leg { Plain, Star };

struct Insertion {
    Leg kind;
    int slot;
    std::string tensor_index;
};

// Gamma contraction of a plain slot with a star slot; carries delta(w_plain - w_star).
struct Contraction {
    int plain_slot;
    int star_slot;
};

/// prefactor = (num/den) * (i / 2 hbar)^power
struct Prefactor {
    long num = 1;
    long den = 1;
    int power = 0;
};

struct WickTerm {
    std::vector<Leg> pattern;
    std::vector<Insertion> insertions;
    std::vector<Contraction> contractions;
    Prefactor prefactor;
};

inline const char* index_symbol(int slot) {
    static const char* names[] = {"gamma", "sigma", "lambda", "tau"};
    return names[(slot - 1) % 4];
}

namespace detail {

inline void matchings(const std::vector<Leg>& pat, std::size_t pos, std::vector<bool>& used,
                      std::vector<Contraction>& cur, std::vector<std::vector<Contraction>>& out) {
    if (pos == pat.size()) {
        out.push_back(cur);
        return;
    }
    const int s = static_cast<int>(pos) + 1;
    matchings(pat, pos + 1, used, cur, out);
    if (used[pos]) return;
    for (std::size_t q = pos + 1; q < pat.size(); ++q) {
        if (used[q] || pat[q] == pat[pos]) continue;
        used[pos] = used[q] = true;
        const int t = static_cast<int>(q) + 1;
        cur.push_back(pat[pos] == Leg::Plain ? Contraction{s, t} : Contraction{t, s});
        matchings(pat, pos + 1, used, cur, out);
        cur.pop_back();
        used[pos] = used[q] = false;
    }
}

inline std::pair<int, int> sorted_pair(const Contraction& c) {
    return {std::min(c.plain_slot, c.star_slot), std::max(c.plain_slot, c.star_slot)};
}

}  // namespace detail

/// Terms of the order-n derivative of the Gaussian generating functional
/// with respect to f (Plain) and f* (Star) at slots 1..n.
inline std::vector<WickTerm> derivative_terms(int order, const std::vector<Leg>& pattern) {
    if (order < 1 || order > 4 || static_cast<int>(pattern.size()) != order)
        throw ValidationError("pattern not implemented");
    std::vector<std::vector<Contraction>> all;
    std::vector<bool> used(pattern.size(), false);
    std::vector<Contraction> cur;
    detail::matchings(pattern, 0, used, cur, all);

    std::vector<WickTerm> terms;
    for (auto& cs : all) {
        std::sort(cs.begin(), cs.end(), [](const Contraction& a, const Contraction& b) {
            return detail::sorted_pair(a) < detail::sorted_pair(b);
        });
        WickTerm t;
        t.pattern = pattern;
        t.contractions = cs;
        std::vector<bool> paired(pattern.size() + 1, false);
        for (const auto& c : cs) paired[c.plain_slot] = paired[c.star_slot] = true;
        for (int s = 1; s <= order; ++s)
            if (!paired[s]) t.insertions.push_back({pattern[s - 1], s, index_symbol(s)});
        t.prefactor.power = static_cast<int>(t.insertions.size() + t.contractions.size());
        terms.push_back(std::move(t));
    }
    std::stable_sort(terms.begin(), terms.end(), [](const WickTerm& a, const WickTerm& b) {
        if (a.contractions.size() != b.contractions.size()) return a.contractions.size() < b.contractions.size();
        std::vector<std::pair<int, int>> ka, kb;
        for (const auto& c : a.contractions) ka.push_back(detail::sorted_pair(c));
        for (const auto& c : b.contractions) kb.push_back(detail::sorted_pair(c));
        return ka < kb;
    });
    return terms;
}

/// A term is a bubble when its delta chains reduce the external constraint
/// sum_s c_s w_s to an identity, i.e. the constraint becomes delta(0).
inline bool is_vacuum_bubble(const WickTerm& t, const std::vector<int>& constraint) {
    if (t.contractions.empty()) return false;
    const std::size_t n = t.pattern.size();
    if (constraint.size() != n) throw ValidationError("frequency grid mismatch");
    std::vector<int> parent(n + 1);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (const auto& c : t.contractions) parent[find(c.plain_slot)] = find(c.star_slot);
    std::map<int, int> sums;
    for (std::size_t s = 1; s <= n; ++s) sums[find(static_cast<int>(s))] += constraint[s - 1];
    return std::all_of(sums.begin(), sums.end(), [](const auto& kv) { return kv.second == 0; });
}

inline std::vector<WickTerm> prune_vacuum_bubbles(const std::vector<WickTerm>& terms, const std::vector<int>& constraint) {
    std::vector<WickTerm> out;
    for (const auto& t : terms)
        if (!is_vacuum_bubble(t, constraint)) out.push_back(t);
    return out;
}

inline std::vector<int> quartic_constraint() { return {1, -1, 1, -1}; }

/// Numeric context for evaluate_term. insertion[s-1] is the bare mean value at
/// slot s (the (i/2hbar) factor comes from the prefactor); kernel(p, s) is the
/// Gamma element joining plain slot p and star slot s.
struct EvalContext {
    double hbar = 1.0;
    std::vector<double> freq;
    std::vector<cplx> insertion;
    std::function<cplx(int, int)> kernel;
    double tol = 1e-12;
};

inline cplx prefactor_value(const Prefactor& p, double hbar) {
    cplx k{0.0, 1.0 / (2.0 * hbar)};
    cplx v = static_cast<double>(p.num) / static_cast<double>(p.den);
    for (int i = 0; i < p.power; ++i) v *= k;
    return v;
}

inline cplx evaluate_term(const WickTerm& t, const EvalContext& ctx) {
    const std::size_t n = t.pattern.size();
    if (ctx.freq.size() != n || ctx.insertion.size() != n) throw ValidationError("frequency grid mismatch");
    double scale = 0.0;
    for (double w : ctx.freq) scale = std::max(scale, std::abs(w));
    for (const auto& c : t.contractions)
        if (std::abs(ctx.freq[c.plain_slot - 1] - ctx.freq[c.star_slot - 1]) > ctx.tol * std::max(1.0, scale))
            return {0.0, 0.0};
    cplx v = prefactor_value(t.prefactor, ctx.hbar);
    for (const auto& ins : t.insertions) v *= ctx.insertion[ins.slot - 1];
    for (const auto& c : t.contractions) v *= ctx.kernel(c.plain_slot, c.star_slot);
    return v;
}

/// One factor of a Gaussian moment: z_index, or conj(z_index) when conjugated.
struct MonomialFactor {
    int index;
    bool conjugated;
};

namespace detail {

inline void check_covariance(const Eigen::MatrixXcd& cov) {
    if (cov.rows() != cov.cols()) throw ValidationError("invalid covariance");
    double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw ValidationError("invalid covariance");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cov);
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) throw ValidationError("invalid covariance");
}

inline cplx isserlis_rec(const Eigen::VectorXcd& mean, const Eigen::MatrixXcd& cov,
                         const std::vector<MonomialFactor>& mono, std::vector<bool>& used) {
    std::size_t first = 0;
    while (first < mono.size() && used[first]) ++first;
    if (first == mono.size()) return {1.0, 0.0};
    used[first] = true;
    const auto& a = mono[first];
    cplx mu = a.conjugated ? std::conj(mean(a.index)) : mean(a.index);
    cplx total = mu * isserlis_rec(mean, cov, mono, used);
    for (std::size_t j = first + 1; j < mono.size(); ++j) {
        if (used[j]) continue;
        const auto& b = mono[j];
        if (a.conjugated == b.conjugated) continue;  // circular: pseudo-covariance vanishes
        cplx c = a.conjugated ? cov(b.index, a.index) : cov(a.index, b.index);
        used[j] = true;
        total += c * isserlis_rec(mean, cov, mono, used);
        used[j] = false;
    }
    used[first] = false;
    return total;
}

}  // namespace detail

/// E[prod z_i or conj(z_i)] for a circular complex Gaussian with
/// cov(i, j) = E[(z_i - mu_i) conj(z_j - mu_j)], by exhaustive pairing.
inline cplx isserlis_oracle(const Eigen::VectorXcd& mean, const Eigen::MatrixXcd& cov,
                            const std::vector<MonomialFactor>& mono) {
    detail::check_covariance(cov);
    if (mono.size() > 8) throw ValidationError("monomial longer than 8 factors");
    if (cov.rows() != mean.size()) throw ValidationError("invalid covariance");
    for (const auto& m : mono)
        if (m.index < 0 || m.index >= mean.size()) throw ValidationError("monomial index out of range");
    std::vector<bool> used(mono.size(), false);
    return detail::isserlis_rec(mean, cov, mono, used);
}

/// Sum of the derivative catalog for a monomial, with means and covariance
/// mapped onto the insertions and Gamma contractions.
inline cplx catalog_moment(const std::vector<WickTerm>& terms, const Eigen::VectorXcd& mean,
                           const Eigen::MatrixXcd& cov, const std::vector<MonomialFactor>& mono, double hbar = 1.0) {
    const std::size_t n = mono.size();
    const cplx kappa{0.0, 1.0 / (2.0 * hbar)};
    EvalContext ctx;
    ctx.hbar = hbar;
    ctx.freq.assign(n, 0.0);
    for (const auto& m : mono) ctx.insertion.push_back((m.conjugated ? std::conj(mean(m.index)) : mean(m.index)) / kappa);
    ctx.kernel = [&](int p, int s) { return cov(mono[p - 1].index, mono[s - 1].index) / kappa; };
    cplx total = 0.0;
    for (const auto& t : terms) total += evaluate_term(t, ctx);
    return total;
}

struct MonteCarloEstimate {
    cplx mean;
    double sigma;  // standard error of the mean, |.| of the complex estimate
};

inline MonteCarloEstimate monte_carlo_moment(const Eigen::VectorXcd& mean, const Eigen::MatrixXcd& cov,
                                             const std::vector<MonomialFactor>& mono, std::size_t samples,
                                             std::uint64_t seed) {
    detail::check_covariance(cov);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cov);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXcd L = es.eigenvectors() * ev.asDiagonal();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto d = mean.size();
    Eigen::VectorXcd w(d), z(d);
    cplx s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        for (Eigen::Index i = 0; i < d; ++i) w(i) = cplx{nd(rng), nd(rng)} / std::sqrt(2.0);
        z = mean + L * w;
        cplx v = 1.0;
        for (const auto& m : mono) v *= m.conjugated ? std::conj(z(m.index)) : z(m.index);
        s1 += v;
        s2 += std::norm(v);
    }
    const double n = static_cast<double>(samples);
    cplx mu = s1 / n;
    double var = std::max(0.0, s2 / n - std::norm(mu));
    return {mu, std::sqrt(var / n)};
}

// ---- polynomial functional ------------------------------------------------

/// Per-slot samples for one frequency quadruple (w1, w2, w3, w4) with
/// positions (0, 1, 2, 3) carrying (E, E*, E, E*).
struct SlotSample {
    double omega = 0.0;
    cvec3 f = cvec3::Zero();
    cvec3 m = cvec3::Zero();
    cvec3 m_prime = cvec3::Zero();
    cmat3 D = cmat3::Zero();
};

enum class BubblePolicy { keep, prune };

struct PolynomialTerms {
    std::array<cplx, 5> p{};
    std::map<std::string, cplx> by_class;
};

inline const std::vector<Leg>& quartic_pattern() {
    static const std::vector<Leg> pat{Leg::Plain, Leg::Star, Leg::Plain, Leg::Star};
    return pat;
}

/// Name of the dressed tensor obtained by placing sources on the legs in mask.
inline std::string source_class(const std::vector<Leg>& pat, unsigned mask) {
    int plain = 0, star = 0;
    for (std::size_t s = 0; s < pat.size(); ++s)
        if (mask & (1u << s)) (pat[s] == Leg::Plain ? plain : star)++;
    switch (plain + star) {
        case 0: return "Lambda";
        case 1: return plain ? "Delta" : "Delta*";
        case 2: return plain == 2 ? "Phi2" : (star == 2 ? "Phi2*" : "Phi1");
        case 3: return plain == 2 ? "Xi" : "Xi*";
        default: return "Lambda0ffff";
    }
}

/// Expands a product-tensor term whose legs each carry (alpha E - f) and
/// collects the signed multiplicity of every dressed-tensor class.
inline std::map<std::string, int> polynomial_pattern(const WickTerm& product_term) {
    if (!product_term.contractions.empty() || product_term.insertions.size() != 4)
        throw ValidationError("pattern not implemented");
    std::map<std::string, int> out;
    for (unsigned mask = 0; mask < 16; ++mask) {
        int k = __builtin_popcount(mask);
        out[source_class(product_term.pattern, mask)] += (k % 2 ? -1 : 1);
    }
    return out;
}

/// P_0..P_4 on one frequency quadruple: every leg of Lambda0 carries
/// (alpha E - f); the E legs are resolved by the Wick catalog of the photon
/// sector (E -> alpha m', E* -> alpha m, contraction -> alpha^2 w w' D delta).
inline PolynomialTerms assemble_polynomial(const Rank4& lam0, double alpha, const std::vector<SlotSample>& slots,
                                           BubblePolicy policy = BubblePolicy::keep, double tol = 1e-12) {
    if (slots.size() != 4) throw ValidationError("frequency grid mismatch");
    double scale = 0.0;
    for (const auto& s : slots) scale = std::max(scale, std::abs(s.omega));
    if (std::abs(slots[0].omega - slots[1].omega + slots[2].omega - slots[3].omega) > tol * std::max(1.0, scale))
        throw ValidationError("energy conservation violated");
    const auto& pat = quartic_pattern();
    PolynomialTerms out;
    for (const char* name : {"Lambda", "Delta", "Delta*", "Phi1", "Phi2", "Phi2*", "Xi", "Xi*", "Lambda0ffff"})
        out.by_class[name] = 0.0;

    for (unsigned mask = 0; mask < 16; ++mask) {
        std::vector<int> field;
        for (int s = 0; s < 4; ++s)
            if (!(mask & (1u << s))) field.push_back(s);
        const int k = static_cast<int>(field.size());
        const double sign = ((4 - k) % 2) ? -1.0 : 1.0;

        std::vector<WickTerm> photon;
        if (k == 0) {
            photon.push_back(WickTerm{});
        } else {
            std::vector<Leg> sub;
            for (int s : field) sub.push_back(pat[s]);
            photon = derivative_terms(k, sub);
        }

        cplx value = 0.0;
        for (const auto& t : photon) {
            // lift the photon term back onto the four quartic slots
            WickTerm lifted;
            lifted.pattern = pat;
            for (const auto& c : t.contractions)
                lifted.contractions.push_back({field[c.plain_slot - 1] + 1, field[c.star_slot - 1] + 1});
            if (policy == BubblePolicy::prune && is_vacuum_bubble(lifted, quartic_constraint())) continue;

            bool dead = false;
            for (const auto& c : lifted.contractions) {
                double a = slots[c.plain_slot - 1].omega, b = slots[c.star_slot - 1].omega;
                if (std::abs(a - b) > tol * std::max(1.0, scale)) dead = true;
            }
            if (dead) continue;

            std::array<const cvec3*, 4> vec{};
            std::array<cvec3, 4> store;
            std::array<int, 4> partner{-1, -1, -1, -1};
            cplx weight = 1.0;
            for (int s = 0; s < 4; ++s) {
                if (mask & (1u << s)) {
                    store[s] = pat[s] == Leg::Plain ? slots[s].f : cvec3(slots[s].f.conjugate());
                    vec[s] = &store[s];
                }
            }
            for (const auto& ins : t.insertions) {
                int s = field[ins.slot - 1];
                store[s] = pat[s] == Leg::Plain ? slots[s].m_prime : slots[s].m;
                vec[s] = &store[s];
                weight *= alpha;
            }
            for (const auto& c : lifted.contractions) {
                int p = c.plain_slot - 1, q = c.star_slot - 1;
                partner[p] = q;
                partner[q] = p;
                weight *= alpha * alpha * slots[p].omega * slots[q].omega;
            }
            cplx acc = 0.0;
            std::array<int, 4> i{};
            for (i[0] = 0; i[0] < 3; ++i[0])
                for (i[1] = 0; i[1] < 3; ++i[1])
                    for (i[2] = 0; i[2] < 3; ++i[2])
                        for (i[3] = 0; i[3] < 3; ++i[3]) {
                            cplx v = lam0(i[0], i[1], i[2], i[3]);
                            for (int s = 0; s < 4 && v != 0.0; ++s) {
                                if (vec[s] != nullptr) v *= (*vec[s])(i[s]);
                                else if (pat[s] == Leg::Plain) v *= slots[s].D(i[s], i[partner[s]]);
                            }
                            acc += v;
                        }
            value += weight * acc;
        }
        value *= sign;
        out.by_class[source_class(pat, mask)] += value;
        out.p[static_cast<std::size_t>(k)] += value;
    }
    return out;
}

}  // namespace nlmedium
