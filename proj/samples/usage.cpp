// Small tour of the library on a lossy isotropic medium.
#include <cstdio>

#include <nlmedium/nlmedium.hpp>

using namespace nlmedium;

int main() {
    MediumParams m;
    m.nu_spec = ConstantCoupling{0.1, 10.0};
    const Rank4 lam = lambda_isotropic(1.0, 0.5, 0.25);

    for (double w : {0.0, 0.5, 1.0, 1.5}) {
        const cplx c = chi1_scalar(m, w);
        std::printf("chi1(%.2f) = %.6f %+.6fi\n", w, c.real(), c.imag());
    }

    const Rank4 c3 = chi3(m, lam, 0.4, 0.3, 0.5, 0.6);
    std::printf("chi3_xxxx(0.4; 0.3, 0.5, 0.6) = %.6e %+.6ei\n", c3(0, 0, 0, 0).real(), c3(0, 0, 0, 0).imag());

    const auto terms = derivative_terms(4, quartic_pattern());
    std::printf("order-4 catalog: %zu terms, %zu after pruning\n", terms.size(),
                prune_vacuum_bubbles(terms, quartic_constraint()).size());

    cvec3 e = cvec3::Zero();
    e(0) = 0.1;
    const FrequencyComb D = displacement(FrequencyComb{{{0.3, e}, {0.45, e}}, 0.0}, m, lam);
    for (const auto& l : D.lines)
        if (l.omega > 0.0) std::printf("D(%.2f)_x = %.6e %+.6ei\n", l.omega, l.amp(0).real(), l.amp(0).imag());
}
