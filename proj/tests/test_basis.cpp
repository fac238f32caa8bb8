#include "crossdiff/basis.hpp"
#include "crossdiff/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace crossdiff;

namespace {

QuadRule rule_for(int dim, int degree) {
    return dim == 1 ? interval_rule(degree) : triangle_rule(degree);
}

} // namespace

TEST_SUITE("basis") {

TEST_CASE("dimension counts") {
    for (int p = 0; p <= 5; ++p) CHECK(build_ref_basis(1, p).nb == p + 1);
    for (int p = 0; p <= 4; ++p) CHECK(build_ref_basis(2, p).nb == (p + 1) * (p + 2) / 2);
}

TEST_CASE("reference orthonormality") {
    for (int dim : {1, 2})
        for (int p = 0; p <= (dim == 1 ? 5 : 4); ++p) {
            const RefBasis basis = build_ref_basis(dim, p);
            const QuadRule rule = rule_for(dim, 2 * p);
            for (int k = 0; k < basis.nb; ++k)
                for (int l = k; l < basis.nb; ++l) {
                    double v = 0.0;
                    for (int q = 0; q < rule.size(); ++q)
                        v += rule.weights[q] *
                             basis.value(k, rule.points[q]) * basis.value(l, rule.points[q]);
                    CHECK(v == doctest::Approx(k == l ? 1.0 : 0.0).epsilon(1e-11));
                }
        }
}

TEST_CASE("lowest mode is the constant") {
    const RefBasis b1 = build_ref_basis(1, 3);
    CHECK(b1.value(0, {0.3, 0.0}) == doctest::Approx(1.0));
    // Reference triangle has area 1/2, so the normalized constant is sqrt(2).
    const RefBasis b2 = build_ref_basis(2, 2);
    CHECK(b2.value(0, {0.2, 0.3}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("gradient matches finite differences of value") {
    const double h = 1e-6;
    for (int dim : {1, 2}) {
        const RefBasis basis = build_ref_basis(dim, 3);
        const std::array<double, 2> xi{0.31, dim == 2 ? 0.27 : 0.0};
        for (int k = 0; k < basis.nb; ++k) {
            const auto g = basis.gradient(k, xi);
            for (int c = 0; c < dim; ++c) {
                auto lo = xi, hi = xi;
                lo[c] -= h;
                hi[c] += h;
                const double fd = (basis.value(k, hi) - basis.value(k, lo)) / (2.0 * h);
                CHECK(g[c] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("hessian matches finite differences of gradient") {
    const double h = 1e-6;
    for (int dim : {1, 2}) {
        const RefBasis basis = build_ref_basis(dim, dim == 1 ? 4 : 3);
        const std::array<double, 2> xi{0.4, dim == 2 ? 0.2 : 0.0};
        for (int k = 0; k < basis.nb; ++k) {
            const auto hess = basis.hessian(k, xi);
            for (int c1 = 0; c1 < dim; ++c1)
                for (int c2 = 0; c2 < dim; ++c2) {
                    auto lo = xi, hi = xi;
                    lo[c2] -= h;
                    hi[c2] += h;
                    const double fd =
                        (basis.gradient(k, hi)[c1] - basis.gradient(k, lo)[c1]) / (2.0 * h);
                    CHECK(hess[c1 * 2 + c2] == doctest::Approx(fd).epsilon(5e-5));
                }
        }
    }
}

TEST_CASE("hessian is symmetric in the mixed entries") {
    const RefBasis basis = build_ref_basis(2, 4);
    const std::array<double, 2> xi{0.15, 0.55};
    for (int k = 0; k < basis.nb; ++k) {
        const auto h = basis.hessian(k, xi);
        CHECK(h[1] == doctest::Approx(h[2]).epsilon(1e-12));
    }
}

} // TEST_SUITE
