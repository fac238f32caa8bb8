#include "crossdiff/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace crossdiff;

namespace {

double interval_monomial(const QuadRule& rule, int k) {
    double v = 0.0;
    for (int q = 0; q < rule.size(); ++q) v += rule.weights[q] * std::pow(rule.points[q][0], k);
    return v;
}

double triangle_monomial(const QuadRule& rule, int a, int b) {
    double v = 0.0;
    for (int q = 0; q < rule.size(); ++q)
        v += rule.weights[q] * std::pow(rule.points[q][0], a) * std::pow(rule.points[q][1], b);
    return v;
}

// int over {x,y >= 0, x+y <= 1} of x^a y^b = a! b! / (a+b+2)!.
double triangle_exact(int a, int b) {
    double v = 1.0;
    for (int k = 1; k <= a; ++k) v *= k;
    for (int k = 1; k <= b; ++k) v *= k;
    for (int k = 1; k <= a + b + 2; ++k) v /= k;
    return v;
}

} // namespace

TEST_SUITE("quadrature") {

TEST_CASE("gauss_legendre integrates monomials of degree 2n-1 on [0,1]") {
    for (int n = 1; n <= 8; ++n) {
        const QuadRule rule = gauss_legendre(n);
        REQUIRE(rule.size() == n);
        CHECK(rule.degree >= 2 * n - 1);
        for (int k = 0; k <= 2 * n - 1; ++k)
            CHECK(interval_monomial(rule, k) == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
}

TEST_CASE("gauss_legendre points lie inside (0,1) and weights are positive") {
    for (int n = 1; n <= 8; ++n) {
        const QuadRule rule = gauss_legendre(n);
        double wsum = 0.0;
        for (int q = 0; q < rule.size(); ++q) {
            CHECK(rule.points[q][0] > 0.0);
            CHECK(rule.points[q][0] < 1.0);
            CHECK(rule.weights[q] > 0.0);
            wsum += rule.weights[q];
        }
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("gauss_legendre nodes are symmetric about 1/2") {
    for (int n = 2; n <= 6; ++n) {
        const QuadRule rule = gauss_legendre(n);
        for (int q = 0; q < rule.size(); ++q) {
            const double mirror = 1.0 - rule.points[rule.size() - 1 - q][0];
            CHECK(rule.points[q][0] == doctest::Approx(mirror).epsilon(1e-13));
        }
    }
}

TEST_CASE("interval_rule reaches the requested degree") {
    for (int deg = 0; deg <= 12; ++deg) {
        const QuadRule rule = interval_rule(deg);
        REQUIRE(rule.degree >= deg);
        for (int k = 0; k <= deg; ++k)
            CHECK(interval_monomial(rule, k) == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
}

TEST_CASE("triangle_rule integrates monomials to the requested degree") {
    for (int deg = 0; deg <= 8; ++deg) {
        const QuadRule rule = triangle_rule(deg);
        REQUIRE(rule.degree >= deg);
        for (int a = 0; a <= deg; ++a)
            for (int b = 0; a + b <= deg; ++b)
                CHECK(triangle_monomial(rule, a, b) ==
                      doctest::Approx(triangle_exact(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("triangle_rule weights sum to the reference area") {
    for (int deg = 0; deg <= 8; ++deg) {
        const QuadRule rule = triangle_rule(deg);
        double wsum = 0.0;
        for (int q = 0; q < rule.size(); ++q) {
            wsum += rule.weights[q];
            CHECK(rule.points[q][0] >= 0.0);
            CHECK(rule.points[q][1] >= 0.0);
            CHECK(rule.points[q][0] + rule.points[q][1] <= 1.0 + 1e-14);
        }
        CHECK(wsum == doctest::Approx(0.5).epsilon(1e-13));
    }
}

} // TEST_SUITE
