#pragma once
#include <array>
#include <vector>

namespace crossdiff {

struct QuadRule {
    std::vector<std::array<double, 2>> points; // reference coordinates; 1D rules use [0]
    std::vector<double> weights;               // include the reference-element measure
    int degree = 0;                            // highest polynomial degree integrated exactly

    int size() const { return static_cast<int>(weights.size()); }
};

// Gauss-Legendre on [0,1], exact for polynomials of degree 2n-1.
QuadRule gauss_legendre(int n);

// Rule on [0,1] exact at least to the requested degree.
QuadRule interval_rule(int degree);

// Rule on the reference triangle {x,y >= 0, x+y <= 1}, exact at least to the
// requested degree (tensor rule under the collapsed-coordinate map).
QuadRule triangle_rule(int degree);

} // namespace crossdiff
