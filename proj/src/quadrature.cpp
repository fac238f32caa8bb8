#include "crossdiff/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crossdiff {

namespace {

// Legendre P_n(x) and its derivative via the three-term recurrence.
void legendre(int n, double x, double& pn, double& dpn) {
    double pk1 = 1.0, pk = x;
    if (n == 0) {
        pn = 1.0;
        dpn = 0.0;
        return;
    }
    for (int k = 2; k <= n; ++k) {
        double pnext = ((2 * k - 1) * x * pk - (k - 1) * pk1) / k;
        pk1 = pk;
        pk = pnext;
    }
    pn = pk;
    dpn = n * (x * pk - pk1) / (x * x - 1.0);
}

} // namespace

QuadRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    QuadRule rule;
    rule.degree = 2 * n - 1;
    rule.points.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        if (n == 1) x = 0.0;
        double pn = 0.0, dpn = 1.0;
        for (int it = 0; it < 100; ++it) {
            legendre(n, x, pn, dpn);
            double dx = pn / dpn;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        legendre(n, x, pn, dpn);
        rule.points[i] = {0.5 * (x + 1.0), 0.0};
        rule.weights[i] = 1.0 / ((1.0 - x * x) * dpn * dpn);
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return rule.points[a][0] < rule.points[b][0];
    });
    QuadRule sorted;
    sorted.degree = rule.degree;
    for (int i : order) {
        sorted.points.push_back(rule.points[i]);
        sorted.weights.push_back(rule.weights[i]);
    }
    return sorted;
}

QuadRule interval_rule(int degree) {
    return gauss_legendre(degree / 2 + 1);
}

QuadRule triangle_rule(int degree) {
    // Collapsed map (a,b) in [0,1]^2 -> (a(1-b), ab) has Jacobian a, so the
    // first direction needs one extra degree of exactness.
    QuadRule ga = gauss_legendre((degree + 3) / 2);
    QuadRule gb = gauss_legendre((degree + 2) / 2);
    QuadRule rule;
    rule.degree = degree;
    for (int i = 0; i < ga.size(); ++i) {
        for (int j = 0; j < gb.size(); ++j) {
            double a = ga.points[i][0];
            double b = gb.points[j][0];
            rule.points.push_back({a * (1.0 - b), a * b});
            rule.weights.push_back(ga.weights[i] * gb.weights[j] * a);
        }
    }
    return rule;
}

} // namespace crossdiff
