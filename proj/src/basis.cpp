#include "crossdiff/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace crossdiff {

namespace {

// Exact monomial moments over the reference element.
double monomial_moment_1d(int a) { return 1.0 / (a + 1); }

double monomial_moment_tri(int a, int b) {
    // int_T x^a y^b = a! b! / (a+b+2)!
    double v = 1.0;
    for (int k = 1; k <= b; ++k) v *= static_cast<double>(k) / (a + k);
    for (int k = a + b + 1; k <= a + b + 2; ++k) v /= k;
    return v;
}

Eigen::MatrixXd gram_matrix(int dim, const std::vector<std::array<int, 2>>& exps) {
    const int n = static_cast<int>(exps.size());
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (dim == 1)
                g(i, j) = monomial_moment_1d(exps[i][0] + exps[j][0]);
            else
                g(i, j) = monomial_moment_tri(exps[i][0] + exps[j][0], exps[i][1] + exps[j][1]);
        }
    return g;
}

double ipow(double x, int n) {
    double r = 1.0;
    for (int k = 0; k < n; ++k) r *= x;
    return r;
}

} // namespace

RefBasis build_ref_basis(int dim, int degree) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("build_ref_basis: dim must be 1 or 2");
    if (degree < 0) throw std::invalid_argument("build_ref_basis: degree must be nonnegative");

    RefBasis basis;
    basis.dim = dim;
    basis.degree = degree;
    if (dim == 1) {
        for (int a = 0; a <= degree; ++a) basis.exponents.push_back({a, 0});
    } else {
        // Graded ordering: total degree, then y-power.
        for (int d = 0; d <= degree; ++d)
            for (int b = 0; b <= d; ++b) basis.exponents.push_back({d - b, b});
    }
    basis.nb = static_cast<int>(basis.exponents.size());

    const Eigen::MatrixXd gram = gram_matrix(dim, basis.exponents);
    Eigen::MatrixXd coeff =
        Eigen::MatrixXd(gram.llt().matrixL()).transpose().triangularView<Eigen::Upper>().solve(
            Eigen::MatrixXd::Identity(basis.nb, basis.nb));
    // The moment matrix is badly conditioned at higher degree; a couple of
    // refactorization passes against the exact Gram pull the orthonormality
    // error back to machine precision.
    for (int pass = 0; pass < 3; ++pass) {
        Eigen::MatrixXd actual = coeff.transpose() * gram * coeff;
        coeff = coeff * Eigen::MatrixXd(actual.llt().matrixL())
                            .transpose()
                            .triangularView<Eigen::Upper>()
                            .solve(Eigen::MatrixXd::Identity(basis.nb, basis.nb));
    }
    basis.coeff = coeff;
    return basis;
}

double RefBasis::value(int k, const std::array<double, 2>& xi) const {
    double v = 0.0;
    for (int m = 0; m < static_cast<int>(exponents.size()); ++m)
        v += coeff(m, k) * ipow(xi[0], exponents[m][0]) * ipow(xi[1], exponents[m][1]);
    return v;
}

std::array<double, 2> RefBasis::gradient(int k, const std::array<double, 2>& xi) const {
    std::array<double, 2> g{0.0, 0.0};
    for (int m = 0; m < static_cast<int>(exponents.size()); ++m) {
        const int a = exponents[m][0], b = exponents[m][1];
        const double c = coeff(m, k);
        if (a > 0) g[0] += c * a * ipow(xi[0], a - 1) * ipow(xi[1], b);
        if (b > 0) g[1] += c * b * ipow(xi[0], a) * ipow(xi[1], b - 1);
    }
    return g;
}

std::array<double, 4> RefBasis::hessian(int k, const std::array<double, 2>& xi) const {
    std::array<double, 4> h{0.0, 0.0, 0.0, 0.0};
    for (int m = 0; m < static_cast<int>(exponents.size()); ++m) {
        const int a = exponents[m][0], b = exponents[m][1];
        const double c = coeff(m, k);
        if (a > 1) h[0] += c * a * (a - 1) * ipow(xi[0], a - 2) * ipow(xi[1], b);
        if (a > 0 && b > 0) {
            const double mixed = c * a * b * ipow(xi[0], a - 1) * ipow(xi[1], b - 1);
            h[1] += mixed;
            h[2] += mixed;
        }
        if (b > 1) h[3] += c * b * (b - 1) * ipow(xi[0], a) * ipow(xi[1], b - 2);
    }
    return h;
}

} // namespace crossdiff
