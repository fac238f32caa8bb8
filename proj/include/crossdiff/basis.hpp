#pragma once
#include <Eigen/Dense>
#include <array>
#include <vector>

namespace crossdiff {

// L2-orthonormal polynomial basis on the reference element ([0,1] in 1D, the
// unit triangle in 2D), stored as monomial coefficients.
struct RefBasis {
    int dim = 1;
    int degree = 0;
    int nb = 0;                                  // number of basis functions
    std::vector<std::array<int, 2>> exponents;   // monomial exponents, one row per monomial
    Eigen::MatrixXd coeff;                       // (monomials, nb)

    double value(int k, const std::array<double, 2>& xi) const;
    std::array<double, 2> gradient(int k, const std::array<double, 2>& xi) const;
    // Reference Hessian, row-major: {xx, xy, yx, yy}; 1D uses [0].
    std::array<double, 4> hessian(int k, const std::array<double, 2>& xi) const;
};

RefBasis build_ref_basis(int dim, int degree);

} // namespace crossdiff
