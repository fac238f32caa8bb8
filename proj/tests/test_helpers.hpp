#pragma once
#include "crossdiff/dgspace.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <random>

namespace testutil {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& gen, double lo = -1.0,
                                     double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(gen);
    return v;
}

inline Eigen::MatrixXd dense(const Eigen::SparseMatrix<double>& m) {
    return Eigen::MatrixXd(m);
}

// Physical coordinates of a reference point inside an element.
inline std::array<double, 2> phys_point(const crossdiff::Mesh& mesh, int e,
                                        const std::array<double, 2>& xi) {
    const auto& el = mesh.elements[e];
    if (mesh.dim == 1) return {el.origin[0] + el.jac[0] * xi[0], 0.0};
    return {el.origin[0] + el.jac[0] * xi[0] + el.jac[1] * xi[1],
            el.origin[1] + el.jac[2] * xi[0] + el.jac[3] * xi[1]};
}

// Evaluate one scalar block (species or vector component) of a coefficient
// vector at a reference point of an element.
inline double eval_block(const crossdiff::DgSpace& sp, const Eigen::VectorXd& v, int block, int e,
                         const std::array<double, 2>& xi) {
    double out = 0.0;
    for (int l = 0; l < sp.nb; ++l)
        out += v[block * sp.scalar_dofs() + e * sp.nb + l] * sp.basis.value(l, xi);
    return out;
}

// Physical gradient of one scalar block at a reference point.
inline std::array<double, 2> eval_block_grad(const crossdiff::DgSpace& sp,
                                             const Eigen::VectorXd& v, int block, int e,
                                             const std::array<double, 2>& xi) {
    const auto& iv = sp.mesh->elements[e].inv_jac;
    std::array<double, 2> out{0.0, 0.0};
    for (int l = 0; l < sp.nb; ++l) {
        const double c = v[block * sp.scalar_dofs() + e * sp.nb + l];
        const auto g = sp.basis.gradient(l, xi);
        if (sp.mesh->dim == 1) {
            out[0] += c * g[0] * iv[0];
        } else {
            out[0] += c * (iv[0] * g[0] + iv[2] * g[1]);
            out[1] += c * (iv[1] * g[0] + iv[3] * g[1]);
        }
    }
    return out;
}

// Integrate a pointwise function over the mesh with the space's volume rule.
// The callback sees (element, physical point, reference point).
inline double integrate(const crossdiff::DgSpace& sp,
                        const std::function<double(int, const std::array<double, 2>&,
                                                   const std::array<double, 2>&)>& fn) {
    double total = 0.0;
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e)
        for (int q = 0; q < sp.vol.size(); ++q) {
            const auto& xi = sp.vol.points[q];
            total += sp.vol.weights[q] * sp.eldet(e) * fn(e, phys_point(*sp.mesh, e, xi), xi);
        }
    return total;
}

} // namespace testutil
