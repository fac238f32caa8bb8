#include "crossdiff/assembly.hpp"

#include <ostream>
#include <stdexcept>

namespace crossdiff {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

std::array<double, 2> phys_grad(const DgSpace& sp, int e, int l, const std::array<double, 2>& xi) {
    const auto g = sp.basis.gradient(l, xi);
    const auto& iv = sp.mesh->elements[e].inv_jac;
    if (sp.mesh->dim == 1) return {g[0] * iv[0], 0.0};
    return {iv[0] * g[0] + iv[2] * g[1], iv[1] * g[0] + iv[3] * g[1]};
}

// Trace data of one side of an interior facet at one quadrature point.
struct Side {
    int elem;
    double sign; // +1 on oriented K1, -1 on K2 (jump convention)
    double avg;  // average weight of this side for <.>_{alpha}
    std::array<double, 2> xi;
};

} // namespace

Eigen::SparseMatrix<double> assemble_mass(const DgSpace& sp) {
    const int S = sp.scalar_dofs();
    Eigen::SparseMatrix<double> m(S, S);
    Triplets trip;
    trip.reserve(S);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e)
        for (int l = 0; l < sp.nb; ++l) trip.emplace_back(e * sp.nb + l, e * sp.nb + l, sp.eldet(e));
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

Eigen::SparseMatrix<double> assemble_gradient(const DgSpace& sp, const FluxOrientation& orient) {
    const Mesh& mesh = *sp.mesh;
    const int d = mesh.dim;
    const int S = sp.scalar_dofs();
    Triplets trip;

    // Volume part: int_K w div(psi).
    for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
        const auto& iv = mesh.elements[e].inv_jac;
        for (int c = 0; c < d; ++c) {
            const double a0 = d == 1 ? iv[0] : iv[c];
            const double a1 = d == 1 ? 0.0 : iv[2 + c];
            for (int l = 0; l < sp.nb; ++l)
                for (int m = 0; m < sp.nb; ++m) {
                    // int_K phi_m d_c(phi_l) = |detJ| (a0 Gx + a1 Gy)(l, m); the
                    // derivative moment matrices carry the derivative on the
                    // first index.
                    const double v = sp.eldet(e) * (a0 * sp.Gx(l, m) + a1 * sp.Gy(l, m));
                    if (v != 0.0) trip.emplace_back(c * S + e * sp.nb + l, e * sp.nb + m, v);
                }
        }
    }

    // Interior facets: -int_F <w>_alpha [psi]_N.
    for (int fi = 0; fi < static_cast<int>(mesh.interior_facets.size()); ++fi) {
        const OrientedFacet of = oriented_facet(mesh, orient, fi);
        const bool sw = orient.swapped[fi] != 0;
        for (const FacetQuadPoint& qp : facet_quadrature(sp, *of.facet)) {
            const Side sides[2] = {{of.k1, 1.0, 1.0 - of.alpha, sw ? qp.xi2 : qp.xi1},
                                   {of.k2, -1.0, of.alpha, sw ? qp.xi1 : qp.xi2}};
            for (const Side& sw_ : sides)        // w-trace side
                for (const Side& st : sides) {   // test-trace side
                    const double common = -qp.w * sw_.avg * st.sign;
                    if (common == 0.0) continue;
                    for (int m = 0; m < sp.nb; ++m) {
                        const double wm = sp.basis.value(m, sw_.xi);
                        for (int l = 0; l < sp.nb; ++l) {
                            const double tl = sp.basis.value(l, st.xi);
                            for (int c = 0; c < d; ++c)
                                trip.emplace_back(c * S + st.elem * sp.nb + l,
                                                  sw_.elem * sp.nb + m,
                                                  common * of.normal[c] * wm * tl);
                        }
                    }
                }
        }
    }

    // Boundary facets: -int_F w psi . n.
    for (const Facet& f : mesh.boundary_facets)
        for (const FacetQuadPoint& qp : facet_quadrature(sp, f))
            for (int m = 0; m < sp.nb; ++m) {
                const double wm = sp.basis.value(m, qp.xi1);
                for (int l = 0; l < sp.nb; ++l) {
                    const double tl = sp.basis.value(l, qp.xi1);
                    for (int c = 0; c < d; ++c)
                        trip.emplace_back(c * S + f.k1 * sp.nb + l, f.k1 * sp.nb + m,
                                          -qp.w * f.normal[c] * wm * tl);
                }
            }

    Eigen::SparseMatrix<double> b(d * S, S);
    b.setFromTriplets(trip.begin(), trip.end());
    return b;
}

Eigen::SparseMatrix<double> assemble_stability(const DgSpace& sp, double A_sup,
                                               const FluxOrientation& orient,
                                               std::vector<double>* eta_out) {
    if (!(A_sup > 0.0)) throw std::invalid_argument("assemble_stability: need A_sup > 0");
    const Mesh& mesh = *sp.mesh;
    const int S = sp.scalar_dofs();
    Triplets trip;
    if (eta_out) eta_out->assign(mesh.interior_facets.size(), 0.0);

    for (int fi = 0; fi < static_cast<int>(mesh.interior_facets.size()); ++fi) {
        const OrientedFacet of = oriented_facet(mesh, orient, fi);
        const bool sw = orient.swapped[fi] != 0;
        const double eta = A_sup / of.hF;
        if (eta_out) (*eta_out)[fi] = eta;
        for (const FacetQuadPoint& qp : facet_quadrature(sp, *of.facet)) {
            const Side sides[2] = {{of.k1, 1.0, 0.0, sw ? qp.xi2 : qp.xi1},
                                   {of.k2, -1.0, 0.0, sw ? qp.xi1 : qp.xi2}};
            // [w]_N . [v]_N = (w1 - w2)(v1 - v2) since n.n = 1.
            for (const Side& sa : sides)
                for (const Side& sb : sides) {
                    const double common = eta * qp.w * sa.sign * sb.sign;
                    for (int l = 0; l < sp.nb; ++l)
                        for (int m = 0; m < sp.nb; ++m)
                            trip.emplace_back(sa.elem * sp.nb + l, sb.elem * sp.nb + m,
                                              common * sp.basis.value(l, sa.xi) *
                                                  sp.basis.value(m, sb.xi));
                }
        }
    }
    Eigen::SparseMatrix<double> s(S, S);
    s.setFromTriplets(trip.begin(), trip.end());
    return s;
}

Eigen::SparseMatrix<double> assemble_regularization(const DgSpace& sp, int ell,
                                                    const FluxOrientation& orient) {
    const Mesh& mesh = *sp.mesh;
    const int d = mesh.dim;
    const int S = sp.scalar_dofs();
    if (ell != 1 && ell != 2)
        throw std::invalid_argument("assemble_regularization: kind must be 1 or 2");
    if (ell == 2 && d == 1)
        throw std::invalid_argument("assemble_regularization: the H2-type form is 2D only");

    const Eigen::SparseMatrix<double> M = assemble_mass(sp);
    const Eigen::SparseMatrix<double> B = assemble_gradient(sp, orient);

    // Lifted gradient product: nabla_DG w = -M^{-1} B W blockwise, so the
    // product contributes B^T M^{-1} B.
    Eigen::VectorXd minv(d * S);
    for (int c = 0; c < d; ++c)
        for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e)
            for (int l = 0; l < sp.nb; ++l) minv[c * S + e * sp.nb + l] = 1.0 / sp.eldet(e);
    Eigen::SparseMatrix<double> C = M + Eigen::SparseMatrix<double>(
                                            B.transpose() * minv.asDiagonal() * B);

    // h^-1 (ell=1) or h^-3 (ell=2) jump penalty, plus the ell=2 extras.
    Triplets trip;
    for (int fi = 0; fi < static_cast<int>(mesh.interior_facets.size()); ++fi) {
        const OrientedFacet of = oriented_facet(mesh, orient, fi);
        const bool sw = orient.swapped[fi] != 0;
        const double wjump = ell == 1 ? 1.0 / of.hF : 1.0 / (of.hF * of.hF * of.hF);
        const double gjump = ell == 1 ? 0.0 : 1.0 / of.hF;
        for (const FacetQuadPoint& qp : facet_quadrature(sp, *of.facet)) {
            const Side sides[2] = {{of.k1, 1.0, 0.0, sw ? qp.xi2 : qp.xi1},
                                   {of.k2, -1.0, 0.0, sw ? qp.xi1 : qp.xi2}};
            for (const Side& sa : sides)
                for (const Side& sb : sides) {
                    const double sgn = qp.w * sa.sign * sb.sign;
                    for (int l = 0; l < sp.nb; ++l)
                        for (int m = 0; m < sp.nb; ++m) {
                            double v = wjump * sp.basis.value(l, sa.xi) * sp.basis.value(m, sb.xi);
                            if (gjump != 0.0) {
                                const auto ga = phys_grad(sp, sa.elem, l, sa.xi);
                                const auto gb = phys_grad(sp, sb.elem, m, sb.xi);
                                v += gjump * (ga[0] * gb[0] + ga[1] * gb[1]);
                            }
                            trip.emplace_back(sa.elem * sp.nb + l, sb.elem * sp.nb + m, sgn * v);
                        }
                }
        }
    }
    Eigen::SparseMatrix<double> J(S, S);
    J.setFromTriplets(trip.begin(), trip.end());
    C += J;

    if (ell == 2) {
        // Lifted Hessian product: assemble the coefficient map w -> H_DG w as
        // a (d^2 S) x S sparse matrix, then add Hdg^T (mass) Hdg.
        Triplets ht;
        for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
            const auto& iv = mesh.elements[e].inv_jac;
            for (int c1 = 0; c1 < d; ++c1)
                for (int c2 = 0; c2 < d; ++c2)
                    for (int l = 0; l < sp.nb; ++l)
                        for (int m = 0; m < sp.nb; ++m) {
                            double v = 0.0;
                            for (int a = 0; a < d; ++a)
                                for (int b = 0; b < d; ++b)
                                    v += iv[2 * a + c1] * iv[2 * b + c2] * sp.Hess[2 * a + b](m, l);
                            if (v != 0.0)
                                ht.emplace_back((c1 * d + c2) * S + e * sp.nb + l, e * sp.nb + m, v);
                        }
        }
        for (int fi = 0; fi < static_cast<int>(mesh.interior_facets.size()); ++fi) {
            const OrientedFacet of = oriented_facet(mesh, orient, fi);
            const bool sw = orient.swapped[fi] != 0;
            for (const FacetQuadPoint& qp : facet_quadrature(sp, *of.facet)) {
                const Side sides[2] = {{of.k1, 1.0, of.alpha, sw ? qp.xi2 : qp.xi1},
                                       {of.k2, -1.0, 1.0 - of.alpha, sw ? qp.xi1 : qp.xi2}};
                for (const Side& st : sides)     // test side, weight st.avg
                    for (const Side& sw_ : sides) { // jump side, sign sw_.sign
                        const double common = qp.w * st.avg * sw_.sign / sp.eldet(st.elem);
                        if (common == 0.0) continue;
                        for (int l = 0; l < sp.nb; ++l) {
                            const double tl = sp.basis.value(l, st.xi);
                            const auto tg = phys_grad(sp, st.elem, l, st.xi);
                            for (int m = 0; m < sp.nb; ++m) {
                                const double wm = sp.basis.value(m, sw_.xi);
                                const auto wg = phys_grad(sp, sw_.elem, m, sw_.xi);
                                for (int c1 = 0; c1 < d; ++c1)
                                    for (int c2 = 0; c2 < d; ++c2)
                                        // -R + B liftings of the discrete Hessian.
                                        ht.emplace_back(
                                            (c1 * d + c2) * S + st.elem * sp.nb + l,
                                            sw_.elem * sp.nb + m,
                                            common * (-tl * of.normal[c2] * wg[c1] +
                                                      tg[c2] * of.normal[c1] * wm));
                            }
                        }
                    }
            }
        }
        Eigen::SparseMatrix<double> Hdg(d * d * S, S);
        Hdg.setFromTriplets(ht.begin(), ht.end());
        Eigen::VectorXd hm(d * d * S);
        for (int c = 0; c < d * d; ++c)
            for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e)
                for (int l = 0; l < sp.nb; ++l) hm[c * S + e * sp.nb + l] = sp.eldet(e);
        C += Eigen::SparseMatrix<double>(Hdg.transpose() * hm.asDiagonal() * Hdg);
    }
    return C;
}

void OperatorSet::apply_Minv(Eigen::VectorXd& v) const {
    const int S = static_cast<int>(M_diag.size());
    for (int b = 0; b < v.size() / S; ++b) v.segment(b * S, S).array() /= M_diag.array();
}

OperatorSet build_operators(const DgSpace& sp, const ModelSpec& model,
                            const FluxOrientation& orient, int ell) {
    OperatorSet ops;
    if (ell == 0)
        ops.ell = sp.mesh->dim == 1 ? 1 : (model.ssA_continuous_on_closure ? 1 : 2);
    else
        ops.ell = ell;
    ops.A_sup = model.A_sup;
    ops.M = assemble_mass(sp);
    ops.B = assemble_gradient(sp, orient);
    ops.S = assemble_stability(sp, model.A_sup, orient, &ops.eta_F);
    ops.C = assemble_regularization(sp, ops.ell, orient);
    ops.M_diag.resize(sp.scalar_dofs());
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e)
        for (int l = 0; l < sp.nb; ++l) ops.M_diag[e * sp.nb + l] = sp.eldet(e);
    Eigen::VectorXd dinv(ops.B.rows());
    for (int c = 0; c < sp.mesh->dim; ++c)
        dinv.segment(c * sp.scalar_dofs(), sp.scalar_dofs()) = ops.M_diag.cwiseInverse();
    ops.MinvB = dinv.asDiagonal() * ops.B;
    return ops;
}

void dump_triplets(const Eigen::SparseMatrix<double>& mat, std::ostream& os) {
    for (int k = 0; k < mat.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(mat, k); it; ++it)
            os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

} // namespace crossdiff
