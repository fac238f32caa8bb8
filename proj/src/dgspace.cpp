#include "crossdiff/dgspace.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace crossdiff {

namespace {

// Physical gradient of basis function l at a reference point of element e.
std::array<double, 2> phys_grad(const DgSpace& sp, int e, int l, const std::array<double, 2>& xi) {
    const auto g = sp.basis.gradient(l, xi);
    const auto& iv = sp.mesh->elements[e].inv_jac;
    if (sp.mesh->dim == 1) return {g[0] * iv[0], 0.0};
    return {iv[0] * g[0] + iv[2] * g[1], iv[1] * g[0] + iv[3] * g[1]};
}

double eval_scalar(const DgSpace& sp, const Eigen::VectorXd& w, int i, int e,
                   const std::array<double, 2>& xi) {
    double v = 0.0;
    for (int l = 0; l < sp.nb; ++l) v += w[sp.dof(i, e, l)] * sp.basis.value(l, xi);
    return v;
}

} // namespace

DgSpace make_space(const Mesh& mesh, int degree, int species) {
    if (degree < 0) throw std::invalid_argument("make_space: degree must be nonnegative");
    if (species < 1) throw std::invalid_argument("make_space: need at least one species");

    DgSpace sp;
    sp.mesh = &mesh;
    sp.degree = degree;
    sp.species = species;
    sp.basis = build_ref_basis(mesh.dim, degree);
    sp.nb = sp.basis.nb;
    sp.vol = mesh.dim == 1 ? interval_rule(2 * degree + 2) : triangle_rule(2 * degree + 2);
    sp.line = interval_rule(2 * degree + 1);

    const int nq = sp.vol.size();
    sp.vol_val.resize(nq, sp.nb);
    sp.vol_gx.resize(nq, sp.nb);
    sp.vol_gy.resize(nq, sp.nb);
    for (int q = 0; q < nq; ++q)
        for (int l = 0; l < sp.nb; ++l) {
            sp.vol_val(q, l) = sp.basis.value(l, sp.vol.points[q]);
            const auto g = sp.basis.gradient(l, sp.vol.points[q]);
            sp.vol_gx(q, l) = g[0];
            sp.vol_gy(q, l) = g[1];
        }

    sp.Gx = Eigen::MatrixXd::Zero(sp.nb, sp.nb);
    sp.Gy = Eigen::MatrixXd::Zero(sp.nb, sp.nb);
    for (auto& hm : sp.Hess) hm = Eigen::MatrixXd::Zero(sp.nb, sp.nb);
    for (int q = 0; q < nq; ++q) {
        const double wq = sp.vol.weights[q];
        for (int m = 0; m < sp.nb; ++m) {
            const auto hm = sp.basis.hessian(m, sp.vol.points[q]);
            for (int l = 0; l < sp.nb; ++l) {
                const double v = sp.vol_val(q, l);
                sp.Gx(m, l) += wq * sp.vol_gx(q, m) * v;
                sp.Gy(m, l) += wq * sp.vol_gy(q, m) * v;
                for (int c = 0; c < 4; ++c) sp.Hess[c](m, l) += wq * hm[c] * v;
            }
        }
    }
    return sp;
}

Eigen::VectorXd l2_project(const DgSpace& sp, const FieldFn& f) {
    const Mesh& mesh = *sp.mesh;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(sp.total_dofs());
    std::vector<double> vals(sp.species);
    for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
        const Element& el = mesh.elements[e];
        for (int q = 0; q < sp.vol.size(); ++q) {
            const auto& xi = sp.vol.points[q];
            std::array<double, 2> x{el.origin[0] + el.jac[0] * xi[0] + el.jac[1] * xi[1],
                                    el.origin[1] + el.jac[2] * xi[0] + el.jac[3] * xi[1]};
            f(x, vals.data());
            const double wq = sp.vol.weights[q];
            for (int i = 0; i < sp.species; ++i) {
                if (!std::isfinite(vals[i]))
                    throw std::domain_error("l2_project: non-finite sample at quadrature point");
                for (int l = 0; l < sp.nb; ++l)
                    w[sp.dof(i, e, l)] += wq * vals[i] * sp.vol_val(q, l);
            }
        }
        // Orthonormal reference basis: the local mass block is eldet*I, and
        // eldet cancels against the quadrature Jacobian, so the accumulated
        // reference moments already are the coefficients.
    }
    return w;
}

Eigen::VectorXd eval_field(const DgSpace& sp, const Eigen::VectorXd& w, int elem,
                           const std::array<double, 2>& xi) {
    if (elem < 0 || elem >= static_cast<int>(sp.mesh->elements.size()))
        throw std::out_of_range("eval_field: element id out of range");
    if (w.size() != sp.total_dofs())
        throw std::invalid_argument("eval_field: coefficient size mismatch");
    Eigen::VectorXd out(sp.species);
    for (int i = 0; i < sp.species; ++i) out[i] = eval_scalar(sp, w, i, elem, xi);
    return out;
}

std::vector<FacetQuadPoint> facet_quadrature(const DgSpace& sp, const Facet& f) {
    std::vector<FacetQuadPoint> pts;
    if (sp.mesh->dim == 1) {
        FacetQuadPoint p;
        p.x = f.p0;
        p.xi1 = sp.mesh->ref_coords(f.k1, p.x);
        if (f.k2 >= 0) p.xi2 = sp.mesh->ref_coords(f.k2, p.x);
        p.w = 1.0;
        pts.push_back(p);
        return pts;
    }
    pts.reserve(sp.line.size());
    for (int q = 0; q < sp.line.size(); ++q) {
        const double t = sp.line.points[q][0];
        FacetQuadPoint p;
        p.x = {f.p0[0] + t * (f.p1[0] - f.p0[0]), f.p0[1] + t * (f.p1[1] - f.p0[1])};
        p.xi1 = sp.mesh->ref_coords(f.k1, p.x);
        if (f.k2 >= 0) p.xi2 = sp.mesh->ref_coords(f.k2, p.x);
        p.w = sp.line.weights[q] * f.measure;
        pts.push_back(p);
    }
    return pts;
}

LiftedGradient dg_gradient(const DgSpace& sp, const Eigen::VectorXd& w,
                           const FluxOrientation& orient) {
    const Mesh& mesh = *sp.mesh;
    const int d = mesh.dim;
    LiftedGradient out;
    out.grad = Eigen::VectorXd::Zero(sp.vec_dofs());
    out.lift = Eigen::VectorXd::Zero(sp.vec_dofs());

    // Broken gradient: pull the reference derivative moments through J^{-T}.
    for (int i = 0; i < sp.species; ++i)
        for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
            const auto& iv = mesh.elements[e].inv_jac;
            Eigen::VectorXd wloc(sp.nb);
            for (int l = 0; l < sp.nb; ++l) wloc[l] = w[sp.dof(i, e, l)];
            const Eigen::VectorXd mx = sp.Gx.transpose() * wloc;
            const Eigen::VectorXd my = sp.Gy.transpose() * wloc;
            for (int c = 0; c < d; ++c) {
                const double a0 = iv[c];          // (J^{-1})(0,c)
                const double a1 = d == 2 ? iv[2 + c] : 0.0;
                for (int l = 0; l < sp.nb; ++l)
                    out.grad[sp.vdof(i, c, e, l)] = a0 * mx[l] + a1 * my[l];
            }
        }

    // Jump lifting against tests weighted alpha on K1 and (1-alpha) on K2.
    for (int fi = 0; fi < static_cast<int>(mesh.interior_facets.size()); ++fi) {
        const OrientedFacet of = oriented_facet(mesh, orient, fi);
        const bool sw = orient.swapped[fi] != 0;
        for (const FacetQuadPoint& qp : facet_quadrature(sp, *of.facet)) {
            const auto& xiA = sw ? qp.xi2 : qp.xi1; // pullback into oriented K1
            const auto& xiB = sw ? qp.xi1 : qp.xi2;
            for (int i = 0; i < sp.species; ++i) {
                const double jump =
                    eval_scalar(sp, w, i, of.k1, xiA) - eval_scalar(sp, w, i, of.k2, xiB);
                for (int c = 0; c < d; ++c) {
                    const double jn = jump * of.normal[c] * qp.w;
                    for (int l = 0; l < sp.nb; ++l) {
                        out.lift[sp.vdof(i, c, of.k1, l)] +=
                            of.alpha * jn * sp.basis.value(l, xiA) / sp.eldet(of.k1);
                        out.lift[sp.vdof(i, c, of.k2, l)] +=
                            (1.0 - of.alpha) * jn * sp.basis.value(l, xiB) / sp.eldet(of.k2);
                    }
                }
            }
        }
    }
    out.grad -= out.lift;
    return out;
}

Eigen::VectorXd dg_hessian(const DgSpace& sp, const Eigen::VectorXd& w,
                           const FluxOrientation& orient) {
    const Mesh& mesh = *sp.mesh;
    const int d = mesh.dim;
    const int S = sp.scalar_dofs();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.species * d * d * S);
    const auto hdof = [&](int i, int c1, int c2, int e, int l) {
        return ((i * d + c1) * d + c2) * S + e * sp.nb + l;
    };

    // Elementwise Hessian D_h^2.
    for (int i = 0; i < sp.species; ++i)
        for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
            const auto& iv = mesh.elements[e].inv_jac;
            Eigen::VectorXd wloc(sp.nb);
            for (int l = 0; l < sp.nb; ++l) wloc[l] = w[sp.dof(i, e, l)];
            std::array<Eigen::VectorXd, 4> mom;
            for (int c = 0; c < 4; ++c) mom[c] = sp.Hess[c].transpose() * wloc;
            for (int c1 = 0; c1 < d; ++c1)
                for (int c2 = 0; c2 < d; ++c2)
                    for (int l = 0; l < sp.nb; ++l) {
                        double v = 0.0;
                        for (int a = 0; a < d; ++a)
                            for (int b = 0; b < d; ++b) {
                                const double ja = d == 1 ? iv[0] : iv[2 * a + c1];
                                const double jb = d == 1 ? iv[0] : iv[2 * b + c2];
                                v += ja * jb * mom[2 * a + b][l];
                            }
                        out[hdof(i, c1, c2, e, l)] = v;
                    }
        }

    // Facet liftings R (gradient jumps) and B (value jumps); H = D^2 - R + B.
    for (int fi = 0; fi < static_cast<int>(mesh.interior_facets.size()); ++fi) {
        const OrientedFacet of = oriented_facet(mesh, orient, fi);
        const bool sw = orient.swapped[fi] != 0;
        for (const FacetQuadPoint& qp : facet_quadrature(sp, *of.facet)) {
            const auto& xiA = sw ? qp.xi2 : qp.xi1;
            const auto& xiB = sw ? qp.xi1 : qp.xi2;
            for (int i = 0; i < sp.species; ++i) {
                double jump = 0.0;
                std::array<double, 2> gjump{0.0, 0.0};
                for (int l = 0; l < sp.nb; ++l) {
                    const double wa = w[sp.dof(i, of.k1, l)];
                    const double wb = w[sp.dof(i, of.k2, l)];
                    jump += wa * sp.basis.value(l, xiA) - wb * sp.basis.value(l, xiB);
                    const auto ga = phys_grad(sp, of.k1, l, xiA);
                    const auto gb = phys_grad(sp, of.k2, l, xiB);
                    for (int c = 0; c < d; ++c) gjump[c] += wa * ga[c] - wb * gb[c];
                }
                for (int side = 0; side < 2; ++side) {
                    const int K = side == 0 ? of.k1 : of.k2;
                    const auto& xi = side == 0 ? xiA : xiB;
                    const double wt = (side == 0 ? of.alpha : 1.0 - of.alpha) * qp.w / sp.eldet(K);
                    if (wt == 0.0) continue;
                    for (int l = 0; l < sp.nb; ++l) {
                        const double val = sp.basis.value(l, xi);
                        const auto pg = phys_grad(sp, K, l, xi);
                        for (int c1 = 0; c1 < d; ++c1)
                            for (int c2 = 0; c2 < d; ++c2)
                                out[hdof(i, c1, c2, K, l)] +=
                                    wt * (-val * of.normal[c2] * gjump[c1] +
                                          pg[c2] * of.normal[c1] * jump);
                    }
                }
            }
        }
    }
    return out;
}

void sample_field_csv(const DgSpace& sp, const Eigen::VectorXd& w, std::ostream& os) {
    const Mesh& mesh = *sp.mesh;
    os << (mesh.dim == 1 ? "element,x,species,value\n" : "element,x,y,species,value\n");
    char buf[64];
    for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
        const Element& el = mesh.elements[e];
        for (int q = 0; q < sp.vol.size(); ++q) {
            const auto& xi = sp.vol.points[q];
            const std::array<double, 2> x{el.origin[0] + el.jac[0] * xi[0] + el.jac[1] * xi[1],
                                          el.origin[1] + el.jac[2] * xi[0] + el.jac[3] * xi[1]};
            const Eigen::VectorXd vals = eval_field(sp, w, e, xi);
            for (int i = 0; i < sp.species; ++i) {
                os << e;
                std::snprintf(buf, sizeof buf, ",%.17g", x[0]);
                os << buf;
                if (mesh.dim == 2) {
                    std::snprintf(buf, sizeof buf, ",%.17g", x[1]);
                    os << buf;
                }
                std::snprintf(buf, sizeof buf, ",%d,%.17g\n", i + 1, vals[i]);
                os << buf;
            }
        }
    }
}

} // namespace crossdiff
