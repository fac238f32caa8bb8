#include "crossdiff/system.hpp"

#include <cmath>
#include <sstream>

namespace crossdiff {

namespace {

constexpr double kBoundaryOffset = 1e-14;

// Nudge rho back to the boundary-offset manifold when a quadrature state has
// (numerically) reached the boundary of D. Returns whether anything moved.
bool clamp_into_domain(const ModelSpec& model, double* rho) {
    const int N = model.N;
    bool touched = false;
    if (model.domain.kind == DomainKind::simplex) {
        double sum = 0.0;
        for (int i = 0; i < N; ++i) {
            if (!(rho[i] >= kBoundaryOffset)) {
                rho[i] = kBoundaryOffset;
                touched = true;
            }
            sum += rho[i];
        }
        if (sum >= 1.0 - kBoundaryOffset) {
            const double scale = (1.0 - kBoundaryOffset) / sum;
            for (int i = 0; i < N; ++i) rho[i] *= scale;
            touched = true;
        }
        return touched;
    }
    for (int i = 0; i < N; ++i) {
        const double lo = model.domain.lower[i] + kBoundaryOffset;
        if (!(rho[i] >= lo)) {
            rho[i] = lo;
            touched = true;
        }
        if (std::isfinite(model.domain.upper[i])) {
            const double hi = model.domain.upper[i] - kBoundaryOffset;
            if (!(rho[i] <= hi)) {
                rho[i] = hi;
                touched = true;
            }
        }
    }
    return touched;
}

std::array<double, 2> phys_point(const Element& el, const std::array<double, 2>& xi) {
    return {el.origin[0] + el.jac[0] * xi[0] + el.jac[1] * xi[1],
            el.origin[1] + el.jac[2] * xi[0] + el.jac[3] * xi[1]};
}

// w_h of every species at one volume quadrature point.
void eval_w_at(const DgSpace& sp, const Eigen::VectorXd& W, int e, int q, double* w) {
    const int S = sp.scalar_dofs();
    for (int i = 0; i < sp.species; ++i) {
        double v = 0.0;
        for (int l = 0; l < sp.nb; ++l) v += W[i * S + e * sp.nb + l] * sp.vol_val(q, l);
        w[i] = v;
    }
}

Eigen::VectorXd apply_species_blocks(const Eigen::SparseMatrix<double>& A, int species,
                                     const Eigen::VectorXd& v) {
    Eigen::VectorXd out(species * A.rows());
    for (int i = 0; i < species; ++i)
        out.segment(i * A.rows(), A.rows()) = A * v.segment(i * A.cols(), A.cols());
    return out;
}

// Gather/scatter between the global vector layout and the per-element local
// layout (i*d + c)*nb + l.
void gather_local(const DgSpace& sp, const Eigen::VectorXd& v, int e, Eigen::VectorXd& loc) {
    const int S = sp.scalar_dofs();
    const int d = sp.mesh->dim;
    int k = 0;
    for (int i = 0; i < sp.species; ++i)
        for (int c = 0; c < d; ++c)
            for (int l = 0; l < sp.nb; ++l) loc[k++] = v[(i * d + c) * S + e * sp.nb + l];
}

void scatter_local(const DgSpace& sp, const Eigen::VectorXd& loc, int e, Eigen::VectorXd& v) {
    const int S = sp.scalar_dofs();
    const int d = sp.mesh->dim;
    int k = 0;
    for (int i = 0; i < sp.species; ++i)
        for (int c = 0; c < d; ++c)
            for (int l = 0; l < sp.nb; ++l) v[(i * d + c) * S + e * sp.nb + l] = loc[k++];
}

} // namespace

SingularStateError::SingularStateError(int elem, const std::string& what)
    : std::runtime_error(what), element(elem) {}

void eval_local_blocks(const DgSpace& sp, const ModelSpec& model, const Eigen::VectorXd& W,
                       LocalBlocks& blocks) {
    if (!W.allFinite()) throw std::invalid_argument("eval_local_blocks: non-finite state");
    const int N = sp.species;
    const int d = sp.mesh->dim;
    const int nb = sp.nb;
    const int nelem = static_cast<int>(sp.mesh->elements.size());
    const int nq = static_cast<int>(sp.vol.size());
    const int nloc = N * d * nb;

    if (blocks.nloc != nloc || static_cast<int>(blocks.Nhat.size()) != nelem) {
        blocks.nloc = nloc;
        blocks.Nhat.assign(nelem, Eigen::MatrixXd::Zero(nloc, nloc));
        blocks.Ahat.assign(nelem, Eigen::MatrixXd::Zero(nloc, nloc));
        blocks.Nfact.assign(nelem, Eigen::PartialPivLU<Eigen::MatrixXd>(nloc));
    }
    blocks.clamp_events = 0;

    std::vector<double> w(N), rho(N), a(N * N), h(N * N), p(N * N);
    // Species-pair moment matrices accumulated over the quadrature rule.
    std::vector<Eigen::MatrixXd> accN(N * N, Eigen::MatrixXd(nb, nb));
    std::vector<Eigen::MatrixXd> accA(N * N, Eigen::MatrixXd(nb, nb));
    for (int e = 0; e < nelem; ++e) {
        for (int i = 0; i < N * N; ++i) {
            accN[i].setZero();
            accA[i].setZero();
        }
        for (int q = 0; q < nq; ++q) {
            eval_w_at(sp, W, e, q, w.data());
            model.u(w.data(), rho.data());
            if (clamp_into_domain(model, rho.data())) ++blocks.clamp_events;
            model.A(rho.data(), a.data());
            model.s_second(rho.data(), h.data());
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    double v = 0.0;
                    for (int k = 0; k < N; ++k) v += a[k * N + i] * h[k * N + j];
                    p[i * N + j] = v; // (A^T s'')_{ij}
                }
            const double scale = sp.vol.weights[q] * sp.eldet(e);
            for (int i = 0; i < N * N; ++i)
                if (!std::isfinite(p[i]) || !std::isfinite(a[i]))
                    throw SingularStateError(
                        e, "nonlinear blocks degenerate at a quadrature point of element " +
                               std::to_string(e));
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    const double cn = scale * p[i * N + j];
                    const double ca = scale * a[i * N + j];
                    Eigen::MatrixXd& an = accN[i * N + j];
                    Eigen::MatrixXd& aa = accA[i * N + j];
                    for (int m = 0; m < nb; ++m) {
                        const double pm = sp.vol_val(q, m);
                        for (int l = 0; l < nb; ++l) {
                            const double v = sp.vol_val(q, l) * pm;
                            an(l, m) += cn * v;
                            aa(l, m) += ca * v;
                        }
                    }
                }
        }
        blocks.Nhat[e].setZero();
        blocks.Ahat[e].setZero();
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                for (int c = 0; c < d; ++c) {
                    blocks.Nhat[e].block((i * d + c) * nb, (j * d + c) * nb, nb, nb) =
                        accN[i * N + j];
                    blocks.Ahat[e].block((i * d + c) * nb, (j * d + c) * nb, nb, nb) =
                        accA[i * N + j];
                }
        blocks.Nfact[e].compute(blocks.Nhat[e]);
        const auto& lu = blocks.Nfact[e].matrixLU();
        const double scale = lu.cwiseAbs().maxCoeff();
        const double pivot = lu.diagonal().cwiseAbs().minCoeff();
        if (!(scale > 0.0) || !(pivot > 1e-14 * scale))
            throw SingularStateError(e, "singular nonlinear block on element " + std::to_string(e));
    }
}

LocalBlocks eval_local_blocks(const DgSpace& sp, const ModelSpec& model, const Eigen::VectorXd& W) {
    LocalBlocks blocks;
    eval_local_blocks(sp, model, W, blocks);
    return blocks;
}

Eigen::VectorXd apply_E(const DgSpace& sp, const OperatorSet& ops, const LocalBlocks& blocks,
                        const Eigen::VectorXd& V) {
    const int N = sp.species;
    Eigen::VectorXd y = apply_species_blocks(ops.B, N, V);
    ops.apply_Minv(y);
    Eigen::VectorXd mid(y.size());
    Eigen::VectorXd loc(blocks.nloc);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        gather_local(sp, y, e, loc);
        const Eigen::VectorXd z = blocks.Ahat[e] * blocks.Nfact[e].solve(blocks.Ahat[e].transpose() * loc);
        scatter_local(sp, z, e, mid);
    }
    ops.apply_Minv(mid);
    Eigen::VectorXd out(N * sp.scalar_dofs());
    for (int i = 0; i < N; ++i)
        out.segment(i * ops.B.cols(), ops.B.cols()) =
            ops.B.transpose() * mid.segment(i * ops.B.rows(), ops.B.rows());
    return out;
}

SigmaQ recover_sigma_q(const DgSpace& sp, const ModelSpec& model, const OperatorSet& ops,
                       const Eigen::VectorXd& W) {
    const int N = sp.species;
    const LocalBlocks blocks = eval_local_blocks(sp, model, W);
    SigmaQ out;

    const Eigen::VectorXd gw = apply_species_blocks(ops.B, N, W);
    out.z = gw;
    ops.apply_Minv(out.z);

    out.sigma.resize(gw.size());
    Eigen::VectorXd rhs_all(gw.size());
    Eigen::VectorXd loc(blocks.nloc);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        gather_local(sp, out.z, e, loc);
        const Eigen::VectorXd rhs = blocks.Ahat[e].transpose() * loc;
        const Eigen::VectorXd sig = blocks.Nfact[e].solve(rhs);
        scatter_local(sp, sig, e, out.sigma);
        scatter_local(sp, rhs, e, rhs_all);
    }
    out.q.resize(gw.size());
    Eigen::VectorXd asig(gw.size());
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        gather_local(sp, out.sigma, e, loc);
        const Eigen::VectorXd v = blocks.Ahat[e] * loc;
        scatter_local(sp, v, e, asig);
    }
    out.q = asig;
    ops.apply_Minv(out.q);

    // Relative residuals of the three defining systems.
    Eigen::VectorXd t = out.z;
    for (int b = 0; b < t.size() / ops.M_diag.size(); ++b)
        t.segment(b * ops.M_diag.size(), ops.M_diag.size()).array() *= ops.M_diag.array();
    out.res_z = (t - gw).norm() / std::max(1.0, gw.norm());

    Eigen::VectorXd nsig(gw.size());
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        gather_local(sp, out.sigma, e, loc);
        const Eigen::VectorXd v = blocks.Nhat[e] * loc;
        scatter_local(sp, v, e, nsig);
    }
    out.res_sigma = (nsig - rhs_all).norm() / std::max(1.0, rhs_all.norm());

    t = out.q;
    for (int b = 0; b < t.size() / ops.M_diag.size(); ++b)
        t.segment(b * ops.M_diag.size(), ops.M_diag.size()).array() *= ops.M_diag.array();
    out.res_q = (t - asig).norm() / std::max(1.0, asig.norm());
    return out;
}

Eigen::VectorXd uh_moments(const DgSpace& sp, const ModelSpec& model, const Eigen::VectorXd& W) {
    const int N = sp.species;
    const int S = sp.scalar_dofs();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(N * S);
    std::vector<double> w(N), rho(N);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e)
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            eval_w_at(sp, W, e, q, w.data());
            model.u(w.data(), rho.data());
            const double scale = sp.vol.weights[q] * sp.eldet(e);
            for (int i = 0; i < N; ++i)
                for (int l = 0; l < sp.nb; ++l)
                    out[i * S + e * sp.nb + l] += scale * rho[i] * sp.vol_val(q, l);
        }
    return out;
}

Eigen::VectorXd reaction_moments(const DgSpace& sp, const ModelSpec& model,
                                 const Eigen::VectorXd& W) {
    const int N = sp.species;
    const int S = sp.scalar_dofs();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(N * S);
    if (!model.has_reaction) return out;
    std::vector<double> w(N), rho(N), f(N);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e)
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            eval_w_at(sp, W, e, q, w.data());
            model.u(w.data(), rho.data());
            model.f(rho.data(), f.data());
            const double scale = sp.vol.weights[q] * sp.eldet(e);
            for (int i = 0; i < N; ++i)
                for (int l = 0; l < sp.nb; ++l)
                    out[i * S + e * sp.nb + l] += scale * f[i] * sp.vol_val(q, l);
        }
    return out;
}

Eigen::VectorXd forcing_moments(const DgSpace& sp, int species, const Forcing& forcing, double t) {
    const int S = sp.scalar_dofs();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(species * S);
    std::vector<double> g(species);
    if (forcing.source) {
        for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
            const Element& el = sp.mesh->elements[e];
            for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
                const auto x = phys_point(el, sp.vol.points[q]);
                forcing.source(t, x, g.data());
                const double scale = sp.vol.weights[q] * sp.eldet(e);
                for (int i = 0; i < species; ++i)
                    for (int l = 0; l < sp.nb; ++l)
                        out[i * S + e * sp.nb + l] += scale * g[i] * sp.vol_val(q, l);
            }
        }
    }
    if (forcing.neumann) {
        for (const Facet& f : sp.mesh->boundary_facets)
            for (const FacetQuadPoint& qp : facet_quadrature(sp, f)) {
                forcing.neumann(t, qp.x, f.normal, g.data());
                for (int i = 0; i < species; ++i)
                    for (int l = 0; l < sp.nb; ++l)
                        out[i * S + f.k1 * sp.nb + l] += qp.w * g[i] * sp.basis.value(l, qp.xi1);
            }
    }
    return out;
}

Eigen::VectorXd rho0_moments(const DgSpace& sp, int species, const FieldFn& rho0) {
    const int S = sp.scalar_dofs();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(species * S);
    std::vector<double> r(species);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        const Element& el = sp.mesh->elements[e];
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            rho0(phys_point(el, sp.vol.points[q]), r.data());
            const double scale = sp.vol.weights[q] * sp.eldet(e);
            for (int i = 0; i < species; ++i) {
                if (!std::isfinite(r[i]))
                    throw std::domain_error("rho0_moments: initial datum not finite");
                for (int l = 0; l < sp.nb; ++l)
                    out[i * S + e * sp.nb + l] += scale * r[i] * sp.vol_val(q, l);
            }
        }
    }
    return out;
}

std::vector<double> rho0_means(const DgSpace& sp, int species, const FieldFn& rho0) {
    std::vector<double> mean(species, 0.0), r(species);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        const Element& el = sp.mesh->elements[e];
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            rho0(phys_point(el, sp.vol.points[q]), r.data());
            const double scale = sp.vol.weights[q] * sp.eldet(e);
            for (int i = 0; i < species; ++i) mean[i] += scale * r[i];
        }
    }
    for (double& v : mean) v /= sp.mesh->domain_measure;
    return mean;
}

Eigen::VectorXd constant_state(const DgSpace& sp, const std::vector<double>& values) {
    const int S = sp.scalar_dofs();
    Eigen::VectorXd ints = Eigen::VectorXd::Zero(sp.nb);
    for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q)
        ints += sp.vol.weights[q] * sp.vol_val.row(q).transpose();
    // Reference measure normalization: coefficient of the constant 1 is
    // int_ref phi_l, and the basis is orthonormal w.r.t. the reference measure.
    Eigen::VectorXd out(static_cast<int>(values.size()) * S);
    for (int i = 0; i < static_cast<int>(values.size()); ++i)
        for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e)
            for (int l = 0; l < sp.nb; ++l) out[i * S + e * sp.nb + l] = values[i] * ints[l];
    return out;
}

ResidualData residual(const DgSpace& sp, const OperatorSet& ops, const ModelSpec& model,
                      const SchemeParams& params, const Eigen::VectorXd& W,
                      const Eigen::VectorXd& prev_moments, const Eigen::VectorXd& f_base,
                      LocalBlocks* scratch) {
    const int N = sp.species;
    const int S = sp.scalar_dofs();
    LocalBlocks local;
    LocalBlocks& blocks = scratch ? *scratch : local;
    eval_local_blocks(sp, model, W, blocks);

    ResidualData rd;
    rd.clamp_events = blocks.clamp_events;

    // Z, Sigma, and the elliptic term in one sweep.
    Eigen::VectorXd z = apply_species_blocks(ops.B, N, W);
    ops.apply_Minv(z);
    rd.sigma.resize(z.size());
    Eigen::VectorXd asig(z.size());
    Eigen::VectorXd loc(blocks.nloc), rhs(blocks.nloc), sig(blocks.nloc), tmp(blocks.nloc);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        gather_local(sp, z, e, loc);
        rhs.noalias() = blocks.Ahat[e].transpose() * loc;
        sig = blocks.Nfact[e].solve(rhs);
        tmp.noalias() = blocks.Nhat[e] * sig;
        rd.production_rhs += sig.dot(tmp);
        rd.sigma_l2sq += sp.eldet(e) * sig.squaredNorm();
        scatter_local(sp, sig, e, rd.sigma);
        tmp.noalias() = blocks.Ahat[e] * sig;
        scatter_local(sp, tmp, e, asig);
    }
    rd.coercivity_margin = rd.production_rhs - model.gamma * rd.sigma_l2sq;
    ops.apply_Minv(asig);
    Eigen::VectorXd eterm(N * S);
    for (int i = 0; i < N; ++i)
        eterm.segment(i * S, S) = ops.B.transpose() * asig.segment(i * ops.B.rows(), ops.B.rows());
    rd.production_lhs = eterm.dot(W);

    Eigen::VectorXd R = uh_moments(sp, model, W) - prev_moments;
    R += params.tau * eterm;
    R += params.tau * apply_species_blocks(ops.S, N, W);
    if (params.eps != 0.0) R += params.eps * params.tau * apply_species_blocks(ops.C, N, W);
    if (model.has_reaction) R -= params.tau * reaction_moments(sp, model, W);
    if (f_base.size() != 0) {
        if (f_base.size() != R.size()) throw std::invalid_argument("residual: f_base size mismatch");
        R -= params.tau * f_base;
    }
    if (!R.allFinite()) throw std::runtime_error("residual: diverged state (non-finite residual)");
    rd.R = std::move(R);
    return rd;
}

Eigen::SparseMatrix<double> frozen_jacobian(const DgSpace& sp, const OperatorSet& ops,
                                            const ModelSpec& model, const SchemeParams& params,
                                            const Eigen::VectorXd& W_lin, bool reaction_jacobian,
                                            LocalBlocks* scratch) {
    const int N = sp.species;
    const int S = sp.scalar_dofs();
    const int nb = sp.nb;
    LocalBlocks local;
    LocalBlocks& blocks = scratch ? *scratch : local;
    eval_local_blocks(sp, model, W_lin, blocks);

    // Block-diagonal derivative of the u(w) and f(u(w)) moments.
    std::vector<Eigen::Triplet<double>> trip;
    const int nelem = static_cast<int>(sp.mesh->elements.size());
    trip.reserve(static_cast<std::size_t>(nelem) * N * N * nb * nb *
                     (1 + (2 * sp.mesh->dim + 1) * (2 * sp.mesh->dim + 1)) +
                 static_cast<std::size_t>(N) * (ops.S.nonZeros() + ops.C.nonZeros()));
    std::vector<double> w(N), rho(N), up(N * N), fp(N * N), chain(N * N);
    const bool with_reaction = reaction_jacobian && model.has_reaction && model.f_prime;
    std::vector<Eigen::MatrixXd> acc(N * N, Eigen::MatrixXd(nb, nb));
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        for (int i = 0; i < N * N; ++i) acc[i].setZero();
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            eval_w_at(sp, W_lin, e, q, w.data());
            model.u_prime(w.data(), up.data());
            if (with_reaction) {
                model.u(w.data(), rho.data());
                model.f_prime(rho.data(), fp.data());
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < N; ++j) {
                        double v = 0.0;
                        for (int k = 0; k < N; ++k) v += fp[i * N + k] * up[k * N + j];
                        chain[i * N + j] = v;
                    }
            }
            const double scale = sp.vol.weights[q] * sp.eldet(e);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    double coeff = up[i * N + j];
                    if (with_reaction) coeff -= params.tau * chain[i * N + j];
                    coeff *= scale;
                    Eigen::MatrixXd& am = acc[i * N + j];
                    for (int m = 0; m < nb; ++m) {
                        const double pm = sp.vol_val(q, m);
                        for (int l = 0; l < nb; ++l) am(l, m) += coeff * sp.vol_val(q, l) * pm;
                    }
                }
        }
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                for (int l = 0; l < nb; ++l)
                    for (int m = 0; m < nb; ++m) {
                        const double v = acc[i * N + j](l, m);
                        if (v != 0.0)
                            trip.emplace_back(i * S + e * nb + l, j * S + e * nb + m, v);
                    }
    }
    // Frozen elliptic term tau * G^T M^-1 Ehat M^-1 G with G = I_N x B,
    // assembled element by element: the rows of M^-1 B that touch an element
    // only reach its face neighbours, so the triple product stays local.
    const int d = sp.mesh->dim;
    const int dnb = d * nb;
    const int cap = nb * (2 * d + 1); // scalar columns one element can reach
    std::vector<int> cols;
    cols.reserve(cap);
    Eigen::MatrixXd Pe(dnb, cap), EP(dnb, cap), Re(cap, cap);
    Eigen::MatrixXd Ehat(blocks.nloc, blocks.nloc), sol(blocks.nloc, blocks.nloc);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        cols.clear();
        Pe.setZero();
        for (int c = 0; c < d; ++c)
            for (int l = 0; l < nb; ++l) {
                const int r = c * S + e * nb + l;
                for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ops.MinvB, r);
                     it; ++it) {
                    const int g = static_cast<int>(it.col());
                    int a = 0;
                    while (a < static_cast<int>(cols.size()) && cols[a] != g) ++a;
                    if (a == static_cast<int>(cols.size())) cols.push_back(g);
                    Pe(c * nb + l, a) = it.value();
                }
            }
        const int nc = static_cast<int>(cols.size());
        sol = blocks.Nfact[e].solve(blocks.Ahat[e].transpose());
        Ehat.noalias() = blocks.Ahat[e] * sol;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                EP.leftCols(nc).noalias() = Ehat.block(i * dnb, j * dnb, dnb, dnb) * Pe.leftCols(nc);
                Re.topLeftCorner(nc, nc).noalias() =
                    Pe.leftCols(nc).transpose() * EP.leftCols(nc);
                for (int b = 0; b < nc; ++b)
                    for (int a = 0; a < nc; ++a) {
                        const double v = params.tau * Re(a, b);
                        if (v != 0.0) trip.emplace_back(i * S + cols[a], j * S + cols[b], v);
                    }
            }
    }

    // Jump penalty and regularization act per species on the scalar layout.
    for (int k = 0; k < ops.S.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(ops.S, k); it; ++it)
            for (int i = 0; i < N; ++i)
                trip.emplace_back(i * S + static_cast<int>(it.row()),
                                  i * S + static_cast<int>(it.col()),
                                  params.tau * it.value());
    if (params.eps != 0.0)
        for (int k = 0; k < ops.C.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(ops.C, k); it; ++it)
                for (int i = 0; i < N; ++i)
                    trip.emplace_back(i * S + static_cast<int>(it.row()),
                                      i * S + static_cast<int>(it.col()),
                                      params.eps * params.tau * it.value());

    Eigen::SparseMatrix<double> J(N * S, N * S);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

} // namespace crossdiff
