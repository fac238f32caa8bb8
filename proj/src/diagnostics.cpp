#include "crossdiff/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace crossdiff {

namespace {

std::array<double, 2> phys_point(const Element& el, const std::array<double, 2>& xi) {
    return {el.origin[0] + el.jac[0] * xi[0] + el.jac[1] * xi[1],
            el.origin[1] + el.jac[2] * xi[0] + el.jac[3] * xi[1]};
}

void eval_w_at(const DgSpace& sp, const Eigen::VectorXd& W, int e, int q, double* w) {
    const int S = sp.scalar_dofs();
    for (int i = 0; i < sp.species; ++i) {
        double v = 0.0;
        for (int l = 0; l < sp.nb; ++l) v += W[i * S + e * sp.nb + l] * sp.vol_val(q, l);
        w[i] = v;
    }
}

// Entropy densities extend continuously to the boundary of D but their naive
// expressions produce 0*log(0); evaluate a hair inside instead.
void nudge_inside(const ModelSpec& model, double* rho) {
    const int N = model.N;
    if (model.domain.kind == DomainKind::simplex) {
        double sum = 0.0;
        for (int i = 0; i < N; ++i) {
            rho[i] = std::max(rho[i], 1e-300);
            sum += rho[i];
        }
        if (sum >= 1.0 - 1e-16) {
            const double scale = (1.0 - 1e-15) / sum;
            for (int i = 0; i < N; ++i) rho[i] *= scale;
        }
        return;
    }
    for (int i = 0; i < N; ++i) {
        rho[i] = std::max(rho[i], model.domain.lower[i] + 1e-300);
        if (std::isfinite(model.domain.upper[i]))
            rho[i] = std::min(rho[i], model.domain.upper[i] * (1.0 - 1e-16));
    }
}

} // namespace

double entropy_value(const DgSpace& sp, const ModelSpec& model, const Eigen::VectorXd& W) {
    std::vector<double> w(sp.species), rho(sp.species);
    double E = 0.0;
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e)
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            eval_w_at(sp, W, e, q, w.data());
            model.u(w.data(), rho.data());
            E += sp.vol.weights[q] * sp.eldet(e) * model.s(rho.data());
        }
    return E;
}

double entropy_of_density(const DgSpace& sp, const ModelSpec& model, const FieldFn& rho_fn) {
    std::vector<double> rho(sp.species);
    double E = 0.0;
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        const Element& el = sp.mesh->elements[e];
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            rho_fn(phys_point(el, sp.vol.points[q]), rho.data());
            nudge_inside(model, rho.data());
            const double s = model.s(rho.data());
            if (!std::isfinite(s))
                throw std::domain_error("entropy_of_density: s(rho0) not finite at a sample");
            E += sp.vol.weights[q] * sp.eldet(e) * s;
        }
    }
    return E;
}

std::vector<double> mass_value(const DgSpace& sp, const ModelSpec& model,
                               const Eigen::VectorXd& W) {
    std::vector<double> w(sp.species), rho(sp.species), M(sp.species, 0.0);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e)
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            eval_w_at(sp, W, e, q, w.data());
            model.u(w.data(), rho.data());
            const double scale = sp.vol.weights[q] * sp.eldet(e);
            for (int i = 0; i < sp.species; ++i) M[i] += scale * rho[i];
        }
    return M;
}

std::vector<double> mass_of_density(const DgSpace& sp, int species, const FieldFn& rho_fn) {
    std::vector<double> rho(species), M(species, 0.0);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        const Element& el = sp.mesh->elements[e];
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            rho_fn(phys_point(el, sp.vol.points[q]), rho.data());
            const double scale = sp.vol.weights[q] * sp.eldet(e);
            for (int i = 0; i < species; ++i) M[i] += scale * rho[i];
        }
    }
    return M;
}

void minmax_u(const DgSpace& sp, const ModelSpec& model, const Eigen::VectorXd& W,
              std::vector<double>& mn, std::vector<double>& mx) {
    mn.assign(sp.species, std::numeric_limits<double>::infinity());
    mx.assign(sp.species, -std::numeric_limits<double>::infinity());
    std::vector<double> w(sp.species), rho(sp.species);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e)
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            eval_w_at(sp, W, e, q, w.data());
            model.u(w.data(), rho.data());
            for (int i = 0; i < sp.species; ++i) {
                mn[i] = std::min(mn[i], rho[i]);
                mx[i] = std::max(mx[i], rho[i]);
            }
        }
}

void minmax_density(const DgSpace& sp, int species, const FieldFn& rho_fn, std::vector<double>& mn,
                    std::vector<double>& mx) {
    mn.assign(species, std::numeric_limits<double>::infinity());
    mx.assign(species, -std::numeric_limits<double>::infinity());
    std::vector<double> rho(species);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        const Element& el = sp.mesh->elements[e];
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            rho_fn(phys_point(el, sp.vol.points[q]), rho.data());
            for (int i = 0; i < species; ++i) {
                mn[i] = std::min(mn[i], rho[i]);
                mx[i] = std::max(mx[i], rho[i]);
            }
        }
    }
}

double jump_energy(const DgSpace& sp, const OperatorSet& ops, const Eigen::VectorXd& W) {
    const int S = sp.scalar_dofs();
    double v = 0.0;
    for (int i = 0; i < sp.species; ++i)
        v += W.segment(i * S, S).dot(ops.S * W.segment(i * S, S));
    return v;
}

double regularization_energy(const DgSpace& sp, const OperatorSet& ops, const Eigen::VectorXd& W) {
    const int S = sp.scalar_dofs();
    double v = 0.0;
    for (int i = 0; i < sp.species; ++i)
        v += W.segment(i * S, S).dot(ops.C * W.segment(i * S, S));
    return v;
}

double entropy_audit(const ModelSpec& model, double eps, double tau, double E_prev, double E_new,
                     double sigma_l2sq, double jump, double wCw, double domain_measure) {
    double budget = 0.0;
    if (model.has_reaction && model.C_f > 0.0)
        budget = model.reaction_bound_kind == ReactionBound::absolute
                     ? model.C_f * tau * domain_measure
                     : model.C_f * tau * (domain_measure + E_new);
    const double lhs = eps * tau * wCw + E_new + model.gamma * tau * sigma_l2sq + tau * jump;
    return E_prev + budget - lhs;
}

bool strictly_inside(const ModelSpec& model, const std::vector<double>& mn,
                     const std::vector<double>& mx) {
    for (int i = 0; i < model.N; ++i) {
        if (!(mn[i] > model.domain.lower[i])) return false;
        if (!(mx[i] < model.domain.upper[i])) return false;
    }
    return true;
}

ErrorNorms error_norms(const DgSpace& sp, const ModelSpec& model, const Eigen::VectorXd& W,
                       const Eigen::VectorXd& sigma, const ExactFn& exact_rho,
                       const ExactFn& exact_grad, double t) {
    const int N = sp.species;
    const int d = sp.mesh->dim;
    const int S = sp.scalar_dofs();
    ErrorNorms out;
    out.density.assign(N, 0.0);
    out.gradient.assign(N, 0.0);
    std::vector<double> w(N), rho(N), rex(N), gex(N * 2);
    for (int e = 0; e < static_cast<int>(sp.mesh->elements.size()); ++e) {
        const Element& el = sp.mesh->elements[e];
        for (int q = 0; q < static_cast<int>(sp.vol.size()); ++q) {
            const auto x = phys_point(el, sp.vol.points[q]);
            eval_w_at(sp, W, e, q, w.data());
            model.u(w.data(), rho.data());
            exact_rho(t, x, rex.data());
            exact_grad(t, x, gex.data());
            const double scale = sp.vol.weights[q] * sp.eldet(e);
            for (int i = 0; i < N; ++i) {
                const double dv = rex[i] - rho[i];
                out.density[i] += scale * dv * dv;
                for (int c = 0; c < d; ++c) {
                    double sig = 0.0;
                    for (int l = 0; l < sp.nb; ++l)
                        sig += sigma[(i * d + c) * S + e * sp.nb + l] * sp.vol_val(q, l);
                    const double dg = gex[i * 2 + c] + sig; // sigma approximates -grad rho
                    out.gradient[i] += scale * dg * dg;
                }
            }
        }
    }
    for (int i = 0; i < N; ++i) {
        out.density[i] = std::sqrt(out.density[i]);
        out.gradient[i] = std::sqrt(out.gradient[i]);
    }
    return out;
}

std::vector<double> convergence_rates(const std::vector<double>& errors,
                                      const std::vector<double>& hs) {
    if (errors.size() != hs.size() || errors.size() < 2)
        throw std::invalid_argument("convergence_rates: need matching lists of length >= 2");
    std::vector<double> r(errors.size() - 1);
    for (std::size_t i = 0; i + 1 < errors.size(); ++i)
        r[i] = std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]);
    return r;
}

namespace {

// Fourth-order central difference of a single-variable functional.
template <typename F>
double fd5(const F& f, double delta) {
    return (f(-2.0 * delta) - 8.0 * f(-delta) + 8.0 * f(delta) - f(2.0 * delta)) / (12.0 * delta);
}

// A(rho(t,x)) grad rho(t,x), layout i*2 + c.
void flux_at(const ModelSpec& model, const ExactFn& exact_rho, const ExactFn& exact_grad, double t,
             const std::array<double, 2>& x, double* phi) {
    const int N = model.N;
    std::vector<double> rho(N), grad(N * 2), a(N * N);
    exact_rho(t, x, rho.data());
    exact_grad(t, x, grad.data());
    model.A(rho.data(), a.data());
    for (int i = 0; i < N; ++i)
        for (int c = 0; c < 2; ++c) {
            double v = 0.0;
            for (int j = 0; j < N; ++j) v += a[i * N + j] * grad[j * 2 + c];
            phi[i * 2 + c] = v;
        }
}

void source_at(const ModelSpec& model, int dim, const ExactFn& exact_rho, const ExactFn& exact_grad,
               double delta, double t, const std::array<double, 2>& x, double* g) {
    const int N = model.N;
    std::vector<double> rho(N), f(N), tmp(N), phi(N * 2);
    exact_rho(t, x, rho.data());
    model.f(rho.data(), f.data());
    for (int i = 0; i < N; ++i) {
        const double dt = fd5(
            [&](double h) {
                exact_rho(t + h, x, tmp.data());
                return tmp[i];
            },
            delta);
        double div = 0.0;
        for (int c = 0; c < dim; ++c)
            div += fd5(
                [&](double h) {
                    std::array<double, 2> xs = x;
                    xs[c] += h;
                    flux_at(model, exact_rho, exact_grad, t, xs, phi.data());
                    return phi[i * 2 + c];
                },
                delta);
        g[i] = dt - div - f[i];
    }
}

} // namespace

Forcing manufactured_forcing(const ModelSpec& model, int dim, const ExactFn& exact_rho,
                             const ExactFn& exact_grad, double fd_delta) {
    Forcing out;
    out.source = [model, dim, exact_rho, exact_grad, fd_delta](
                     double t, const std::array<double, 2>& x, double* g) {
        source_at(model, dim, exact_rho, exact_grad, fd_delta, t, x, g);
    };
    out.neumann = [model, exact_rho, exact_grad](double t, const std::array<double, 2>& x,
                                                 const std::array<double, 2>& n, double* g) {
        std::vector<double> phi(model.N * 2);
        flux_at(model, exact_rho, exact_grad, t, x, phi.data());
        for (int i = 0; i < model.N; ++i) g[i] = phi[i * 2] * n[0] + phi[i * 2 + 1] * n[1];
    };
    return out;
}

std::vector<double> pde_residual(const ModelSpec& model, int dim, const ExactFn& exact_rho,
                                 const ExactFn& exact_grad, const Forcing& forcing, double t,
                                 const std::array<double, 2>& x, double fd_delta) {
    const int N = model.N;
    std::vector<double> res(N), g(N, 0.0);
    source_at(model, dim, exact_rho, exact_grad, fd_delta, t, x, res.data());
    if (forcing.source) forcing.source(t, x, g.data());
    for (int i = 0; i < N; ++i) res[i] -= g[i];
    return res;
}

void write_csv(std::ostream& os, int species, const std::vector<StepDiagnostics>& rows) {
    os << "step,t,tau,newton_iters,entropy";
    for (int i = 1; i <= species; ++i) os << ",mass_" << i;
    for (int i = 1; i <= species; ++i) os << ",min_u_" << i;
    for (int i = 1; i <= species; ++i) os << ",max_u_" << i;
    os << ",sigma_l2,jump_energy,entropy_slack,cond_estimate\n";
    char buf[40];
    const auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << ',' << buf;
    };
    for (const StepDiagnostics& r : rows) {
        os << r.step;
        put(r.t);
        put(r.tau);
        os << ',' << r.newton_iters;
        put(r.entropy);
        for (double v : r.mass) put(v);
        for (double v : r.min_u) put(v);
        for (double v : r.max_u) put(v);
        put(r.sigma_l2sq);
        put(r.jump_energy);
        put(r.entropy_slack);
        put(r.cond_estimate);
        os << '\n';
    }
}

} // namespace crossdiff
