#include "crossdiff/stepper.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace crossdiff {

namespace {

// Interior clamp for the very first Newton seed; generous offset since this
// only has to land somewhere reasonable inside D.
void clamp_interior(const ModelSpec& model, std::vector<double>& rho) {
    const double off = 1e-8;
    if (model.domain.kind == DomainKind::simplex) {
        double sum = 0.0;
        for (double& r : rho) {
            r = std::max(r, off);
            sum += r;
        }
        if (sum >= 1.0 - off) {
            const double scale = (1.0 - off) / sum;
            for (double& r : rho) r *= scale;
        }
        return;
    }
    for (int i = 0; i < model.N; ++i) {
        rho[i] = std::max(rho[i], model.domain.lower[i] + off);
        if (std::isfinite(model.domain.upper[i]))
            rho[i] = std::min(rho[i], model.domain.upper[i] - off);
    }
}

double tau_cap(const ModelSpec& model) {
    if (model.has_reaction && model.reaction_bound_kind == ReactionBound::relative &&
        model.C_f > 0.0)
        return 0.999 / model.C_f;
    return std::numeric_limits<double>::infinity();
}

StepDiagnostics initial_row(const SchemeDeps& deps) {
    StepDiagnostics row;
    row.entropy = entropy_of_density(*deps.space, *deps.model, deps.rho0);
    row.mass = mass_of_density(*deps.space, deps.model->N, deps.rho0);
    minmax_density(*deps.space, deps.model->N, deps.rho0, row.min_u, row.max_u);
    return row;
}

StepDiagnostics make_row(const RunState& st, const SchemeDeps& deps, const NewtonResult& nr,
                         double tau, double E_prev, double last_cond) {
    StepDiagnostics row;
    row.step = st.n;
    row.t = st.t;
    row.tau = tau;
    row.newton_iters = nr.iterations;
    row.entropy = entropy_value(*deps.space, *deps.model, st.W);
    row.mass = mass_value(*deps.space, *deps.model, st.W);
    minmax_u(*deps.space, *deps.model, st.W, row.min_u, row.max_u);
    row.sigma_l2sq = nr.sigma_l2sq;
    row.jump_energy = jump_energy(*deps.space, *deps.ops, st.W);
    const double wCw =
        deps.eps != 0.0 ? regularization_energy(*deps.space, *deps.ops, st.W) : 0.0;
    row.entropy_slack = entropy_audit(*deps.model, deps.eps, tau, E_prev, row.entropy,
                                      nr.sigma_l2sq, row.jump_energy, wCw,
                                      deps.space->mesh->domain_measure);
    row.cond_estimate = nr.cond_estimate > 0.0 ? nr.cond_estimate : last_cond;
    return row;
}

void absorb_attempt(RunReport& rep, const NewtonResult& nr) {
    rep.total_newton += nr.iterations;
    rep.clamp_events += nr.clamp_events;
    rep.min_coercivity_margin = std::min(rep.min_coercivity_margin, nr.min_coercivity_margin);
    rep.max_production_gap = std::max(rep.max_production_gap, nr.max_production_gap);
}

void absorb_row(RunReport& rep, const StepDiagnostics& row) {
    rep.min_entropy_slack = std::min(rep.min_entropy_slack, row.entropy_slack);
    if (rep.global_min_u.empty()) {
        rep.global_min_u = row.min_u;
        rep.global_max_u = row.max_u;
        return;
    }
    for (std::size_t i = 0; i < row.min_u.size(); ++i) {
        rep.global_min_u[i] = std::min(rep.global_min_u[i], row.min_u[i]);
        rep.global_max_u[i] = std::max(rep.global_max_u[i], row.max_u[i]);
    }
}

std::string quadrature_note(const DgSpace& sp) {
    std::ostringstream os;
    os << "volume rule degree " << sp.vol.degree << " (" << sp.vol.size() << " pts), facet rule degree "
       << sp.line.degree << "; newton norm: euclidean on coefficients";
    return os.str();
}

void finalize(RunReport& rep, const RunState& st) {
    rep.final_W = st.W;
    rep.final_t = st.t;
    rep.steps = st.n;
}

} // namespace

double condition_estimate(const Eigen::SparseMatrix<double>& J,
                          const Eigen::SparseLU<Eigen::SparseMatrix<double>>& solver) {
    double norm1 = 0.0;
    for (int k = 0; k < J.outerSize(); ++k) {
        double col = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(J, k); it; ++it)
            col += std::abs(it.value());
        norm1 = std::max(norm1, col);
    }
    if (J.rows() < 2000) {
        const Eigen::MatrixXd dense(J);
        const Eigen::MatrixXd inv = Eigen::PartialPivLU<Eigen::MatrixXd>(dense).inverse();
        return norm1 * inv.cwiseAbs().colwise().sum().maxCoeff();
    }
    // Randomized lower bound on |J^-1|_1 via a few factorized solves.
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(J.rows()));
    double inv1 = 0.0;
    Eigen::VectorXd v(J.rows());
    for (int probe = 0; probe < 6; ++probe) {
        for (int i = 0; i < v.size(); ++i) v[i] = (rng() & 1u) ? 1.0 : -1.0;
        inv1 = std::max(inv1, solver.solve(v).lpNorm<1>() / v.lpNorm<1>());
    }
    return norm1 * inv1;
}

NewtonResult newton_solve(const std::function<ResidualData(const Eigen::VectorXd&)>& res_fn,
                          const JacobianFn& jac_fn, const Eigen::VectorXd& W_freeze,
                          const Eigen::VectorXd& W_init, const NewtonConfig& cfg,
                          bool want_cond, const NewtonTraceFn& trace, NewtonWorkspace* workspace) {
    if (!(cfg.tol > 0.0) || cfg.s_max < 1)
        throw std::invalid_argument("newton_solve: need tol > 0 and s_max >= 1");
    NewtonWorkspace local;
    NewtonWorkspace& ws = workspace ? *workspace : local;

    NewtonResult nr;
    nr.W = W_init;
    if (!ws.factored || want_cond) {
        const Eigen::SparseMatrix<double> J = jac_fn(W_freeze);
        ws.solver.compute(J);
        if (ws.solver.info() != Eigen::Success) {
            ws.factored = false;
            throw std::runtime_error("newton_solve: Jacobian factorization failed");
        }
        ws.factored = true;
        nr.factorizations = 1;
        if (want_cond) nr.cond_estimate = condition_estimate(J, ws.solver);
    }
    const auto absorb = [&nr](const ResidualData& rd) {
        nr.sigma_l2sq = rd.sigma_l2sq;
        nr.min_coercivity_margin = std::min(nr.min_coercivity_margin, rd.coercivity_margin);
        nr.max_production_gap =
            std::max(nr.max_production_gap, std::abs(rd.production_lhs - rd.production_rhs) /
                                                std::max(1.0, std::abs(rd.production_rhs)));
        nr.clamp_events += rd.clamp_events;
    };
    // Keep the current factorization as long as the residual at least halves
    // per iteration (geometric, measured since the last factorization).
    constexpr double keep_ratio = 0.5;

    try {
        ResidualData rd = res_fn(nr.W);
        absorb(rd);
        nr.residual_norm = rd.R.norm();
        if (trace) trace(0, nr.residual_norm, nr.W);
        if (nr.residual_norm <= cfg.tol) {
            nr.converged = true;
            return nr;
        }
        double freeze_norm = nr.residual_norm;
        double keep = 1.0;
        for (int s = 1; s <= cfg.s_max; ++s) {
            nr.W -= ws.solver.solve(rd.R);
            nr.iterations = s;
            rd = res_fn(nr.W);
            absorb(rd);
            nr.residual_norm = rd.R.norm();
            if (trace) trace(s, nr.residual_norm, nr.W);
            if (nr.residual_norm <= cfg.tol) {
                nr.converged = true;
                return nr;
            }
            keep *= keep_ratio;
            if (nr.residual_norm > keep * freeze_norm && s < cfg.s_max) {
                ws.solver.compute(jac_fn(nr.W));
                if (ws.solver.info() != Eigen::Success) {
                    ws.factored = false;
                    throw std::runtime_error("newton_solve: Jacobian refactorization failed");
                }
                ++nr.factorizations;
                freeze_norm = nr.residual_norm;
                keep = 1.0;
            }
        }
    } catch (const std::runtime_error&) {
        // Degenerate or diverged state mid-iteration: report failure and let
        // the adaptive layer shrink the step.
        nr.converged = false;
        nr.residual_norm = std::numeric_limits<double>::infinity();
        return nr;
    }
    nr.converged = false;
    return nr;
}

RunState init_state(const SchemeDeps& deps) {
    if (!deps.space || !deps.ops || !deps.model || !deps.rho0)
        throw std::invalid_argument("init_state: incomplete dependencies");
    const DgSpace& sp = *deps.space;
    RunState st;
    st.prev_moments = rho0_moments(sp, sp.species, deps.rho0);
    std::vector<double> mean = rho0_means(sp, sp.species, deps.rho0);
    clamp_interior(*deps.model, mean);
    std::vector<double> w0(sp.species);
    deps.model->s_prime(mean.data(), w0.data());
    st.W = constant_state(sp, w0);
    return st;
}

StepResult advance(RunState& st, double tau, const SchemeDeps& deps, NewtonWorkspace* workspace) {
    if (!(tau > 0.0)) throw std::invalid_argument("advance: need tau > 0");
    if (std::isfinite(tau_cap(*deps.model)) && !(tau * deps.model->C_f < 1.0))
        throw std::invalid_argument("advance: tau must stay below 1/C_f (relative reaction bound)");

    StepResult out;
    if (deps.fail_injector && deps.fail_injector(st.n + 1, tau)) return out;

    SchemeParams params;
    params.eps = deps.eps;
    params.tau = tau;
    params.first_step = st.n == 0;

    // A cached factorization belongs to one step size; the Jacobian scales
    // its diffusion and regularization blocks with tau.
    if (workspace && workspace->tau != tau) {
        workspace->factored = false;
        workspace->tau = tau;
    }

    Eigen::VectorXd f_base;
    if (!deps.forcing.empty())
        f_base = forcing_moments(*deps.space, deps.space->species, deps.forcing, st.t + tau);

    const bool want_cond =
        deps.newton.cond_every > 0 && (st.n % deps.newton.cond_every) == 0;
    LocalBlocks scratch_local;
    LocalBlocks* scratch = workspace ? &workspace->blocks : &scratch_local;
    try {
        out.newton = newton_solve(
            [&](const Eigen::VectorXd& W) {
                return residual(*deps.space, *deps.ops, *deps.model, params, W, st.prev_moments,
                                f_base, scratch);
            },
            [&](const Eigen::VectorXd& W) {
                return frozen_jacobian(*deps.space, *deps.ops, *deps.model, params, W,
                                       deps.reaction_jacobian, scratch);
            },
            st.W, st.W, deps.newton, want_cond, {}, workspace);
    } catch (const SingularStateError&) {
        return out;
    } catch (const std::runtime_error&) {
        return out;
    }
    if (!out.newton.converged) return out;

    st.W = out.newton.W;
    st.t += tau;
    st.n += 1;
    st.prev_moments = uh_moments(*deps.space, *deps.model, st.W);
    out.ok = true;
    return out;
}

RunReport run_fixed(double tau, double T, const SchemeDeps& deps) {
    if (!(tau > 0.0) || T < 0.0) throw std::invalid_argument("run_fixed: need tau > 0 and T >= 0");
    const long long N_t = std::llround(T / tau);
    if (std::abs(static_cast<double>(N_t) * tau - T) > 1e-9 * std::max(1.0, T))
        throw std::invalid_argument("run_fixed: T must be an integer multiple of tau");

    RunState st = init_state(deps);
    RunReport rep;
    rep.quadrature_note = quadrature_note(*deps.space);
    rep.rows.push_back(initial_row(deps));
    double E_prev = rep.rows.front().entropy;
    double last_cond = 0.0;
    const int stride = std::max(1, deps.row_stride);
    NewtonWorkspace ws;

    for (long long n = 1; n <= N_t; ++n) {
        const StepResult sr = advance(st, tau, deps, &ws);
        absorb_attempt(rep, sr.newton);
        if (!sr.ok)
            throw NotConvergedError(sr.newton.residual_norm,
                                    "run_fixed: step " + std::to_string(n) + " failed (last |R| = " +
                                        std::to_string(sr.newton.residual_norm) + ")");
        const StepDiagnostics row = make_row(st, deps, sr.newton, tau, E_prev, last_cond);
        absorb_row(rep, row);
        E_prev = row.entropy;
        last_cond = row.cond_estimate;
        if (n % stride == 0 || n == N_t) rep.rows.push_back(row);
        if (deps.on_step) deps.on_step(st.t, st.W);
    }
    finalize(rep, st);
    return rep;
}

RunReport run_adaptive(const AdaptiveConfig& cfg, double T, const SchemeDeps& deps) {
    if (!(cfg.tau1 > 0.0)) throw std::invalid_argument("run_adaptive: need tau1 > 0");
    if (!(cfg.shrink > 0.0 && cfg.shrink < 1.0 && cfg.grow > 1.0))
        throw std::invalid_argument("run_adaptive: need 0 < shrink < 1 < grow");
    if (T < 0.0) throw std::invalid_argument("run_adaptive: need T >= 0");

    RunState st = init_state(deps);
    RunReport rep;
    rep.quadrature_note = quadrature_note(*deps.space);
    rep.rows.push_back(initial_row(deps));
    double E_prev = rep.rows.front().entropy;
    double last_cond = 0.0;
    const int stride = std::max(1, deps.row_stride);
    const double cap = tau_cap(*deps.model);
    double tau_base = std::min(cfg.tau1, cap);
    const double t_tol = 1e-12 * std::max(1.0, T);
    bool last_pushed = true;
    NewtonWorkspace ws;

    while (st.t < T - t_tol) {
        const double tau_try = std::min(tau_base, T - st.t);
        const StepResult sr = advance(st, tau_try, deps, &ws);
        absorb_attempt(rep, sr.newton);
        if (sr.ok) {
            if (T - st.t <= t_tol) st.t = T;
            const StepDiagnostics row = make_row(st, deps, sr.newton, tau_try, E_prev, last_cond);
            absorb_row(rep, row);
            E_prev = row.entropy;
            last_cond = row.cond_estimate;
            last_pushed = st.n % stride == 0;
            if (last_pushed)
                rep.rows.push_back(row);
            else if (st.t >= T - t_tol) {
                rep.rows.push_back(row);
                last_pushed = true;
            }
            tau_base = std::min(cfg.grow * tau_try, cap);
            if (deps.on_step) deps.on_step(st.t, st.W);
        } else {
            ++rep.failed_attempts;
            if (!cfg.retry_on_failure)
                throw NotConvergedError(sr.newton.residual_norm,
                                        "run_adaptive: step failed and retries are disabled");
            tau_base = cfg.shrink * tau_try;
            if (tau_base < 1e-12 * T)
                throw TimeStepUnderflow("run_adaptive: step size underflow at t = " +
                                        std::to_string(st.t) + " (tau = " +
                                        std::to_string(tau_base) + ")");
        }
    }
    finalize(rep, st);
    return rep;
}

} // namespace crossdiff
