#include "crossdiff/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace crossdiff {

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::string path = dir + "/" + name;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("experiments: cannot write '" + path + "'");
    return os;
}

// With m = 2, rho(x,t) = (x-2)^2 / (12(5-t)) solves d_t rho = (rho^2)_xx
// exactly, so only the boundary flux data is inhomogeneous.
ExactFn pm_exact() {
    return [](double t, const std::array<double, 2>& x, double* out) {
        double d = x[0] - 2.0;
        out[0] = d * d / (12.0 * (5.0 - t));
    };
}

ExactFn pm_exact_grad() {
    return [](double t, const std::array<double, 2>& x, double* out) {
        out[0] = (x[0] - 2.0) / (6.0 * (5.0 - t));
        out[1] = 0.0;
    };
}

Forcing pm_forcing() {
    Forcing f;
    f.neumann = [](double t, const std::array<double, 2>& x, const std::array<double, 2>& n,
                   double* out) {
        double d = x[0] - 2.0;
        double rho = d * d / (12.0 * (5.0 - t));
        double gx = d / (6.0 * (5.0 - t));
        out[0] = 2.0 * rho * gx * n[0];
    };
    return f;
}

FieldFn waiting_rho0() {
    return [](const std::array<double, 2>& x, double* out) {
        double s = std::sin(x[0]);
        out[0] = (x[0] >= 0.0 && x[0] <= kPi) ? s * s : 0.0;
    };
}

ModelSpec skt_convergence_model() {
    std::array<std::array<double, 3>, 2> a{{{0.0, 1.0, 1.0}, {0.0, 1.0, 1.0}}};
    std::array<std::array<double, 3>, 2> b{};
    return skt(a, b, std::array<double, 2>{1.0, 1.0});
}

ExactFn skt_exact() {
    return [](double t, const std::array<double, 2>& x, double* out) {
        double e = std::exp(-t);
        out[0] = 0.25 * std::cos(2.0 * kPi * x[0]) * std::cos(kPi * x[1]) * e + 0.5;
        out[1] = 0.25 * std::cos(kPi * x[0]) * std::cos(2.0 * kPi * x[1]) * e + 0.5;
    };
}

ExactFn skt_exact_grad() {
    return [](double t, const std::array<double, 2>& x, double* out) {
        double e = std::exp(-t);
        out[0] = -0.5 * kPi * std::sin(2.0 * kPi * x[0]) * std::cos(kPi * x[1]) * e;
        out[1] = -0.25 * kPi * std::cos(2.0 * kPi * x[0]) * std::sin(kPi * x[1]) * e;
        out[2] = -0.25 * kPi * std::sin(kPi * x[0]) * std::cos(2.0 * kPi * x[1]) * e;
        out[3] = -0.5 * kPi * std::cos(kPi * x[0]) * std::sin(2.0 * kPi * x[1]) * e;
    };
}

ModelSpec turing_model() {
    std::array<std::array<double, 3>, 2> a{{{0.05, 2.5e-5, 1.025}, {0.05, 0.075, 2.5e-5}}};
    std::array<std::array<double, 3>, 2> b{{{59.7, 24.875, 19.9}, {49.75, 19.9, 19.9}}};
    return skt(a, b, std::array<double, 2>{4.0, 1.0});
}

FieldFn turing_rho0() {
    return [](const std::array<double, 2>& x, double* out) {
        auto bump = [](double dx, double dy) {
            return std::max(1.0 - 64.0 * dx * dx - 8.0 * dy * dy, 0.0);
        };
        out[0] = 2.0 + 0.31 * bump(x[0] - 0.25, x[1] - 0.25) +
                 0.31 * bump(x[0] - 0.75, x[1] - 0.75);
        out[1] = 0.5;
    };
}

FieldFn mixture_rho0() {
    return [](const std::array<double, 2>& x, double* out) {
        double s = std::sin(kPi * x[0]);
        out[0] = 0.3 + 0.2 * s * s;
        out[1] = 0.2 + 0.2 * (1.0 - s * s);
    };
}

std::vector<std::array<double, 2>> ref_lattice(int dim, int n) {
    std::vector<std::array<double, 2>> pts;
    if (dim == 1) {
        if (n == 1) return {{0.5, 0.0}};
        for (int j = 0; j < n; ++j) pts.push_back({double(j) / (n - 1), 0.0});
        return pts;
    }
    if (n == 1) return {{1.0 / 3.0, 1.0 / 3.0}};
    for (int j = 0; j < n; ++j)
        for (int k = 0; j + k < n; ++k)
            pts.push_back({double(j) / (n - 1), double(k) / (n - 1)});
    return pts;
}

std::array<double, 2> phys_point(const Element& el, const std::array<double, 2>& xi) {
    return {el.origin[0] + el.jac[0] * xi[0] + el.jac[1] * xi[1],
            el.origin[1] + el.jac[2] * xi[0] + el.jac[3] * xi[1]};
}

int locate_1d(const Mesh& mesh, double x, std::array<double, 2>& xi) {
    for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
        const Element& el = mesh.elements[e];
        double lo = el.origin[0], hi = lo + el.jac[0];
        if (x >= lo - 1e-12 && x <= hi + 1e-12) {
            xi = mesh.ref_coords(e, {x, 0.0});
            return e;
        }
    }
    throw std::invalid_argument("experiments: point outside the mesh");
}

std::vector<double> u_at(const DgSpace& space, const ModelSpec& model, const Eigen::VectorXd& W,
                         int elem, const std::array<double, 2>& xi) {
    Eigen::VectorXd w = eval_field(space, W, elem, xi);
    std::vector<double> u(space.species);
    model.u(w.data(), u.data());
    return u;
}

struct SweepRun {
    double h = 0.0;
    int steps = 0;
    ErrorNorms errs;
};

void write_table(const std::string& dir, const std::string& name, const ConvergenceTable& tab) {
    std::ofstream os = open_out(dir, name);
    os << "h,err_density,rate_density,err_gradient,rate_gradient,steps\n";
    for (std::size_t i = 0; i < tab.h.size(); ++i) {
        os << num(tab.h[i]) << "," << num(tab.err_density[i]) << ",";
        if (i) os << num(tab.rate_density[i - 1]);
        os << "," << num(tab.err_gradient[i]) << ",";
        if (i) os << num(tab.rate_gradient[i - 1]);
        os << "," << tab.steps[i] << "\n";
    }
}

ConvergenceTable collect(const std::vector<int>& meshes,
                         const std::function<SweepRun(int)>& runner) {
    std::vector<std::future<SweepRun>> futs;
    futs.reserve(meshes.size());
    for (int m : meshes) futs.push_back(std::async(std::launch::async, runner, m));
    ConvergenceTable tab;
    for (auto& f : futs) {
        SweepRun r = f.get();
        tab.h.push_back(r.h);
        tab.err_density.push_back(r.errs.density[0]);
        tab.err_gradient.push_back(r.errs.gradient[0]);
        tab.steps.push_back(r.steps);
    }
    tab.rate_density = convergence_rates(tab.err_density, tab.h);
    tab.rate_gradient = convergence_rates(tab.err_gradient, tab.h);
    return tab;
}

void log_table(std::ostream& log, const std::string& label, const ConvergenceTable& tab) {
    log << label << "\n";
    for (std::size_t i = 0; i < tab.h.size(); ++i) {
        log << "  h = " << tab.h[i] << "  err_density = " << tab.err_density[i];
        if (i) log << "  (rate " << tab.rate_density[i - 1] << ")";
        log << "  err_gradient = " << tab.err_gradient[i];
        if (i) log << "  (rate " << tab.rate_gradient[i - 1] << ")";
        log << "\n";
    }
}

} // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"pm-convergence", "pm-waiting-time",
                                                   "pm-regularization", "skt-convergence",
                                                   "skt-turing", "mixture-demo"};
    return names;
}

ProblemSetup preset_setup(const std::string& preset) {
    ProblemSetup ps;
    if (preset == "pm-convergence") {
        ps.dim = 1;
        ps.model = porous_medium(2.0);
        ExactFn ex = pm_exact();
        ps.rho0 = [ex](const std::array<double, 2>& x, double* out) { ex(0.0, x, out); };
        ps.forcing = pm_forcing();
        ps.exact_rho = ex;
        ps.exact_grad = pm_exact_grad();
        return ps;
    }
    if (preset == "pm-waiting-time" || preset == "pm-regularization") {
        ps.dim = 1;
        ps.model = porous_medium(2.0);
        ps.rho0 = waiting_rho0();
        return ps;
    }
    if (preset == "skt-convergence") {
        ps.dim = 2;
        ps.model = skt_convergence_model();
        ExactFn ex = skt_exact();
        ps.rho0 = [ex](const std::array<double, 2>& x, double* out) { ex(0.0, x, out); };
        ps.exact_rho = ex;
        ps.exact_grad = skt_exact_grad();
        ps.forcing = manufactured_forcing(ps.model, 2, ps.exact_rho, ps.exact_grad);
        return ps;
    }
    if (preset == "skt-turing") {
        ps.dim = 2;
        ps.model = turing_model();
        ps.rho0 = turing_rho0();
        return ps;
    }
    if (preset == "mixture-demo") {
        ps.dim = 1;
        ps.model = volume_filling_mixture({1.0, 0.5});
        ps.rho0 = mixture_rho0();
        return ps;
    }
    throw std::invalid_argument("experiments: unknown preset '" + preset + "'");
}

ProblemSetup default_setup(const RunConfig& cfg) {
    ProblemSetup ps;
    ps.dim = cfg.mesh.dim;
    ps.model = cfg.make_model();
    double ax = cfg.mesh.dim == 1 ? cfg.mesh.a : cfg.mesh.box.x0;
    double bx = cfg.mesh.dim == 1 ? cfg.mesh.b : cfg.mesh.box.x1;
    std::string name = ps.model.name;
    int N = ps.model.N;
    ps.rho0 = [=](const std::array<double, 2>& x, double* out) {
        double s = std::sin(kPi * (x[0] - ax) / (bx - ax));
        double s2 = s * s;
        if (name == "porous_medium") {
            out[0] = 0.3 + 0.2 * s2;
        } else if (name == "skt") {
            out[0] = 2.0 + 0.1 * s2;
            out[1] = 0.5;
        } else if (name == "tumor_growth") {
            out[0] = 0.5 + 0.2 * s2;
            out[1] = 0.25 + 0.1 * (1.0 - s2);
        } else {
            for (int i = 0; i < N; ++i) {
                double si = std::sin(kPi * (x[0] - ax) / (bx - ax) + i);
                out[i] = (0.8 / N) * (0.6 + 0.4 * si * si);
            }
        }
    };
    return ps;
}

ConvergenceTable pm_convergence(int degree, const std::vector<int>& meshes, double T,
                                const std::string& outdir) {
    auto runner = [degree, T](int M) {
        ProblemSetup ps = preset_setup("pm-convergence");
        Mesh mesh = build_interval_mesh(0.0, 1.0, M);
        FluxOrientation orient = orient_facets(mesh, OrientationRule::directional);
        DgSpace space = make_space(mesh, degree, ps.model.N);
        OperatorSet ops = build_operators(space, ps.model, orient);
        SchemeDeps deps;
        deps.space = &space;
        deps.ops = &ops;
        deps.model = &ps.model;
        deps.rho0 = ps.rho0;
        deps.forcing = ps.forcing;
        double tau = std::pow(1.0 / M, degree + 1);
        // Tighten the per-step tolerance with tau: stopping each step at a
        // fixed 1e-12 leaves an O(tol/tau) mass-mode drift over T/tau steps,
        // which floors the fine-mesh errors above the discretization level.
        deps.newton.tol = std::min(1e-12, std::max(1.3e-9 * tau, 3e-15));
        deps.newton.s_max = 50;
        deps.row_stride = std::max(1L, std::lround(T / tau) / 64);
        RunReport rep = run_fixed(tau, T, deps);
        SigmaQ sq = recover_sigma_q(space, ps.model, ops, rep.final_W);
        SweepRun out;
        out.h = mesh.h;
        out.steps = rep.steps;
        out.errs = error_norms(space, ps.model, rep.final_W, sq.sigma, ps.exact_rho,
                               ps.exact_grad, T);
        return out;
    };
    ConvergenceTable tab = collect(meshes, runner);
    if (!outdir.empty())
        write_table(outdir, "rates_p" + std::to_string(degree) + ".csv", tab);
    return tab;
}

ConvergenceTable skt_convergence(int degree, const std::vector<int>& meshes, double T,
                                 const std::string& outdir) {
    auto runner = [degree, T](int nx) {
        ProblemSetup ps = preset_setup("skt-convergence");
        Mesh mesh = build_structured_tri_mesh(nx, nx, Rect{0.0, 0.0, 1.0, 1.0});
        FluxOrientation orient = orient_facets(mesh, OrientationRule::directional);
        DgSpace space = make_space(mesh, degree, ps.model.N);
        OperatorSet ops = build_operators(space, ps.model, orient);
        SchemeDeps deps;
        deps.space = &space;
        deps.ops = &ops;
        deps.model = &ps.model;
        deps.rho0 = ps.rho0;
        deps.forcing = ps.forcing;
        deps.newton.tol = 1e-6;
        deps.newton.s_max = 50;
        double hgrid = 1.0 / nx; // structured-grid spacing; mesh.h is the hypotenuse
        long Nt = std::max(1L, static_cast<long>(std::ceil(T / std::pow(hgrid, degree + 1) -
                                                           1e-9)));
        deps.row_stride = std::max(1L, Nt / 64);
        RunReport rep = run_fixed(T / static_cast<double>(Nt), T, deps);
        SigmaQ sq = recover_sigma_q(space, ps.model, ops, rep.final_W);
        SweepRun out;
        out.h = mesh.h;
        out.steps = rep.steps;
        out.errs = error_norms(space, ps.model, rep.final_W, sq.sigma, ps.exact_rho,
                               ps.exact_grad, T);
        return out;
    };
    ConvergenceTable tab = collect(meshes, runner);
    if (!outdir.empty())
        write_table(outdir, "rates_p" + std::to_string(degree) + ".csv", tab);
    return tab;
}

WaitingTimeResult pm_waiting_time(double eps, double tol, const std::string& outdir) {
    ProblemSetup ps = preset_setup("pm-waiting-time");
    Mesh mesh = build_interval_mesh(-kPi / 4.0, 5.0 * kPi / 4.0, 118);
    FluxOrientation orient = orient_facets(mesh, OrientationRule::directional);
    DgSpace space = make_space(mesh, 5, ps.model.N);
    OperatorSet ops = build_operators(space, ps.model, orient);

    WaitingTimeResult out;
    std::array<double, 2> xi0{};
    int e0 = locate_1d(mesh, 0.0, xi0);
    out.t.push_back(0.0);
    out.u_at0.push_back(0.0); // rho0 vanishes at x = 0

    SchemeDeps deps;
    deps.space = &space;
    deps.ops = &ops;
    deps.model = &ps.model;
    deps.rho0 = ps.rho0;
    deps.eps = eps;
    deps.newton.tol = tol;
    deps.newton.s_max = 100;
    deps.on_step = [&](double t, const Eigen::VectorXd& W) {
        out.t.push_back(t);
        out.u_at0.push_back(u_at(space, ps.model, W, e0, xi0)[0]);
    };
    out.report = run_fixed(1e-3, 0.2, deps);

    out.E0 = out.report.rows.front().entropy;
    out.M0 = out.report.rows.front().mass[0];
    for (const StepDiagnostics& row : out.report.rows)
        out.mass_drift = std::max(out.mass_drift, std::abs(row.mass[0] - out.M0));

    if (!outdir.empty()) {
        std::ofstream os = open_out(outdir, "series.csv");
        write_csv(os, ps.model.N, out.report.rows);
        std::ofstream os2 = open_out(outdir, "value_at0.csv");
        os2 << "t,u_at_0\n";
        for (std::size_t i = 0; i < out.t.size(); ++i)
            os2 << num(out.t[i]) << "," << num(out.u_at0[i]) << "\n";
    }
    return out;
}

TuringResult skt_turing(double T, const std::string& outdir) {
    ProblemSetup ps = preset_setup("skt-turing");
    Mesh mesh = build_structured_tri_mesh(10, 10, Rect{0.0, 0.0, 1.0, 1.0});
    FluxOrientation orient = orient_facets(mesh, OrientationRule::directional);
    DgSpace space = make_space(mesh, 3, ps.model.N);
    OperatorSet ops = build_operators(space, ps.model, orient);

    TuringResult out;
    out.var0 = density_variance(space, ps.model.N, ps.rho0, 0);

    SchemeDeps deps;
    deps.space = &space;
    deps.ops = &ops;
    deps.model = &ps.model;
    deps.rho0 = ps.rho0;
    deps.newton.tol = 1e-6;
    deps.newton.s_max = 50;
    bool snapped = false;
    deps.on_step = [&](double t, const Eigen::VectorXd& W) {
        if (!snapped && t >= 0.5) {
            snapped = true;
            if (!outdir.empty()) {
                std::filesystem::create_directories(outdir);
                emit_field(space, ps.model, W, outdir + "/snapshot_t0.5.csv");
            }
        }
    };

    AdaptiveConfig ad;
    ad.tau1 = 1e-4;
    out.report = run_adaptive(ad, T, deps);
    out.reached_T = std::abs(out.report.final_t - T) <= 1e-9 * T;
    out.var_final = field_variance(space, ps.model, out.report.final_W, 0);

    if (!outdir.empty()) {
        std::ofstream os = open_out(outdir, "series.csv");
        write_csv(os, ps.model.N, out.report.rows);
        emit_field(space, ps.model, out.report.final_W, outdir + "/snapshot_t10.csv");
    }
    return out;
}

RunReport mixture_demo(const std::string& outdir) {
    ProblemSetup ps = preset_setup("mixture-demo");
    Mesh mesh = build_interval_mesh(0.0, 1.0, 16);
    FluxOrientation orient = orient_facets(mesh, OrientationRule::directional);
    DgSpace space = make_space(mesh, 2, ps.model.N);
    OperatorSet ops = build_operators(space, ps.model, orient);

    SchemeDeps deps;
    deps.space = &space;
    deps.ops = &ops;
    deps.model = &ps.model;
    deps.rho0 = ps.rho0;
    deps.newton.tol = 1e-10;
    deps.newton.s_max = 50;
    RunReport rep = run_fixed(1e-3, 0.05, deps);

    if (!outdir.empty()) {
        std::ofstream os = open_out(outdir, "series.csv");
        write_csv(os, ps.model.N, rep.rows);
    }
    return rep;
}

std::vector<NewtonTrace> pm_newton_study(bool smooth, const std::vector<double>& eps_values,
                                         const std::string& outdir) {
    ProblemSetup ps = preset_setup(smooth ? "pm-convergence" : "pm-regularization");
    Mesh mesh = smooth ? build_interval_mesh(0.0, 1.0, 32)
                       : build_interval_mesh(-kPi / 4.0, 5.0 * kPi / 4.0, 118);
    FluxOrientation orient = orient_facets(mesh, OrientationRule::directional);
    DgSpace space = make_space(mesh, smooth ? 2 : 5, ps.model.N);
    OperatorSet ops = build_operators(space, ps.model, orient);
    double tol = smooth ? 1e-10 : 1e-12;
    double tau = 1e-3;

    SchemeDeps deps;
    deps.space = &space;
    deps.ops = &ops;
    deps.model = &ps.model;
    deps.rho0 = ps.rho0;

    std::vector<NewtonTrace> traces;
    for (double eps : eps_values) {
        NewtonTrace tr;
        tr.eps = eps;
        RunState st = init_state(deps);
        SchemeParams pr{eps, tau, true};
        Eigen::VectorXd f_base = Eigen::VectorXd::Zero(space.total_dofs());
        if (!ps.forcing.empty())
            f_base = forcing_moments(space, ps.model.N, ps.forcing, tau);

        const auto res_fn = [&](const Eigen::VectorXd& W) {
            return residual(space, ops, ps.model, pr, W, st.prev_moments, f_base);
        };
        const auto jac_fn = [&](const Eigen::VectorXd& W) {
            return frozen_jacobian(space, ops, ps.model, pr, W);
        };
        // Per-iterate record of |R|, the sup norm of W, and the condition
        // number of the Jacobian evaluated at the current iterate.
        const auto record = [&](int, double rn, const Eigen::VectorXd& W) {
            tr.residual.push_back(rn);
            tr.winf.push_back(W.lpNorm<Eigen::Infinity>());
            double cond = std::numeric_limits<double>::infinity();
            try {
                Eigen::SparseMatrix<double> Js = jac_fn(W);
                Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Js);
                if (lu.info() == Eigen::Success) cond = condition_estimate(Js, lu);
            } catch (const std::exception&) {
            }
            tr.cond.push_back(cond);
        };
        NewtonConfig cfg;
        cfg.tol = tol;
        cfg.s_max = 50;
        try {
            NewtonResult nr = newton_solve(res_fn, jac_fn, st.W, st.W, cfg, false, record);
            tr.converged = nr.converged;
            tr.singular = !nr.converged && !std::isfinite(nr.residual_norm);
        } catch (const std::exception&) {
            tr.singular = true;
        }
        traces.push_back(std::move(tr));
    }

    if (!outdir.empty()) {
        std::ofstream os = open_out(outdir,
                                    smooth ? "newton_smooth.csv" : "newton_degenerate.csv");
        os << "eps,s,residual,winf,cond\n";
        for (const NewtonTrace& tr : traces)
            for (std::size_t s = 0; s < tr.residual.size(); ++s)
                os << num(tr.eps) << "," << s << "," << num(tr.residual[s]) << ","
                   << num(tr.winf[s]) << "," << num(tr.cond[s]) << "\n";
    }
    return traces;
}

void emit_field(const DgSpace& space, const ModelSpec& model, const Eigen::VectorXd& W,
                const std::string& path, int samples_per_edge) {
    if (samples_per_edge < 1)
        throw std::invalid_argument("emit_field: samples_per_edge must be positive");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("emit_field: cannot write '" + path + "'");
    int dim = space.mesh->dim;
    os << "element,x";
    if (dim == 2) os << ",y";
    for (int i = 0; i < space.species; ++i) os << ",u_" << (i + 1);
    os << "\n";
    std::vector<std::array<double, 2>> lattice = ref_lattice(dim, samples_per_edge);
    std::vector<double> u(space.species);
    for (std::size_t e = 0; e < space.mesh->elements.size(); ++e) {
        for (const auto& xi : lattice) {
            std::array<double, 2> x = phys_point(space.mesh->elements[e], xi);
            Eigen::VectorXd w = eval_field(space, W, static_cast<int>(e), xi);
            model.u(w.data(), u.data());
            os << e << "," << num(x[0]);
            if (dim == 2) os << "," << num(x[1]);
            for (int i = 0; i < space.species; ++i) os << "," << num(u[i]);
            os << "\n";
        }
    }
}

double field_variance(const DgSpace& space, const ModelSpec& model, const Eigen::VectorXd& W,
                      int comp) {
    const Mesh& mesh = *space.mesh;
    std::vector<double> w(space.species), u(space.species);
    double vol = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        double det = space.eldet(static_cast<int>(e));
        for (int q = 0; q < space.vol.size(); ++q) {
            for (int i = 0; i < space.species; ++i) {
                double v = 0.0;
                for (int l = 0; l < space.nb; ++l)
                    v += W[space.dof(i, static_cast<int>(e), l)] * space.vol_val(q, l);
                w[i] = v;
            }
            model.u(w.data(), u.data());
            double scale = space.vol.weights[q] * det;
            vol += scale;
            m1 += scale * u[comp];
            m2 += scale * u[comp] * u[comp];
        }
    }
    double mean = m1 / vol;
    return m2 / vol - mean * mean;
}

double density_variance(const DgSpace& space, int species, const FieldFn& rho, int comp) {
    const Mesh& mesh = *space.mesh;
    std::vector<double> vals(species);
    double vol = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        double det = space.eldet(static_cast<int>(e));
        for (int q = 0; q < space.vol.size(); ++q) {
            std::array<double, 2> xi{space.vol.points[q][0], space.vol.points[q][1]};
            rho(phys_point(mesh.elements[e], xi), vals.data());
            double scale = space.vol.weights[q] * det;
            vol += scale;
            m1 += scale * vals[comp];
            m2 += scale * vals[comp] * vals[comp];
        }
    }
    double mean = m1 / vol;
    return m2 / vol - mean * mean;
}

int run_experiment(const std::string& preset, const std::string& outdir, std::ostream& log) {
    std::string dir = outdir.empty() ? preset : outdir + "/" + preset;
    bool ok = true;
    auto check = [&](bool pass, const std::string& what) {
        log << (pass ? "PASS: " : "FAIL: ") << what << "\n";
        ok = ok && pass;
    };

    if (preset == "pm-convergence") {
        for (int p : {1, 2}) {
            ConvergenceTable tab = pm_convergence(p, {8, 16, 32, 64}, 1.0, dir);
            log_table(log, "porous medium, p = " + std::to_string(p), tab);
            check(std::abs(tab.rate_density.back() - (p + 1)) <= 0.2,
                  "density rate near " + std::to_string(p + 1));
            check(std::abs(tab.rate_gradient.back() - p) <= 0.25,
                  "gradient rate near " + std::to_string(p));
        }
        return ok ? 0 : 1;
    }
    if (preset == "pm-waiting-time") {
        double tol = 1e-6;
        WaitingTimeResult wt = pm_waiting_time(1e-6, tol, dir);
        double tstar = 1.0 / 12.0;
        double before = 0.0;
        bool exceeded = false;
        for (std::size_t i = 0; i < wt.t.size(); ++i) {
            if (wt.t[i] <= 0.9 * tstar) before = std::max(before, wt.u_at0[i]);
            if (wt.t[i] < 2.0 * tstar && wt.u_at0[i] > 1e-3) exceeded = true;
        }
        log << "max u(0) before 0.9 t* = " << before << ", mass drift = " << wt.mass_drift
            << ", min slack = " << wt.report.min_entropy_slack << "\n";
        check(before <= 1e-3, "support edge stays flat until 0.9 t*");
        check(exceeded, "support moves before 2 t*");
        check(wt.report.min_entropy_slack >= -10.0 * tol, "entropy inequality per step");
        double bound = std::sqrt(1e-6) * std::sqrt(1.5 * kPi * 0.2) * std::sqrt(wt.E0);
        check(wt.mass_drift <= bound, "mass drift within the a priori bound");
        return ok ? 0 : 1;
    }
    if (preset == "pm-regularization") {
        std::vector<NewtonTrace> sm = pm_newton_study(true, {0.0}, dir);
        check(sm[0].converged, "interior-range datum converges with eps = 0");
        std::vector<NewtonTrace> dg =
            pm_newton_study(false, {1e-2, 1e-4, 1e-6, 1e-8}, dir);
        for (const NewtonTrace& tr : dg) {
            double cmax = 0.0;
            for (double c : tr.cond)
                if (std::isfinite(c)) cmax = std::max(cmax, c);
            log << "eps = " << tr.eps << ": iterations = " << tr.residual.size()
                << ", converged = " << (tr.converged ? "yes" : "no") << ", max cond = " << cmax
                << (tr.singular ? " (singular block hit)" : "") << "\n";
        }
        return ok ? 0 : 1;
    }
    if (preset == "skt-convergence") {
        ConvergenceTable tab = skt_convergence(1, {4, 8, 16}, 0.5, dir);
        log_table(log, "SKT, p = 1, species 1", tab);
        check(std::abs(tab.rate_density.back() - 2.0) <= 0.2, "density rate near 2");
        check(std::abs(tab.rate_gradient.back() - 1.0) <= 0.25, "gradient rate near 1");
        return ok ? 0 : 1;
    }
    if (preset == "skt-turing") {
        TuringResult tr = skt_turing(10.0, dir);
        log << "var(rho_1): initial = " << tr.var0 << ", final = " << tr.var_final
            << "; min rho_1 over run = " << tr.report.global_min_u[0] << "\n";
        check(tr.reached_T, "reached the final time");
        check(tr.var_final > 10.0 * tr.var0, "pattern amplification");
        check(tr.report.global_min_u[0] > 0.0, "rho_1 stays positive");
        return ok ? 0 : 1;
    }
    if (preset == "mixture-demo") {
        RunReport rep = mixture_demo(dir);
        ModelSpec model = volume_filling_mixture({1.0, 0.5});
        log << "steps = " << rep.steps << ", min slack = " << rep.min_entropy_slack << "\n";
        check(strictly_inside(model, rep.global_min_u, rep.global_max_u),
              "densities stay inside the simplex");
        check(rep.min_entropy_slack >= -10.0 * 1e-10, "entropy inequality per step");
        return ok ? 0 : 1;
    }
    throw std::invalid_argument("experiments: unknown preset '" + preset + "'");
}

int run_config(const RunConfig& cfg, std::ostream& log) {
    ProblemSetup ps = cfg.preset.empty() ? default_setup(cfg) : preset_setup(cfg.preset);
    if (ps.dim != cfg.mesh.dim)
        throw std::invalid_argument("experiments: preset '" + cfg.preset + "' needs mesh.dim = " +
                                    std::to_string(ps.dim));
    Mesh mesh = cfg.make_mesh();
    FluxOrientation orient = make_orientation(mesh, cfg.mesh);
    DgSpace space = make_space(mesh, cfg.mesh.degree, ps.model.N);
    OperatorSet ops = build_operators(space, ps.model, orient, cfg.ell);

    SchemeDeps deps;
    deps.space = &space;
    deps.ops = &ops;
    deps.model = &ps.model;
    deps.rho0 = ps.rho0;
    deps.forcing = ps.forcing;
    deps.eps = cfg.eps;
    deps.newton = cfg.newton;
    RunReport rep = cfg.time.adaptive ? run_adaptive(cfg.time.adapt, cfg.time.T, deps)
                                      : run_fixed(cfg.time.tau, cfg.time.T, deps);

    if (!cfg.output_dir.empty()) {
        std::ofstream os = open_out(cfg.output_dir, "series.csv");
        write_csv(os, ps.model.N, rep.rows);
        emit_field(space, ps.model, rep.final_W, cfg.output_dir + "/final_field.csv");
    }

    log << mesh.summary() << "\n";
    log << "steps = " << rep.steps << " (newton total " << rep.total_newton << ", failed attempts "
        << rep.failed_attempts << "), final t = " << rep.final_t << "\n";
    log << "entropy: initial = " << rep.rows.front().entropy
        << ", final = " << rep.rows.back().entropy
        << ", min slack = " << rep.min_entropy_slack << "\n";
    for (int i = 0; i < ps.model.N; ++i)
        log << "u_" << (i + 1) << " range over run: [" << rep.global_min_u[i] << ", "
            << rep.global_max_u[i] << "]\n";
    return 0;
}

} // namespace crossdiff
