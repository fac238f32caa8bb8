#pragma once
#include "crossdiff/diagnostics.hpp"
#include "crossdiff/system.hpp"

#include <Eigen/Sparse>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace crossdiff {

struct NewtonConfig {
    double tol = 1e-8; // Euclidean norm of the coefficient residual
    int s_max = 50;    // max linear iterations per step
    int cond_every = 0; // estimate the Jacobian condition number every k-th
                        // step (0 disables it)
};

struct AdaptiveConfig {
    double tau1 = 1e-4;
    double shrink = 0.2;
    double grow = 1.1;
    bool retry_on_failure = true;
};

struct NotConvergedError : std::runtime_error {
    double last_residual;
    NotConvergedError(double r, const std::string& what)
        : std::runtime_error(what), last_residual(r) {}
};

struct TimeStepUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NewtonResult {
    Eigen::VectorXd W;
    int iterations = 0;
    bool converged = false;
    double residual_norm = 0.0;
    double cond_estimate = 0.0; // 0 when not requested
    int factorizations = 0;
    // State of the last residual evaluation (the accepted one on success).
    double sigma_l2sq = 0.0;
    double min_coercivity_margin = std::numeric_limits<double>::infinity();
    double max_production_gap = 0.0; // relative entropy-production identity gap
    long clamp_events = 0;
};

using JacobianFn = std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&)>;
// Observer called after every residual evaluation with (s, |R|, W^s).
using NewtonTraceFn = std::function<void(int, double, const Eigen::VectorXd&)>;

// Factorization cache that a time loop threads through consecutive solves, so
// a step refactorizes only when the iteration stalls. `tau` tags the step
// size the cached Jacobian was built with; the caller invalidates on change.
struct NewtonWorkspace {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    bool factored = false;
    double tau = 0.0;
    LocalBlocks blocks; // reused by the residual/Jacobian assembly
};

// Quasi-Newton iteration: the Jacobian is factorized at W_freeze and reused
// across iterations, so each sweep costs one back-substitution. If the
// residual stops contracting (worse than a fixed ratio per iteration since
// the last factorization), the Jacobian is refactorized at the current
// iterate; smooth steps never hit that path, while near-degenerate states
// (densities pinned against the boundary of D) degrade to per-iterate
// updates instead of stalling below the tolerance. With a workspace whose
// factorization is still marked valid, the up-front factorization is skipped
// too, and the stall rule alone decides when the cache has gone stale.
NewtonResult newton_solve(const std::function<ResidualData(const Eigen::VectorXd&)>& res_fn,
                          const JacobianFn& jac_fn, const Eigen::VectorXd& W_freeze,
                          const Eigen::VectorXd& W_init, const NewtonConfig& cfg,
                          bool want_cond = false, const NewtonTraceFn& trace = {},
                          NewtonWorkspace* workspace = nullptr);

// Everything a run needs besides the step sizes.
struct SchemeDeps {
    const DgSpace* space = nullptr;
    const OperatorSet* ops = nullptr;
    const ModelSpec* model = nullptr;
    FieldFn rho0;    // initial density, evaluated only weakly
    Forcing forcing; // optional source / boundary data
    double eps = 0.0;
    NewtonConfig newton;
    bool reaction_jacobian = true;
    int row_stride = 1; // keep every k-th report row (aggregates always track
                        // every step); the final row is always kept
    std::function<void(double, const Eigen::VectorXd&)> on_step; // after accept
    std::function<bool(int, double)> fail_injector; // test seam: (step, tau)
};

struct RunState {
    double t = 0.0;
    int n = 0; // accepted steps
    Eigen::VectorXd W;
    Eigen::VectorXd prev_moments; // rho0 moments before step one, U_h(W^n) after
};

RunState init_state(const SchemeDeps& deps);

struct StepResult {
    bool ok = false;
    NewtonResult newton;
};

// One attempted step; mutates state only on success. The optional workspace
// carries the Jacobian factorization across steps.
StepResult advance(RunState& state, double tau, const SchemeDeps& deps,
                   NewtonWorkspace* workspace = nullptr);

struct RunReport {
    std::vector<StepDiagnostics> rows;
    Eigen::VectorXd final_W;
    double final_t = 0.0;
    int steps = 0;
    int total_newton = 0;
    int failed_attempts = 0;
    long clamp_events = 0;
    double min_coercivity_margin = std::numeric_limits<double>::infinity();
    double max_production_gap = 0.0;
    double min_entropy_slack = std::numeric_limits<double>::infinity();
    std::vector<double> global_min_u, global_max_u; // over all accepted steps
    std::string quadrature_note;
};

RunReport run_fixed(double tau, double T, const SchemeDeps& deps);
RunReport run_adaptive(const AdaptiveConfig& cfg, double T, const SchemeDeps& deps);

// Condition estimators for the frozen Jacobian: exact dense 1-norm condition
// number below 2000 dofs, randomized probe estimate above.
double condition_estimate(const Eigen::SparseMatrix<double>& J,
                          const Eigen::SparseLU<Eigen::SparseMatrix<double>>& solver);

} // namespace crossdiff
