#pragma once
#include "crossdiff/config.hpp"
#include "crossdiff/diagnostics.hpp"

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace crossdiff {

const std::vector<std::string>& preset_names();

// Closed-form problem description behind a preset tag: model, initial datum,
// forcing, and (when known) the exact solution.
struct ProblemSetup {
    int dim = 1;
    ModelSpec model;
    FieldFn rho0;
    Forcing forcing;
    ExactFn exact_rho;
    ExactFn exact_grad;
};

ProblemSetup preset_setup(const std::string& preset);
// Bland per-model initial datum for config-driven runs without a preset tag.
ProblemSetup default_setup(const RunConfig& cfg);

struct ConvergenceTable {
    std::vector<double> h;
    std::vector<double> err_density;  // tracked species only
    std::vector<double> err_gradient;
    std::vector<double> rate_density; // between consecutive meshes
    std::vector<double> rate_gradient;
    std::vector<int> steps;
};

// Manufactured-solution sweeps with tau chosen so that h^{p+1} steps tile
// [0, T] exactly; meshes run in parallel.
ConvergenceTable pm_convergence(int degree, const std::vector<int>& meshes, double T,
                                const std::string& outdir);
ConvergenceTable skt_convergence(int degree, const std::vector<int>& meshes, double T,
                                 const std::string& outdir);

struct WaitingTimeResult {
    RunReport report;
    std::vector<double> t;     // accepted times, including 0
    std::vector<double> u_at0; // discrete solution value at x = 0
    double E0 = 0.0;
    double M0 = 0.0;
    double mass_drift = 0.0; // max |M_n - M_0|
};
WaitingTimeResult pm_waiting_time(double eps, double tol, const std::string& outdir);

struct TuringResult {
    RunReport report;
    double var0 = 0.0; // spatial variance of rho_1 in the initial datum
    double var_final = 0.0;
    bool reached_T = false;
};
TuringResult skt_turing(double T, const std::string& outdir);

RunReport mixture_demo(const std::string& outdir);

// First-time-step Newton behavior for one regularization weight: stopping
// criterion, iterate sup norm, and the dense condition number of the
// Jacobian re-evaluated at each iterate.
struct NewtonTrace {
    double eps = 0.0;
    bool converged = false;
    bool singular = false; // a local block became singular mid-iteration
    std::vector<double> residual;
    std::vector<double> winf;
    std::vector<double> cond;
};
std::vector<NewtonTrace> pm_newton_study(bool smooth, const std::vector<double>& eps_values,
                                         const std::string& outdir);

// Deterministic CSV of u(w_h) sampled on a per-element reference lattice.
void emit_field(const DgSpace& space, const ModelSpec& model, const Eigen::VectorXd& W,
                const std::string& path, int samples_per_edge = 4);

// Spatial variance of one component of u(w_h), or of an explicit density.
double field_variance(const DgSpace& space, const ModelSpec& model, const Eigen::VectorXd& W,
                      int comp);
double density_variance(const DgSpace& space, int species, const FieldFn& rho, int comp);

// Runs a canned experiment, writes its artifacts under outdir/<preset>, and
// returns a process exit code: 0 iff every built-in assertion passed.
int run_experiment(const std::string& preset, const std::string& outdir, std::ostream& log);

// Config-driven run; writes series.csv and final_field.csv when an output
// directory is configured.
int run_config(const RunConfig& cfg, std::ostream& log);

} // namespace crossdiff
