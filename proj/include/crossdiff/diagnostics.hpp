#pragma once
#include "crossdiff/assembly.hpp"
#include "crossdiff/dgspace.hpp"
#include "crossdiff/models.hpp"
#include "crossdiff/system.hpp"

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

namespace crossdiff {

// One report row per accepted time step (row 0 describes the initial datum).
struct StepDiagnostics {
    int step = 0;
    double t = 0.0;
    double tau = 0.0;
    int newton_iters = 0;
    double entropy = 0.0;
    std::vector<double> mass;  // per species
    std::vector<double> min_u; // over volume quadrature points
    std::vector<double> max_u;
    double sigma_l2sq = 0.0;
    double jump_energy = 0.0;   // W^T (I x S) W
    double entropy_slack = 0.0; // budget minus dissipation, >= 0 expected
    double cond_estimate = 0.0; // last computed Jacobian condition estimate
};

double entropy_value(const DgSpace& space, const ModelSpec& model, const Eigen::VectorXd& W);
// Entropy/mass/range of an explicit density field (used for the initial row,
// where only rho0 exists and s'(rho0) is never formed).
double entropy_of_density(const DgSpace& space, const ModelSpec& model, const FieldFn& rho);

std::vector<double> mass_value(const DgSpace& space, const ModelSpec& model,
                               const Eigen::VectorXd& W);
std::vector<double> mass_of_density(const DgSpace& space, int species, const FieldFn& rho);

void minmax_u(const DgSpace& space, const ModelSpec& model, const Eigen::VectorXd& W,
              std::vector<double>& mn, std::vector<double>& mx);
void minmax_density(const DgSpace& space, int species, const FieldFn& rho, std::vector<double>& mn,
                    std::vector<double>& mx);

// Quadratic step functionals, summed over species.
double jump_energy(const DgSpace& space, const OperatorSet& ops, const Eigen::VectorXd& W);
double regularization_energy(const DgSpace& space, const OperatorSet& ops,
                             const Eigen::VectorXd& W);

// Slack of the per-step entropy inequality
//   eps*tau*|w|_C^2 + E_new + gamma*tau*|sigma|^2 + tau*jump <= E_prev + reaction budget,
// where the reaction budget is C_f*tau*|Omega| (absolute bound) or
// C_f*tau*(|Omega| + E_new) (relative bound). Negative slack beyond the solver
// tolerance means the inequality failed.
double entropy_audit(const ModelSpec& model, double eps, double tau, double E_prev, double E_new,
                     double sigma_l2sq, double jump, double wCw, double domain_measure);

// True when every species range sits strictly inside D (box domains compare
// against the bounds, simplex domains additionally check the total).
bool strictly_inside(const ModelSpec& model, const std::vector<double>& mn,
                     const std::vector<double>& mx);

// Space-time exact solution callbacks: values per species, gradients in the
// layout i*2 + c.
using ExactFn = std::function<void(double, const std::array<double, 2>&, double*)>;

struct ErrorNorms {
    std::vector<double> density;  // L2 norms of rho_exact - u(w_h)
    std::vector<double> gradient; // L2 norms of grad rho_exact + sigma_h
};
ErrorNorms error_norms(const DgSpace& space, const ModelSpec& model, const Eigen::VectorXd& W,
                       const Eigen::VectorXd& sigma, const ExactFn& exact_rho,
                       const ExactFn& exact_grad, double t);

std::vector<double> convergence_rates(const std::vector<double>& errors,
                                      const std::vector<double>& hs);

// Forcing that makes exact_rho solve the system: volume source
// g = d_t rho - div(A(rho) grad rho) - f(rho) with the divergence and time
// derivative taken by fourth-order central differences of the exact
// expressions, and boundary data (A(rho) grad rho) . n in closed form.
Forcing manufactured_forcing(const ModelSpec& model, int dim, const ExactFn& exact_rho,
                             const ExactFn& exact_grad, double fd_delta = 5e-4);

// Pointwise residual of the continuous system under a forcing, for checking
// manufactured setups independently of the scheme.
std::vector<double> pde_residual(const ModelSpec& model, int dim, const ExactFn& exact_rho,
                                 const ExactFn& exact_grad, const Forcing& forcing, double t,
                                 const std::array<double, 2>& x, double fd_delta = 1e-3);

// CSV schema: step,t,tau,newton_iters,entropy,mass_1..mass_N,min_u_1..,
// max_u_1..,sigma_l2,jump_energy,entropy_slack,cond_estimate
void write_csv(std::ostream& os, int species, const std::vector<StepDiagnostics>& rows);

} // namespace crossdiff
