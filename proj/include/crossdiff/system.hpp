#pragma once
#include "crossdiff/assembly.hpp"
#include "crossdiff/dgspace.hpp"
#include "crossdiff/models.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace crossdiff {

// u(w) degenerated so far at some quadrature point that the nonlinear blocks
// cannot be formed (non-finite entries or a singular local solve).
struct SingularStateError : std::runtime_error {
    int element;
    SingularStateError(int elem, const std::string& what);
};

// Per-element dense blocks of the nonlinear forms at a fixed state W:
// Nhat_K discretizes A(u)^T s''(u) sigma : theta, Ahat_K discretizes
// A(u) sigma : theta; both on the local vector layout (i*d + c)*nb + l.
struct LocalBlocks {
    int nloc = 0;
    std::vector<Eigen::MatrixXd> Nhat;
    std::vector<Eigen::MatrixXd> Ahat;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> Nfact;
    long clamp_events = 0; // quadrature states nudged back to 1e-14 inside D
};

struct SchemeParams {
    double eps = 0.0;  // regularization weight
    double tau = 0.0;  // current time step
    bool first_step = false;
};

// Inhomogeneities entering the right-hand side functional: a volume source
// g(t,x) per species, and boundary co-normal data g_N = (A(rho) grad rho) . n
// per species (zero for the natural no-flux condition).
struct Forcing {
    std::function<void(double, const std::array<double, 2>&, double*)> source;
    std::function<void(double, const std::array<double, 2>&, const std::array<double, 2>&,
                       double*)>
        neumann;

    bool empty() const { return !source && !neumann; }
};

LocalBlocks eval_local_blocks(const DgSpace& space, const ModelSpec& model,
                              const Eigen::VectorXd& W);

// Same, but reuses the storage in `blocks` (matrices, factorizations) when the
// sizes match. Callers on a hot path keep one LocalBlocks alive across
// evaluations to avoid reallocating per call.
void eval_local_blocks(const DgSpace& space, const ModelSpec& model, const Eigen::VectorXd& W,
                       LocalBlocks& blocks);

// (I_N x B^T M^-1) Ehat (I_N x M^-1 B) V with Ehat = Ahat Nhat^-1 Ahat^T
// applied element-locally between the two global gradient applications.
Eigen::VectorXd apply_E(const DgSpace& space, const OperatorSet& ops, const LocalBlocks& blocks,
                        const Eigen::VectorXd& V);

// Auxiliary-variable recovery for inspection: Z from the mass/gradient solve,
// Sigma from the local nonlinear solves, Q from projecting A sigma back.
struct SigmaQ {
    Eigen::VectorXd z, sigma, q; // vector layout
    double res_z = 0.0, res_sigma = 0.0, res_q = 0.0; // relative residuals
};
SigmaQ recover_sigma_q(const DgSpace& space, const ModelSpec& model, const OperatorSet& ops,
                       const Eigen::VectorXd& W);

// Moment vectors (integrals against every scalar basis function).
Eigen::VectorXd uh_moments(const DgSpace& space, const ModelSpec& model, const Eigen::VectorXd& W);
Eigen::VectorXd reaction_moments(const DgSpace& space, const ModelSpec& model,
                                 const Eigen::VectorXd& W);
// W-independent part of the right-hand side at time t: volume source plus
// boundary co-normal data.
Eigen::VectorXd forcing_moments(const DgSpace& space, int species, const Forcing& forcing,
                                double t);
// Weak initial data: moments of rho0 itself (never evaluates s'(rho0)), plus
// the per-species means used to seed the first nonlinear solve.
Eigen::VectorXd rho0_moments(const DgSpace& space, int species, const FieldFn& rho0);
std::vector<double> rho0_means(const DgSpace& space, int species, const FieldFn& rho0);

// Scalar-layout coefficients of the constant value v (per species block).
Eigen::VectorXd constant_state(const DgSpace& space, const std::vector<double>& values);

struct ResidualData {
    Eigen::VectorXd R;
    Eigen::VectorXd sigma;          // recovered at W as a byproduct
    double sigma_l2sq = 0.0;        // Sigma^T (I x M_vec) Sigma
    double coercivity_margin = 0.0; // Sigma^T Nhat Sigma - gamma * sigma_l2sq
    double production_lhs = 0.0;    // <(I x B^T M^-1) Ahat Sigma, W>
    double production_rhs = 0.0;    // Sigma^T Nhat Sigma
    long clamp_events = 0;
};

// Fully discrete residual
//   eps*tau*(I x C)W + (U_h(W) - prev) + tau*[(I x B^T M^-1)Ehat(W)(I x M^-1 B) + (I x S)]W
//   - tau*(reaction_moments(W) + f_base),
// where prev is U_h(W^n), or the rho0 moments on the first step, and f_base
// collects the W-independent forcing moments for the target time.
ResidualData residual(const DgSpace& space, const OperatorSet& ops, const ModelSpec& model,
                      const SchemeParams& params, const Eigen::VectorXd& W,
                      const Eigen::VectorXd& prev_moments, const Eigen::VectorXd& f_base,
                      LocalBlocks* scratch = nullptr);

// Quasi-Newton Jacobian frozen at W_lin: the state dependence of Ehat is not
// differentiated, only the u(w) and f(u(w)) moment terms are.
Eigen::SparseMatrix<double> frozen_jacobian(const DgSpace& space, const OperatorSet& ops,
                                            const ModelSpec& model, const SchemeParams& params,
                                            const Eigen::VectorXd& W_lin,
                                            bool reaction_jacobian = true,
                                            LocalBlocks* scratch = nullptr);

} // namespace crossdiff
