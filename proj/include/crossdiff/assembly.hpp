#pragma once
#include "crossdiff/dgspace.hpp"
#include "crossdiff/models.hpp"

#include <Eigen/Sparse>
#include <iosfwd>
#include <vector>

namespace crossdiff {

// Scalar (single-species) mass matrix; block diagonal, and in fact diagonal
// for the orthonormalized basis.
Eigen::SparseMatrix<double> assemble_mass(const DgSpace& space);

// LDG gradient form b_h: rows follow the vector-field layout (component-major
// scalar blocks), columns the scalar layout, so b_h(w, psi) = Psi^T B W.
Eigen::SparseMatrix<double> assemble_gradient(const DgSpace& space, const FluxOrientation& orient);

// Jump stabilization s_h with eta_F = A_sup / hF; optionally reports the
// per-facet eta_F values.
Eigen::SparseMatrix<double> assemble_stability(const DgSpace& space, double A_sup,
                                               const FluxOrientation& orient,
                                               std::vector<double>* eta_out = nullptr);

// Regularization form c_h: ell = 1 is the H1-type form (mass + lifted
// gradient product + h^-1 jump penalty), ell = 2 the H2-type form (adds the
// lifted Hessian product, h^-1 gradient-jump and h^-3 jump penalties).
Eigen::SparseMatrix<double> assemble_regularization(const DgSpace& space, int ell,
                                                    const FluxOrientation& orient);

struct OperatorSet {
    int ell = 1;
    double A_sup = 0.0;
    Eigen::SparseMatrix<double> M; // S x S
    Eigen::SparseMatrix<double> B; // (d*S) x S
    Eigen::SparseMatrix<double> S; // S x S
    Eigen::SparseMatrix<double> C; // S x S
    Eigen::VectorXd M_diag;        // per scalar dof; the basis makes M diagonal
    // M^-1 B stored by rows; the Jacobian assembly walks one element's rows.
    Eigen::SparseMatrix<double, Eigen::RowMajor> MinvB;
    std::vector<double> eta_F;     // per interior facet

    // Exact inverse-mass application to any stack of scalar-layout blocks
    // (species and/or components), in place.
    void apply_Minv(Eigen::VectorXd& v) const;
};

// Assemble everything for a model; ell = 0 picks the default: 1 in 1D, and in
// 2D 1 iff the model declares s''A continuous up to the boundary of D, else 2.
OperatorSet build_operators(const DgSpace& space, const ModelSpec& model,
                            const FluxOrientation& orient, int ell = 0);

// Debug dump: one "row col value" triplet per line.
void dump_triplets(const Eigen::SparseMatrix<double>& mat, std::ostream& os);

} // namespace crossdiff
