#pragma once
#include "crossdiff/basis.hpp"
#include "crossdiff/mesh.hpp"
#include "crossdiff/quadrature.hpp"

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>

namespace crossdiff {

// Broken polynomial space of degree p with N species on a mesh. Scalar
// coefficient vectors are species-major: dof(i,e,l) = i*S + e*nb + l with
// S = elements*nb. Vector-valued fields (gradients, fluxes) additionally get
// a component index between species and element: vdof(i,c,e,l).
struct DgSpace {
    const Mesh* mesh = nullptr; // not owned; must outlive the space
    int degree = 0;
    int species = 1;
    int nb = 0;
    RefBasis basis;
    QuadRule vol;  // reference volume rule, exact to degree >= 2p+2
    QuadRule line; // reference [0,1] rule for 2D facet integrals, degree >= 2p+1

    // Reference basis tables at the volume quadrature points.
    Eigen::MatrixXd vol_val;          // nq x nb
    Eigen::MatrixXd vol_gx, vol_gy;   // nq x nb, reference gradients
    // Derivative moment matrices: Gc(m,l) = int d_c(phi_m) phi_l,
    // Hcd(m,l) = int d_c d_d(phi_m) phi_l over the reference element.
    Eigen::MatrixXd Gx, Gy;
    std::array<Eigen::MatrixXd, 4> Hess;

    int scalar_dofs() const { return nb * static_cast<int>(mesh->elements.size()); }
    int total_dofs() const { return species * scalar_dofs(); }
    int vec_dofs() const { return species * mesh->dim * scalar_dofs(); }
    int dof(int i, int e, int l) const { return i * scalar_dofs() + e * nb + l; }
    int vdof(int i, int c, int e, int l) const {
        return (i * mesh->dim + c) * scalar_dofs() + e * nb + l;
    }
    // |det J| of the affine map, i.e. the element mass block is eldet(e)*I.
    double eldet(int e) const {
        return mesh->dim == 1 ? mesh->elements[e].measure : 2.0 * mesh->elements[e].measure;
    }
};

DgSpace make_space(const Mesh& mesh, int degree, int species);

// Pointwise user function: fills values[0..species) at a physical point.
using FieldFn = std::function<void(const std::array<double, 2>&, double*)>;

Eigen::VectorXd l2_project(const DgSpace& space, const FieldFn& f);

Eigen::VectorXd eval_field(const DgSpace& space, const Eigen::VectorXd& w, int elem,
                           const std::array<double, 2>& xi);

// Quadrature points on a facet with the pullbacks into both adjacent elements
// (xi2 is meaningful only for interior facets). Weights include the facet
// measure, so sums over points integrate over the facet.
struct FacetQuadPoint {
    std::array<double, 2> x;
    std::array<double, 2> xi1;
    std::array<double, 2> xi2;
    double w = 1.0;
};

std::vector<FacetQuadPoint> facet_quadrature(const DgSpace& space, const Facet& f);

struct LiftedGradient {
    Eigen::VectorXd grad; // nabla_DG w, vector layout
    Eigen::VectorXd lift; // jump lifting L(w), vector layout
};

LiftedGradient dg_gradient(const DgSpace& space, const Eigen::VectorXd& w,
                           const FluxOrientation& orient);

// Lifted broken Hessian; layout ((i*d + c1)*d + c2)*S + e*nb + l.
Eigen::VectorXd dg_hessian(const DgSpace& space, const Eigen::VectorXd& w,
                           const FluxOrientation& orient);

// Sample every species at the volume quadrature points of every element and
// stream CSV rows "element,x[,y],species,value".
void sample_field_csv(const DgSpace& space, const Eigen::VectorXd& w, std::ostream& os);

} // namespace crossdiff
