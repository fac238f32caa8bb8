#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace crossdiff {

// Simplex with a precomputed affine map x = origin + J*xi from the reference
// element ([0,1], or the unit triangle {xi >= 0, xi0+xi1 <= 1}).
struct Element {
    std::array<int, 3> v{-1, -1, -1}; // vertex ids; v[2] unused in 1D
    std::array<double, 2> origin{};
    std::array<double, 4> jac{};     // row-major J; 1D uses jac[0] only
    std::array<double, 4> inv_jac{};
    double measure = 0.0;            // length or area
    double diameter = 0.0;
};

struct Facet {
    int k1 = -1;
    int k2 = -1;                     // -1 for boundary facets
    std::array<double, 2> normal{};  // unit, points out of k1
    double measure = 1.0;            // edge length; 1 in 1D (point facet)
    double hF = 0.0;                 // eta^-1 * min adjacent diameter (interior only)
    std::array<double, 2> p0{};      // endpoints; p0 == p1 in 1D
    std::array<double, 2> p1{};
};

struct Mesh {
    int dim = 1;
    double eta = 1.0;
    std::vector<std::array<double, 2>> nodes;
    std::vector<Element> elements;
    std::vector<Facet> interior_facets;
    std::vector<Facet> boundary_facets;
    double h = 0.0;                  // max element diameter
    double domain_measure = 0.0;
    double shape_regularity = 1.0;   // min inradius/diameter over elements (2D)

    // Pull a physical point back to reference coordinates of an element.
    std::array<double, 2> ref_coords(int elem, const std::array<double, 2>& x) const;
    std::string summary() const;
};

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

Mesh build_interval_mesh(double a, double b, int M, double eta = 1.0);
Mesh build_structured_tri_mesh(int nx, int ny, const Rect& box, double eta = 1.0);

enum class OrientationRule { standard, directional };

// Per-facet flux data; the mesh itself stays immutable. `swapped` flips which
// adjacent element acts as K1 (and hence the sign of n_F) for flux purposes.
struct FluxOrientation {
    OrientationRule rule = OrientationRule::standard;
    std::vector<double> alpha;
    std::vector<std::uint8_t> swapped;
};

FluxOrientation orient_facets(const Mesh& mesh, OrientationRule rule, double alpha = 0.5);

// Interior facet as seen through an orientation.
struct OrientedFacet {
    int k1 = -1;
    int k2 = -1;
    std::array<double, 2> normal{};
    double alpha = 1.0;
    double measure = 1.0;
    double hF = 0.0;
    const Facet* facet = nullptr;
};

OrientedFacet oriented_facet(const Mesh& mesh, const FluxOrientation& orient, int fi);

} // namespace crossdiff
