#include "crossdiff/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace crossdiff {

namespace {

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

void finalize_element_2d(Element& e, const std::vector<std::array<double, 2>>& nodes) {
    const auto& a = nodes[e.v[0]];
    const auto& b = nodes[e.v[1]];
    const auto& c = nodes[e.v[2]];
    e.origin = a;
    e.jac = {b[0] - a[0], c[0] - a[0], b[1] - a[1], c[1] - a[1]};
    const double det = e.jac[0] * e.jac[3] - e.jac[1] * e.jac[2];
    e.inv_jac = {e.jac[3] / det, -e.jac[1] / det, -e.jac[2] / det, e.jac[0] / det};
    e.measure = 0.5 * std::abs(det);
    e.diameter = std::max({dist(a, b), dist(b, c), dist(c, a)});
}

} // namespace

std::array<double, 2> Mesh::ref_coords(int elem, const std::array<double, 2>& x) const {
    const Element& e = elements[elem];
    const double dx = x[0] - e.origin[0];
    if (dim == 1) return {dx * e.inv_jac[0], 0.0};
    const double dy = x[1] - e.origin[1];
    return {e.inv_jac[0] * dx + e.inv_jac[1] * dy, e.inv_jac[2] * dx + e.inv_jac[3] * dy};
}

std::string Mesh::summary() const {
    std::ostringstream os;
    os << "mesh: dim=" << dim << ", " << elements.size() << " elements, "
       << interior_facets.size() << " interior facets, " << boundary_facets.size()
       << " boundary facets, h=" << h;
    if (dim == 2) os << ", shape regularity=" << shape_regularity;
    return os.str();
}

Mesh build_interval_mesh(double a, double b, int M, double eta) {
    if (M < 1) throw std::invalid_argument("build_interval_mesh: need M >= 1");
    if (!(a < b)) throw std::invalid_argument("build_interval_mesh: need a < b");
    if (!(eta > 0.0)) throw std::invalid_argument("build_interval_mesh: need eta > 0");

    Mesh mesh;
    mesh.dim = 1;
    mesh.eta = eta;
    mesh.nodes.resize(M + 1);
    for (int i = 0; i <= M; ++i) mesh.nodes[i] = {a + (b - a) * i / M, 0.0};

    mesh.elements.resize(M);
    for (int k = 0; k < M; ++k) {
        Element& e = mesh.elements[k];
        e.v = {k, k + 1, -1};
        e.origin = mesh.nodes[k];
        const double hk = mesh.nodes[k + 1][0] - mesh.nodes[k][0];
        e.jac = {hk, 0.0, 0.0, 0.0};
        e.inv_jac = {1.0 / hk, 0.0, 0.0, 0.0};
        e.measure = hk;
        e.diameter = hk;
        mesh.h = std::max(mesh.h, hk);
        mesh.domain_measure += hk;
    }

    for (int i = 1; i < M; ++i) {
        Facet f;
        f.k1 = i - 1;
        f.k2 = i;
        f.normal = {1.0, 0.0};
        f.measure = 1.0;
        f.hF = std::min(mesh.elements[i - 1].diameter, mesh.elements[i].diameter) / eta;
        f.p0 = f.p1 = mesh.nodes[i];
        mesh.interior_facets.push_back(f);
    }
    Facet left;
    left.k1 = 0;
    left.normal = {-1.0, 0.0};
    left.p0 = left.p1 = mesh.nodes.front();
    mesh.boundary_facets.push_back(left);
    Facet right;
    right.k1 = M - 1;
    right.normal = {1.0, 0.0};
    right.p0 = right.p1 = mesh.nodes.back();
    mesh.boundary_facets.push_back(right);
    return mesh;
}

Mesh build_structured_tri_mesh(int nx, int ny, const Rect& box, double eta) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_structured_tri_mesh: need nx, ny >= 1");
    if (!(box.x0 < box.x1) || !(box.y0 < box.y1))
        throw std::invalid_argument("build_structured_tri_mesh: degenerate box");
    if (!(eta > 0.0)) throw std::invalid_argument("build_structured_tri_mesh: need eta > 0");

    Mesh mesh;
    mesh.dim = 2;
    mesh.eta = eta;
    mesh.nodes.resize((nx + 1) * (ny + 1));
    const auto node_id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            mesh.nodes[node_id(i, j)] = {box.x0 + (box.x1 - box.x0) * i / nx,
                                         box.y0 + (box.y1 - box.y0) * j / ny};

    // Each cell splits along its bottom-left to top-right diagonal.
    mesh.elements.reserve(2 * nx * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int v00 = node_id(i, j), v10 = node_id(i + 1, j);
            const int v01 = node_id(i, j + 1), v11 = node_id(i + 1, j + 1);
            Element lower;
            lower.v = {v00, v10, v11};
            Element upper;
            upper.v = {v00, v11, v01};
            mesh.elements.push_back(lower);
            mesh.elements.push_back(upper);
        }

    double min_ratio = 1.0;
    for (Element& e : mesh.elements) {
        finalize_element_2d(e, mesh.nodes);
        mesh.h = std::max(mesh.h, e.diameter);
        mesh.domain_measure += e.measure;
        const auto& a = mesh.nodes[e.v[0]];
        const auto& b = mesh.nodes[e.v[1]];
        const auto& c = mesh.nodes[e.v[2]];
        const double perimeter = dist(a, b) + dist(b, c) + dist(c, a);
        const double inradius = 2.0 * e.measure / perimeter;
        min_ratio = std::min(min_ratio, inradius / e.diameter);
    }
    mesh.shape_regularity = min_ratio;

    // Match up shared edges via sorted vertex pairs.
    std::map<std::pair<int, int>, std::vector<int>> edge_owners;
    for (int k = 0; k < static_cast<int>(mesh.elements.size()); ++k) {
        const auto& v = mesh.elements[k].v;
        for (int s = 0; s < 3; ++s) {
            const int p = v[s], q = v[(s + 1) % 3];
            edge_owners[{std::min(p, q), std::max(p, q)}].push_back(k);
        }
    }

    for (const auto& [edge, owners] : edge_owners) {
        Facet f;
        f.k1 = owners[0];
        f.p0 = mesh.nodes[edge.first];
        f.p1 = mesh.nodes[edge.second];
        f.measure = dist(f.p0, f.p1);
        // Unit normal to the edge, oriented out of k1.
        const double tx = (f.p1[0] - f.p0[0]) / f.measure;
        const double ty = (f.p1[1] - f.p0[1]) / f.measure;
        f.normal = {ty, -tx};
        const Element& e1 = mesh.elements[f.k1];
        const std::array<double, 2> centroid = {
            (mesh.nodes[e1.v[0]][0] + mesh.nodes[e1.v[1]][0] + mesh.nodes[e1.v[2]][0]) / 3.0,
            (mesh.nodes[e1.v[0]][1] + mesh.nodes[e1.v[1]][1] + mesh.nodes[e1.v[2]][1]) / 3.0};
        const std::array<double, 2> mid = {0.5 * (f.p0[0] + f.p1[0]), 0.5 * (f.p0[1] + f.p1[1])};
        if (f.normal[0] * (centroid[0] - mid[0]) + f.normal[1] * (centroid[1] - mid[1]) > 0.0) {
            f.normal[0] = -f.normal[0];
            f.normal[1] = -f.normal[1];
        }
        if (owners.size() == 2) {
            f.k2 = owners[1];
            f.hF = std::min(mesh.elements[f.k1].diameter, mesh.elements[f.k2].diameter) / eta;
            mesh.interior_facets.push_back(f);
        } else {
            mesh.boundary_facets.push_back(f);
        }
    }
    return mesh;
}

FluxOrientation orient_facets(const Mesh& mesh, OrientationRule rule, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("orient_facets: alpha must lie in [0,1]");

    FluxOrientation orient;
    orient.rule = rule;
    const int nf = static_cast<int>(mesh.interior_facets.size());
    orient.alpha.assign(nf, rule == OrientationRule::directional ? 1.0 : alpha);
    orient.swapped.assign(nf, 0);
    if (rule == OrientationRule::directional && mesh.dim == 2) {
        // Pick the K1 whose outward normal n satisfies (1,1)^T n <= 0; on ties
        // ((1,1) parallel to the facet) keep the lower element id as K1, which
        // is how the facets were built.
        for (int fi = 0; fi < nf; ++fi) {
            const Facet& f = mesh.interior_facets[fi];
            const double d = f.normal[0] + f.normal[1];
            if (d > 1e-12) orient.swapped[fi] = 1;
        }
    }
    return orient;
}

OrientedFacet oriented_facet(const Mesh& mesh, const FluxOrientation& orient, int fi) {
    const Facet& f = mesh.interior_facets[fi];
    OrientedFacet of;
    of.facet = &f;
    of.alpha = orient.alpha[fi];
    of.measure = f.measure;
    of.hF = f.hF;
    if (orient.swapped[fi]) {
        of.k1 = f.k2;
        of.k2 = f.k1;
        of.normal = {-f.normal[0], -f.normal[1]};
    } else {
        of.k1 = f.k1;
        of.k2 = f.k2;
        of.normal = f.normal;
    }
    return of;
}

} // namespace crossdiff
