#include "crossdiff/mesh.hpp"

#include <doctest.h>

#include <cmath>

using namespace crossdiff;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_SUITE("mesh") {

TEST_CASE("two-element interval") {
    const Mesh mesh = build_interval_mesh(0.0, 1.0, 2);
    REQUIRE(mesh.dim == 1);
    REQUIRE(mesh.elements.size() == 2);
    REQUIRE(mesh.interior_facets.size() == 1);
    REQUIRE(mesh.boundary_facets.size() == 2);
    CHECK(mesh.h == doctest::Approx(0.5));
    CHECK(mesh.domain_measure == doctest::Approx(1.0));

    const Facet& f = mesh.interior_facets[0];
    CHECK(f.p0[0] == doctest::Approx(0.5));
    CHECK(f.k1 == 0);
    CHECK(f.k2 == 1);
    CHECK(f.normal[0] == doctest::Approx(1.0)); // out of the left element
    CHECK(f.measure == doctest::Approx(1.0));   // point facet
    CHECK(f.hF == doctest::Approx(0.5));

    for (const Facet& bf : mesh.boundary_facets) {
        CHECK(bf.k2 == -1);
        if (bf.p0[0] < 0.25)
            CHECK(bf.normal[0] == doctest::Approx(-1.0));
        else
            CHECK(bf.normal[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("single-element interval has no interior facets") {
    const Mesh mesh = build_interval_mesh(0.0, 1.0, 1);
    CHECK(mesh.elements.size() == 1);
    CHECK(mesh.interior_facets.empty());
    CHECK(mesh.boundary_facets.size() == 2);
}

TEST_CASE("interval mesh size on a shifted domain") {
    const Mesh mesh = build_interval_mesh(-kPi / 4.0, 5.0 * kPi / 4.0, 118);
    CHECK(mesh.h == doctest::Approx(1.5 * kPi / 118.0).epsilon(1e-12));
    CHECK(mesh.h == doctest::Approx(0.04).epsilon(2e-2));
    CHECK(mesh.domain_measure == doctest::Approx(1.5 * kPi).epsilon(1e-12));
}

TEST_CASE("eta scales the facet length scale") {
    const Mesh mesh = build_interval_mesh(0.0, 1.0, 2, 2.0);
    CHECK(mesh.interior_facets[0].hF == doctest::Approx(0.25));
}

TEST_CASE("smallest structured triangulation") {
    const Mesh mesh = build_structured_tri_mesh(1, 1, Rect{0.0, 0.0, 1.0, 1.0});
    REQUIRE(mesh.dim == 2);
    CHECK(mesh.elements.size() == 2);
    CHECK(mesh.interior_facets.size() == 1);
    CHECK(mesh.h == doctest::Approx(std::sqrt(2.0)));
    CHECK(mesh.domain_measure == doctest::Approx(1.0));
    // The interior facet is the cell diagonal.
    const Facet& f = mesh.interior_facets[0];
    CHECK(f.measure == doctest::Approx(std::sqrt(2.0)));
    CHECK(f.k1 < f.k2);
}

TEST_CASE("structured triangulation counts and sizes") {
    const Mesh mesh = build_structured_tri_mesh(10, 10, Rect{0.0, 0.0, 1.0, 1.0});
    CHECK(mesh.elements.size() == 200);
    CHECK(mesh.h == doctest::Approx(std::sqrt(2.0) / 10.0).epsilon(1e-12));
    CHECK(mesh.domain_measure == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mesh.shape_regularity > 0.0);
}

TEST_CASE("facet length scale uses the smaller neighbour diameter") {
    const Mesh mesh = build_structured_tri_mesh(2, 2, Rect{0.0, 0.0, 1.0, 1.0}, 1.0);
    CHECK(mesh.elements.size() == 8);
    const double diam = std::sqrt(2.0) / 2.0;
    for (const Facet& f : mesh.interior_facets) {
        const double dmin =
            std::min(mesh.elements[f.k1].diameter, mesh.elements[f.k2].diameter);
        CHECK(f.hF == doctest::Approx(dmin));
        CHECK(dmin == doctest::Approx(diam));
    }
    const Mesh scaled = build_structured_tri_mesh(2, 2, Rect{0.0, 0.0, 1.0, 1.0}, 2.0);
    for (const Facet& f : scaled.interior_facets) CHECK(f.hF == doctest::Approx(diam / 2.0));
}

TEST_CASE("element measures add up to the domain measure") {
    const Mesh m1 = build_interval_mesh(-1.0, 2.5, 7);
    double sum = 0.0;
    for (const Element& e : m1.elements) sum += e.measure;
    CHECK(sum == doctest::Approx(m1.domain_measure).epsilon(1e-12));

    const Mesh m2 = build_structured_tri_mesh(3, 5, Rect{-1.0, 0.0, 2.0, 0.5});
    sum = 0.0;
    for (const Element& e : m2.elements) sum += e.measure;
    CHECK(sum == doctest::Approx(m2.domain_measure).epsilon(1e-12));
    CHECK(m2.domain_measure == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("interior facet normals are unit and point out of k1") {
    const Mesh mesh = build_structured_tri_mesh(3, 3, Rect{0.0, 0.0, 1.0, 1.0});
    for (const Facet& f : mesh.interior_facets) {
        CHECK(std::hypot(f.normal[0], f.normal[1]) == doctest::Approx(1.0).epsilon(1e-12));
        // Midpoint displaced along the normal must leave k1 towards k2: compare
        // against the segment between the two element centroids.
        const auto centroid = [&](int k) {
            const Element& el = mesh.elements[k];
            std::array<double, 2> c{0.0, 0.0};
            for (int v = 0; v < 3; ++v) {
                c[0] += mesh.nodes[el.v[v]][0] / 3.0;
                c[1] += mesh.nodes[el.v[v]][1] / 3.0;
            }
            return c;
        };
        const auto c1 = centroid(f.k1), c2 = centroid(f.k2);
        const double along = (c2[0] - c1[0]) * f.normal[0] + (c2[1] - c1[1]) * f.normal[1];
        CHECK(along > 0.0);
    }
}

TEST_CASE("reference coordinate pullback round-trips") {
    const Mesh mesh = build_structured_tri_mesh(2, 3, Rect{0.0, 0.0, 2.0, 1.0});
    for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
        const Element& el = mesh.elements[e];
        const std::array<double, 2> xi{0.25, 0.35};
        const std::array<double, 2> x{el.origin[0] + el.jac[0] * xi[0] + el.jac[1] * xi[1],
                                      el.origin[1] + el.jac[2] * xi[0] + el.jac[3] * xi[1]};
        const auto back = mesh.ref_coords(e, x);
        CHECK(back[0] == doctest::Approx(xi[0]).epsilon(1e-12));
        CHECK(back[1] == doctest::Approx(xi[1]).epsilon(1e-12));
    }
}

TEST_CASE("standard orientation keeps facets as built") {
    const Mesh mesh = build_structured_tri_mesh(2, 2, Rect{0.0, 0.0, 1.0, 1.0});
    const FluxOrientation orient = orient_facets(mesh, OrientationRule::standard, 0.5);
    for (int fi = 0; fi < static_cast<int>(mesh.interior_facets.size()); ++fi) {
        CHECK(orient.alpha[fi] == doctest::Approx(0.5));
        CHECK(orient.swapped[fi] == 0);
        const OrientedFacet of = oriented_facet(mesh, orient, fi);
        CHECK(of.k1 == mesh.interior_facets[fi].k1);
        CHECK(of.normal[0] == doctest::Approx(mesh.interior_facets[fi].normal[0]));
    }
}

TEST_CASE("directional orientation in 1D is downwind with unit weight") {
    const Mesh mesh = build_interval_mesh(0.0, 1.0, 5);
    const FluxOrientation orient = orient_facets(mesh, OrientationRule::directional);
    for (int fi = 0; fi < static_cast<int>(mesh.interior_facets.size()); ++fi) {
        const OrientedFacet of = oriented_facet(mesh, orient, fi);
        CHECK(of.alpha == doctest::Approx(1.0));
        CHECK(of.normal[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("directional orientation in 2D picks normals against (1,1)") {
    const Mesh mesh = build_structured_tri_mesh(3, 3, Rect{0.0, 0.0, 1.0, 1.0});
    const FluxOrientation orient = orient_facets(mesh, OrientationRule::directional);
    for (int fi = 0; fi < static_cast<int>(mesh.interior_facets.size()); ++fi) {
        const OrientedFacet of = oriented_facet(mesh, orient, fi);
        CHECK(of.normal[0] + of.normal[1] <= 1e-12);
        // Ties ((1,1) parallel to the facet) keep the lower element id as K1.
        if (std::abs(of.normal[0] + of.normal[1]) <= 1e-12) CHECK(of.k1 < of.k2);
    }
}

TEST_CASE("swapped facets flip the normal and the adjacency") {
    const Mesh mesh = build_structured_tri_mesh(3, 3, Rect{0.0, 0.0, 1.0, 1.0});
    const FluxOrientation orient = orient_facets(mesh, OrientationRule::directional);
    bool saw_swap = false;
    for (int fi = 0; fi < static_cast<int>(mesh.interior_facets.size()); ++fi) {
        if (orient.swapped[fi] == 0) continue;
        saw_swap = true;
        const Facet& f = mesh.interior_facets[fi];
        const OrientedFacet of = oriented_facet(mesh, orient, fi);
        CHECK(of.k1 == f.k2);
        CHECK(of.k2 == f.k1);
        CHECK(of.normal[0] == doctest::Approx(-f.normal[0]));
        CHECK(of.normal[1] == doctest::Approx(-f.normal[1]));
    }
    CHECK(saw_swap);
}

TEST_CASE("invalid meshes are rejected") {
    CHECK_THROWS_AS(build_interval_mesh(0.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_interval_mesh(1.0, 0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(build_structured_tri_mesh(0, 3, Rect{}), std::invalid_argument);
    CHECK_THROWS_AS(orient_facets(build_interval_mesh(0.0, 1.0, 2), OrientationRule::standard, 1.5),
                    std::invalid_argument);
}

} // TEST_SUITE
