#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>

#include "doctest.h"
#include "lerwlab/grid.hpp"

using namespace lerwlab;

namespace {

CellSet rect(int x0, int x1, int y0, int y1) {
    CellSet s;
    for (int x = x0; x <= x1; ++x)
        for (int y = y0; y <= y1; ++y) s.insert(Cell{x, y});
    return s;
}

LatticeDomain rect_domain(int x0, int x1, int y0, int y1) {
    BoundaryEdge a{Cell{x0, 0}, Cell{x0 - 1, 0}};
    BoundaryEdge b{Cell{x1, 0}, Cell{x1 + 1, 0}};
    return build_domain(rect(x0, x1, y0, y1), a, b);
}

}  // namespace

TEST_CASE("rectangle domain basics") {
    LatticeDomain d = rect_domain(-2, 2, -1, 1);
    CHECK(d.size() == 15);
    CHECK(d.contains(Cell{0, 0}));
    CHECK(!d.contains(Cell{0, 2}));
    CHECK(d.a().inner == Cell{-2, 0});
    CHECK(d.a().outer == Cell{-3, 0});
    CHECK(!d.degenerate_corner());
}

TEST_CASE("connectivity and simple connectivity are enforced") {
    CellSet two;
    two.insert(Cell{0, 0});
    two.insert(Cell{2, 0});
    BoundaryEdge a{Cell{0, 0}, Cell{-1, 0}}, b{Cell{2, 0}, Cell{3, 0}};
    CHECK_THROWS_AS(build_domain(two, a, b), NotConnected);

    CellSet ring = rect(-1, 1, -1, 1);
    ring.erase(Cell{0, 0});
    BoundaryEdge ra{Cell{-1, 0}, Cell{-2, 0}}, rb{Cell{1, 0}, Cell{2, 0}};
    CHECK_THROWS_AS(build_domain(ring, ra, rb, false), NotSimplyConnected);
}

TEST_CASE("origin requirement and marked-edge validation") {
    CellSet off = rect(5, 6, 0, 0);
    BoundaryEdge a{Cell{5, 0}, Cell{4, 0}}, b{Cell{6, 0}, Cell{7, 0}};
    CHECK_THROWS_AS(build_domain(off, a, b), OriginMissing);
    CHECK(build_domain(off, a, b, false).size() == 2);

    CellSet sq = rect(-1, 1, -1, 1);
    BoundaryEdge inner_edge{Cell{0, 0}, Cell{1, 0}};  // outer cell is in A
    CHECK_THROWS_AS(build_domain(sq, inner_edge, b), BadMarkedEdge);
}

TEST_CASE("single cell boundary trace") {
    CellSet one;
    one.insert(Cell{0, 0});
    BoundaryEdge a{Cell{0, 0}, Cell{-1, 0}}, b{Cell{0, 0}, Cell{1, 0}};
    LatticeDomain d = build_domain(one, a, b);
    CHECK(d.degenerate_corner());
    JordanPolygon poly = jordan_boundary(d);
    CHECK(poly.vertices.size() == 4);
    CHECK(poly.corners().size() == 4);
    CHECK(poly.signed_area() == doctest::Approx(1.0));
    CHECK(poly.point_inside(cpx(0, 0)));
    CHECK(!poly.point_inside(cpx(2, 0)));
    CHECK(std::abs(poly.segment_midpoint(poly.a_index) - cpx(-0.5, 0)) < 1e-12);
    CHECK(std::abs(poly.segment_midpoint(poly.b_index) - cpx(0.5, 0)) < 1e-12);
}

TEST_CASE("L tromino trace has six corners and area three") {
    CellSet tromino;
    tromino.insert(Cell{0, 0});
    tromino.insert(Cell{1, 0});
    tromino.insert(Cell{0, 1});
    BoundaryEdge a{Cell{0, 0}, Cell{0, -1}}, b{Cell{0, 1}, Cell{0, 2}};
    LatticeDomain d = build_domain(tromino, a, b);
    JordanPolygon poly = jordan_boundary(d);
    CHECK(poly.corners().size() == 6);
    CHECK(poly.signed_area() == doctest::Approx(3.0));
    // counterclockwise: positive area and unit-step vertices
    for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
        cpx step = poly.vertices[(i + 1) % poly.vertices.size()] - poly.vertices[i];
        CHECK(std::abs(step) == doctest::Approx(1.0));
    }
}

TEST_CASE("boundary edge enumeration") {
    CellSet one;
    one.insert(Cell{0, 0});
    CHECK(boundary_edges(one).size() == 4);
    CHECK(boundary_edges(rect(-1, 1, -1, 1)).size() == 12);
}

TEST_CASE("approximate disk domain") {
    LatticeDomain d = approximate_domain(disk_shape(1.0), 32, cpx(-1, 0), cpx(1, 0));
    CHECK(d.contains(Cell{0, 0}));
    double area = static_cast<double>(d.size());
    double expect = 3.14159265 * 32 * 32;
    CHECK(area > 0.9 * expect);
    CHECK(area < 1.1 * expect);
    CHECK(d.a().midpoint().real() < -24.0);
    CHECK(d.b().midpoint().real() > 24.0);
    CHECK_THROWS_AS(approximate_domain(disk_shape(1.0), 0, cpx(-1, 0), cpx(1, 0)), GridError);
}

TEST_CASE("serialization round trip") {
    LatticeDomain d = rect_domain(-2, 3, -1, 2);
    std::stringstream ss;
    save_domain(ss, d);
    LatticeDomain e = load_domain(ss);
    CHECK(e.size() == d.size());
    CHECK(e.a() == d.a());
    CHECK(e.b() == d.b());
    for (const Cell& c : d.cells()) CHECK(e.contains(c));
}

TEST_CASE("hull cells include cut-off pockets") {
    LatticeDomain d = rect_domain(-1, 1, -1, 1);
    std::vector<Cell> path = {Cell{0, -1}, Cell{0, 0}, Cell{0, 1}};
    CellSet hull = hull_cells(d, path, d.b());
    for (const Cell& c : path) CHECK(hull.count(c) == 1);
    // the left column is disconnected from b+ and must be engulfed
    CHECK(hull.count(Cell{-1, 0}) == 1);
    CHECK(hull.count(Cell{-1, 1}) == 1);
    CHECK(hull.count(Cell{1, 0}) == 0);
}
