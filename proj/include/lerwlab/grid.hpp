#pragma once
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lerwlab {

using cpx = std::complex<double>;

struct Cell {
    int x = 0, y = 0;
    bool operator==(const Cell& o) const { return x == o.x && y == o.y; }
    bool operator!=(const Cell& o) const { return !(*this == o); }
    bool operator<(const Cell& o) const { return y < o.y || (y == o.y && x < o.x); }
    cpx center() const { return {double(x), double(y)}; }
};

struct CellHash {
    std::size_t operator()(const Cell& c) const {
        uint64_t v = (uint64_t(uint32_t(c.x)) << 32) | uint32_t(c.y);
        v *= 0x9e3779b97f4a7c15ULL;
        return std::size_t(v ^ (v >> 32));
    }
};

using CellSet = std::unordered_set<Cell, CellHash>;

// Boundary edge: inner cell in A, outer neighbor not in A.  The midpoint of
// the shared unit-square side is the marked point on the Jordan boundary.
struct BoundaryEdge {
    Cell inner, outer;
    cpx midpoint() const {
        return {(inner.x + outer.x) / 2.0, (inner.y + outer.y) / 2.0};
    }
    // unit vector from outer to inner
    Cell orientation() const { return {inner.x - outer.x, inner.y - outer.y}; }
    bool operator==(const BoundaryEdge& o) const { return inner == o.inner && outer == o.outer; }
    char direction_char() const;  // side of the inner cell: N/E/S/W
};

struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotConnected : GridError { NotConnected() : GridError("cell set is not connected") {} };
struct NotSimplyConnected : GridError {
    NotSimplyConnected() : GridError("cell set is not simply connected") {}
};
struct OriginMissing : GridError { OriginMissing() : GridError("cell set does not contain the origin") {} };
struct BadMarkedEdge : GridError {
    explicit BadMarkedEdge(const std::string& w) : GridError("bad marked edge: " + w) {}
};
struct ScaleTooSmall : GridError { ScaleTooSmall() : GridError("no cell fits inside the scaled shape") {} };
struct PathLeavesDomain : GridError { PathLeavesDomain() : GridError("path leaves the domain") {} };

class LatticeDomain {
  public:
    LatticeDomain() = default;
    const CellSet& cells() const { return cells_; }
    const BoundaryEdge& a() const { return a_; }
    const BoundaryEdge& b() const { return b_; }
    bool contains(const Cell& c) const { return cells_.count(c) != 0; }
    std::size_t size() const { return cells_.size(); }
    bool degenerate_corner() const { return a_.inner == b_.inner; }  // a+ == b+

    friend LatticeDomain build_domain(CellSet cells, BoundaryEdge a, BoundaryEdge b,
                                      bool require_origin);

  private:
    CellSet cells_;
    BoundaryEdge a_, b_;
};

// Counterclockwise trace of the boundary of the union-of-squares domain D_A.
// vertices are the dual-grid corners in unit steps; corners() merges
// collinear runs.  a_index/b_index give the trace segment whose midpoint is
// the marked edge midpoint: segment i runs vertices[i] -> vertices[i+1].
struct JordanPolygon {
    std::vector<cpx> vertices;
    std::size_t a_index = 0, b_index = 0;
    std::vector<cpx> corners() const;
    cpx segment_midpoint(std::size_t i) const {
        return 0.5 * (vertices[i] + vertices[(i + 1) % vertices.size()]);
    }
    double signed_area() const;
    bool point_inside(cpx z) const;
};

LatticeDomain build_domain(CellSet cells, BoundaryEdge a, BoundaryEdge b,
                           bool require_origin = true);

JordanPolygon jordan_boundary(const LatticeDomain& domain);

std::vector<BoundaryEdge> boundary_edges(const CellSet& cells);

// Analytic domain descriptor: inside test plus boundary parametrization on
// [0,1).  Built-ins below.
struct AnalyticShape {
    std::string name;
    std::function<bool(cpx)> inside;
    std::function<cpx(double)> boundary;
};

AnalyticShape disk_shape(double radius = 1.0);
AnalyticShape ellipse_shape(double rx, double ry);
AnalyticShape smoothed_square_shape(double half_side = 1.0, double corner = 0.2);

LatticeDomain approximate_domain(const AnalyticShape& shape, int N, cpx a_target, cpx b_target);

// Cells engulfed by a path prefix: visited cells plus cells cut off from b+.
CellSet hull_cells(const LatticeDomain& domain, const std::vector<Cell>& path,
                   const BoundaryEdge& b);

void save_domain(std::ostream& os, const LatticeDomain& d);
LatticeDomain load_domain(std::istream& is, bool require_origin = true);

}  // namespace lerwlab
