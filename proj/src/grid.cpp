#include "lerwlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace lerwlab {

namespace {

const Cell kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

Cell add(const Cell& a, const Cell& b) { return {a.x + b.x, a.y + b.y}; }

// Corner (i,j) of the dual grid is the planar point (i-1/2, j-1/2); the cell
// (x,y) owns corners (x,y),(x+1,y),(x,y+1),(x+1,y+1).
cpx corner_point(int i, int j) { return {i - 0.5, j - 0.5}; }

struct PairHash {
    std::size_t operator()(const std::pair<int, int>& p) const {
        return CellHash{}(Cell{p.first, p.second});
    }
};

bool edge_on_boundary(const CellSet& cells, const BoundaryEdge& e) {
    if (!cells.count(e.inner) || cells.count(e.outer)) return false;
    Cell d = e.orientation();
    return std::abs(d.x) + std::abs(d.y) == 1;
}

}  // namespace

char BoundaryEdge::direction_char() const {
    Cell d{outer.x - inner.x, outer.y - inner.y};
    if (d.x == 1) return 'E';
    if (d.x == -1) return 'W';
    if (d.y == 1) return 'N';
    return 'S';
}

LatticeDomain build_domain(CellSet cells, BoundaryEdge a, BoundaryEdge b, bool require_origin) {
    if (cells.empty()) throw GridError("empty cell set");
    if (require_origin && !cells.count(Cell{0, 0})) throw OriginMissing();

    // connectivity
    {
        std::deque<Cell> queue{*cells.begin()};
        CellSet seen{*cells.begin()};
        while (!queue.empty()) {
            Cell c = queue.front();
            queue.pop_front();
            for (const Cell& s : kSteps) {
                Cell n = add(c, s);
                if (cells.count(n) && !seen.count(n)) {
                    seen.insert(n);
                    queue.push_back(n);
                }
            }
        }
        if (seen.size() != cells.size()) throw NotConnected();
    }

    // Euler characteristic of the square complex: V - E + F = 1 iff simply
    // connected (given connectivity).
    {
        std::unordered_set<std::pair<int, int>, PairHash> verts;
        std::size_t edges = 0;
        for (const Cell& c : cells) {
            verts.insert({c.x, c.y});
            verts.insert({c.x + 1, c.y});
            verts.insert({c.x, c.y + 1});
            verts.insert({c.x + 1, c.y + 1});
            // count each unit edge once: attribute S and W sides to this cell,
            // N and E sides only when the neighbor is absent
            edges += 2;
            if (!cells.count(Cell{c.x, c.y + 1})) ++edges;  // N side
            if (!cells.count(Cell{c.x + 1, c.y})) ++edges;  // E side
        }
        long chi = long(verts.size()) - long(edges) + long(cells.size());
        if (chi != 1) throw NotSimplyConnected();
    }

    if (!edge_on_boundary(cells, a)) throw BadMarkedEdge("a is not a boundary edge");
    if (!edge_on_boundary(cells, b)) throw BadMarkedEdge("b is not a boundary edge");
    if (a.outer == b.outer) throw BadMarkedEdge("a- equals b-");

    LatticeDomain d;
    d.cells_ = std::move(cells);
    d.a_ = a;
    d.b_ = b;
    return d;
}

std::vector<BoundaryEdge> boundary_edges(const CellSet& cells) {
    std::vector<BoundaryEdge> out;
    for (const Cell& c : cells)
        for (const Cell& s : kSteps) {
            Cell n = add(c, s);
            if (!cells.count(n)) out.push_back(BoundaryEdge{c, n});
        }
    return out;
}

JordanPolygon jordan_boundary(const LatticeDomain& domain) {
    const CellSet& A = domain.cells();
    // Directed dual edges with the interior on the left (ccw trace).
    // key = start corner, value = end corner.
    std::unordered_map<std::pair<int, int>, std::pair<int, int>, PairHash> next;
    auto put = [&next](int i0, int j0, int i1, int j1) {
        auto r = next.emplace(std::make_pair(i0, j0), std::make_pair(i1, j1));
        if (!r.second) throw GridError("pinched boundary vertex; domain not simply connected");
    };
    for (const Cell& c : A) {
        if (!A.count(Cell{c.x, c.y - 1})) put(c.x, c.y, c.x + 1, c.y);          // S side, east
        if (!A.count(Cell{c.x, c.y + 1})) put(c.x + 1, c.y + 1, c.x, c.y + 1);  // N side, west
        if (!A.count(Cell{c.x - 1, c.y})) put(c.x, c.y + 1, c.x, c.y);          // W side, south
        if (!A.count(Cell{c.x + 1, c.y})) put(c.x + 1, c.y, c.x + 1, c.y + 1);  // E side, north
    }

    JordanPolygon poly;
    auto start = next.begin()->first;
    auto cur = start;
    do {
        poly.vertices.push_back(corner_point(cur.first, cur.second));
        auto it = next.find(cur);
        if (it == next.end()) throw GridError("boundary trace broke");
        cur = it->second;
    } while (cur != start);
    if (poly.vertices.size() != next.size())
        throw GridError("boundary trace did not close over all edges");
    if (poly.signed_area() < 0) throw GridError("boundary trace not counterclockwise");

    auto locate = [&poly](cpx mid) {
        for (std::size_t i = 0; i < poly.vertices.size(); ++i)
            if (std::abs(poly.segment_midpoint(i) - mid) < 1e-9) return i;
        throw BadMarkedEdge("marked edge midpoint not on boundary trace");
    };
    poly.a_index = locate(domain.a().midpoint());
    poly.b_index = locate(domain.b().midpoint());
    return poly;
}

std::vector<cpx> JordanPolygon::corners() const {
    std::vector<cpx> out;
    std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        cpx prev = vertices[(i + n - 1) % n], cur = vertices[i], nxt = vertices[(i + 1) % n];
        cpx d1 = cur - prev, d2 = nxt - cur;
        if (std::abs(d1.real() * d2.imag() - d1.imag() * d2.real()) > 1e-12) out.push_back(cur);
    }
    return out;
}

double JordanPolygon::signed_area() const {
    double s = 0;
    std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        cpx p = vertices[i], q = vertices[(i + 1) % n];
        s += p.real() * q.imag() - q.real() * p.imag();
    }
    return s / 2.0;
}

bool JordanPolygon::point_inside(cpx z) const {
    bool in = false;
    std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        cpx p = vertices[i], q = vertices[(i + 1) % n];
        if ((p.imag() > z.imag()) != (q.imag() > z.imag())) {
            double xc = p.real() +
                        (z.imag() - p.imag()) / (q.imag() - p.imag()) * (q.real() - p.real());
            if (z.real() < xc) in = !in;
        }
    }
    return in;
}

AnalyticShape disk_shape(double radius) {
    AnalyticShape s;
    s.name = "disk";
    s.inside = [radius](cpx z) { return std::abs(z) < radius; };
    s.boundary = [radius](double t) {
        double a = 2 * M_PI * t;
        return radius * cpx(std::cos(a), std::sin(a));
    };
    return s;
}

AnalyticShape ellipse_shape(double rx, double ry) {
    AnalyticShape s;
    s.name = "ellipse";
    s.inside = [rx, ry](cpx z) {
        double u = z.real() / rx, v = z.imag() / ry;
        return u * u + v * v < 1.0;
    };
    s.boundary = [rx, ry](double t) {
        double a = 2 * M_PI * t;
        return cpx(rx * std::cos(a), ry * std::sin(a));
    };
    return s;
}

AnalyticShape smoothed_square_shape(double half_side, double corner) {
    // square with circular-arc corners of radius `corner`
    double inner = half_side - corner;
    AnalyticShape s;
    s.name = "smoothed_square";
    s.inside = [half_side, corner, inner](cpx z) {
        double ax = std::fabs(z.real()), ay = std::fabs(z.imag());
        if (ax >= half_side || ay >= half_side) return false;
        if (ax <= inner || ay <= inner) return true;
        double dx = ax - inner, dy = ay - inner;
        return dx * dx + dy * dy < corner * corner;
    };
    s.boundary = [half_side, corner, inner](double t) {
        // perimeter = 8*inner + 2*pi*corner; walk it
        double per = 8 * inner + 2 * M_PI * corner;
        double d = t * per;
        auto seg = [&](double len) {
            if (d < len) return true;
            d -= len;
            return false;
        };
        // start at (half_side, -inner), go ccw
        if (seg(2 * inner)) return cpx(half_side, -inner + d);
        if (seg(M_PI * corner / 2)) {
            double a = d / corner;
            return cpx(inner + corner * std::cos(a), inner + corner * std::sin(a));
        }
        if (seg(2 * inner)) return cpx(inner - d, half_side);
        if (seg(M_PI * corner / 2)) {
            double a = M_PI / 2 + d / corner;
            return cpx(-inner + corner * std::cos(a), inner + corner * std::sin(a));
        }
        if (seg(2 * inner)) return cpx(-half_side, inner - d);
        if (seg(M_PI * corner / 2)) {
            double a = M_PI + d / corner;
            return cpx(-inner + corner * std::cos(a), -inner + corner * std::sin(a));
        }
        if (seg(2 * inner)) return cpx(-inner + d, -half_side);
        double a = 3 * M_PI / 2 + d / corner;
        return cpx(inner + corner * std::cos(a), -inner + corner * std::sin(a));
    };
    return s;
}

LatticeDomain approximate_domain(const AnalyticShape& shape, int N, cpx a_target, cpx b_target) {
    // cells whose closed unit square lies inside N*shape; containment is
    // checked on a 5x5 grid of the square (sufficient for the convex and
    // near-convex built-ins)
    auto square_inside = [&shape, N](const Cell& c) {
        for (int i = 0; i <= 4; ++i)
            for (int j = 0; j <= 4; ++j) {
                cpx p(c.x - 0.5 + i / 4.0, c.y - 0.5 + j / 4.0);
                if (!shape.inside(p / double(N))) return false;
            }
        return true;
    };
    if (!square_inside(Cell{0, 0})) throw ScaleTooSmall();

    // grow the component of the origin
    CellSet cells{Cell{0, 0}};
    std::deque<Cell> queue{Cell{0, 0}};
    while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        for (const Cell& s : kSteps) {
            Cell n = add(c, s);
            if (!cells.count(n) && square_inside(n)) {
                cells.insert(n);
                queue.push_back(n);
            }
        }
    }

    // fill holes: complement cells not reachable from far outside
    {
        int lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
        for (const Cell& c : cells) {
            lo_x = std::min(lo_x, c.x); hi_x = std::max(hi_x, c.x);
            lo_y = std::min(lo_y, c.y); hi_y = std::max(hi_y, c.y);
        }
        --lo_x; ++hi_x; --lo_y; ++hi_y;
        CellSet outside;
        std::deque<Cell> q{Cell{lo_x, lo_y}};
        outside.insert(Cell{lo_x, lo_y});
        while (!q.empty()) {
            Cell c = q.front();
            q.pop_front();
            for (const Cell& s : kSteps) {
                Cell n = add(c, s);
                if (n.x < lo_x || n.x > hi_x || n.y < lo_y || n.y > hi_y) continue;
                if (cells.count(n) || outside.count(n)) continue;
                outside.insert(n);
                q.push_back(n);
            }
        }
        for (int x = lo_x; x <= hi_x; ++x)
            for (int y = lo_y; y <= hi_y; ++y) {
                Cell c{x, y};
                if (!cells.count(c) && !outside.count(c)) cells.insert(c);
            }
    }

    // nearest boundary edges to the scaled targets; ties broken by smallest
    // angle of the midpoint from the positive real axis
    auto pick = [&cells](cpx target) {
        BoundaryEdge best{};
        double best_d = 1e300, best_ang = 1e300;
        bool have = false;
        for (const BoundaryEdge& e : boundary_edges(cells)) {
            cpx m = e.midpoint();
            double d = std::abs(m - target);
            double ang = std::arg(m);
            if (ang < 0) ang += 2 * M_PI;
            if (!have || d < best_d - 1e-12 ||
                (std::fabs(d - best_d) <= 1e-12 && ang < best_ang)) {
                best = e;
                best_d = d;
                best_ang = ang;
                have = true;
            }
        }
        return best;
    };
    BoundaryEdge a = pick(double(N) * a_target);
    BoundaryEdge b = pick(double(N) * b_target);
    return build_domain(std::move(cells), a, b);
}

CellSet hull_cells(const LatticeDomain& domain, const std::vector<Cell>& path,
                   const BoundaryEdge& b) {
    CellSet visited;
    for (const Cell& c : path) {
        if (!domain.contains(c)) throw PathLeavesDomain();
        visited.insert(c);
    }
    if (visited.empty()) return visited;
    if (visited.count(b.inner)) return domain.cells();  // everything engulfed

    // flood fill from b+ through A minus visited
    CellSet reach{b.inner};
    std::deque<Cell> queue{b.inner};
    while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        for (const Cell& s : kSteps) {
            Cell n = add(c, s);
            if (domain.contains(n) && !visited.count(n) && !reach.count(n)) {
                reach.insert(n);
                queue.push_back(n);
            }
        }
    }
    CellSet out = visited;
    for (const Cell& c : domain.cells())
        if (!reach.count(c)) out.insert(c);
    return out;
}

void save_domain(std::ostream& os, const LatticeDomain& d) {
    auto edge_line = [&os](const char* name, const BoundaryEdge& e) {
        os << name << ": " << e.inner.x << ' ' << e.inner.y << ' ' << e.direction_char() << '\n';
    };
    edge_line("a", d.a());
    edge_line("b", d.b());
    std::vector<Cell> sorted(d.cells().begin(), d.cells().end());
    std::sort(sorted.begin(), sorted.end());
    for (const Cell& c : sorted) os << c.x << ' ' << c.y << '\n';
}

LatticeDomain load_domain(std::istream& is, bool require_origin) {
    CellSet cells;
    BoundaryEdge a{}, b{};
    bool have_a = false, have_b = false;
    std::string line;
    auto parse_edge = [](std::istringstream& ss) {
        Cell inner{};
        char dir = 0;
        ss >> inner.x >> inner.y >> dir;
        Cell outer = inner;
        switch (dir) {
            case 'N': outer.y++; break;
            case 'S': outer.y--; break;
            case 'E': outer.x++; break;
            case 'W': outer.x--; break;
            default: throw GridError("bad edge direction in domain file");
        }
        return BoundaryEdge{inner, outer};
    };
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("a:", 0) == 0) {
            std::istringstream ss(line.substr(2));
            a = parse_edge(ss);
            have_a = true;
        } else if (line.rfind("b:", 0) == 0) {
            std::istringstream ss(line.substr(2));
            b = parse_edge(ss);
            have_b = true;
        } else {
            std::istringstream ss(line);
            Cell c{};
            if (ss >> c.x >> c.y) cells.insert(c);
        }
    }
    if (!have_a || !have_b) throw GridError("domain file missing marked edges");
    return build_domain(std::move(cells), a, b, require_origin);
}

}  // namespace lerwlab
