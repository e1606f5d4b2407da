#include "lerwlab/walk.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace lerwlab {

namespace {

const Cell kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

Cell add(const Cell& a, const Cell& b) { return {a.x + b.x, a.y + b.y}; }

using SpMat = Eigen::SparseMatrix<double>;

// I - Q with Q the 1/4-adjacency kernel restricted to A (symmetric PD)
SpMat killed_laplacian(const CellIndex& idx) {
    std::vector<Eigen::Triplet<double>> trip;
    const auto& cells = idx.cells();
    for (int i = 0; i < int(cells.size()); ++i) {
        trip.emplace_back(i, i, 1.0);
        for (const Cell& s : kSteps) {
            int j = idx.id(add(cells[i], s));
            if (j >= 0) trip.emplace_back(i, j, -0.25);
        }
    }
    SpMat m(int(cells.size()), int(cells.size()));
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

Eigen::VectorXd solve_dirichlet(const CellIndex& idx, const Eigen::VectorXd& rhs) {
    SpMat m = killed_laplacian(idx);
    if (idx.size() <= 50000) {
        Eigen::SimplicialLLT<SpMat> solver(m);
        if (solver.info() != Eigen::Success) throw WalkError("sparse factorization failed");
        return solver.solve(rhs);
    }
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg(m);
    cg.setTolerance(1e-13);
    cg.setMaxIterations(200000);
    Eigen::VectorXd x = cg.solve(rhs);
    if (cg.info() != Eigen::Success) throw WalkError("conjugate gradient did not converge");
    return x;
}

bool is_boundary_edge_of(const LatticeDomain& d, const BoundaryEdge& e) {
    Cell o = e.orientation();
    return d.contains(e.inner) && !d.contains(e.outer) && std::abs(o.x) + std::abs(o.y) == 1;
}

}  // namespace

CellIndex::CellIndex(const CellSet& cells) {
    order_.assign(cells.begin(), cells.end());
    std::sort(order_.begin(), order_.end());
    map_.reserve(order_.size());
    for (int i = 0; i < int(order_.size()); ++i) map_.emplace(order_[i], i);
}

GreenTable::GreenTable(const LatticeDomain& domain, std::size_t max_cells)
    : index_(std::make_shared<CellIndex>(domain.cells())) {
    std::size_t n = index_->size();
    if (n > max_cells) throw DomainTooLarge();
    SpMat m = killed_laplacian(*index_);
    Eigen::SimplicialLLT<SpMat> solver(m);
    if (solver.info() != Eigen::Success) throw WalkError("sparse factorization failed");
    values_.assign(n * n, 0.0);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(int(n));
    for (std::size_t col = 0; col < n; ++col) {
        e[int(col)] = 1.0;
        Eigen::VectorXd g = solver.solve(e);
        e[int(col)] = 0.0;
        for (std::size_t row = 0; row < n; ++row) values_[row * n + col] = g[int(row)];
    }
}

double GreenTable::value(const Cell& z, const Cell& w) const {
    int i = index_->id(z), j = index_->id(w);
    if (i < 0 || j < 0) throw WalkError("cell not in domain");
    return values_[std::size_t(i) * index_->size() + std::size_t(j)];
}

double GreenTable::laplacian_residual() const {
    std::size_t n = index_->size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = values_[i * n + j];
            for (const Cell& s : kSteps) {
                int k = index_->id(add(index_->cells()[j], s));
                if (k >= 0) acc -= 0.25 * values_[i * n + std::size_t(k)];
            }
            worst = std::max(worst, std::fabs(acc - (i == j ? 1.0 : 0.0)));
        }
    return worst;
}

HarmonicTable::HarmonicTable(const LatticeDomain& domain, const BoundaryEdge& b)
    : index_(std::make_shared<CellIndex>(domain.cells())), b_(b) {
    if (!is_boundary_edge_of(domain, b)) throw EdgeNotOnBoundary();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(int(index_->size()));
    rhs[index_->id(b.inner)] = 0.25;  // the move across e_b
    Eigen::VectorXd h = solve_dirichlet(*index_, rhs);
    values_.assign(h.data(), h.data() + h.size());
}

double HarmonicTable::value(const Cell& z) const {
    int i = index_->id(z);
    if (i < 0) throw WalkError("cell not in domain");
    return values_[std::size_t(i)];
}

double boundary_poisson(const GreenTable& green, const LatticeDomain& domain,
                        const BoundaryEdge& a, const BoundaryEdge& b) {
    if (!is_boundary_edge_of(domain, a) || !is_boundary_edge_of(domain, b))
        throw EdgeNotOnBoundary();
    return green.value(a.inner, b.inner) / 16.0;
}

double harmonic_measure_oracle(const LatticeDomain& domain, const Cell& z,
                               const std::vector<BoundaryEdge>& arc) {
    CellIndex idx(domain.cells());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(int(idx.size()));
    for (const BoundaryEdge& e : arc) {
        if (!is_boundary_edge_of(domain, e)) throw EdgeNotOnBoundary();
        rhs[idx.id(e.inner)] += 0.25;
    }
    Eigen::VectorXd u = solve_dirichlet(idx, rhs);
    int i = idx.id(z);
    if (i < 0) throw WalkError("cell not in domain");
    return u[i];
}

namespace {

// one conditioned step; returns true when the walk crossed e_b and stops
template <typename Visit>
void run_excursion(const LatticeDomain& domain, const HarmonicTable& hb, Rng& rng, Visit visit) {
    const BoundaryEdge& b = domain.b();
    Cell z = domain.a().inner;
    if (hb.value(z) <= 0.0) throw UnreachableTarget();
    visit(z);
    for (;;) {
        double w[4];
        Cell to[4];
        double total = 0.0;
        int exit_move = -1;
        for (int k = 0; k < 4; ++k) {
            to[k] = add(z, kSteps[k]);
            if (domain.contains(to[k])) {
                w[k] = hb.value(to[k]);
            } else if (z == b.inner && to[k] == b.outer) {
                w[k] = 1.0;
                exit_move = k;
            } else {
                w[k] = 0.0;
            }
            total += w[k];
        }
        double u = rng.uniform() * total;
        int pick = 0;
        for (; pick < 3; ++pick) {
            u -= w[pick];
            if (u < 0) break;
        }
        while (pick > 0 && w[pick] <= 0.0) --pick;  // guard against roundoff
        if (pick == exit_move) return;
        z = to[pick];
        visit(z);
    }
}

}  // namespace

Walk sample_excursion(const LatticeDomain& domain, const HarmonicTable& hb, Rng& rng) {
    Walk walk;
    run_excursion(domain, hb, rng, [&walk](const Cell& c) { walk.vertices.push_back(c); });
    return walk;
}

Walk sample_excursion(const LatticeDomain& domain, Rng& rng) {
    HarmonicTable hb(domain, domain.b());
    return sample_excursion(domain, hb, rng);
}

SAW loop_erase(const Walk& walk) {
    if (walk.vertices.empty()) throw WalkError("empty walk");
    std::unordered_map<Cell, std::size_t, CellHash> last;
    for (std::size_t i = 0; i < walk.vertices.size(); ++i) last[walk.vertices[i]] = i;
    SAW out;
    std::size_t pos = 0;
    for (;;) {
        out.vertices.push_back(walk.vertices[pos]);
        std::size_t s = last[walk.vertices[pos]];
        if (s + 1 >= walk.vertices.size()) break;
        pos = s + 1;
    }
    return out;
}

SAW sample_lerw(const LatticeDomain& domain, const HarmonicTable& hb, Rng& rng) {
    // on-line chronological erasure: equivalent to loop_erase of the sampled
    // excursion but without storing the whole walk
    SAW stack;
    std::unordered_map<Cell, std::size_t, CellHash> pos;
    run_excursion(domain, hb, rng, [&stack, &pos](const Cell& c) {
        auto it = pos.find(c);
        if (it != pos.end()) {
            for (std::size_t i = it->second + 1; i < stack.vertices.size(); ++i)
                pos.erase(stack.vertices[i]);
            stack.vertices.resize(it->second + 1);
        } else {
            pos.emplace(c, stack.vertices.size());
            stack.vertices.push_back(c);
        }
    });
    return stack;
}

SAW sample_lerw(const LatticeDomain& domain, Rng& rng) {
    HarmonicTable hb(domain, domain.b());
    return sample_lerw(domain, hb, rng);
}

namespace {

// G_S(z,z) on the connected component of z inside the cell set S
double green_diag(const CellSet& S, const Cell& z) {
    // component of z
    CellSet comp{z};
    std::vector<Cell> queue{z};
    while (!queue.empty()) {
        Cell c = queue.back();
        queue.pop_back();
        for (const Cell& s : kSteps) {
            Cell n = add(c, s);
            if (S.count(n) && !comp.count(n)) {
                comp.insert(n);
                queue.push_back(n);
            }
        }
    }
    CellIndex idx(comp);
    int n = int(idx.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (const Cell& s : kSteps) {
            int j = idx.id(add(idx.cells()[i], s));
            if (j >= 0) m(i, j) -= 0.25;
        }
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[idx.id(z)] = 1.0;
    Eigen::VectorXd g = m.partialPivLu().solve(e);
    return g[idx.id(z)];
}

}  // namespace

double exact_lerw_prob(const LatticeDomain& domain, const SAW& eta, std::size_t max_cells) {
    if (domain.size() > max_cells) throw DomainTooLarge();
    if (eta.vertices.empty() || eta.vertices.front() != domain.a().inner ||
        eta.vertices.back() != domain.b().inner)
        throw PathNotInDomain();
    for (std::size_t i = 0; i < eta.vertices.size(); ++i) {
        if (!domain.contains(eta.vertices[i])) throw PathNotInDomain();
        if (i > 0) {
            Cell d{eta.vertices[i].x - eta.vertices[i - 1].x,
                   eta.vertices[i].y - eta.vertices[i - 1].y};
            if (std::abs(d.x) + std::abs(d.y) != 1) throw PathNotInDomain();
        }
    }

    GreenTable green(domain, max_cells);
    double H = boundary_poisson(green, domain, domain.a(), domain.b());

    double log_p = -std::log(4.0) * double(eta.vertices.size() + 1);  // |eta| + 2 edges
    CellSet remaining = domain.cells();
    for (const Cell& v : eta.vertices) {
        log_p += std::log(green_diag(remaining, v));
        remaining.erase(v);
    }
    return std::exp(log_p) / H;
}

std::vector<SAW> enumerate_saws(const LatticeDomain& domain, std::size_t max_cells) {
    if (domain.size() > max_cells) throw DomainTooLarge();
    std::vector<SAW> out;
    SAW cur;
    CellSet used;
    Cell target = domain.b().inner;
    std::function<void(const Cell&)> dfs = [&](const Cell& z) {
        cur.vertices.push_back(z);
        used.insert(z);
        if (z == target) out.push_back(cur);
        // note: a SAW may pass through b+ and return later only if b+ != end;
        // paths end exactly at b+, so stop extending after recording
        if (z != target) {
            for (const Cell& s : kSteps) {
                Cell n = add(z, s);
                if (domain.contains(n) && !used.count(n)) dfs(n);
            }
        }
        used.erase(z);
        cur.vertices.pop_back();
    };
    dfs(domain.a().inner);
    std::sort(out.begin(), out.end(),
              [](const SAW& a, const SAW& b) { return saw_to_string(a) < saw_to_string(b); });
    return out;
}

EnumeratedLaw enumerate_lerw_law(const LatticeDomain& domain, std::size_t max_steps) {
    HarmonicTable hb(domain, domain.b());
    const BoundaryEdge& b = domain.b();

    // states are loop-erasure stacks keyed by their serialization
    struct State {
        SAW stack;
        std::unordered_map<Cell, std::size_t, CellHash> pos;
    };
    std::map<std::string, State> states;
    std::map<std::string, double> mass;

    State init;
    init.stack.vertices.push_back(domain.a().inner);
    init.pos.emplace(domain.a().inner, 0);
    std::string init_key = saw_to_string(init.stack);
    states.emplace(init_key, std::move(init));
    mass[init_key] = 1.0;

    std::map<std::string, double> absorbed;
    for (std::size_t step = 0; step < max_steps; ++step) {
        std::map<std::string, double> next_mass;
        for (const auto& [key, p] : mass) {
            const State& st = states.at(key);
            Cell z = st.stack.vertices.back();
            double w[4];
            Cell to[4];
            double total = 0.0;
            int exit_move = -1;
            for (int k = 0; k < 4; ++k) {
                to[k] = add(z, kSteps[k]);
                if (domain.contains(to[k])) {
                    w[k] = hb.value(to[k]);
                } else if (z == b.inner && to[k] == b.outer) {
                    w[k] = 1.0;
                    exit_move = k;
                } else {
                    w[k] = 0.0;
                }
                total += w[k];
            }
            for (int k = 0; k < 4; ++k) {
                if (w[k] <= 0.0) continue;
                double q = p * w[k] / total;
                if (k == exit_move) {
                    absorbed[key] += q;
                    continue;
                }
                State ns = st;
                auto it = ns.pos.find(to[k]);
                if (it != ns.pos.end()) {
                    for (std::size_t i = it->second + 1; i < ns.stack.vertices.size(); ++i)
                        ns.pos.erase(ns.stack.vertices[i]);
                    ns.stack.vertices.resize(it->second + 1);
                } else {
                    ns.pos.emplace(to[k], ns.stack.vertices.size());
                    ns.stack.vertices.push_back(to[k]);
                }
                std::string nk = saw_to_string(ns.stack);
                next_mass[nk] += q;
                states.emplace(nk, std::move(ns));
            }
        }
        mass = std::move(next_mass);
    }

    EnumeratedLaw law;
    for (const auto& [key, p] : absorbed) {
        law.outcomes.push_back(states.at(key).stack);
        law.probabilities.push_back(p);
    }
    law.tail_bound = 0.0;
    for (const auto& [key, p] : mass) law.tail_bound += p;
    return law;
}

MassEstimate enumerate_crossing_mass(const LatticeDomain& domain, std::size_t max_steps) {
    CellIndex idx(domain.cells());
    std::vector<double> v(idx.size(), 0.0);
    v[std::size_t(idx.id(domain.a().inner))] = 0.25;  // the e_a step
    int b_id = idx.id(domain.b().inner);
    double sum = 0.0;
    for (std::size_t step = 0; step < max_steps; ++step) {
        sum += v[std::size_t(b_id)] * 0.25;  // terminal e_b crossing
        std::vector<double> nv(idx.size(), 0.0);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (v[i] == 0.0) continue;
            for (const Cell& s : kSteps) {
                int j = idx.id(add(idx.cells()[i], s));
                if (j >= 0) nv[std::size_t(j)] += 0.25 * v[i];
            }
        }
        v = std::move(nv);
    }
    double live = 0.0;
    for (double x : v) live += x;
    return MassEstimate{sum, sum + live};
}

std::string saw_to_string(const SAW& saw) {
    std::ostringstream os;
    if (saw.vertices.empty()) return "";
    os << saw.vertices[0].x << ' ' << saw.vertices[0].y << ' ';
    char prev = 0;
    int run = 0;
    auto flush = [&os, &prev, &run]() {
        if (run > 0) os << prev << run;
        run = 0;
    };
    for (std::size_t i = 1; i < saw.vertices.size(); ++i) {
        Cell d{saw.vertices[i].x - saw.vertices[i - 1].x,
               saw.vertices[i].y - saw.vertices[i - 1].y};
        char c = d.x == 1 ? 'E' : d.x == -1 ? 'W' : d.y == 1 ? 'N' : 'S';
        if (c == prev) {
            ++run;
        } else {
            flush();
            prev = c;
            run = 1;
        }
    }
    flush();
    return os.str();
}

SAW saw_from_string(const std::string& text) {
    SAW out;
    std::istringstream is(text);
    Cell c{};
    if (!(is >> c.x >> c.y)) return out;
    out.vertices.push_back(c);
    char dir;
    while (is >> dir) {
        int run = 0;
        is >> run;
        Cell d = dir == 'E' ? Cell{1, 0} : dir == 'W' ? Cell{-1, 0}
                 : dir == 'N' ? Cell{0, 1} : Cell{0, -1};
        for (int i = 0; i < run; ++i) {
            c = add(c, d);
            out.vertices.push_back(c);
        }
    }
    return out;
}

}  // namespace lerwlab
