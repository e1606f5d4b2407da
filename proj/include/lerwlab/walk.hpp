#pragma once
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "lerwlab/grid.hpp"
#include "lerwlab/random.hpp"

namespace lerwlab {

struct WalkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainTooLarge : WalkError { DomainTooLarge() : WalkError("domain exceeds solver limit") {} };
struct EdgeNotOnBoundary : WalkError { EdgeNotOnBoundary() : WalkError("edge not on the domain boundary") {} };
struct UnreachableTarget : WalkError { UnreachableTarget() : WalkError("target edge unreachable") {} };
struct PathNotInDomain : WalkError { PathNotInDomain() : WalkError("path not in domain") {} };

// nearest-neighbor walk; SAW is a walk with distinct vertices
struct Walk {
    std::vector<Cell> vertices;
};
struct SAW {
    std::vector<Cell> vertices;
};

// Cell indexing shared by the solvers: cells get ids 0..n-1 in sorted order
// so that tables are reproducible.
class CellIndex {
  public:
    explicit CellIndex(const CellSet& cells);
    int id(const Cell& c) const {
        auto it = map_.find(c);
        return it == map_.end() ? -1 : it->second;
    }
    const std::vector<Cell>& cells() const { return order_; }
    std::size_t size() const { return order_.size(); }

  private:
    std::unordered_map<Cell, int, CellHash> map_;
    std::vector<Cell> order_;
};

// Full Green's function table G_A(z,w): G = delta + (1/4) sum_{w'~w in A} G(z,w').
class GreenTable {
  public:
    GreenTable(const LatticeDomain& domain, std::size_t max_cells = 4000);
    double value(const Cell& z, const Cell& w) const;
    const CellIndex& index() const { return *index_; }
    // max |L G - I| residual of the defining system
    double laplacian_residual() const;

  private:
    std::shared_ptr<CellIndex> index_;
    std::vector<double> values_;  // row-major n x n
};

// h_b(z): probability that simple random walk from z exits A by crossing the
// marked edge b.
class HarmonicTable {
  public:
    HarmonicTable(const LatticeDomain& domain, const BoundaryEdge& b);
    double value(const Cell& z) const;
    const CellIndex& index() const { return *index_; }
    const std::vector<double>& values() const { return values_; }

  private:
    std::shared_ptr<CellIndex> index_;
    std::vector<double> values_;
    BoundaryEdge b_;
};

double boundary_poisson(const GreenTable& green, const LatticeDomain& domain,
                        const BoundaryEdge& a, const BoundaryEdge& b);

// Exit probability through a set of boundary edges (discrete Dirichlet solve).
double harmonic_measure_oracle(const LatticeDomain& domain, const Cell& z,
                               const std::vector<BoundaryEdge>& arc);

// Excursion from a+ to b+ conditioned to exit through e_b, sampled with the
// h_b-transform: p(z->w) proportional to h_b(w), terminal move across e_b.
Walk sample_excursion(const LatticeDomain& domain, const HarmonicTable& hb, Rng& rng);
Walk sample_excursion(const LatticeDomain& domain, Rng& rng);

SAW loop_erase(const Walk& walk);

SAW sample_lerw(const LatticeDomain& domain, const HarmonicTable& hb, Rng& rng);
SAW sample_lerw(const LatticeDomain& domain, Rng& rng);

// P_{A,a,b}(eta) via the Green's function product factorization.
double exact_lerw_prob(const LatticeDomain& domain, const SAW& eta, std::size_t max_cells = 100);

// All SAWs from a+ to b+ in the domain (for small-domain oracles).
std::vector<SAW> enumerate_saws(const LatticeDomain& domain, std::size_t max_cells = 9);

// Exact LERW law by absorbing-chain iteration over loop-erasure stack states,
// truncated at max_steps with the leftover mass reported as tail_bound.
struct EnumeratedLaw {
    std::vector<SAW> outcomes;
    std::vector<double> probabilities;  // conditioned on reaching b
    double tail_bound = 0.0;            // unassigned conditional mass
};
EnumeratedLaw enumerate_lerw_law(const LatticeDomain& domain, std::size_t max_steps);

// Total p-mass of walks from a to b (truncated sum + geometric tail bound).
struct MassEstimate {
    double lower = 0.0, upper = 0.0;
};
MassEstimate enumerate_crossing_mass(const LatticeDomain& domain, std::size_t max_steps);

std::string saw_to_string(const SAW& saw);     // start cell + run-length step codes
SAW saw_from_string(const std::string& text);

}  // namespace lerwlab
