#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <map>

#include "doctest.h"
#include "lerwlab/stats.hpp"
#include "lerwlab/walk.hpp"

using namespace lerwlab;

namespace {

LatticeDomain strip(int n) {  // cells (0,0)..(n-1,0), a west, b east
    CellSet s;
    for (int x = 0; x < n; ++x) s.insert(Cell{x, 0});
    return build_domain(s, BoundaryEdge{Cell{0, 0}, Cell{-1, 0}},
                        BoundaryEdge{Cell{n - 1, 0}, Cell{n, 0}});
}

LatticeDomain square(int k) {  // cells [0,k-1]^2, a west of (0,0), b east of (k-1,0)
    CellSet s;
    for (int x = 0; x < k; ++x)
        for (int y = 0; y < k; ++y) s.insert(Cell{x, y});
    return build_domain(s, BoundaryEdge{Cell{0, 0}, Cell{-1, 0}},
                        BoundaryEdge{Cell{k - 1, 0}, Cell{k, 0}}, false);
}

}  // namespace

TEST_CASE("Green's function on one and two cells") {
    LatticeDomain one = strip(1);
    GreenTable g1(one);
    CHECK(g1.value(Cell{0, 0}, Cell{0, 0}) == doctest::Approx(1.0));
    CHECK(g1.laplacian_residual() < 1e-10);

    // domino: return trips through the neighbor have weight 1/16 each
    LatticeDomain two = strip(2);
    GreenTable g2(two);
    CHECK(g2.value(Cell{0, 0}, Cell{0, 0}) == doctest::Approx(16.0 / 15.0));
    CHECK(g2.value(Cell{0, 0}, Cell{1, 0}) == doctest::Approx(g2.value(Cell{1, 0}, Cell{0, 0})));
    CHECK(g2.laplacian_residual() < 1e-10);
}

TEST_CASE("boundary Poisson kernel on a single cell") {
    LatticeDomain one = strip(1);
    GreenTable g(one);
    CHECK(boundary_poisson(g, one, one.a(), one.b()) == doctest::Approx(1.0 / 16.0));
}

TEST_CASE("exact LERW probability is one when only one path exists") {
    SAW path1{{Cell{0, 0}}};
    CHECK(exact_lerw_prob(strip(1), path1) == doctest::Approx(1.0));
    SAW path3{{Cell{0, 0}, Cell{1, 0}, Cell{2, 0}}};
    CHECK(exact_lerw_prob(strip(3), path3) == doctest::Approx(1.0));
}

TEST_CASE("harmonic table agrees with the Dirichlet oracle") {
    LatticeDomain d = square(3);
    HarmonicTable hb(d, d.b());
    for (const Cell& c : d.cells()) {
        double oracle = harmonic_measure_oracle(d, c, {d.b()});
        CHECK(hb.value(c) == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("loop erasure") {
    Walk w;
    w.vertices = {Cell{0, 0}, Cell{0, 1}, Cell{1, 1}, Cell{1, 0}, Cell{0, 0}, Cell{1, 0}};
    SAW s = loop_erase(w);
    REQUIRE(s.vertices.size() == 2);
    CHECK(s.vertices[0] == Cell{0, 0});
    CHECK(s.vertices[1] == Cell{1, 0});

    // idempotence: erasing a self-avoiding walk returns it unchanged
    Walk w2;
    w2.vertices = s.vertices;
    SAW s2 = loop_erase(w2);
    CHECK(s2.vertices == s.vertices);
}

TEST_CASE("excursions stay in the domain with the right endpoints") {
    LatticeDomain d = square(4);
    HarmonicTable hb(d, d.b());
    Rng rng(7);
    for (int i = 0; i < 25; ++i) {
        Walk w = sample_excursion(d, hb, rng);
        CHECK(w.vertices.front() == d.a().inner);
        CHECK(w.vertices.back() == d.b().inner);
        for (const Cell& c : w.vertices) CHECK(d.contains(c));
        SAW s = loop_erase(w);
        for (std::size_t j = 0; j < s.vertices.size(); ++j)
            for (std::size_t k = j + 1; k < s.vertices.size(); ++k)
                CHECK(s.vertices[j] != s.vertices[k]);
    }
}

TEST_CASE("enumerated LERW law matches the exact path probabilities") {
    LatticeDomain d = square(2);
    EnumeratedLaw law = enumerate_lerw_law(d, 4000);
    CHECK(law.tail_bound < 1e-9);
    double total = law.tail_bound;
    for (double p : law.probabilities) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    for (std::size_t i = 0; i < law.outcomes.size(); ++i)
        CHECK(exact_lerw_prob(d, law.outcomes[i]) ==
              doctest::Approx(law.probabilities[i]).epsilon(1e-7));
}

TEST_CASE("sampled LERW law is close to the enumerated law") {
    LatticeDomain d = square(2);
    EnumeratedLaw law = enumerate_lerw_law(d, 4000);
    std::map<std::string, double> empirical;
    Rng rng(99);
    const int samples = 20000;
    for (int i = 0; i < samples; ++i)
        empirical[saw_to_string(sample_lerw(d, rng))] += 1.0 / samples;
    std::vector<double> p, q;
    for (std::size_t i = 0; i < law.outcomes.size(); ++i) {
        p.push_back(law.probabilities[i]);
        auto it = empirical.find(saw_to_string(law.outcomes[i]));
        q.push_back(it == empirical.end() ? 0.0 : it->second);
    }
    CHECK(total_variation(p, q) < 0.03);
}

TEST_CASE("unreachable target throws") {
    LatticeDomain d = strip(2);
    BoundaryEdge bad{Cell{0, 0}, Cell{0, 5}};
    CHECK_THROWS_AS(HarmonicTable(d, bad), EdgeNotOnBoundary);
}

TEST_CASE("SAW string round trip") {
    SAW s{{Cell{2, -1}, Cell{2, 0}, Cell{3, 0}, Cell{3, 1}}};
    SAW t = saw_from_string(saw_to_string(s));
    CHECK(t.vertices == s.vertices);
}
