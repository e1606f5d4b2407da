#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "lerwlab/coupling.hpp"
#include "lerwlab/stats.hpp"

using namespace lerwlab;

namespace {

struct Setup {
    LatticeDomain domain;
    HalfPlaneMap map;
    HarmonicTable hb;
    double h;
};

Setup disk_setup(int N, double h) {
    LatticeDomain dom = approximate_domain(disk_shape(1.0), N, cpx(-1, 0), cpx(1, 0));
    HalfPlaneMap map = normalize_scale(fit_map(jordan_boundary(dom)));
    HarmonicTable hb(dom, dom.b());
    return Setup{std::move(dom), std::move(map), std::move(hb), h};
}

}  // namespace

TEST_CASE("driving extraction invariants") {
    Setup s = disk_setup(24, 0.05);
    Rng rng(1);
    CHECK_THROWS_AS(extract_driving(s.domain, s.map, sample_lerw(s.domain, s.hb, rng), 0.2),
                    CouplingError);
    for (int path = 0; path < 5; ++path) {
        SAW eta = sample_lerw(s.domain, s.hb, rng);
        DrivingExtraction ex = extract_driving(s.domain, s.map, eta, s.h);
        REQUIRE(!ex.meso.empty());
        CHECK(ex.weld_error < 0.05);
        double prev_t = 0, prev_u = 0;
        double r_sum = 0;
        for (std::size_t i = 0; i < ex.meso.size(); ++i) {
            const MesoRecord& m = ex.meso[i];
            CHECK(m.n == i + 1);
            CHECK(m.t >= prev_t);
            CHECK(m.xi == doctest::Approx(m.U - prev_u).epsilon(1e-12));
            if (m.stop_reason == StopReason::capacity)
                CHECK(m.t - prev_t == doctest::Approx(s.h).epsilon(s.h));
            if (m.stop_reason == StopReason::diameter) CHECK(m.r >= 0.99 * std::pow(s.h, 0.4));
            // records after the terminal rule fires must not exist
            if (i + 1 < ex.meso.size()) {
                CHECK(m.t < 1.5);
                CHECK(r_sum + m.r < 1.5);
            }
            r_sum += m.r;
            prev_t = m.t;
            prev_u = m.U;
        }
        CHECK(ex.cell_capacity.size() == ex.cells_used);
        for (std::size_t j = 1; j < ex.cell_capacity.size(); ++j)
            CHECK(ex.cell_capacity[j] >= ex.cell_capacity[j - 1]);
        CHECK(ex.chain.total_capacity() == doctest::Approx(ex.cell_capacity.back()).epsilon(1e-9));
    }
}

TEST_CASE("single-record extraction cap") {
    Setup s = disk_setup(24, 0.05);
    Rng rng(3);
    SAW eta = sample_lerw(s.domain, s.hb, rng);
    DrivingExtraction ex = extract_driving(s.domain, s.map, eta, s.h, 1);
    CHECK(ex.meso.size() == 1);
}

TEST_CASE("Skorokhod embedding laws") {
    Rng rng(17);
    double dt = 1e-4;

    EmbeddingLaw pm1{{{-1.0, 0.5}, {1.0, 0.5}}};
    RunningStat tau, absw;
    int n = 400;
    for (int i = 0; i < n; ++i) {
        SkorokhodResult r = skorokhod_embed(pm1, rng, dt);
        tau.add(r.tau);
        absw.add(std::abs(r.w_tau));
    }
    CHECK(absw.mean() == doctest::Approx(1.0));
    CHECK(std::abs(tau.mean() - pm1.second_moment()) < 3 * tau.se() + 10 * std::sqrt(dt));

    double h = 0.04;
    EmbeddingLaw pmh{{{-std::sqrt(h), 0.5}, {std::sqrt(h), 0.5}}};
    RunningStat tauh;
    for (int i = 0; i < n; ++i) tauh.add(skorokhod_embed(pmh, rng, h * 1e-3).tau);
    CHECK(std::abs(tauh.mean() - h) < 3 * tauh.se() + 10 * h * std::sqrt(1e-3));

    // asymmetric three-atom law: W_tau law within small TV of the target
    EmbeddingLaw tri{{{-2.0, 0.2}, {0.0, 0.3}, {1.0, 0.5}}};
    CHECK(tri.mean() == doctest::Approx(0.1));
    tri.center();
    CHECK(tri.mean() == doctest::Approx(0.0));
    std::vector<double> counts(3, 0.0);
    int m = 4000;
    RunningStat tau3;
    for (int i = 0; i < m; ++i) {
        SkorokhodResult r = skorokhod_embed(tri, rng, dt);
        tau3.add(r.tau);
        std::size_t best = 0;
        for (std::size_t k = 1; k < tri.atoms.size(); ++k)
            if (std::abs(r.w_tau - tri.atoms[k].first) < std::abs(r.w_tau - tri.atoms[best].first))
                best = k;
        counts[best] += 1.0 / m;
    }
    std::vector<double> target = {0.2, 0.3, 0.5};
    CHECK(total_variation(counts, target) < 0.03);
    CHECK(std::abs(tau3.mean() - tri.second_moment()) < 3 * tau3.se() + 20 * std::sqrt(dt));

    EmbeddingLaw biased{{{-1.0, 0.25}, {1.0, 0.75}}};
    CHECK_THROWS_AS(skorokhod_embed(biased, rng, dt), NotCentered);
}

TEST_CASE("curve distance: identity, shift, symmetry") {
    TimedCurve c;
    for (int k = 0; k <= 100; ++k) {
        double t = k / 100.0;
        c.t.push_back(t);
        c.z.push_back(cpx(std::cos(3 * t), 1 + std::sin(2 * t)));
    }
    RhoResult self = rho_metric(c, c);
    CHECK(self.rho == doctest::Approx(0.0));

    double shift = 0.07;
    TimedCurve d;
    for (std::size_t i = 0; i < c.t.size(); ++i) {
        d.t.push_back(c.t[i] + shift);
        d.z.push_back(c.z[i]);
    }
    d.t.insert(d.t.begin(), 0.0);
    d.z.insert(d.z.begin(), c.z.front());
    RhoResult sh = rho_metric(c, d);
    double grid_slack = 2.0 / 400;
    CHECK(sh.rho <= shift + 10 * grid_slack);

    TimedCurve e;
    for (int k = 0; k <= 80; ++k) {
        double t = k / 80.0;
        e.t.push_back(t);
        e.z.push_back(cpx(t, 1 + t * t));
    }
    RhoResult ab = rho_metric(c, e), ba = rho_metric(e, c);
    CHECK(std::abs(ab.rho - ba.rho) < 5 * grid_slack * (1 + ab.rho));
    CHECK(ab.minimax <= ab.rho + 1e-12);
    CHECK(ab.rho <= 2 * ab.minimax + 1e-12);
}

TEST_CASE("coupled run produces finite rho and consistent records") {
    Setup s = disk_setup(30, 0.1);
    Rng rng(77);
    CouplingOutput out = couple_and_measure(s.domain, s.map, s.hb, s.h, rng,
                                            CoupleMode::pathwise_surrogate);
    CHECK(out.n0 == out.meso.size());
    CHECK(std::isfinite(out.rho));
    CHECK(out.rho > 0);
    CHECK(out.R > 10);
    CHECK(out.tau.size() == out.meso.size());
    CHECK(out.sle_curve.t.size() > 2);
    CHECK_THROWS_AS(couple_and_measure(s.domain, s.map, s.hb, s.h, rng,
                                       CoupleMode::pathwise_surrogate, 0.0, 1e9),
                    RTooSmall);

    Rng rng2(78);
    CouplingOutput st = couple_and_measure(s.domain, s.map, s.hb, s.h, rng2,
                                           CoupleMode::statistical);
    RunningStat inc;
    for (std::size_t k = 1; k < st.w.size(); ++k) inc.add(st.w[k] - st.w[k - 1]);
    double dt = st.w_time[1] - st.w_time[0];
    CHECK(std::abs(inc.mean()) < 4 * inc.se());
    CHECK(inc.variance() == doctest::Approx(dt).epsilon(0.5));
}

TEST_CASE("driving statistics on synthetic records") {
    double h = 0.01;
    std::vector<std::vector<MesoRecord>> ens;
    Rng rng(5);
    for (int p = 0; p < 300; ++p) {
        std::vector<MesoRecord> path;
        double u = 0, t = 0;
        for (int n = 1; n <= 40; ++n) {
            MesoRecord m;
            m.n = n;
            m.t = (t += h);
            m.xi = (rng.bits() & 1 ? 1.0 : -1.0) * std::sqrt(h);
            m.U = (u += m.xi);
            m.r = 2 * std::sqrt(h);
            m.stop_reason = StopReason::capacity;
            path.push_back(m);
        }
        ens.push_back(path);
    }
    DrivingStats st = driving_stats(ens, h);
    CHECK(st.pooled_steps == 12000);
    CHECK(std::abs(st.xi_mean) < 3 * st.xi_se + 1e-12);
    CHECK(st.xi2_mean == doctest::Approx(h));
    CHECK(st.var_slope == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("tail statistics bundle") {
    Setup s = disk_setup(24, 0.05);
    std::vector<PathBundle> paths;
    Rng rng(9);
    for (int p = 0; p < 40; ++p) {
        PathBundle pb;
        pb.eta = sample_lerw(s.domain, s.hb, rng);
        pb.meso = extract_driving(s.domain, s.map, pb.eta, s.h).meso;
        paths.push_back(std::move(pb));
    }
    TailParams tp;
    tp.h = s.h;
    tp.rs_pairs = {{2, 6}, {2, 10}, {3, 9}};
    TailStats ts = tail_and_bottleneck_stats(s.domain, s.map, s.hb, paths, tp);
    CHECK(ts.increment_diam_quantiles[0] <= ts.increment_diam_quantiles[1]);
    CHECK(ts.increment_diam_quantiles[1] <= ts.increment_diam_quantiles[2]);
    CHECK(ts.terminal_small_cap_freq >= 0);
    CHECK(ts.terminal_small_cap_freq <= 1);
    for (const auto& row : ts.bottleneck) {
        CHECK(row.freq_double <= row.freq_single + 1e-12);
        CHECK(row.freq_double >= 0);
    }
    CHECK(ts.harmonic_ratio > 0);
    CHECK_THROWS_AS(tail_and_bottleneck_stats(s.domain, s.map, s.hb, {}, tp), InsufficientSamples);
}

TEST_CASE("SLE regularity on the zero driver matches the closed form") {
    std::size_t steps = 1001;
    double dt = 1e-3;
    std::vector<double> w(steps, 0.0);
    SleTrace tr = solve_sle(w, 2.0, dt, std::sqrt(dt));
    RegularityParams rp;
    rp.y_grid = {0.2, 0.4};
    rp.t_stride = 50;
    rp.h = 0.01;
    RegularityStats rs = sle_regularity_stats({tr}, rp);
    REQUIRE(rs.m_sup.size() == 1);
    // closed form: y |f_t'(iy)| = y^2 / sqrt(y^2 + 2t), maximal at t = 0
    double expect = 0;
    for (double y : rp.y_grid) expect = std::max(expect, std::pow(y, rp.beta - 1.0) * y);
    CHECK(rs.m_sup[0] == doctest::Approx(expect).epsilon(1e-2));
    CHECK(rs.modulus[0] > 0);

    RegularityParams bad;
    bad.y_grid = {1e-3};
    CHECK_THROWS_AS(sle_regularity_stats({tr}, bad), ResolutionTooCoarse);
}
