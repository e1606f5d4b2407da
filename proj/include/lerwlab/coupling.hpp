#pragma once
#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lerwlab/conformal.hpp"
#include "lerwlab/grid.hpp"
#include "lerwlab/loewner.hpp"
#include "lerwlab/random.hpp"
#include "lerwlab/stats.hpp"
#include "lerwlab/walk.hpp"

namespace lerwlab {

struct CouplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MapAccuracyLost : CouplingError {
    double residual;
    explicit MapAccuracyLost(double r)
        : CouplingError("map accuracy lost mid-run (residual " + std::to_string(r) + ")"), residual(r) {}
};
struct RTooSmall : CouplingError { RTooSmall() : CouplingError("domain scale R below configured floor") {} };
struct NotCentered : CouplingError { NotCentered() : CouplingError("embedding law is not centered") {} };
struct InsufficientSamples : CouplingError { InsufficientSamples() : CouplingError("not enough paths for the statistic") {} };
struct ResolutionTooCoarse : CouplingError { ResolutionTooCoarse() : CouplingError("trace resolution too coarse for the y grid") {} };

enum class StopReason { capacity, diameter, terminal };

struct MesoRecord {
    std::size_t n = 0;    // mesoscopic index, 1-based
    std::size_t m_n = 0;  // lattice cells consumed at the stop
    double t = 0;         // cumulative capacity at the stop
    double r = 0;         // increment diameter, measured in the previous-stop frame
    double U = 0;         // driving value at the stop
    double xi = 0;        // U_n - U_{n-1}
    StopReason stop_reason = StopReason::terminal;
};

struct DrivingExtraction {
    std::vector<MesoRecord> meso;
    DiscreteChain chain;
    std::vector<double> cell_capacity;  // cumulative capacity after each consumed cell
    double weld_error = 0;              // max |Im| seen at points expected on R
    std::size_t cells_used = 0;
};

// Unrolls the path cell by cell through the evolving half-plane picture,
// fitting slit hulls to each cell's exposed boundary; emits one MesoRecord
// per stopping time (capacity h, with sub-cell bisection into [h, h+h^2], or
// diameter diam_mult * h^{2/5}), until cumulative capacity or cumulative
// increment diameter reaches 3/2 or the path ends.  diam_mult = infinity
// stops on capacity alone, exposing the raw step-diameter tail.
DrivingExtraction extract_driving(const LatticeDomain& domain, const HalfPlaneMap& map,
                                  const SAW& eta, double h,
                                  std::size_t max_records = std::numeric_limits<std::size_t>::max(),
                                  double diam_mult = 1.0);

struct DrivingStats {
    std::size_t paths = 0, pooled_steps = 0;
    double h = 0;
    double xi_mean = 0, xi_se = 0;
    double xi2_mean = 0, xi2_se = 0;
    double xi4_mean = 0;
    std::vector<std::pair<double, double>> exp_moments;  // (beta, E exp(beta xi/sqrt(h)))
    double var_slope = 0, var_slope_r2 = 0;  // Var(U_n) vs n h
};
DrivingStats driving_stats(const std::vector<std::vector<MesoRecord>>& ensemble, double h);

struct EmbeddingLaw {
    std::vector<std::pair<double, double>> atoms;  // (value, probability)
    void center();                                 // shift values to zero mean
    double mean() const;
    double second_moment() const;
};

struct SkorokhodResult {
    std::vector<double> w;  // discretized Brownian path on the dt grid
    double tau = 0;
    double w_tau = 0;
};
// Dubins binary-splitting embedding: W_tau is distributed as the law.
SkorokhodResult skorokhod_embed(const EmbeddingLaw& law, Rng& rng, double dt);

struct TimedCurve {
    std::vector<double> t;
    std::vector<cpx> z;
};
struct RhoResult {
    double rho = 0;         // sup time distortion + sup spatial distance on the alignment
    double minimax = 0;     // DP value (max of both costs); minimax <= rho <= 2 minimax
    std::size_t grid = 0;
};
RhoResult rho_metric(const TimedCurve& c1, const TimedCurve& c2, std::size_t grid = 400);

enum class CoupleMode { statistical, pathwise_surrogate };

struct CouplingOutput {
    std::vector<MesoRecord> meso;
    std::vector<double> tau;           // tau_n = t_{m_n}
    std::vector<double> w_time, w;     // driving path on a uniform grid
    SleTrace sle;                      // pathwise-surrogate mode
    TimedCurve lerw_curve, sle_curve;  // domain coordinates scaled by 1/R
    double rho = std::numeric_limits<double>::quiet_NaN();
    std::size_t n0 = 0;
    double h = 0;
    double weld_error = 0;
    double R = 0;
    SAW eta;
};
CouplingOutput couple_and_measure(const LatticeDomain& domain, const HalfPlaneMap& map,
                                  const HarmonicTable& hb, double h, Rng& rng, CoupleMode mode,
                                  double drift_mu = 0.0, double r_floor = 0.0);

struct PathBundle {
    SAW eta;
    std::vector<MesoRecord> meso;
};
struct TailParams {
    double h = 0.01;
    std::vector<double> K_grid = {1, 2, 3, 4, 5, 6};
    std::vector<std::pair<double, double>> rs_pairs;  // (r, s) with r < s
    std::vector<double> visit_radii = {4, 8, 16};
    double jan_r = 0.2;  // scale of the harmonic-comparison window, H units
};
struct BottleneckRow {
    double r = 0, s = 0;
    double freq_double = 0;  // far-near-far-near pattern
    double freq_single = 0;  // near-far-near pattern
    std::size_t centers = 0;
};
struct TailStats {
    LineFit diameter_tail;  // log frequency of {r_m >= K sqrt(h)} vs K
    std::vector<std::array<double, 2>> diameter_points;  // (K, log freq)
    std::vector<BottleneckRow> bottleneck;
    LineFit bottleneck_fit;  // log freq_double vs log(r/s)
    std::vector<std::array<double, 3>> visits;  // r, P{0 in eta | I_r}, scaled by r^{3/4}
    double visit_ratio = 0;                     // max/min of the scaled column
    double terminal_small_cap_freq = 0;         // t at the terminal stop < 3/2
    std::array<double, 3> increment_diam_quantiles = {0, 0, 0};  // 50/90/99%
    double harmonic_ratio = 0;  // min_{V+} h_b / max_{V-} h_b (target >= 3/2)
};
TailStats tail_and_bottleneck_stats(const LatticeDomain& domain, const HalfPlaneMap& map,
                                    const HarmonicTable& hb, const std::vector<PathBundle>& paths,
                                    const TailParams& params);

struct RegularityParams {
    std::vector<double> y_grid = {0.05, 0.1, 0.2};
    double beta = 0.65;
    std::vector<double> c_grid = {0.5, 1, 2, 4};
    double h = 0.01;
    std::size_t t_stride = 4;
};
struct RegularityStats {
    std::vector<double> m_sup;                      // per path sup_y y^{beta-1} M(y)
    std::vector<std::pair<double, double>> tails;   // (c, frequency m_sup > c)
    std::vector<double> modulus;                    // per path M_gamma(min y)
    std::vector<double> max_increment_diam;         // per path, over capacity-h intervals
    double exceed_h130 = 0;                         // frequency max diam > h^{1/30}
};
RegularityStats sle_regularity_stats(const std::vector<SleTrace>& traces,
                                     const RegularityParams& params);

void write_coupling_output(const std::string& dir, const CouplingOutput& out, uint64_t seed,
                           const std::string& config_hash);

}  // namespace lerwlab
