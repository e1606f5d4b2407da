#pragma once
#include <string>
#include <vector>

#include "lerwlab/conformal.hpp"
#include "lerwlab/grid.hpp"
#include "lerwlab/random.hpp"
#include "lerwlab/stats.hpp"
#include "lerwlab/walk.hpp"

namespace lerwlab {

struct ObservableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ThresholdViolated : ObservableError {
    ThresholdViolated() : ObservableError("sine of the image argument below the configured threshold") {}
};
struct InsufficientSpread : ObservableError {
    InsufficientSpread() : ObservableError("sample points span too little conformal-radius range for a fit") {}
};

// Point-passage estimate P{zeta in eta} together with the conformal data of
// zeta used by the power-law fit: r = conformal radius, S = sin arg F(zeta).
struct ObservableSample {
    Cell zeta;
    std::size_t hits = 0, trials = 0;
    ConformalReport report;
    double p_hat() const { return trials ? static_cast<double>(hits) / trials : 0.0; }
    double se() const;
};

ObservableSample estimate_passage(const LatticeDomain& domain, const HalfPlaneMap& map,
                                  const Cell& zeta, std::size_t trials, Rng& rng,
                                  double s_threshold = 0.2);

// One LERW ensemble shared across all probe points.
std::vector<ObservableSample> estimate_passage_sweep(const LatticeDomain& domain,
                                                     const HalfPlaneMap& map,
                                                     const std::vector<Cell>& zetas,
                                                     std::size_t trials, Rng& rng,
                                                     double s_threshold = 0.2);

struct GreenFit {
    double c = 0;                   // fitted constant of c r^{-3/4} S^power
    int power = 3;
    double max_residual_se = 0;     // worst |p_hat - model| in SE units
    double r_exponent = 0;          // free-exponent fit of log p vs log r (S == const subset)
    double r_exponent_se = 0;
    double s_trend_pvalue = 1;      // sign test of residual trend in S order
    double r_trend_pvalue = 1;      // sign test of residual trend in r order
    std::size_t used = 0;
};
GreenFit fit_green_constant(const std::vector<ObservableSample>& samples, int power = 3);

void write_observable_csv(const std::string& path, const std::vector<ObservableSample>& samples);
std::vector<ObservableSample> read_observable_csv(const std::string& path,
                                                  const LatticeDomain& domain,
                                                  const HalfPlaneMap& map);

// Monte Carlo check of the one-step expansion of the passage probability at
// the reference points 2(i +- 1): the statistics +-(3/2) xi + (9/8)(xi^2 - t)
// should have mean O(h^{6/5}).
struct OneStepExpansion {
    double h = 0;
    std::size_t paths = 0, pooled = 0;
    double xi_mean = 0, xi_se = 0;
    double xi2_mean = 0, xi2_se = 0;
    double plus_mean = 0, plus_se = 0;    // +(3/2) xi + (9/8)(xi^2 - t)
    double minus_mean = 0, minus_se = 0;  // -(3/2) xi + (9/8)(xi^2 - t)
};
OneStepExpansion one_step_expansion_test(const LatticeDomain& domain, const HalfPlaneMap& map,
                                         const HarmonicTable& hb, double h, std::size_t paths,
                                         Rng& rng);

}  // namespace lerwlab
