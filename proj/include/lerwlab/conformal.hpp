#pragma once
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lerwlab/grid.hpp"
#include "lerwlab/random.hpp"

namespace lerwlab {

struct ConformalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FitDiverged : ConformalError {
    double worst_residual;
    std::size_t sample_index;
    FitDiverged(double res, std::size_t idx)
        : ConformalError("map fit diverged at sample " + std::to_string(idx)),
          worst_residual(res), sample_index(idx) {}
};
struct TooCloseToBoundary : ConformalError {
    TooCloseToBoundary() : ConformalError("point too close to the boundary for a reliable report") {}
};
struct BadMapFile : ConformalError {
    explicit BadMapFile(const std::string& w) : ConformalError("bad map file: " + w) {}
};

// Conformal map F: D -> H with F(a_mid) = 0, F(b_mid) = infinity, built as a
// composition of elementary slit-opening maps fitted through boundary samples
// and closed by a square map.  Evaluation and derivatives are exact chain
// rules through the stored parameters.
class HalfPlaneMap {
  public:
    cpx forward(cpx z) const;
    cpx inverse(cpx w) const;
    cpx derivative(cpx z) const;             // F'(z)
    double inverse_derivative_abs(cpx w) const;

    double scale() const { return lambda_; }
    void rescale(double factor) { lambda_ *= factor; }
    cpx interior_point() const { return z_int_; }
    cpx a_midpoint() const { return a_mid_; }
    cpx b_midpoint() const { return b_mid_; }
    const std::vector<cpx>& boundary_vertices() const { return boundary_; }
    double boundary_distance(cpx z) const;  // distance to the fitted polygon
    std::size_t stages() const { return unzips_.size(); }

    std::string serialize() const;
    static HalfPlaneMap deserialize(const std::string& text);

    friend HalfPlaneMap fit_map(const JordanPolygon& polygon, double resolution);

  private:
    struct Unzip {
        bool moebius = true;  // false when the sample sat on the imaginary axis
        double xc = 0;        // Moebius pole
        double b = 0;         // slit height after the Moebius step
        double s = 1;         // post-step rescale; keeps the working frame O(1)
    };
    cpx w0_, w1_;
    std::vector<Unzip> unzips_;
    bool q_finite_ = true;
    double q_ = 0;
    int sigma_ = 1;
    double alpha_ = 0;  // image of a_mid before the final affine step
    double lambda_ = 1;
    cpx z_int_, a_mid_, b_mid_;
    std::vector<cpx> boundary_;
};

HalfPlaneMap fit_map(const JordanPolygon& polygon, double resolution = 4.0);
// Rescales F so that the preimage of 2i is (locally) the deepest point of the
// domain over the one-parameter dilation family; idempotent.
HalfPlaneMap normalize_scale(HalfPlaneMap map);

struct ConformalReport {
    double theta = 0;        // arg F(z)
    double sine = 0;         // sin(theta)
    double conf_radius = 0;  // 2 Im F(z) / |F'(z)|
    double R = 0;            // 4 |(F^{-1})'(2i)|
};
ConformalReport conformal_report(const HalfPlaneMap& map, cpx z, double min_height = 1e-9);

void save_map(const HalfPlaneMap& map, const std::string& path);
HalfPlaneMap load_map(const std::string& path);

struct HcapEstimate {
    double value = 0;
    double se = 0;
};
// Monte Carlo half-plane capacity of a hull via Brownian motion run from iy
// (walk-on-spheres): hcap = lim y E^{iy}[Im B_tau], with a two-height
// Richardson step removing the leading finite-y bias.  hull_dist must return
// a distance (or lower bound) to the hull; the hull must sit inside
// {|z| < y_start/4}.
HcapEstimate hcap_bm_oracle(const std::function<double(cpx)>& hull_dist, double bounding_radius,
                            std::size_t samples, double y_start, Rng& rng);

// Distance helper for polyline hulls (used with the oracle).
double polyline_distance(const std::vector<cpx>& points, cpx z);

}  // namespace lerwlab
