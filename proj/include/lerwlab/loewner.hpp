#pragma once
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace lerwlab {

using cpx = std::complex<double>;

struct LoewnerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PointBelowAxis : LoewnerError { PointBelowAxis() : LoewnerError("polyline point below the real axis") {} };
struct Absorbed : LoewnerError {
    std::size_t step;
    explicit Absorbed(std::size_t s) : LoewnerError("point absorbed at step " + std::to_string(s)), step(s) {}
};
struct HypothesisViolated : LoewnerError {
    explicit HypothesisViolated(const std::string& w) : LoewnerError("hypothesis violated: " + w) {}
};
struct StepTooCoarse : LoewnerError { StepTooCoarse() : LoewnerError("elementary hull diameter exceeds safety bound") {} };

// Slit hull attached to the real line at `base`.  g maps H minus the slit
// onto H with g(z) = z + h/z' + O(1/z'^2), z' = z - base (hcap = coefficient
// of 1/z).  Vertical slits have closed-form g and f; tilted slits have
// closed-form f = g^{-1} and Newton-inverted g.
class ElementaryHull {
  public:
    enum class Kind { vertical, tilted };

    static ElementaryHull vertical_slit(double base, double height);
    // tilt alpha in (0,1); alpha = 1/2 is vertical.  m = (1-alpha)A = alpha B.
    static ElementaryHull tilted_slit(double base, double alpha, double m);
    // slit whose tip is exactly base + w (w in H)
    static ElementaryHull fit_tip(double base, cpx w);
    // slit with capacity dcap whose driving displacement is du
    static ElementaryHull fit_increment(double base, double du, double dcap);

    Kind kind() const { return kind_; }
    double base() const { return base_; }
    double capacity() const { return h_; }
    double radius() const { return r_; }          // = diam of the slit from base
    double driving_shift() const { return du_; }  // image of the tip under g, minus base
    cpx tip() const { return cpx(base_, 0) + tip_; }

    cpx map_out(cpx z) const;   // g
    cpx map_in(cpx z) const;    // f = g^{-1}
    cpx f_prime(cpx z) const;   // derivative of f
    cpx g_prime(cpx z) const;   // derivative of g (= 1/f'(g(z)))
    bool absorbs(cpx z) const;  // z on/inside the slit (up to tolerance)

  private:
    Kind kind_ = Kind::vertical;
    double base_ = 0, h_ = 0, r_ = 0, du_ = 0;
    double ell_ = 0;                       // vertical: slit height
    double alpha_ = 0.5, A_ = 0, B_ = 0;   // tilted parameters
    cpx tip_;                              // tip relative to base
};

struct ChainStep {
    ElementaryHull hull;  // hull.base() is the driving location U_j
};

class DiscreteChain {
  public:
    void push(ElementaryHull hull) { steps_.push_back(ChainStep{std::move(hull)}); }
    std::size_t size() const { return steps_.size(); }
    const ChainStep& step(std::size_t j) const { return steps_[j]; }
    double total_capacity() const;
    double max_radius() const;

    // forward composition g_n = g^n o ... o g^1 applied to z
    cpx forward(cpx z, std::size_t n) const;
    cpx forward(cpx z) const { return forward(z, steps_.size()); }
    // reverse composition f_n = f^1 o ... o f^n applied to z
    cpx reverse(cpx z, std::size_t n) const;
    cpx reverse(cpx z) const { return reverse(z, steps_.size()); }

  private:
    std::vector<ChainStep> steps_;
};

struct ForwardTrajectory {
    std::vector<cpx> z;        // z_0 = z, ..., z_n
    double deriv_abs = 1.0;    // |g_n'(z)| by the chain rule
    double re_sum = 0.0;       // sum of Re h_j/(z_j - U_j)^2
    double nu = 1.0;           // min_j sin arg(z_j - U_j)
};
ForwardTrajectory forward_evaluate(const DiscreteChain& chain, cpx z, std::size_t n);

struct ReverseTrajectory {
    std::vector<cpx> z;      // reverse flow: z, f^n(z), f^{n-1}(f^n(z)), ...
    double deriv_abs = 1.0;  // |f_n'(z)|
    double re_sum = 0.0;
};
ReverseTrajectory reverse_evaluate(const DiscreteChain& chain, cpx z, std::size_t n);

struct PolylineCap {
    double hcap = 0.0;
    double diameter = 0.0;
    DiscreteChain chain;
};
// Welds a polyline in closed H starting on R into a chain of tilted slits,
// one per point; hcap adds exactly over the elementary capacities.
PolylineCap hcap_polyline(const std::vector<cpx>& points);

struct ComparisonParams {
    double h = 0, r = 0, eps = 0, delta = 0;
};
struct ComparisonRecord {
    double forward_difference = 0, forward_bound = 0, forward_ratio = 0;
    double reverse_difference = 0, reverse_bound = 0, reverse_ratio = 0;
    double y_n = 0, y_n_other = 0;
    bool hypotheses_ok = true;
    std::string violation;
};
ComparisonRecord compare_chains(const DiscreteChain& a, const DiscreteChain& b, cpx z,
                                const ComparisonParams& params, bool strict = true);

struct SleTrace {
    double kappa = 0, dt = 0, eps_tip = 0;
    std::vector<double> t;  // capacity times of the samples
    std::vector<double> w;  // driving samples
    std::vector<cpx> gamma;
    DiscreteChain chain;
};
SleTrace solve_sle(const std::vector<double>& W, double kappa, double dt, double eps_tip,
                   double safety_radius = 0.75);

// Residuals of the single-hull expansions at z+ = i+1 and z- = i-1, and of
// the observable expansion, all divided by their stated error scales.
struct TaylorRecord {
    double im_constant = 0;        // |Im g - (1 - h/2)| / (h r)
    double deriv_constant = 0;     // ||g'| - 1| / (h r)
    double sine_constant = 0;      // sine expansion residual / (h r + r^3)
    double observable_constant = 0;
    double sine_value_plus = 0, sine_value_minus = 0;
    double observable_value_plus = 0, observable_value_minus = 0;
};
TaylorRecord taylor_check(const ElementaryHull& hull, double U, double kappa);

// Measured constants for the four single-hull estimates at a point z with
// y >= delta = r^{1/4}, plus the two readings of the derivative expansion
// (the differentiated form 1 - h/z^2 and the printed variant 1 - h^2/z).
struct LemmaResiduals {
    double map_constant = 0;      // |g - z - h/(z-U)| / (h delta^2)
    double deriv_constant = 0;    // |g' - 1 + h/(z-U)^2| / (h delta)
    double height_constant = 0;   // |Im g - y(1 - h/|z-U|^2)| / (y h delta)
    double upsilon_constant = 0;  // |Ups - y(1 - 2 h sin^2/|z-U|^2)| / (y h delta)
    double im_g_le_y = 0;         // max(Im g - y, 0)
    double upsilon_le_y = 0;      // max(Ups - y, 0)
    double deriv_resid_hz2 = 0;   // |g' - (1 - h/z^2)| / (r h / |z|^3)
    double deriv_resid_h2z = 0;   // |g' - (1 - h^2/z)| / (r h / |z|^3)
};
LemmaResiduals lemma_residuals(const ElementaryHull& hull, cpx z);

}  // namespace lerwlab
