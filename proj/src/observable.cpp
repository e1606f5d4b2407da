#include "lerwlab/observable.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "lerwlab/coupling.hpp"

namespace lerwlab {

double ObservableSample::se() const {
    if (!trials) return 0;
    double p = p_hat();
    return std::sqrt(std::max(p * (1 - p), 1.0 / trials) / trials);
}

namespace {

long long cell_key(const Cell& c) {
    return (static_cast<long long>(c.x) << 32) ^ (c.y & 0xffffffffLL);
}

}  // namespace

std::vector<ObservableSample> estimate_passage_sweep(const LatticeDomain& domain,
                                                     const HalfPlaneMap& map,
                                                     const std::vector<Cell>& zetas,
                                                     std::size_t trials, Rng& rng,
                                                     double s_threshold) {
    std::vector<ObservableSample> out;
    for (const Cell& z : zetas) {
        if (!domain.contains(z)) throw ObservableError("probe point outside the domain");
        ObservableSample s;
        s.zeta = z;
        s.report = conformal_report(map, cpx(z.x, z.y));
        if (s.report.sine < s_threshold) throw ThresholdViolated();
        s.trials = trials;
        out.push_back(s);
    }
    HarmonicTable hb(domain, domain.b());
    std::unordered_set<long long> keys;
    for (std::size_t t = 0; t < trials; ++t) {
        SAW eta = sample_lerw(domain, hb, rng);
        keys.clear();
        for (const Cell& c : eta.vertices) keys.insert(cell_key(c));
        for (auto& s : out)
            if (keys.count(cell_key(s.zeta))) ++s.hits;
    }
    return out;
}

ObservableSample estimate_passage(const LatticeDomain& domain, const HalfPlaneMap& map,
                                  const Cell& zeta, std::size_t trials, Rng& rng,
                                  double s_threshold) {
    return estimate_passage_sweep(domain, map, {zeta}, trials, rng, s_threshold)[0];
}

GreenFit fit_green_constant(const std::vector<ObservableSample>& samples, int power) {
    GreenFit fit;
    fit.power = power;
    std::vector<const ObservableSample*> used;
    for (const auto& s : samples)
        if (s.trials > 0 && s.report.conf_radius > 0) used.push_back(&s);
    if (used.size() < 5) throw InsufficientSpread();
    double rmin = 1e300, rmax = 0;
    for (auto* s : used) {
        rmin = std::min(rmin, s->report.conf_radius);
        rmax = std::max(rmax, s->report.conf_radius);
    }
    if (rmax < 4 * rmin) throw InsufficientSpread();
    fit.used = used.size();

    // single-parameter weighted least squares for c in p = c x, x = r^{-3/4} S^power
    double num = 0, den = 0;
    for (auto* s : used) {
        double x = std::pow(s->report.conf_radius, -0.75) * std::pow(s->report.sine, power);
        double w = 1.0 / (s->se() * s->se());
        num += w * s->p_hat() * x;
        den += w * x * x;
    }
    fit.c = num / den;

    std::vector<double> resid_s, resid_r, s_key, r_key;
    for (auto* s : used) {
        double x = std::pow(s->report.conf_radius, -0.75) * std::pow(s->report.sine, power);
        double res = (s->p_hat() - fit.c * x) / s->se();
        fit.max_residual_se = std::max(fit.max_residual_se, std::abs(res));
        resid_s.push_back(res);
        s_key.push_back(s->report.sine);
        resid_r.push_back(res);
        r_key.push_back(s->report.conf_radius);
    }
    // sign test for a monotone residual trend in the given ordering
    auto trend_test = [](std::vector<double> res, std::vector<double> key) {
        auto med = [](std::vector<double> v) {
            std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
            return v[v.size() / 2];
        };
        double mr = med(res), mk = med(key);
        std::size_t k = 0, n = 0;
        for (std::size_t i = 0; i < res.size(); ++i) {
            if (res[i] == mr || key[i] == mk) continue;
            ++n;
            if ((res[i] > mr) == (key[i] > mk)) ++k;
        }
        return n ? sign_test_pvalue(k, n) : 1.0;
    };
    fit.s_trend_pvalue = trend_test(resid_s, s_key);
    fit.r_trend_pvalue = trend_test(resid_r, r_key);

    // free r-exponent from the subset with nearly constant S (top decile span)
    double smax = 0;
    for (auto* s : used) smax = std::max(smax, s->report.sine);
    std::vector<double> lx, ly;
    for (auto* s : used)
        if (s->report.sine > 0.95 * smax && s->p_hat() > 0) {
            lx.push_back(std::log(s->report.conf_radius));
            ly.push_back(std::log(s->p_hat()));
        }
    if (lx.size() >= 3) {
        LineFit lf = least_squares(lx, ly);
        fit.r_exponent = lf.slope;
        fit.r_exponent_se = lf.slope_se;
    }
    return fit;
}

void write_observable_csv(const std::string& path, const std::vector<ObservableSample>& samples) {
    std::ofstream f(path);
    f << std::setprecision(17) << "zeta_x,zeta_y,hits,trials,r_A,S,p_hat,se\n";
    for (const auto& s : samples)
        f << s.zeta.x << ',' << s.zeta.y << ',' << s.hits << ',' << s.trials << ','
          << s.report.conf_radius << ',' << s.report.sine << ',' << s.p_hat() << ',' << s.se()
          << '\n';
}

std::vector<ObservableSample> read_observable_csv(const std::string& path,
                                                  const LatticeDomain& domain,
                                                  const HalfPlaneMap& map) {
    std::ifstream f(path);
    if (!f) throw ObservableError("cannot open " + path);
    std::string line;
    std::getline(f, line);  // header
    std::vector<ObservableSample> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        ObservableSample s;
        char comma;
        double r, sine, p, se;
        ss >> s.zeta.x >> comma >> s.zeta.y >> comma >> s.hits >> comma >> s.trials >> comma >> r
           >> comma >> sine >> comma >> p >> comma >> se;
        if (!domain.contains(s.zeta)) throw ObservableError("probe point outside the domain");
        s.report = conformal_report(map, cpx(s.zeta.x, s.zeta.y));
        out.push_back(s);
    }
    return out;
}

OneStepExpansion one_step_expansion_test(const LatticeDomain& domain, const HalfPlaneMap& map,
                                         const HarmonicTable& hb, double h, std::size_t paths,
                                         Rng& rng) {
    OneStepExpansion res;
    res.h = h;
    res.paths = paths;
    RunningStat xi, xi2, plus, minus;
    for (std::size_t p = 0; p < paths; ++p) {
        SAW eta = sample_lerw(domain, hb, rng);
        DrivingExtraction ex = extract_driving(domain, map, eta, h, 1);
        if (ex.meso.empty() || ex.meso[0].stop_reason == StopReason::terminal) continue;
        double x = ex.meso[0].xi, t = ex.meso[0].t;
        xi.add(x);
        xi2.add(x * x);
        plus.add(1.5 * x + 1.125 * (x * x - t));
        minus.add(-1.5 * x + 1.125 * (x * x - t));
    }
    res.pooled = xi.count();
    res.xi_mean = xi.mean();
    res.xi_se = xi.se();
    res.xi2_mean = xi2.mean();
    res.xi2_se = xi2.se();
    res.plus_mean = plus.mean();
    res.plus_se = plus.se();
    res.minus_mean = minus.mean();
    res.minus_se = minus.se();
    return res;
}

}  // namespace lerwlab
