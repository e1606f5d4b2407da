#pragma once
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lerwlab {

// Kahan-compensated accumulator; merge order is fixed by the caller so that
// parallel runs reproduce the serial result bit for bit.
class CompensatedSum {
  public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

  private:
    double s_ = 0.0, c_ = 0.0;
};

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // unbiased sample variance
    std::size_t n = 0;
    double se() const { return n > 1 ? std::sqrt(var / double(n)) : 0.0; }
};

// streaming mean/variance (Welford)
class RunningStat {
  public:
    void add(double x) {
        ++n_;
        double d = x - mean_;
        mean_ += d / double(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / double(n_ - 1) : 0.0; }
    double se() const { return n_ > 1 ? std::sqrt(variance() / double(n_)) : 0.0; }

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0, m2_ = 0.0;
};

inline MeanVar mean_var(const std::vector<double>& xs) {
    MeanVar mv;
    mv.n = xs.size();
    if (mv.n == 0) return mv;
    CompensatedSum s;
    for (double x : xs) s.add(x);
    mv.mean = s.value() / double(mv.n);
    if (mv.n > 1) {
        CompensatedSum q;
        for (double x : xs) q.add((x - mv.mean) * (x - mv.mean));
        mv.var = q.value() / double(mv.n - 1);
    }
    return mv;
}

struct LineFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0, slope_se = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: bad sizes");
    std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= double(n); my /= double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    if (n > 2) f.slope_se = std::sqrt(ss_res / double(n - 2) / sxx);
    return f;
}

// Two-sided binomial sign test p-value for k successes in n trials vs p=1/2.
inline double sign_test_pvalue(std::size_t k, std::size_t n) {
    // sum of tail probabilities; exact via log binomials
    auto logc = [](std::size_t nn, std::size_t kk) {
        return std::lgamma(double(nn) + 1) - std::lgamma(double(kk) + 1) -
               std::lgamma(double(nn - kk) + 1);
    };
    double ln2 = std::log(2.0);
    std::size_t lo = std::min(k, n - k);
    double tail = 0.0;
    for (std::size_t i = 0; i <= lo; ++i)
        tail += std::exp(logc(n, i) - double(n) * ln2);
    double p = 2.0 * tail;
    return p > 1.0 ? 1.0 : p;
}

// Total variation distance between two empirical distributions given as
// aligned probability vectors.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("total_variation: bad sizes");
    double tv = 0;
    for (std::size_t i = 0; i < p.size(); ++i) tv += std::fabs(p[i] - q[i]);
    return tv / 2.0;
}

}  // namespace lerwlab
