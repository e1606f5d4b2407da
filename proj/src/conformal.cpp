#include "lerwlab/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "lerwlab/stats.hpp"

namespace lerwlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// vertical-slit opening map z -> sqrt(z^2 + b^2), branch asymptotic to z
cpx slit_out(cpx z, double b) {
    if (std::abs(z) < 1e-300) return cpx(0, 0);
    cpx t = b / z;
    return z * std::sqrt(1.0 + t * t);
}
// inverse: z -> sqrt(z^2 - b^2)
cpx slit_in(cpx z, double b) {
    if (std::abs(z) < 1e-300) return cpx(0, 0);
    cpx t = b / z;
    return z * std::sqrt(1.0 - t * t);
}

double seg_dist(cpx p, cpx a, cpx b) {
    cpx d = b - a;
    double len2 = std::norm(d);
    if (len2 == 0) return std::abs(p - a);
    double t = ((p.real() - a.real()) * d.real() + (p.imag() - a.imag()) * d.imag()) / len2;
    t = std::min(std::max(t, 0.0), 1.0);
    return std::abs(p - (a + t * d));
}

}  // namespace

cpx HalfPlaneMap::forward(cpx z) const {
    cpx T = (z - w1_) / (z - w0_);
    cpx zeta = cpx(0, 1) * std::sqrt(T);
    for (const Unzip& u : unzips_) {
        if (u.moebius) zeta = zeta / (1.0 - zeta / u.xc);
        zeta = u.s * slit_out(zeta, u.b);
    }
    cpx m = q_finite_ ? zeta / (1.0 - zeta / q_) : zeta;
    cpx w = static_cast<double>(sigma_) * m * m;
    return lambda_ * (w - alpha_);
}

cpx HalfPlaneMap::derivative(cpx z) const {
    cpx T = (z - w1_) / (z - w0_);
    cpx Tp = (w1_ - w0_) / ((z - w0_) * (z - w0_));
    cpx sq = std::sqrt(T);
    cpx zeta = cpx(0, 1) * sq;
    cpx der = cpx(0, 1) * Tp / (2.0 * sq);
    for (const Unzip& u : unzips_) {
        if (u.moebius) {
            cpx den = 1.0 - zeta / u.xc;
            der /= den * den;
            zeta = zeta / den;
        }
        cpx znew = slit_out(zeta, u.b);
        der *= u.s * (zeta / znew);
        zeta = u.s * znew;
    }
    cpx m = zeta;
    if (q_finite_) {
        cpx den = 1.0 - zeta / q_;
        der /= den * den;
        m = zeta / den;
    }
    der *= static_cast<double>(sigma_) * 2.0 * m;
    return lambda_ * der;
}

cpx HalfPlaneMap::inverse(cpx w) const {
    cpx v = w / lambda_ + alpha_;
    cpx m = sigma_ == 1 ? std::sqrt(v) : cpx(0, 1) * std::sqrt(v);
    cpx zeta = q_finite_ ? m / (1.0 + m / q_) : m;
    for (auto it = unzips_.rbegin(); it != unzips_.rend(); ++it) {
        zeta = slit_in(zeta / it->s, it->b);
        if (it->moebius) zeta = zeta / (1.0 + zeta / it->xc);
    }
    cpx T = -zeta * zeta;
    return (w1_ - w0_ * T) / (1.0 - T);
}

double HalfPlaneMap::inverse_derivative_abs(cpx w) const {
    return 1.0 / std::abs(derivative(inverse(w)));
}

double HalfPlaneMap::boundary_distance(cpx z) const {
    double best = std::numeric_limits<double>::infinity();
    std::size_t n = boundary_.size();
    for (std::size_t i = 0; i < n; ++i)
        best = std::min(best, seg_dist(z, boundary_[i], boundary_[(i + 1) % n]));
    return best;
}

HalfPlaneMap fit_map(const JordanPolygon& polygon, double resolution) {
    const auto& v = polygon.vertices;
    std::size_t n = v.size();
    if (n < 4) throw ConformalError("polygon too small to fit");
    cpx a_mid = polygon.segment_midpoint(polygon.a_index);
    cpx b_mid = polygon.segment_midpoint(polygon.b_index);
    int fine = std::max(1, static_cast<int>(std::lround(resolution)));

    auto pieces_for = [&](cpx p, cpx q) {
        double d = std::min(std::min(seg_dist(a_mid, p, q), seg_dist(b_mid, p, q)), 1e9);
        return d <= 3.0 ? fine : 1;
    };
    // boundary samples, counterclockwise, starting just after b_mid and
    // ending just before it; a_mid is forced to be a sample
    std::vector<cpx> samples;
    std::size_t a_sample = 0;
    auto subdivide = [&](cpx p, cpx q, bool include_end) {
        int k = pieces_for(p, q);
        for (int j = 1; j < k; ++j) samples.push_back(p + (static_cast<double>(j) / k) * (q - p));
        if (include_end) samples.push_back(q);
    };
    cpx b_next = v[(polygon.b_index + 1) % n];
    subdivide(b_mid, b_next, true);
    for (std::size_t s = 1; s < n; ++s) {
        std::size_t i = (polygon.b_index + s) % n;
        cpx p = v[i], q = v[(i + 1) % n];
        if (i == polygon.a_index) {
            subdivide(p, a_mid, true);
            a_sample = samples.size() - 1;
            subdivide(a_mid, q, true);
        } else if (i == polygon.b_index) {
            subdivide(p, b_mid, false);  // final stretch back toward b_mid
        } else {
            subdivide(p, q, true);
        }
    }
    if (samples.size() < 3) throw ConformalError("too few boundary samples");

    HalfPlaneMap map;
    map.w0_ = b_mid;
    map.w1_ = samples[0];
    map.a_mid_ = a_mid;
    map.b_mid_ = b_mid;
    map.boundary_ = v;

    auto partial = [&](cpx z) {
        cpx T = (z - map.w0_ == 0.0) ? cpx(1e300, 0) : (z - map.w1_) / (z - map.w0_);
        cpx zeta = cpx(0, 1) * std::sqrt(T);
        for (const auto& u : map.unzips_) {
            if (u.moebius) zeta = zeta / (1.0 - zeta / u.xc);
            zeta = u.s * slit_out(zeta, u.b);
        }
        return zeta;
    };

    map.q_finite_ = false;
    map.q_ = 0;
    auto track_real = [&](double x, const HalfPlaneMap::Unzip& u) {
        double t = x;
        if (u.moebius) {
            double den = 1.0 - t / u.xc;
            if (std::abs(den) < 1e-300) return std::numeric_limits<double>::infinity();
            t = t / den;
        }
        double s = std::hypot(t, u.b);
        return (t >= 0 ? s : -s) * u.s;
    };
    for (std::size_t k = 1; k < samples.size(); ++k) {
        cpx zeta = partial(samples[k]);
        if (!(zeta.imag() > 0)) throw FitDiverged(zeta.imag(), k);
        HalfPlaneMap::Unzip u;
        double n2 = std::norm(zeta);
        u.b = n2 / zeta.imag();
        u.s = 1.0 / u.b;  // hold the working frame at unit scale
        if (std::abs(zeta.real()) < 1e-12 * std::abs(zeta)) {
            u.moebius = false;
        } else {
            u.moebius = true;
            u.xc = n2 / zeta.real();
        }
        // track the image of b_mid (= infinity of the opening map)
        if (!map.q_finite_) {
            if (u.moebius) {
                double t = -u.xc;
                double s = std::hypot(t, u.b);
                map.q_ = (t >= 0 ? s : -s) * u.s;
                map.q_finite_ = true;
            }
        } else {
            double qn = track_real(map.q_, u);
            if (std::isinf(qn)) {
                map.q_finite_ = false;
                map.q_ = 0;
            } else {
                map.q_ = qn;
            }
        }
        map.unzips_.push_back(u);
    }

    // interior reference point: coarse grid, deepest cell wins
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (cpx p : v) {
        xlo = std::min(xlo, p.real());
        xhi = std::max(xhi, p.real());
        ylo = std::min(ylo, p.imag());
        yhi = std::max(yhi, p.imag());
    }
    double best = -1;
    for (int i = 1; i < 24; ++i)
        for (int j = 1; j < 24; ++j) {
            cpx p(xlo + (xhi - xlo) * i / 24.0, ylo + (yhi - ylo) * j / 24.0);
            if (!polygon.point_inside(p)) continue;
            double d = map.boundary_distance(p);
            if (d > best) {
                best = d;
                map.z_int_ = p;
            }
        }
    if (best <= 0) throw ConformalError("no interior reference point found");

    auto close_raw = [&](cpx z) {
        cpx zeta = partial(z);
        cpx m = map.q_finite_ ? zeta / (1.0 - zeta / map.q_) : zeta;
        return m * m;
    };
    map.sigma_ = close_raw(map.z_int_).imag() > 0 ? 1 : -1;

    // image of a_mid: its sample maps exactly to 0 at its own stage; the two
    // welded sides then travel the remaining stages as real points.  Track
    // both and pick the one matching an interior probe.
    double cand[2] = {0.0, 0.0};
    bool split = false;
    for (std::size_t k = a_sample; k < map.unzips_.size(); ++k) {
        const auto& u = map.unzips_[k];
        if (!split) {
            cand[0] = -u.b * u.s;
            cand[1] = u.b * u.s;
            split = true;
        } else {
            for (double& c : cand) c = track_real(c, u);
        }
    }
    auto close_real = [&](double x) {
        double m = map.q_finite_ ? x / (1.0 - x / map.q_) : x;
        return static_cast<double>(map.sigma_) * m * m;
    };
    double a0 = close_real(cand[0]), a1 = close_real(cand[1]);
    cpx dir = v[(polygon.a_index + 1) % n] - v[polygon.a_index];
    cpx inward = cpx(0, 1) * (dir / std::abs(dir));
    double probe = (static_cast<double>(map.sigma_) * close_raw(a_mid + 0.01 * inward)).real();
    map.alpha_ = std::abs(a0 - probe) <= std::abs(a1 - probe) ? a0 : a1;
    map.lambda_ = 1.0;
    return map;
}

HalfPlaneMap normalize_scale(HalfPlaneMap map) {
    double s0 = map.forward(map.interior_point()).imag();
    if (!(s0 > 0)) throw ConformalError("interior point maps below the axis");
    auto depth = [&](double s) { return map.boundary_distance(map.inverse(cpx(0, s))); };
    double best_s = s0, best_d = -1;
    int best_j = 0;
    for (int j = -8; j <= 8; ++j) {
        double s = s0 * std::pow(2.0, j);
        double d = depth(s);
        if (d > best_d) {
            best_d = d;
            best_s = s;
            best_j = j;
        }
    }
    double lo = s0 * std::pow(2.0, best_j - 1), hi = s0 * std::pow(2.0, best_j + 1);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = depth(x1), f2 = depth(x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = depth(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = depth(x1);
        }
    }
    best_s = 0.5 * (lo + hi);
    map.rescale(2.0 / best_s);
    return map;
}

ConformalReport conformal_report(const HalfPlaneMap& map, cpx z, double min_height) {
    cpx w = map.forward(z);
    if (!(w.imag() > min_height)) throw TooCloseToBoundary();
    ConformalReport rep;
    rep.theta = std::arg(w);
    rep.sine = std::sin(rep.theta);
    rep.conf_radius = 2.0 * w.imag() / std::abs(map.derivative(z));
    rep.R = 4.0 * map.inverse_derivative_abs(cpx(0, 2));
    return rep;
}

std::string HalfPlaneMap::serialize() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "halfplanemap 1\n";
    os << w0_.real() << ' ' << w0_.imag() << '\n';
    os << w1_.real() << ' ' << w1_.imag() << '\n';
    os << unzips_.size() << '\n';
    for (const auto& u : unzips_)
        os << (u.moebius ? 1 : 0) << ' ' << u.xc << ' ' << u.b << ' ' << u.s << '\n';
    os << (q_finite_ ? 1 : 0) << ' ' << q_ << '\n';
    os << sigma_ << '\n';
    os << alpha_ << ' ' << lambda_ << '\n';
    os << z_int_.real() << ' ' << z_int_.imag() << '\n';
    os << a_mid_.real() << ' ' << a_mid_.imag() << '\n';
    os << b_mid_.real() << ' ' << b_mid_.imag() << '\n';
    os << boundary_.size() << '\n';
    for (cpx p : boundary_) os << p.real() << ' ' << p.imag() << '\n';
    return os.str();
}

HalfPlaneMap HalfPlaneMap::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version) || tag != "halfplanemap" || version != 1)
        throw BadMapFile("unrecognized header");
    HalfPlaneMap m;
    double re, im;
    if (!(is >> re >> im)) throw BadMapFile("truncated");
    m.w0_ = cpx(re, im);
    if (!(is >> re >> im)) throw BadMapFile("truncated");
    m.w1_ = cpx(re, im);
    std::size_t cnt;
    if (!(is >> cnt)) throw BadMapFile("truncated");
    m.unzips_.resize(cnt);
    for (auto& u : m.unzips_) {
        int flag;
        if (!(is >> flag >> u.xc >> u.b >> u.s)) throw BadMapFile("truncated");
        u.moebius = flag != 0;
    }
    int qf;
    if (!(is >> qf >> m.q_)) throw BadMapFile("truncated");
    m.q_finite_ = qf != 0;
    if (!(is >> m.sigma_ >> m.alpha_ >> m.lambda_)) throw BadMapFile("truncated");
    if (!(is >> re >> im)) throw BadMapFile("truncated");
    m.z_int_ = cpx(re, im);
    if (!(is >> re >> im)) throw BadMapFile("truncated");
    m.a_mid_ = cpx(re, im);
    if (!(is >> re >> im)) throw BadMapFile("truncated");
    m.b_mid_ = cpx(re, im);
    if (!(is >> cnt)) throw BadMapFile("truncated");
    m.boundary_.resize(cnt);
    for (auto& p : m.boundary_) {
        if (!(is >> re >> im)) throw BadMapFile("truncated");
        p = cpx(re, im);
    }
    return m;
}

void save_map(const HalfPlaneMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConformalError("cannot write " + path);
    out << map.serialize();
}

HalfPlaneMap load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BadMapFile("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return HalfPlaneMap::deserialize(ss.str());
}

namespace {

HcapEstimate hcap_single_height(const std::function<double(cpx)>& hull_dist, double eps_hit,
                                std::size_t samples, double y, Rng& rng) {
    RunningStat acc;
    double eps_kill = 1e-6 * y;
    double far = 1e6 * y;
    for (std::size_t i = 0; i < samples; ++i) {
        cpx z(0, y);
        double val = 0;
        for (;;) {
            double dh = hull_dist(z);
            if (dh < eps_hit) {
                val = y * std::max(z.imag(), 0.0);
                break;
            }
            if (z.imag() < eps_kill || std::abs(z) > far) break;
            double rho = std::min(dh, z.imag());
            z += std::polar(rho, 2 * kPi * rng.uniform());
        }
        acc.add(val);
    }
    HcapEstimate est;
    est.value = acc.mean();
    est.se = acc.se();
    return est;
}

}  // namespace

HcapEstimate hcap_bm_oracle(const std::function<double(cpx)>& hull_dist, double bounding_radius,
                            std::size_t samples, double y_start, Rng& rng) {
    double eps_hit = std::max(1e-4 * bounding_radius, 1e-12);
    HcapEstimate lo = hcap_single_height(hull_dist, eps_hit, samples, y_start, rng);
    HcapEstimate hi = hcap_single_height(hull_dist, eps_hit, samples, 2 * y_start, rng);
    HcapEstimate out;
    out.value = 2 * hi.value - lo.value;
    out.se = std::sqrt(4 * hi.se * hi.se + lo.se * lo.se);
    return out;
}

double polyline_distance(const std::vector<cpx>& points, cpx z) {
    if (points.empty()) return std::numeric_limits<double>::infinity();
    if (points.size() == 1) return std::abs(z - points[0]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        best = std::min(best, seg_dist(z, points[i], points[i + 1]));
    return best;
}

}  // namespace lerwlab
