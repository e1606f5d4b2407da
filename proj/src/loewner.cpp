#include "lerwlab/loewner.hpp"

#include <algorithm>
#include <cmath>

namespace lerwlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

ElementaryHull ElementaryHull::vertical_slit(double base, double height) {
    if (!(height > 0)) throw LoewnerError("slit height must be positive");
    ElementaryHull e;
    e.kind_ = Kind::vertical;
    e.base_ = base;
    e.ell_ = height;
    e.h_ = 0.5 * height * height;
    e.r_ = height;
    e.du_ = 0.0;
    e.tip_ = cpx(0, height);
    return e;
}

ElementaryHull ElementaryHull::tilted_slit(double base, double alpha, double m) {
    if (!(alpha > 0 && alpha < 1)) throw LoewnerError("tilt must lie in (0,1)");
    if (!(m > 0)) throw LoewnerError("slit parameter must be positive");
    ElementaryHull e;
    e.kind_ = Kind::tilted;
    e.base_ = base;
    e.alpha_ = alpha;
    e.A_ = m / (1 - alpha);
    e.B_ = m / alpha;
    double span = e.A_ + e.B_;
    e.h_ = 0.5 * alpha * (1 - alpha) * span * span;
    double len = span * std::pow(1 - alpha, 1 - alpha) * std::pow(alpha, alpha);
    e.r_ = len;
    e.du_ = (1 - 2 * alpha) * span;
    e.tip_ = std::polar(len, alpha * kPi);
    return e;
}

ElementaryHull ElementaryHull::fit_tip(double base, cpx w) {
    if (!(w.imag() > 0)) throw PointBelowAxis();
    double alpha = clamp(std::arg(w) / kPi, 1e-9, 1 - 1e-9);
    double span = std::abs(w) / (std::pow(1 - alpha, 1 - alpha) * std::pow(alpha, alpha));
    return tilted_slit(base, alpha, alpha * (1 - alpha) * span);
}

ElementaryHull ElementaryHull::fit_increment(double base, double du, double dcap) {
    if (!(dcap > 0)) throw LoewnerError("capacity increment must be positive");
    if (du == 0.0) return vertical_slit(base, std::sqrt(2 * dcap));
    double rho = du * du / dcap;
    double sgn = du > 0 ? 1.0 : -1.0;
    double alpha = 0.5 * (1 - sgn * std::sqrt(rho / (8 + rho)));
    return tilted_slit(base, alpha, std::sqrt(2 * dcap * alpha * (1 - alpha)));
}

cpx ElementaryHull::map_out(cpx z) const {
    cpx w = z - base_;
    if (kind_ == Kind::vertical) {
        if (std::abs(w) < 1e-300) return cpx(base_, 0);
        cpx t = ell_ / w;
        return base_ + w * std::sqrt(1.0 + t * t);
    }
    // Newton on f(w) = target, f the inverse slit map
    cpx target = w;
    double span = A_ + B_;
    double scale = std::max({1.0, std::abs(target), span});
    double tol = 1e-12 * scale;
    cpx zstar(( 1 - alpha_) * B_ - alpha_ * A_, 0);  // preimage of the tip
    cpx guesses[3] = {
        cpx(target.real(), std::max(target.imag(), 1e-3 * span)),
        std::sqrt(target * target + 2.0 * h_),
        zstar + cpx(0, std::max(std::abs(target - tip_), 0.01 * span)),
    };
    auto floc = [&](cpx u) { return std::pow(u + A_, 1 - alpha_) * std::pow(u - B_, alpha_); };
    auto fploc = [&](cpx u, cpx fu) { return fu * ((1 - alpha_) / (u + A_) + alpha_ / (u - B_)); };
    for (cpx u : guesses) {
        if (u.imag() <= 0) u = cpx(u.real(), 1e-6 * span);
        cpx fu = floc(u);
        double err = std::abs(fu - target);
        bool ok = false;
        for (int it = 0; it < 100; ++it) {
            if (err <= tol) { ok = true; break; }
            cpx fp = fploc(u, fu);
            if (std::abs(fp) < 1e-300) break;
            cpx step = (fu - target) / fp;
            double lam = 1.0;
            cpx unew;
            cpx fnew;
            double enew = err;
            bool improved = false;
            for (int d = 0; d < 50; ++d) {
                unew = u - lam * step;
                if (unew.imag() < 1e-14 * span) unew = cpx(unew.real(), 1e-14 * span);
                fnew = floc(unew);
                enew = std::abs(fnew - target);
                if (enew < err) { improved = true; break; }
                lam *= 0.5;
            }
            if (!improved) break;
            u = unew;
            fu = fnew;
            err = enew;
        }
        if (err <= tol || (ok && u.imag() >= -1e-12 * scale)) return base_ + u;
        if (ok) return base_ + u;
    }
    throw LoewnerError("forward slit map failed to converge");
}

cpx ElementaryHull::map_in(cpx z) const {
    cpx w = z - base_;
    if (kind_ == Kind::vertical) {
        if (std::abs(w) < 1e-300) return cpx(base_, 0);
        cpx t = ell_ / w;
        return base_ + w * std::sqrt(1.0 - t * t);
    }
    return base_ + std::pow(w + A_, 1 - alpha_) * std::pow(w - B_, alpha_);
}

cpx ElementaryHull::f_prime(cpx z) const {
    cpx w = z - base_;
    if (kind_ == Kind::vertical) {
        cpx t = ell_ / w;
        return 1.0 / std::sqrt(1.0 - t * t);
    }
    cpx fu = std::pow(w + A_, 1 - alpha_) * std::pow(w - B_, alpha_);
    return fu * ((1 - alpha_) / (w + A_) + alpha_ / (w - B_));
}

cpx ElementaryHull::g_prime(cpx z) const {
    if (kind_ == Kind::vertical) {
        cpx w = z - base_;
        cpx t = ell_ / w;
        return 1.0 / std::sqrt(1.0 + t * t);
    }
    return 1.0 / f_prime(map_out(z));
}

bool ElementaryHull::absorbs(cpx z) const {
    cpx w = z - base_;
    double tol = 1e-12 * std::max(1.0, r_);
    if (w.imag() < -tol) return false;
    // distance from the straight slit segment 0 -> tip_
    cpx dir = tip_ / std::abs(tip_);
    double along = (w.real() * dir.real() + w.imag() * dir.imag());
    along = clamp(along, 0.0, std::abs(tip_));
    cpx nearest = along * dir;
    return std::abs(w - nearest) <= tol;
}

double DiscreteChain::total_capacity() const {
    double s = 0;
    for (const auto& st : steps_) s += st.hull.capacity();
    return s;
}

double DiscreteChain::max_radius() const {
    double s = 0;
    for (const auto& st : steps_) s = std::max(s, st.hull.radius());
    return s;
}

cpx DiscreteChain::forward(cpx z, std::size_t n) const {
    for (std::size_t j = 0; j < n; ++j) {
        if (steps_[j].hull.absorbs(z)) throw Absorbed(j);
        z = steps_[j].hull.map_out(z);
    }
    return z;
}

cpx DiscreteChain::reverse(cpx z, std::size_t n) const {
    for (std::size_t j = n; j-- > 0;) z = steps_[j].hull.map_in(z);
    return z;
}

ForwardTrajectory forward_evaluate(const DiscreteChain& chain, cpx z, std::size_t n) {
    ForwardTrajectory out;
    out.z.reserve(n + 1);
    out.z.push_back(z);
    for (std::size_t j = 0; j < n; ++j) {
        const ElementaryHull& e = chain.step(j).hull;
        if (e.absorbs(z) || z.imag() <= 0) throw Absorbed(j);
        cpx d = z - cpx(e.base(), 0);
        out.re_sum += (e.capacity() / (d * d)).real();
        double s = z.imag() / std::abs(d);
        out.nu = std::min(out.nu, s);
        cpx znext = e.map_out(z);
        out.deriv_abs /= std::abs(e.f_prime(znext));
        z = znext;
        out.z.push_back(z);
    }
    return out;
}

ReverseTrajectory reverse_evaluate(const DiscreteChain& chain, cpx z, std::size_t n) {
    ReverseTrajectory out;
    out.z.reserve(n + 1);
    out.z.push_back(z);
    for (std::size_t j = n; j-- > 0;) {
        const ElementaryHull& e = chain.step(j).hull;
        cpx d = z - cpx(e.base(), 0);
        out.re_sum += (e.capacity() / (d * d)).real();
        out.deriv_abs *= std::abs(e.f_prime(z));
        z = e.map_in(z);
        out.z.push_back(z);
    }
    return out;
}

PolylineCap hcap_polyline(const std::vector<cpx>& points) {
    if (points.size() < 2) throw LoewnerError("polyline needs at least two points");
    if (std::abs(points[0].imag()) > 1e-9 * std::max(1.0, std::abs(points[0])))
        throw LoewnerError("polyline must start on the real axis");
    PolylineCap out;
    double U = points[0].real();
    for (std::size_t k = 1; k < points.size(); ++k) {
        cpx w = out.chain.forward(points[k]);
        if (!(w.imag() > 0)) throw PointBelowAxis();
        ElementaryHull e = ElementaryHull::fit_tip(U, w - cpx(U, 0));
        U += e.driving_shift();
        out.hcap += e.capacity();
        out.chain.push(std::move(e));
    }
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            out.diameter = std::max(out.diameter, std::abs(points[i] - points[j]));
    return out;
}

ComparisonRecord compare_chains(const DiscreteChain& a, const DiscreteChain& b, cpx z,
                                const ComparisonParams& p, bool strict) {
    ComparisonRecord rec;
    auto violate = [&](const std::string& w) {
        if (strict) throw HypothesisViolated(w);
        rec.hypotheses_ok = false;
        if (rec.violation.empty()) rec.violation = w;
    };
    if (a.size() != b.size()) violate("chain lengths differ");
    std::size_t n = std::min(a.size(), b.size());
    if (p.h > 0 && static_cast<double>(n) > 1.0 / p.h + 1e-9) violate("too many steps for the capacity scale");
    double slack = p.delta > 0 ? p.h * p.r / p.delta : 0;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& ea = a.step(j).hull;
        const auto& eb = b.step(j).hull;
        if (std::abs(ea.capacity() - p.h) > slack + 1e-15 || std::abs(eb.capacity() - p.h) > slack + 1e-15)
            violate("capacity increment out of range");
        if (ea.radius() > p.r + 1e-15 || eb.radius() > p.r + 1e-15) violate("hull radius out of range");
        if (std::abs(ea.base() - eb.base()) > p.eps + 1e-15) violate("driving functions too far apart");
    }
    cpx ga = a.forward(z, n), gb = b.forward(z, n);
    rec.y_n = ga.imag();
    rec.y_n_other = gb.imag();
    rec.forward_difference = std::abs(ga - gb);
    rec.forward_bound = (p.eps / p.delta) * std::min(z.imag(), 1.0);
    rec.forward_ratio = rec.forward_bound > 0 ? rec.forward_difference / rec.forward_bound : 0;
    cpx fa = a.reverse(z, n), fb = b.reverse(z, n);
    rec.reverse_difference = std::abs(fa - fb);
    rec.reverse_bound = (p.eps / z.imag()) * std::min(p.delta, 1.0);
    rec.reverse_ratio = rec.reverse_bound > 0 ? rec.reverse_difference / rec.reverse_bound : 0;
    return rec;
}

SleTrace solve_sle(const std::vector<double>& W, double kappa, double dt, double eps_tip,
                   double safety_radius) {
    if (W.size() < 2) throw LoewnerError("driving sequence needs at least two samples");
    if (!(kappa > 0 && dt > 0)) throw LoewnerError("kappa and dt must be positive");
    SleTrace out;
    out.kappa = kappa;
    out.dt = dt;
    out.eps_tip = eps_tip > 0 ? eps_tip : std::sqrt(dt);
    out.w = W;
    double dcap = (2.0 / kappa) * dt;
    out.t.push_back(0);
    out.gamma.push_back(cpx(W[0], 0));
    for (std::size_t k = 1; k < W.size(); ++k) {
        ElementaryHull e = ElementaryHull::fit_increment(W[k - 1], W[k] - W[k - 1], dcap);
        if (e.radius() > safety_radius) throw StepTooCoarse();
        out.chain.push(std::move(e));
        out.t.push_back(static_cast<double>(k) * dt);
        out.gamma.push_back(out.chain.reverse(cpx(W[k], out.eps_tip)));
    }
    return out;
}

TaylorRecord taylor_check(const ElementaryHull& hull, double U, double kappa) {
    TaylorRecord rec;
    double h = hull.capacity(), r = hull.radius();
    double s1 = h * r, s2 = h * r + r * r * r;
    double aexp = kappa / 8.0 - 1.0, bexp = 8.0 / kappa - 1.0;
    double Ak = 4.0 / kappa - 0.5;
    double Bk = 8.0 / (kappa * kappa) - 2.0 / kappa + 0.125;
    double root2 = std::sqrt(2.0) / 2.0;
    for (int sgn : {+1, -1}) {
        cpx z(static_cast<double>(sgn), 1.0);
        cpx g = hull.map_out(z);
        double gp = std::abs(hull.g_prime(z));
        double ups = g.imag() / gp;
        rec.im_constant = std::max(rec.im_constant, std::abs(g.imag() - (1 - h / 2)) / s1);
        rec.deriv_constant = std::max(rec.deriv_constant, std::abs(gp - 1.0) / s1);
        double sine = std::sin(std::arg(g - cpx(U, 0)));
        double sine_pred = root2 * (1 + sgn * U / 2 + U * U / 8 - h / 2);
        rec.sine_constant = std::max(rec.sine_constant, std::abs(sine - sine_pred) / s2);
        double obs = std::pow(ups, aexp) * std::pow(sine, bexp);
        double obs_pred = std::pow(root2, bexp) * (1 + sgn * Ak * U + Bk * (U * U - h * kappa / 2));
        rec.observable_constant = std::max(rec.observable_constant, std::abs(obs - obs_pred) / s2);
        if (sgn > 0) {
            rec.sine_value_plus = sine;
            rec.observable_value_plus = obs;
        } else {
            rec.sine_value_minus = sine;
            rec.observable_value_minus = obs;
        }
    }
    return rec;
}

LemmaResiduals lemma_residuals(const ElementaryHull& hull, cpx z) {
    LemmaResiduals rec;
    double h = hull.capacity(), r = hull.radius();
    double delta = std::pow(r, 0.25);
    double y = z.imag();
    cpx U(hull.base(), 0);
    cpx d = z - U;
    cpx g = hull.map_out(z);
    cpx gp = hull.g_prime(z);
    double theta = std::arg(d);
    double s2 = std::sin(theta) * std::sin(theta);
    double ad2 = std::norm(d);
    rec.map_constant = std::abs(g - z - h / d) / (h * delta * delta);
    rec.deriv_constant = std::abs(gp - 1.0 + h / (d * d)) / (h * delta);
    rec.height_constant = std::abs(g.imag() - y * (1 - h / ad2)) / (y * h * delta);
    double ups = g.imag() / std::abs(gp);
    rec.upsilon_constant = std::abs(ups - y * (1 - 2 * h * s2 / ad2)) / (y * h * delta);
    rec.im_g_le_y = std::max(g.imag() - y, 0.0);
    rec.upsilon_le_y = std::max(ups - y, 0.0);
    double scale = r * h / std::pow(std::abs(d), 3);
    rec.deriv_resid_hz2 = std::abs(gp - (1.0 - h / (d * d))) / scale;
    rec.deriv_resid_h2z = std::abs(gp - (1.0 - h * h / d)) / scale;
    return rec;
}

}  // namespace lerwlab
