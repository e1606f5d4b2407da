#include "lerwlab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace lerwlab {

namespace {

cpx cell_center(const Cell& c) { return cpx(c.x, c.y); }

struct BBox {
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    void add(cpx z) {
        xlo = std::min(xlo, z.real());
        xhi = std::max(xhi, z.real());
        ylo = std::min(ylo, z.imag());
        yhi = std::max(yhi, z.imag());
    }
    bool empty() const { return xhi < xlo; }
    double diag() const { return empty() ? 0.0 : std::hypot(xhi - xlo, yhi - ylo); }
};

cpx chain_forward_range(const DiscreteChain& chain, cpx z, std::size_t from, std::size_t to) {
    for (std::size_t j = from; j < to; ++j) z = chain.step(j).hull.map_out(z);
    return z;
}

}  // namespace

DrivingExtraction extract_driving(const LatticeDomain& domain, const HalfPlaneMap& map,
                                  const SAW& eta, double h, std::size_t max_records,
                                  double diam_mult) {
    if (!(h > 0 && h <= 0.1 + 1e-12)) throw CouplingError("capacity step must lie in (0, 1/10]");
    if (eta.vertices.empty()) throw CouplingError("empty path");
    for (const Cell& c : eta.vertices)
        if (!domain.contains(c)) throw PathNotInDomain();

    DrivingExtraction out;
    DiscreteChain& chain = out.chain;
    const double diam_cap = diam_mult * std::pow(h, 0.4);
    double U = 0.0;             // current driving value (tip image)
    double t_total = 0.0;
    double t_stop = 0.0;        // capacity at the previous meso stop
    std::size_t len_stop = 0;   // chain length at the previous meso stop
    double r_sum = 0.0;
    BBox inc_box;               // increment extent in the previous-stop frame
    std::size_t n_ctr = 0;
    bool done = false;

    auto emit = [&](std::size_t cells, StopReason reason) {
        MesoRecord rec;
        rec.n = ++n_ctr;
        rec.m_n = cells;
        rec.t = t_total;
        rec.r = inc_box.diag();
        rec.U = U;
        rec.xi = U - (out.meso.empty() ? 0.0 : out.meso.back().U);
        rec.stop_reason = reason;
        out.meso.push_back(rec);
        r_sum += rec.r;
        t_stop = t_total;
        len_stop = chain.size();
        inc_box = BBox{};
        if (out.meso.size() >= max_records || t_total >= 1.5 || r_sum >= 1.5) done = true;
    };

    for (std::size_t j = 0; j < eta.vertices.size() && !done; ++j) {
        const Cell& cell = eta.vertices[j];
        cpx d;  // entry direction
        if (j == 0) {
            d = cpx(domain.a().inner.x - domain.a().outer.x, domain.a().inner.y - domain.a().outer.y);
        } else {
            d = cell_center(cell) - cell_center(eta.vertices[j - 1]);
        }
        cpx p = cpx(0, 1) * d;
        cpx s = cell_center(cell) - 0.5 * d;  // entry side midpoint
        cpx c1 = s + 0.5 * p, c2 = s - 0.5 * p;
        cpx pts[7] = {c1,      c1 + 0.5 * d, c1 + d, s + d,
                      c2 + d,  c2 + 0.5 * d, c2};
        // points on the domain boundary coincide with welding samples of the
        // uniformizing map, where its forward evaluation is singular; pull
        // every sample infinitesimally into the cell
        for (cpx& q : pts) q += 1e-7 * (cell_center(cell) - q);

        // the new cell attaches at the current tip, whose image is exactly U;
        // the weld corner's image is kept as an accuracy diagnostic only
        double base = U;
        try {
            cpx zeta0 = map.forward(pts[0]);
            cpx ws0 = chain.forward(zeta0, len_stop);
            cpx w0 = chain_forward_range(chain, ws0, len_stop, chain.size());
            out.weld_error = std::max(out.weld_error, std::abs(w0.imag()));
            inc_box.add(ws0);
        } catch (const LoewnerError&) {
            // weld corner swallowed by the fitted hull: consistent with welding
        }
        if (out.weld_error > 0.5) throw MapAccuracyLost(out.weld_error);

        for (int k = 1; k < 7 && !done; ++k) {
            cpx zeta = map.forward(pts[k]);
            cpx w, ws;
            try {
                ws = chain.forward(zeta, len_stop);
                w = chain_forward_range(chain, ws, len_stop, chain.size());
            } catch (const LoewnerError&) {
                continue;  // point already swallowed
            }
            if (!(w.imag() > 1e-9)) continue;
            inc_box.add(ws);
            // fit a slit to the point, splitting at the capacity target
            for (;;) {
                ElementaryHull e = ElementaryHull::fit_tip(base, w - cpx(base, 0));
                double cap = e.capacity();
                double room = (h - (t_total - t_stop));
                if (t_total - t_stop + cap >= h && cap > room + h * h * 0.5 && room > 0) {
                    // partial slit with capacity exactly `room` (same tilt)
                    double alpha = std::clamp(std::arg(w - cpx(base, 0)) / 3.14159265358979323846,
                                              1e-9, 1.0 - 1e-9);
                    double span_full = std::sqrt(2.0 * cap / (alpha * (1 - alpha)));
                    double scale = std::sqrt(room / cap);
                    ElementaryHull part = ElementaryHull::tilted_slit(
                        base, alpha, alpha * (1 - alpha) * span_full * scale);
                    t_total += part.capacity();
                    base += part.driving_shift();
                    U = base;
                    cpx wnext;
                    bool lost = false;
                    try {
                        wnext = part.map_out(w);
                    } catch (const LoewnerError&) {
                        lost = true;
                    }
                    chain.push(std::move(part));
                    emit(j + 1, StopReason::capacity);
                    if (done) break;
                    if (lost || !(wnext.imag() > 1e-9)) break;
                    w = wnext;
                    ws = w;  // new frame starts at the fresh stop
                    inc_box.add(ws);
                    continue;
                }
                t_total += cap;
                base += e.driving_shift();
                U = base;
                chain.push(std::move(e));
                if (t_total - t_stop >= h) {
                    emit(j + 1, StopReason::capacity);
                } else if (inc_box.diag() >= diam_cap) {
                    emit(j + 1, StopReason::diameter);
                }
                break;
            }
        }
        out.cell_capacity.push_back(t_total);
        out.cells_used = j + 1;
    }
    if (!done && (t_total > t_stop || out.meso.empty()))
        emit(out.cells_used, StopReason::terminal);
    return out;
}

DrivingStats driving_stats(const std::vector<std::vector<MesoRecord>>& ensemble, double h) {
    DrivingStats st;
    st.h = h;
    RunningStat xi, xi2, xi4;
    std::vector<double> betas = {-2, -1, -0.5, 0.5, 1, 2};
    std::vector<RunningStat> expm(betas.size());
    double rh = std::sqrt(h);
    for (const auto& path : ensemble) {
        for (const auto& rec : path) {
            if (rec.stop_reason == StopReason::terminal) continue;
            xi.add(rec.xi);
            xi2.add(rec.xi * rec.xi);
            xi4.add(std::pow(rec.xi, 4));
            for (std::size_t b = 0; b < betas.size(); ++b)
                expm[b].add(std::exp(betas[b] * rec.xi / rh));
        }
    }
    st.paths = ensemble.size();
    st.pooled_steps = xi.count();
    st.xi_mean = xi.mean();
    st.xi_se = xi.se();
    st.xi2_mean = xi2.mean();
    st.xi2_se = xi2.se();
    st.xi4_mean = xi4.mean();
    for (std::size_t b = 0; b < betas.size(); ++b)
        st.exp_moments.emplace_back(betas[b], expm[b].mean());
    // Var(U_n) vs n h over indices most paths reach
    std::vector<std::size_t> lens;
    for (const auto& path : ensemble) lens.push_back(path.size());
    std::sort(lens.begin(), lens.end());
    std::size_t hold = lens.empty() ? 0 : lens[lens.size() / 10];  // 90% of paths reach this
    std::vector<double> xs, ys;
    for (std::size_t n = 1; n <= hold; ++n) {
        RunningStat u;
        for (const auto& path : ensemble)
            if (path.size() >= n) u.add(path[n - 1].U);
        if (u.count() >= 30) {
            xs.push_back(static_cast<double>(n) * h);
            ys.push_back(u.variance());
        }
    }
    if (xs.size() >= 3) {
        LineFit fit = least_squares(xs, ys);
        st.var_slope = fit.slope;
        st.var_slope_r2 = fit.r2;
    }
    return st;
}

void EmbeddingLaw::center() {
    double total = 0, m = 0;
    for (auto& a : atoms) total += a.second;
    if (total <= 0) throw CouplingError("embedding law has no mass");
    for (auto& a : atoms) a.second /= total;
    for (auto& a : atoms) m += a.first * a.second;
    for (auto& a : atoms) a.first -= m;
}

double EmbeddingLaw::mean() const {
    double m = 0;
    for (const auto& a : atoms) m += a.first * a.second;
    return m;
}

double EmbeddingLaw::second_moment() const {
    double m = 0;
    for (const auto& a : atoms) m += a.first * a.first * a.second;
    return m;
}

SkorokhodResult skorokhod_embed(const EmbeddingLaw& law, Rng& rng, double dt) {
    double scale = 0;
    for (const auto& a : law.atoms) scale = std::max(scale, std::abs(a.first));
    if (std::abs(law.mean()) > 1e-9 * std::max(scale, 1.0)) throw NotCentered();
    std::vector<std::pair<double, double>> cur;
    {  // dedupe sorted atoms
        auto atoms = law.atoms;
        std::sort(atoms.begin(), atoms.end());
        for (const auto& a : atoms) {
            if (a.second <= 0) continue;
            if (!cur.empty() && std::abs(cur.back().first - a.first) < 1e-12 * std::max(scale, 1.0))
                cur.back().second += a.second;
            else
                cur.push_back(a);
        }
    }
    SkorokhodResult res;
    res.w.push_back(0);
    double x = 0;
    double sd = std::sqrt(dt);
    while (cur.size() > 1) {
        double mneg = 0, pneg = 0, mpos = 0, ppos = 0;
        for (const auto& a : cur) {
            if (a.first < x) {
                mneg += a.first * a.second;
                pneg += a.second;
            } else {
                mpos += a.first * a.second;
                ppos += a.second;
            }
        }
        if (pneg <= 0 || ppos <= 0) {  // all mass on one side: collapse
            break;
        }
        double lo = mneg / pneg, hi = mpos / ppos;
        double wv = x;
        for (;;) {
            wv += sd * rng.normal();
            if (wv <= lo) { wv = lo; res.w.push_back(wv); break; }
            if (wv >= hi) { wv = hi; res.w.push_back(wv); break; }
            res.w.push_back(wv);
        }
        std::vector<std::pair<double, double>> next;
        if (wv == lo) {
            for (const auto& a : cur)
                if (a.first < x) next.push_back(a);
        } else {
            for (const auto& a : cur)
                if (a.first >= x) next.push_back(a);
        }
        cur = std::move(next);
        x = wv;
    }
    res.tau = dt * static_cast<double>(res.w.size() - 1);
    res.w_tau = x;
    return res;
}

RhoResult rho_metric(const TimedCurve& c1, const TimedCurve& c2, std::size_t grid) {
    if (c1.t.size() < 2 || c2.t.size() < 2) throw CouplingError("curves need at least two samples");
    // each curve resampled uniformly over its own duration, so the alignment
    // is a reparametrization [0,T1] -> [0,T2] with endpoints matched
    auto resample = [&](const TimedCurve& c) {
        double T = c.t.back();
        std::vector<cpx> out(grid);
        std::size_t k = 0;
        for (std::size_t i = 0; i < grid; ++i) {
            double t = T * static_cast<double>(i) / static_cast<double>(grid - 1);
            while (k + 2 < c.t.size() && c.t[k + 1] < t) ++k;
            double t0 = c.t[k], t1 = c.t[k + 1];
            double lam = t1 > t0 ? std::clamp((t - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
            out[i] = c.z[k] + lam * (c.z[k + 1] - c.z[k]);
        }
        return out;
    };
    std::vector<cpx> a = resample(c1), b = resample(c2);
    double dt1 = c1.t.back() / static_cast<double>(grid - 1);
    double dt2 = c2.t.back() / static_cast<double>(grid - 1);
    std::size_t n = grid;
    std::vector<double> prev(n), row(n);
    std::vector<uint8_t> choice(n * n);  // 0 diag, 1 left, 2 up
    auto cost = [&](std::size_t i, std::size_t j) {
        double dtv = std::abs(static_cast<double>(i) * dt1 - static_cast<double>(j) * dt2);
        return std::max(dtv, std::abs(a[i] - b[j]));
    };
    for (std::size_t j = 0; j < n; ++j) {
        prev[j] = std::max(cost(0, j), j > 0 ? prev[j - 1] : 0.0);
        choice[j] = j > 0 ? 1 : 0;
    }
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double best = prev[j];
            uint8_t ch = 2;
            if (j > 0) {
                if (prev[j - 1] <= best) { best = prev[j - 1]; ch = 0; }
                if (row[j - 1] < best) { best = row[j - 1]; ch = 1; }
            }
            row[j] = std::max(cost(i, j), best);
            choice[i * n + j] = ch;
        }
        std::swap(prev, row);
    }
    RhoResult res;
    res.grid = grid;
    res.minimax = prev[n - 1];

    // second pass: among alignments staying inside the minimax-feasible
    // corridor, minimize the sup of the spatial mismatch alone; minimax-
    // optimal paths are tie-broken arbitrarily and can trade time error
    // for needless spatial error, inflating sup|dt| + sup|dz|
    double const inf = std::numeric_limits<double>::infinity();
    double M = res.minimax * (1.0 + 1e-9) + 1e-15;
    std::fill(prev.begin(), prev.end(), inf);
    auto xcost = [&](std::size_t i, std::size_t j) { return std::abs(a[i] - b[j]); };
    prev[0] = xcost(0, 0);
    choice[0] = 0;
    for (std::size_t j = 1; j < n; ++j) {
        prev[j] = cost(0, j) <= M ? std::max(prev[j - 1], xcost(0, j)) : inf;
        choice[j] = 1;
    }
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double best = prev[j];
            uint8_t ch = 2;
            if (j > 0) {
                if (prev[j - 1] <= best) { best = prev[j - 1]; ch = 0; }
                if (row[j - 1] < best) { best = row[j - 1]; ch = 1; }
            }
            row[j] = cost(i, j) <= M ? std::max(xcost(i, j), best) : inf;
            choice[i * n + j] = ch;
        }
        std::swap(prev, row);
    }

    double sup_t = 0, sup_x = 0;
    std::size_t i = n - 1, j = n - 1;
    for (;;) {
        sup_t = std::max(sup_t, std::abs(static_cast<double>(i) * dt1 - static_cast<double>(j) * dt2));
        sup_x = std::max(sup_x, std::abs(a[i] - b[j]));
        if (i == 0 && j == 0) break;
        uint8_t ch = choice[i * n + j];
        if (i == 0) ch = 1;
        if (j == 0 && ch != 2) ch = 2;
        if (ch == 0) { --i; --j; }
        else if (ch == 1) { --j; }
        else { --i; }
    }
    res.rho = sup_t + sup_x;
    return res;
}

CouplingOutput couple_and_measure(const LatticeDomain& domain, const HalfPlaneMap& map,
                                  const HarmonicTable& hb, double h, Rng& rng, CoupleMode mode,
                                  double drift_mu, double r_floor) {
    CouplingOutput out;
    out.h = h;
    out.R = 4.0 * map.inverse_derivative_abs(cpx(0, 2));
    if (out.R < r_floor) throw RTooSmall();
    out.eta = sample_lerw(domain, hb, rng);
    DrivingExtraction ex = extract_driving(domain, map, out.eta, h);
    out.meso = ex.meso;
    out.weld_error = ex.weld_error;
    out.n0 = ex.meso.size();
    for (const auto& rec : ex.meso) out.tau.push_back(rec.t);

    double T = out.tau.empty() ? 0.0 : out.tau.back();
    double dt = h / 4.0;
    std::size_t steps = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(T / dt)) + 1);
    out.w_time.resize(steps);
    out.w.assign(steps, 0.0);
    for (std::size_t k = 0; k < steps; ++k) out.w_time[k] = dt * static_cast<double>(k);

    if (mode == CoupleMode::statistical) {
        double sd = std::sqrt(dt);
        for (std::size_t k = 1; k < steps; ++k) out.w[k] = out.w[k - 1] + sd * rng.normal();
        return out;
    }

    // surrogate driving: centered increments at capacity times, bridge infill
    std::vector<std::pair<double, double>> knots{{0.0, 0.0}};
    double sum = 0;
    for (const auto& rec : ex.meso) {
        sum += rec.xi - drift_mu;
        if (rec.t > knots.back().first + 1e-12) knots.emplace_back(rec.t, sum);
    }
    std::size_t kn = 0;
    for (std::size_t k = 1; k < steps; ++k) {
        double t = out.w_time[k];
        while (kn + 1 < knots.size() && knots[kn + 1].first <= out.w_time[k - 1] + 1e-15) ++kn;
        if (kn + 1 >= knots.size()) {
            out.w[k] = out.w[k - 1] + std::sqrt(dt) * rng.normal();
            continue;
        }
        double tb = knots[kn + 1].first, wb = knots[kn + 1].second;
        double ta = out.w_time[k - 1], wa = out.w[k - 1];
        if (t >= tb - 1e-15) {
            out.w[k] = wb;  // grid aligned to dt = h/4 lands near knots; snap
            continue;
        }
        double mean = wa + (wb - wa) * (t - ta) / (tb - ta);
        double var = (tb - t) * (t - ta) / (tb - ta);
        out.w[k] = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
    }
    out.sle = solve_sle(out.w, 2.0, dt, std::sqrt(dt), 4.0);

    // both curves in domain coordinates, scaled by 1/R, capacity time
    out.lerw_curve.t.push_back(0);
    out.lerw_curve.z.push_back(map.a_midpoint() / out.R);
    for (std::size_t j = 0; j < ex.cells_used; ++j) {
        out.lerw_curve.t.push_back(ex.cell_capacity[j]);
        out.lerw_curve.z.push_back(cell_center(out.eta.vertices[j]) / out.R);
    }
    for (std::size_t k = 0; k < out.sle.gamma.size(); ++k) {
        out.sle_curve.t.push_back(out.sle.t[k]);
        out.sle_curve.z.push_back(map.inverse(out.sle.gamma[k]) / out.R);
    }
    if (out.lerw_curve.t.size() >= 2 && out.sle_curve.t.size() >= 2)
        out.rho = rho_metric(out.lerw_curve, out.sle_curve).rho;
    return out;
}

TailStats tail_and_bottleneck_stats(const LatticeDomain& domain, const HalfPlaneMap& map,
                                    const HarmonicTable& hb, const std::vector<PathBundle>& paths,
                                    const TailParams& params) {
    if (paths.empty()) throw InsufficientSamples();
    TailStats st;
    double rh = std::sqrt(params.h);

    // (a) increment diameter tail
    std::vector<double> rs;
    for (const auto& pb : paths)
        for (const auto& rec : pb.meso)
            if (rec.stop_reason != StopReason::terminal) rs.push_back(rec.r);
    if (!rs.empty()) {
        std::vector<double> xs, ys;
        for (double K : params.K_grid) {
            std::size_t cnt = 0;
            for (double r : rs)
                if (r >= K * rh) ++cnt;
            if (cnt > 0) {
                xs.push_back(K);
                ys.push_back(std::log(static_cast<double>(cnt) / rs.size()));
                st.diameter_points.push_back({K, ys.back()});
            }
        }
        if (xs.size() >= 3) st.diameter_tail = least_squares(xs, ys);
        std::vector<double> sorted = rs;
        std::sort(sorted.begin(), sorted.end());
        auto q = [&](double p) { return sorted[std::min(sorted.size() - 1,
                                  static_cast<std::size_t>(p * sorted.size()))]; };
        st.increment_diam_quantiles = {q(0.5), q(0.9), q(0.99)};
    }

    // (b) bottleneck events around bulk reference points
    BBox box;
    for (const Cell& c : domain.cells()) box.add(cell_center(c));
    std::vector<cpx> centers;
    for (double fx : {0.25, 0.5, 0.75})
        for (double fy : {0.25, 0.5, 0.75}) {
            cpx w(box.xlo + fx * (box.xhi - box.xlo), box.ylo + fy * (box.yhi - box.ylo));
            Cell c{static_cast<int>(std::lround(w.real())), static_cast<int>(std::lround(w.imag()))};
            if (domain.contains(c)) centers.push_back(cell_center(c));
        }
    std::vector<double> bx, by;
    for (const auto& [r, s] : params.rs_pairs) {
        BottleneckRow row;
        row.r = r;
        row.s = s;
        std::size_t hits2 = 0, hits1 = 0, total = 0;
        for (const auto& pb : paths) {
            for (cpx w : centers) {
                ++total;
                int state2 = 0, state1 = 0;
                for (const Cell& c : pb.eta.vertices) {
                    double d = std::abs(cell_center(c) - w);
                    if (state2 == 0 && d >= s) state2 = 1;
                    else if (state2 == 1 && d <= r) state2 = 2;
                    else if (state2 == 2 && d >= s) state2 = 3;
                    else if (state2 == 3 && d <= r) state2 = 4;
                    if (state1 == 0 && d <= r) state1 = 1;
                    else if (state1 == 1 && d >= s) state1 = 2;
                    else if (state1 == 2 && d <= r) state1 = 3;
                }
                if (state2 == 4) ++hits2;
                if (state1 == 3) ++hits1;
            }
        }
        row.centers = centers.size();
        row.freq_double = total ? static_cast<double>(hits2) / total : 0;
        row.freq_single = total ? static_cast<double>(hits1) / total : 0;
        st.bottleneck.push_back(row);
        if (row.freq_double > 0) {
            bx.push_back(std::log(s / r));  // scale separation; decay gives negative slope
            by.push_back(std::log(row.freq_double));
        }
    }
    if (bx.size() >= 3) st.bottleneck_fit = least_squares(bx, by);

    // (c) conditional visit stability at the origin
    for (double r : params.visit_radii) {
        std::size_t near = 0, hit = 0;
        for (const auto& pb : paths) {
            bool close = false, through = false;
            for (const Cell& c : pb.eta.vertices) {
                double d = std::abs(cell_center(c));
                if (d <= r) close = true;
                if (c.x == 0 && c.y == 0) through = true;
            }
            if (close) ++near;
            if (through) ++hit;
        }
        double cond = near ? static_cast<double>(hit) / near : 0;
        st.visits.push_back({r, cond, cond * std::pow(r, 0.75)});
    }
    double lo = 1e300, hi = 0;
    for (const auto& v : st.visits)
        if (v[2] > 0) {
            lo = std::min(lo, v[2]);
            hi = std::max(hi, v[2]);
        }
    st.visit_ratio = lo < 1e300 ? hi / lo : 0;

    // (d) terminal capacity below 3/2
    std::size_t small_cap = 0;
    for (const auto& pb : paths)
        if (!pb.meso.empty() && pb.meso.back().t < 1.5) ++small_cap;
    st.terminal_small_cap_freq = static_cast<double>(small_cap) / paths.size();

    // (f) harmonic comparison between the high and low windows near b's image
    double r = params.jan_r;
    double min_hi = 1e300, max_lo = 0;
    for (const Cell& c : domain.cells()) {
        cpx w;
        try {
            w = map.forward(cell_center(c));
        } catch (...) {
            continue;
        }
        if (std::abs(w) > 5 * r) continue;
        double v = hb.value(c);
        if (w.imag() >= 2 * r) min_hi = std::min(min_hi, v);
        if (w.imag() <= r && v > 0) max_lo = std::max(max_lo, v);
    }
    st.harmonic_ratio = (min_hi < 1e300 && max_lo > 0) ? min_hi / max_lo : 0;
    return st;
}

RegularityStats sle_regularity_stats(const std::vector<SleTrace>& traces,
                                     const RegularityParams& params) {
    RegularityStats st;
    if (traces.empty()) return st;
    double ymin = *std::min_element(params.y_grid.begin(), params.y_grid.end());
    for (const auto& tr : traces) {
        if (tr.dt > ymin * ymin) throw ResolutionTooCoarse();
        double msup = 0;
        for (double y : params.y_grid) {
            double M = 0;
            for (std::size_t k = 0; k < tr.w.size(); k += params.t_stride) {
                std::size_t n = std::min(k, tr.chain.size());
                ReverseTrajectory rev = reverse_evaluate(tr.chain, cpx(tr.w[k], y), n);
                M = std::max(M, y * rev.deriv_abs);
            }
            msup = std::max(msup, std::pow(y, params.beta - 1.0) * M);
        }
        st.m_sup.push_back(msup);
        // modulus of continuity over windows of length ymin^2 in capacity time
        double win = ymin * ymin;
        std::size_t wsteps = std::max<std::size_t>(1, static_cast<std::size_t>(win / tr.dt));
        double mg = 0;
        for (std::size_t i = 0; i < tr.gamma.size(); ++i)
            for (std::size_t j = i + 1; j <= std::min(i + wsteps, tr.gamma.size() - 1); ++j)
                mg = std::max(mg, std::abs(tr.gamma[j] - tr.gamma[i]));
        st.modulus.push_back(mg);
        // increment diameters over capacity-h windows (capacity = t for kappa=2)
        double cap_per_step = (2.0 / tr.kappa) * tr.dt;
        std::size_t per = std::max<std::size_t>(1, static_cast<std::size_t>(params.h / cap_per_step));
        double mx = 0;
        for (std::size_t i = 0; i + 1 < tr.gamma.size(); i += per) {
            BBox b;
            for (std::size_t j = i; j <= std::min(i + per, tr.gamma.size() - 1); ++j) b.add(tr.gamma[j]);
            mx = std::max(mx, b.diag());
        }
        st.max_increment_diam.push_back(mx);
    }
    for (double c : params.c_grid) {
        std::size_t cnt = 0;
        for (double m : st.m_sup)
            if (m > c) ++cnt;
        st.tails.emplace_back(c, static_cast<double>(cnt) / st.m_sup.size());
    }
    double thr = std::pow(params.h, 1.0 / 30.0);
    std::size_t cnt = 0;
    for (double m : st.max_increment_diam)
        if (m > thr) ++cnt;
    st.exceed_h130 = static_cast<double>(cnt) / st.max_increment_diam.size();
    return st;
}

void write_coupling_output(const std::string& dir, const CouplingOutput& out, uint64_t seed,
                           const std::string& config_hash) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream f(dir + "/meso.csv");
        f << std::setprecision(17) << "n,m_n,t,r,U,xi,stop_reason\n";
        for (const auto& r : out.meso) {
            const char* reason = r.stop_reason == StopReason::capacity   ? "capacity"
                                 : r.stop_reason == StopReason::diameter ? "diameter"
                                                                         : "terminal";
            f << r.n << ',' << r.m_n << ',' << r.t << ',' << r.r << ',' << r.U << ',' << r.xi
              << ',' << reason << '\n';
        }
    }
    {
        std::ofstream f(dir + "/w.csv");
        f << std::setprecision(17) << "t,w\n";
        for (std::size_t k = 0; k < out.w.size(); ++k) f << out.w_time[k] << ',' << out.w[k] << '\n';
    }
    {
        std::ofstream f(dir + "/trace.csv");
        f << std::setprecision(17) << "t,x,y\n";
        for (std::size_t k = 0; k < out.sle.gamma.size(); ++k)
            f << out.sle.t[k] << ',' << out.sle.gamma[k].real() << ',' << out.sle.gamma[k].imag()
              << '\n';
    }
    nlohmann::json j;
    j["rho"] = out.rho;
    j["n0"] = out.n0;
    j["h"] = out.h;
    j["R"] = out.R;
    j["weld_error"] = out.weld_error;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    std::ofstream f(dir + "/summary.json");
    f << j.dump(2) << '\n';
}

}  // namespace lerwlab
