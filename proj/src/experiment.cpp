#include "lerwlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "lerwlab/coupling.hpp"
#include "lerwlab/observable.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lerwlab {

ArtifactIncomplete::ArtifactIncomplete(std::vector<std::string> m)
    : ExperimentError("artifact incomplete: missing " +
                      [&m] {
                          std::string s;
                          for (const auto& x : m) s += (s.empty() ? "" : ", ") + x;
                          return s;
                      }()),
      missing(std::move(m)) {}

std::string ExperimentConfig::get(const std::string& key, const std::string& def) const {
    auto it = kv.find(key);
    return it == kv.end() ? def : it->second;
}

int64_t ExperimentConfig::get_int(const std::string& key, int64_t def) const {
    auto it = kv.find(key);
    return it == kv.end() ? def : std::stoll(it->second);
}

double ExperimentConfig::get_double(const std::string& key, double def) const {
    auto it = kv.find(key);
    return it == kv.end() ? def : std::stod(it->second);
}

std::vector<int> ExperimentConfig::n_list() const {
    std::vector<int> out;
    std::istringstream ss(get("N", "64"));
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

std::vector<std::string> ExperimentConfig::batteries() const {
    std::vector<std::string> out;
    std::istringstream ss(get("batteries", "driving"));
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

void ExperimentConfig::apply_override(const std::string& s) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigInvalid("override must be key=value: " + s);
    kv[s.substr(0, eq)] = s.substr(eq + 1);
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigInvalid("cannot open config " + path);
    ExperimentConfig cfg;
    std::string line;
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r");
            auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (!key.empty()) cfg.kv[key] = val;
    }
    return cfg;
}

void ExperimentConfig::save(const std::string& path) const {
    std::ofstream f(path);
    f << canonical();
}

std::string ExperimentConfig::canonical() const {
    std::string s;
    for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
    return s;
}

static uint64_t fnv1a(const char* data, std::size_t len, uint64_t h = 14695981039346656037ull) {
    for (std::size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ull;
    }
    return h;
}

std::string ExperimentConfig::hash() const {
    std::string c = canonical();
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(c.data(), c.size());
    return os.str();
}

void ExperimentConfig::validate() const {
    for (int n : n_list())
        if (n < 8) throw ConfigInvalid("N must be at least 8");
    if (get_int("trials", 1) < 1) throw ConfigInvalid("trials must be at least 1");
}

std::string file_checksum(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ExperimentError("cannot open " + path);
    uint64_t h = 14695981039346656037ull;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof buf);
        h = fnv1a(buf, static_cast<std::size_t>(f.gcount()), h);
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace {

// Runs fn(i) for i in [done, count) across `workers` threads; results are
// collected into index order, so the output is worker-count independent.
std::vector<std::string> parallel_rows(std::size_t done, std::size_t count, int workers,
                                       const std::function<std::string(std::size_t)>& fn) {
    if (done >= count) return {};
    std::vector<std::string> slots(count - done);
    std::atomic<std::size_t> next{done};
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) break;
            slots[i - done] = fn(i);
        }
    };
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    return slots;
}

struct DomainSetup {
    LatticeDomain domain;
    HalfPlaneMap map;
    HarmonicTable hb;
    double R, h;
};

DomainSetup setup_domain(const ExperimentConfig& cfg, int N) {
    std::string shape = cfg.get("shape", "disk");
    AnalyticShape sh = shape == "square"    ? smoothed_square_shape(1.0, cfg.get_double("corner", 0.2))
                       : shape == "ellipse" ? ellipse_shape(cfg.get_double("rx", 1.0), cfg.get_double("ry", 0.7))
                       : shape == "disk"    ? disk_shape(1.0)
                                            : throw ConfigInvalid("unknown shape " + shape);
    cpx a(cfg.get_double("ax", -1), cfg.get_double("ay", 0));
    cpx b(cfg.get_double("bx", 1), cfg.get_double("by", 0));
    LatticeDomain dom = approximate_domain(sh, N, a, b);
    HalfPlaneMap map = normalize_scale(fit_map(jordan_boundary(dom), cfg.get_double("resolution", 4.0)));
    HarmonicTable hb(dom, dom.b());
    double R = 4.0 * map.inverse_derivative_abs(cpx(0, 2));
    double h = cfg.has("h") ? cfg.get_double("h", 0.1)
                            : std::min(0.1, std::pow(R, -2.0 * cfg.get_double("u", 0.1) / 3.0));
    return DomainSetup{std::move(dom), std::move(map), std::move(hb), R, h};
}

// One line per path in the partial file; embedded newlines become ';' so a
// resumed run can count finished paths by counting lines.
std::size_t partial_lines(const std::string& path) {
    std::ifstream f(path);
    std::size_t n = 0;
    std::string line;
    while (std::getline(f, line))
        if (!line.empty()) ++n;
    return n;
}

void run_rows_battery(const std::string& dir, const std::string& name, const std::string& header,
                      std::size_t count, int workers,
                      const std::function<std::string(std::size_t)>& fn, json& files) {
    std::string partial = dir + "/" + name + ".csv.partial";
    std::string final_path = dir + "/" + name + ".csv";
    std::size_t done = fs::exists(partial) ? partial_lines(partial) : 0;
    if (!fs::exists(final_path)) {
        std::ofstream out(partial, std::ios::app);
        const std::size_t chunk = 16;
        for (std::size_t at = done; at < count; at += chunk) {
            std::size_t hi = std::min(count, at + chunk);
            auto rows = parallel_rows(at, hi, workers, fn);
            for (auto& r : rows) {
                std::replace(r.begin(), r.end(), '\n', ';');
                out << r << '\n';
            }
            out.flush();
        }
        out.close();
        // expand path lines into the final table
        std::ifstream in(partial);
        std::ofstream fin(final_path);
        fin << header << '\n';
        std::string line;
        while (std::getline(in, line)) {
            std::replace(line.begin(), line.end(), ';', '\n');
            if (!line.empty()) fin << line << '\n';
        }
        fin.close();
        fs::remove(partial);
    }
    files[name + ".csv"] = file_checksum(final_path);
}

std::string reason_name(StopReason r) {
    return r == StopReason::capacity ? "capacity" : r == StopReason::diameter ? "diameter" : "terminal";
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::string dir = cfg.get("out", "artifacts");
    fs::create_directories(dir);
    uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
    int workers = static_cast<int>(cfg.get_int("workers", 1));
    std::size_t trials = static_cast<std::size_t>(cfg.get_int("trials", 100));
    cfg.save(dir + "/config.txt");
    {
        std::ofstream marker(dir + "/RESUME");
        marker << cfg.hash() << '\n';
    }
    json summary;
    summary["config_hash"] = cfg.hash();
    summary["seed"] = seed;

    for (const std::string& battery : cfg.batteries()) {
        json binfo;
        json& files = binfo["files"];
        if (battery == "lerw") {
            int N = cfg.n_list()[0];
            DomainSetup ds = setup_domain(cfg, N);
            RunningStat len;
            run_rows_battery(dir, "lerw", "path,length,saw", trials, workers,
                             [&](std::size_t i) {
                                 Rng rng(path_seed(seed, i));
                                 SAW eta = sample_lerw(ds.domain, ds.hb, rng);
                                 std::ostringstream os;
                                 os << i << ',' << eta.vertices.size() << ',' << saw_to_string(eta);
                                 return os.str();
                             },
                             files);
            binfo["summary"]["N"] = N;
        } else if (battery == "driving") {
            int N = cfg.n_list()[0];
            DomainSetup ds = setup_domain(cfg, N);
            run_rows_battery(dir, "driving", "path,n,m_n,t,r,U,xi,stop_reason", trials, workers,
                             [&](std::size_t i) {
                                 Rng rng(path_seed(seed, i));
                                 SAW eta = sample_lerw(ds.domain, ds.hb, rng);
                                 DrivingExtraction ex = extract_driving(ds.domain, ds.map, eta, ds.h);
                                 std::ostringstream os;
                                 os << std::setprecision(17);
                                 for (const auto& m : ex.meso)
                                     os << i << ',' << m.n << ',' << m.m_n << ',' << m.t << ','
                                        << m.r << ',' << m.U << ',' << m.xi << ','
                                        << reason_name(m.stop_reason) << '\n';
                                 std::string s = os.str();
                                 if (!s.empty() && s.back() == '\n') s.pop_back();
                                 return s;
                             },
                             files);
            // aggregate moments from the finished table
            std::vector<std::vector<MesoRecord>> ens(trials);
            std::ifstream f(dir + "/driving.csv");
            std::string line;
            std::getline(f, line);
            while (std::getline(f, line)) {
                std::istringstream ss(line);
                std::string tok;
                std::vector<std::string> toks;
                while (std::getline(ss, tok, ',')) toks.push_back(tok);
                if (toks.size() != 8) continue;
                MesoRecord m;
                std::size_t p = std::stoul(toks[0]);
                m.n = std::stoul(toks[1]);
                m.m_n = std::stoul(toks[2]);
                m.t = std::stod(toks[3]);
                m.r = std::stod(toks[4]);
                m.U = std::stod(toks[5]);
                m.xi = std::stod(toks[6]);
                m.stop_reason = toks[7] == "capacity"   ? StopReason::capacity
                                : toks[7] == "diameter" ? StopReason::diameter
                                                        : StopReason::terminal;
                if (p < trials) ens[p].push_back(m);
            }
            DrivingStats st = driving_stats(ens, ds.h);
            json& js = binfo["summary"];
            js["h"] = ds.h;
            js["R"] = ds.R;
            js["N"] = cfg.n_list()[0];
            js["pooled_steps"] = st.pooled_steps;
            js["xi_mean"] = st.xi_mean;
            js["xi_se"] = st.xi_se;
            js["xi2_mean"] = st.xi2_mean;
            js["xi2_se"] = st.xi2_se;
            js["var_slope"] = st.var_slope;
            js["var_slope_r2"] = st.var_slope_r2;
        } else if (battery == "couple") {
            for (int N : cfg.n_list()) {
                DomainSetup ds = setup_domain(cfg, N);
                std::string name = "couple_N" + std::to_string(N);
                run_rows_battery(dir, name, "path,rho,n0,R,weld_error,records", trials, workers,
                                 [&](std::size_t i) {
                                     Rng rng(path_seed(seed ^ static_cast<uint64_t>(N), i));
                                     CouplingOutput co = couple_and_measure(
                                         ds.domain, ds.map, ds.hb, ds.h, rng,
                                         CoupleMode::pathwise_surrogate);
                                     std::ostringstream os;
                                     os << std::setprecision(17) << i << ',' << co.rho << ','
                                        << co.n0 << ',' << co.R << ',' << co.weld_error << ','
                                        << co.meso.size();
                                     return os.str();
                                 },
                                 files);
                // median rho from the table
                std::vector<double> rhos;
                std::ifstream f(dir + "/" + name + ".csv");
                std::string line;
                std::getline(f, line);
                while (std::getline(f, line)) {
                    std::istringstream ss(line);
                    std::string tok;
                    std::getline(ss, tok, ',');
                    std::getline(ss, tok, ',');
                    double r = std::stod(tok);
                    if (std::isfinite(r)) rhos.push_back(r);
                }
                std::sort(rhos.begin(), rhos.end());
                binfo["summary"][std::to_string(N)]["median_rho"] =
                    rhos.empty() ? 0.0 : rhos[rhos.size() / 2];
                binfo["summary"][std::to_string(N)]["h"] = ds.h;
                binfo["summary"][std::to_string(N)]["R"] = ds.R;
            }
        } else if (battery == "observable") {
            int N = cfg.n_list()[0];
            DomainSetup ds = setup_domain(cfg, N);
            Rng rng(path_seed(seed, 0x0b5e7));
            std::vector<Cell> zetas;
            for (const Cell& c : ds.domain.cells())
                if (c.y == 0 && c.x % std::max(1, N / 16) == 0 && std::abs(c.x) < 0.45 * N)
                    zetas.push_back(c);
            auto samples = estimate_passage_sweep(ds.domain, ds.map, zetas, trials, rng);
            write_observable_csv(dir + "/observable.csv", samples);
            files["observable.csv"] = file_checksum(dir + "/observable.csv");
            GreenFit gf = fit_green_constant(samples);
            json& js = binfo["summary"];
            js["c"] = gf.c;
            js["r_exponent"] = gf.r_exponent;
            js["r_exponent_se"] = gf.r_exponent_se;
            js["s_trend_pvalue"] = gf.s_trend_pvalue;
            js["r_trend_pvalue"] = gf.r_trend_pvalue;
            js["used"] = gf.used;
        } else if (battery == "tails") {
            int N = cfg.n_list()[0];
            DomainSetup ds = setup_domain(cfg, N);
            std::vector<PathBundle> paths(trials);
            auto rows = parallel_rows(0, trials, workers, [&](std::size_t i) {
                Rng rng(path_seed(seed, i));
                PathBundle pb;
                pb.eta = sample_lerw(ds.domain, ds.hb, rng);
                pb.meso = extract_driving(ds.domain, ds.map, pb.eta, ds.h).meso;
                paths[i] = std::move(pb);
                return std::string();
            });
            TailParams tp;
            tp.h = ds.h;
            tp.rs_pairs = {{6, 12}, {8, 16}, {6, 24}, {8, 32}, {6, 36}, {8, 48}};
            TailStats ts = tail_and_bottleneck_stats(ds.domain, ds.map, ds.hb, paths, tp);
            {
                std::ofstream f(dir + "/diameter_tail.csv");
                f << std::setprecision(17) << "K,log_freq\n";
                for (const auto& p : ts.diameter_points) f << p[0] << ',' << p[1] << '\n';
            }
            files["diameter_tail.csv"] = file_checksum(dir + "/diameter_tail.csv");
            json& js = binfo["summary"];
            js["h"] = ds.h;
            js["tail_slope"] = ts.diameter_tail.slope;
            js["tail_r2"] = ts.diameter_tail.r2;
            js["bottleneck_slope"] = ts.bottleneck_fit.slope;
            js["visit_ratio"] = ts.visit_ratio;
            js["terminal_small_cap_freq"] = ts.terminal_small_cap_freq;
            js["harmonic_ratio"] = ts.harmonic_ratio;
        } else if (battery == "regularity") {
            double h = cfg.get_double("h", 0.01);
            double dt = cfg.get_double("dt", 1e-4);
            double T = cfg.get_double("T", 1.0);
            std::size_t steps = static_cast<std::size_t>(T / dt) + 1;
            std::vector<SleTrace> traces(trials);
            parallel_rows(0, trials, workers, [&](std::size_t i) {
                Rng rng(path_seed(seed, i));
                std::vector<double> w(steps, 0.0);
                double sd = std::sqrt(2.0 * dt);  // kappa = 2
                for (std::size_t k = 1; k < steps; ++k) w[k] = w[k - 1] + sd * rng.normal();
                traces[i] = solve_sle(w, 2.0, dt, std::sqrt(dt), 4.0);
                return std::string();
            });
            RegularityParams rp;
            rp.h = h;
            RegularityStats rs = sle_regularity_stats(traces, rp);
            json& js = binfo["summary"];
            js["h"] = h;
            js["exceed_h130"] = rs.exceed_h130;
            for (const auto& [c, fq] : rs.tails) js["tail_c" + std::to_string(c)] = fq;
        } else {
            throw ConfigInvalid("unknown battery " + battery);
        }
        summary["batteries"][battery] = binfo;
    }
    summary["complete"] = true;
    {
        std::ofstream f(dir + "/summary.json");
        f << summary.dump(2) << '\n';
    }
    fs::remove(dir + "/RESUME");
    return 0;
}

std::string emit_report(const std::string& dir) {
    if (!fs::exists(dir + "/summary.json")) throw ArtifactIncomplete({"summary.json"});
    if (fs::exists(dir + "/RESUME")) throw ArtifactIncomplete({"run not finished (RESUME marker present)"});
    json summary;
    {
        std::ifstream f(dir + "/summary.json");
        f >> summary;
    }
    json report;
    report["config_hash"] = summary["config_hash"];
    bool all_ok = true;
    for (auto& [name, binfo] : summary["batteries"].items()) {
        json jb;
        jb["present"] = true;
        bool ok = true;
        if (binfo.contains("files"))
            for (auto& [file, sum] : binfo["files"].items()) {
                bool good = fs::exists(dir + "/" + file) &&
                            file_checksum(dir + "/" + file) == sum.get<std::string>();
                jb["checksums"][file] = good;
                ok = ok && good;
            }
        jb["checksum_ok"] = ok;
        all_ok = all_ok && ok;
        if (binfo.contains("summary")) jb["summary"] = binfo["summary"];
        report["batteries"][name] = jb;
    }
    // rho monotonicity verdict across an N sweep
    if (summary["batteries"].contains("couple")) {
        auto& cs = summary["batteries"]["couple"]["summary"];
        std::vector<std::pair<int, double>> med;
        for (auto& [k, v] : cs.items()) med.emplace_back(std::stoi(k), v["median_rho"].get<double>());
        std::sort(med.begin(), med.end());
        bool mono = med.size() >= 2;
        for (std::size_t i = 1; i < med.size(); ++i) mono = mono && med[i].second < med[i - 1].second;
        report["rho_monotone_decreasing"] = mono;
    }
    report["all_checksums_ok"] = all_ok;
    std::string path = dir + "/report.json";
    std::ofstream f(path);
    f << report.dump(2) << '\n';
    return path;
}

}  // namespace lerwlab
