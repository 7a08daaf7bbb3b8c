#pragma once

// Experiment orchestration: line-oriented configs, named runners over the
// covering machinery, deterministic CSV persistence, and the pass/fail
// checks each runner reports.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gmtlab/coarea.hpp"
#include "gmtlab/exponents.hpp"
#include "gmtlab/funczoo.hpp"
#include "gmtlab/measures.hpp"
#include "gmtlab/polyapprox.hpp"
#include "gmtlab/potentials.hpp"

namespace gmtlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string experiment;
    std::string map_text;
    int m = 1;
    int k = 1;
    double alpha = 0.0;
    std::optional<double> p;
    std::vector<double> q_grid;
    std::vector<int> depths;
    std::vector<int> resolutions;
    std::vector<double> sides = {1.0, 0.5, 0.25};
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string output_dir = ".";
    // choquet extras
    std::string regime = "adams";
    double s = 3.0;
    double beta = 0.5;
    int count = 50;
    int l = 1;
    // coarea extras
    std::string mask = "none";
    int y_resolution = 64;
    // yomdin extras
    int eps_min_log2 = 1;
    int eps_max_log2 = 8;

    std::map<std::string, std::string> raw;
};

namespace expdetail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double to_double(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for '" + key + "': " + s);
    }
}

inline int to_int(const std::string& s, const std::string& key) {
    const double v = to_double(s, key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError("config: expected an integer for '" + key + "': " + s);
    return i;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace expdetail

// Line-oriented "key = value" text with '#' comments; one experiment per
// file.
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = expdetail::trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = expdetail::trim(line.substr(0, eq));
        const std::string val = expdetail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        c.raw[key] = val;
    }

    using expdetail::split;
    using expdetail::to_double;
    using expdetail::to_int;
    auto have = [&](const char* k) { return c.raw.count(k) > 0; };
    auto get = [&](const char* k) { return c.raw.at(k); };

    if (have("experiment")) c.experiment = get("experiment");
    if (have("map")) c.map_text = get("map");
    if (have("m")) c.m = to_int(get("m"), "m");
    if (have("k")) c.k = to_int(get("k"), "k");
    if (have("alpha")) c.alpha = to_double(get("alpha"), "alpha");
    if (have("p")) c.p = to_double(get("p"), "p");
    if (have("q_grid"))
        for (const auto& t : split(get("q_grid"), ',')) c.q_grid.push_back(to_double(t, "q_grid"));
    if (have("depths"))
        for (const auto& t : split(get("depths"), ',')) c.depths.push_back(to_int(t, "depths"));
    if (have("resolutions"))
        for (const auto& t : split(get("resolutions"), ','))
            c.resolutions.push_back(to_int(t, "resolutions"));
    if (have("sides")) {
        c.sides.clear();
        for (const auto& t : split(get("sides"), ',')) c.sides.push_back(to_double(t, "sides"));
    }
    if (have("seed")) {
        c.seed = static_cast<std::uint64_t>(to_double(get("seed"), "seed"));
        c.seed_set = true;
    }
    if (have("output")) c.output_dir = get("output");
    if (have("regime")) c.regime = get("regime");
    if (have("s")) c.s = to_double(get("s"), "s");
    if (have("beta")) c.beta = to_double(get("beta"), "beta");
    if (have("count")) c.count = to_int(get("count"), "count");
    if (have("l")) c.l = to_int(get("l"), "l");
    if (have("mask")) c.mask = get("mask");
    if (have("y_resolution")) c.y_resolution = to_int(get("y_resolution"), "y_resolution");
    if (have("eps_min_log2")) c.eps_min_log2 = to_int(get("eps_min_log2"), "eps_min_log2");
    if (have("eps_max_log2")) c.eps_max_log2 = to_int(get("eps_max_log2"), "eps_max_log2");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// Build the MapSpec named by a config: "builtin:name(args)" or DSL text.
inline MapSpec make_map(const ExperimentConfig& c) {
    const std::string& t = c.map_text;
    if (t.empty()) throw ConfigError("config: missing 'map'");
    if (t.rfind("builtin:", 0) == 0) {
        std::string rest = t.substr(8);
        std::string name = rest;
        std::vector<double> params;
        const size_t lp = rest.find('(');
        if (lp != std::string::npos) {
            if (rest.back() != ')') throw ConfigError("config: malformed builtin spec: " + t);
            name = rest.substr(0, lp);
            const std::string args = rest.substr(lp + 1, rest.size() - lp - 2);
            if (!expdetail::trim(args).empty())
                for (const auto& a : expdetail::split(args, ','))
                    params.push_back(expdetail::to_double(a, "map"));
        }
        return make_builtin(name, params);
    }
    DslOptions opt;
    opt.name = t;
    if (c.raw.count("n")) opt.declared_n = expdetail::to_int(c.raw.at("n"), "n");
    if (c.raw.count("holder"))
        opt.smooth = Smoothness{c.k, c.alpha, expdetail::to_double(c.raw.at("holder"), "holder")};
    return parse_map(t, opt);
}

inline void validate_config(const ExperimentConfig& c) {
    static const std::vector<std::string> kinds = {"exponent_sweep", "cube_scaling", "yomdin_fit",
                                                   "coarea", "choquet"};
    if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end())
        throw ConfigError("config: unknown experiment '" + c.experiment + "'");
    if (!c.seed_set) throw ConfigError("config: 'seed' is mandatory");
    if (c.experiment != "choquet") {
        MapSpec map = make_map(c);  // registration gates run here
        ExponentParams ep{.n = map.n, .m = c.m, .d = map.d, .k = c.k, .alpha = c.alpha, .p = c.p};
        ep.validate();
    }
    if (c.experiment == "exponent_sweep" || c.experiment == "cube_scaling") {
        if (c.q_grid.empty()) throw ConfigError("config: 'q_grid' required");
        if (c.depths.empty()) throw ConfigError("config: 'depths' required");
    }
    if (c.experiment == "coarea") {
        if (c.resolutions.empty()) throw ConfigError("config: 'resolutions' required");
        if (c.mask != "none" && c.mask != "disk")
            throw ConfigError("config: mask must be 'none' or 'disk'");
    }
    if (c.experiment == "choquet") {
        if (c.regime != "adams" && c.regime != "lorentz" && c.regime != "sobolev")
            throw ConfigError("config: regime must be adams, lorentz or sobolev");
        if (c.resolutions.empty()) throw ConfigError("config: 'resolutions' required");
    }
    if (c.experiment == "yomdin_fit") {
        if (c.resolutions.empty()) throw ConfigError("config: 'resolutions' required");
        if (!(c.eps_min_log2 >= 0 && c.eps_max_log2 >= c.eps_min_log2))
            throw ConfigError("config: bad eps range");
    }
}

struct ExperimentRecord {
    std::string experiment;
    std::string map;
    int n = 1, d = 1, m = 1, k = 1;
    double alpha = 0;
    std::optional<double> p;
    double q = 0, mu = 0;
    int depth = 0, resolution = 0;
    std::uint64_t seed = 0;
    double measured = 0, predicted = 0, residual = 0;
    double wall_ms = 0;
};

inline const char* csv_header() {
    return "experiment,map,n,d,m,k,alpha,p,q,mu,depth,resolution,seed,measured,predicted,"
           "residual,wall_ms";
}

inline std::string to_csv_row(const ExperimentRecord& r) {
    using expdetail::fmt;
    std::string map_field = r.map;
    for (char& c : map_field)
        if (c == ',') c = ';';  // DSL map names may contain commas
    std::ostringstream os;
    os << r.experiment << ',' << map_field << ',' << r.n << ',' << r.d << ',' << r.m << ',' << r.k
       << ',' << fmt(r.alpha) << ',' << (r.p ? fmt(*r.p) : std::string()) << ',' << fmt(r.q) << ','
       << fmt(r.mu) << ',' << r.depth << ',' << r.resolution << ',' << r.seed << ','
       << fmt(r.measured) << ',' << fmt(r.predicted) << ',' << fmt(r.residual) << ','
       << fmt(r.wall_ms);
    return os.str();
}

inline std::string records_to_csv(const std::vector<ExperimentRecord>& rows) {
    std::ostringstream os;
    os << csv_header() << '\n';
    for (const auto& r : rows) os << to_csv_row(r) << '\n';
    return os.str();
}

// The predicted column is recomputed from the exponent module when a CSV is
// read back; a mismatch means the file was edited or the formulas drifted.
inline double recompute_predicted(const ExperimentRecord& r) {
    const std::string& e = r.experiment;
    ExponentParams ep{.n = r.n, .m = r.m, .d = r.d, .k = r.k, .alpha = r.alpha, .p = r.p};
    if (e == "exponent_sweep" || e == "exponent_sweep:borderline") return mu_q(ep, r.q);
    if (e == "cube_scaling") return cube_scaling_exponent(ep, r.q);
    if (e == "yomdin_fit") return 1.0 - r.m;
    return r.predicted;  // coarea / choquet rows carry free-form targets
}

inline std::vector<ExperimentRecord> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || expdetail::trim(line) != csv_header())
        throw std::runtime_error("csv: unexpected header");
    std::vector<ExperimentRecord> out;
    while (std::getline(in, line)) {
        if (expdetail::trim(line).empty()) continue;
        const auto f = expdetail::split(line, ',');
        if (f.size() != 17) throw std::runtime_error("csv: wrong field count");
        ExperimentRecord r;
        r.experiment = f[0];
        r.map = f[1];
        r.n = expdetail::to_int(f[2], "n");
        r.d = expdetail::to_int(f[3], "d");
        r.m = expdetail::to_int(f[4], "m");
        r.k = expdetail::to_int(f[5], "k");
        r.alpha = expdetail::to_double(f[6], "alpha");
        if (!f[7].empty()) r.p = expdetail::to_double(f[7], "p");
        r.q = expdetail::to_double(f[8], "q");
        r.mu = expdetail::to_double(f[9], "mu");
        r.depth = expdetail::to_int(f[10], "depth");
        r.resolution = expdetail::to_int(f[11], "resolution");
        r.seed = static_cast<std::uint64_t>(expdetail::to_double(f[12], "seed"));
        r.measured = expdetail::to_double(f[13], "measured");
        r.predicted = expdetail::to_double(f[14], "predicted");
        r.residual = expdetail::to_double(f[15], "residual");
        r.wall_ms = expdetail::to_double(f[16], "wall_ms");
        const double again = recompute_predicted(r);
        if (std::abs(again - r.predicted) > 1e-9 * (1 + std::abs(again)))
            throw std::runtime_error("csv: stored predicted value disagrees with the exponent "
                                     "formulas for experiment '" + r.experiment + "'");
        out.push_back(std::move(r));
    }
    return out;
}

struct RunResult {
    std::vector<ExperimentRecord> records;
    std::vector<std::string> notes;
    bool checks_passed = true;
};

namespace expdetail {

// Deterministic fan-out: items are processed by up to `jobs` workers and
// merged in item order.
template <class Item, class Fn>
inline std::vector<RunResult> parallel_items(const std::vector<Item>& items, int jobs, Fn&& fn) {
    std::vector<RunResult> results(items.size());
    std::atomic<size_t> next{0};
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
    auto work = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            results[i] = fn(items[i], i);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return results;
}

inline RunResult merge(std::vector<RunResult> parts) {
    RunResult out;
    for (auto& p : parts) {
        for (auto& r : p.records) out.records.push_back(std::move(r));
        for (auto& n : p.notes) out.notes.push_back(std::move(n));
        out.checks_passed = out.checks_passed && p.checks_passed;
    }
    return out;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

// Deterministic anchor: the first lattice point minimizing |grad v|.
inline Point critical_anchor(const MapSpec& map, int res = 65) {
    Point best(static_cast<size_t>(map.n), 0.0);
    double bestv = std::numeric_limits<double>::infinity();
    const double h = map.domain.side / (res - 1);
    for_each_lattice(map.n, res, [&](std::int64_t, std::span<const int> idx) {
        Point x(map.domain.corner);
        for (int i = 0; i < map.n; ++i) x[static_cast<size_t>(i)] += idx[i] * h;
        const double v = operator_norm(map.jacobian(x));
        if (v < bestv - 1e-15) {
            bestv = v;
            best = x;
        }
    });
    return best;
}

inline Cube clipped_cube(const Cube& domain, const Point& center, double side) {
    Point corner(center);
    for (int i = 0; i < domain.dim(); ++i) {
        double c = center[static_cast<size_t>(i)] - side / 2;
        c = std::max(c, domain.corner[static_cast<size_t>(i)]);
        c = std::min(c, domain.corner[static_cast<size_t>(i)] + domain.side - side);
        corner[static_cast<size_t>(i)] = c;
    }
    return Cube(corner, side);
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace expdetail

// ---- runners ----------------------------------------------------------------

// Theorem-style sweep: for each q, track the level-set content of sampled
// image values across depths.  For q > m-1 the q-content-weighted fraction of
// samples whose content fails to decay must be small; the borderline
// q = m-1 rows are flagged and also routed through the coarea check.
inline RunResult run_exponent_sweep(const ExperimentConfig& cfg, int jobs) {
    const MapSpec map = make_map(cfg);
    const Cube root = map.domain;
    ExponentParams ep{.n = map.n, .m = cfg.m, .d = map.d, .k = cfg.k, .alpha = cfg.alpha,
                      .p = cfg.p};
    ep.validate();

    auto result = expdetail::parallel_items(cfg.q_grid, jobs, [&](double q, size_t qi) {
        RunResult rr;
        expdetail::Timer timer;
        const bool borderline = std::abs(q - (cfg.m - 1)) < 1e-12;
        // a non-positive exponent means the counting-measure convention
        const double mu = std::max(mu_q(ep, q), 0.0);
        const std::string exp_name =
            borderline ? cfg.experiment + ":borderline" : cfg.experiment;

        // critical cells per depth
        std::vector<CellSet> zs;
        for (int depth : cfg.depths) zs.push_back(critical_cells(map, root, cfg.m, depth));

        // seeded y samples: jittered centers of a dyadic grid over the image
        // bounding box of the shallowest critical set
        std::vector<Point> ys;
        std::vector<double> ydiam;
        Cube ybox = Cube::unit(map.d);
        {
            std::vector<double> lo(static_cast<size_t>(map.d),
                                   std::numeric_limits<double>::infinity());
            std::vector<double> hi(static_cast<size_t>(map.d),
                                   -std::numeric_limits<double>::infinity());
            const CellSet& s0 = zs.front();
            for (const auto& idx : s0.cells) {
                const Cube cc = cell_cube(root, s0.level, idx);
                const auto v = map.eval(cc.center());
                const double pad = map.modulus_bound(cc.diam());
                for (int i = 0; i < map.d; ++i) {
                    lo[static_cast<size_t>(i)] = std::min(lo[static_cast<size_t>(i)],
                                                          v[static_cast<size_t>(i)] - pad);
                    hi[static_cast<size_t>(i)] = std::max(hi[static_cast<size_t>(i)],
                                                          v[static_cast<size_t>(i)] + pad);
                }
            }
            if (s0.cells.empty()) {
                // empty critical set: every content is zero, trivially passing
                for (size_t di = 0; di < cfg.depths.size(); ++di) {
                    ExperimentRecord r;
                    r.experiment = exp_name;
                    r.map = map.name;
                    r.n = map.n;
                    r.d = map.d;
                    r.m = cfg.m;
                    r.k = cfg.k;
                    r.alpha = cfg.alpha;
                    r.p = cfg.p;
                    r.q = q;
                    r.mu = mu_q(ep, q);
                    r.depth = cfg.depths[di];
                    r.resolution = 0;
                    r.seed = cfg.seed;
                    r.measured = 0;
                    r.predicted = mu_q(ep, q);
                    r.residual = 0;
                    r.wall_ms = timer.ms();
                    rr.records.push_back(std::move(r));
                }
                rr.notes.push_back("q=" + expdetail::fmt(q) + ": empty critical set");
                return rr;
            }
            double extent = 0;
            for (int i = 0; i < map.d; ++i)
                extent = std::max(extent, hi[static_cast<size_t>(i)] - lo[static_cast<size_t>(i)]);
            extent = std::max(extent, 1e-9);
            ybox = Cube(Point(lo.begin(), lo.end()), extent * 1.0000001);

            const int ylevel = std::max(1, 6 / map.d + (map.d == 1 ? 0 : 1));
            std::mt19937_64 rng(cfg.seed + 1000 + qi);
            std::uniform_real_distribution<double> u(-0.45, 0.45);
            const std::int64_t per = static_cast<std::int64_t>(1) << ylevel;
            CellIndex idx(static_cast<size_t>(map.d), 0);
            std::function<void(int)> rec = [&](int axis) {
                if (axis == map.d) {
                    const Cube yc = cell_cube(ybox, ylevel, idx);
                    Point y = yc.center();
                    for (double& c : y) c += u(rng) * yc.side;
                    ys.push_back(std::move(y));
                    ydiam.push_back(yc.diam());
                    return;
                }
                for (std::int64_t i = 0; i < per; ++i) {
                    idx[static_cast<size_t>(axis)] = i;
                    rec(axis + 1);
                }
            };
            rec(0);
        }

        // contents per (y, depth)
        std::vector<std::vector<double>> contents(ys.size());
        for (size_t yi = 0; yi < ys.size(); ++yi)
            for (size_t di = 0; di < zs.size(); ++di)
                contents[yi].push_back(level_set_content(map, ys[yi], zs[di], mu, root).value);

        // q-content weights of the sampled y cells
        std::vector<double> weights(ys.size());
        for (size_t yi = 0; yi < ys.size(); ++yi)
            weights[yi] = std::pow(ydiam[yi], q);

        for (size_t di = 0; di < cfg.depths.size(); ++di) {
            double wmean = 0, wsum = 0;
            for (size_t yi = 0; yi < ys.size(); ++yi) {
                wmean += weights[yi] * contents[yi][di];
                wsum += weights[yi];
            }
            ExperimentRecord r;
            r.experiment = exp_name;
            r.map = map.name;
            r.n = map.n;
            r.d = map.d;
            r.m = cfg.m;
            r.k = cfg.k;
            r.alpha = cfg.alpha;
            r.p = cfg.p;
            r.q = q;
            r.mu = mu_q(ep, q);
            r.depth = cfg.depths[di];
            r.resolution = static_cast<int>(ys.size());
            r.seed = cfg.seed;
            r.measured = wsum > 0 ? wmean / wsum : 0.0;
            r.predicted = mu_q(ep, q);
            double base = 0, basew = 0;
            for (size_t yi = 0; yi < ys.size(); ++yi) {
                base += weights[yi] * contents[yi][0];
                basew += weights[yi];
            }
            base = basew > 0 ? base / basew : 0.0;
            r.residual = base > 0 ? r.measured / base : 0.0;
            r.wall_ms = timer.ms();
            rr.records.push_back(std::move(r));
        }

        // pass metric: q-content-weighted fraction of y samples whose content
        // failed to decay at the deepest level
        double failing = 0, interesting = 0;
        for (size_t yi = 0; yi < ys.size(); ++yi) {
            const double first = contents[yi].front();
            const double last = contents[yi].back();
            if (first <= 1e-12) continue;  // empty preimage throughout
            interesting += weights[yi];
            const bool decayed = last <= 0.5 * first || last < 1e-9;
            if (!decayed) failing += weights[yi];
        }
        if (borderline) {
            rr.notes.push_back("q=" + expdetail::fmt(q) +
                               ": borderline: excluded by the bridge identity; routed to the "
                               "coarea check");
            // the obstruction: some sampled value keeps a fat preimage at
            // every depth
            double max_first = 0, max_last = 0;
            for (size_t yi = 0; yi < ys.size(); ++yi) {
                max_first = std::max(max_first, contents[yi].front());
                max_last = std::max(max_last, contents[yi].back());
            }
            const bool bounded = max_last >= 0.5 * max_first && max_last > 0.1;
            if (!bounded) {
                rr.checks_passed = false;
                rr.notes.push_back("q=" + expdetail::fmt(q) +
                                   ": borderline case unexpectedly decayed");
            }
            // the coarea identity with m' = m - 1 on the critical set
            ExperimentRecord cr;
            cr.experiment = cfg.experiment + ":borderline-coarea";
            cr.map = map.name;
            cr.n = map.n;
            cr.d = map.d;
            cr.m = cfg.m - 1;
            cr.k = cfg.k;
            cr.alpha = cfg.alpha;
            cr.p = cfg.p;
            cr.q = q;
            cr.mu = 0;
            cr.depth = cfg.depths.back();
            cr.resolution = 1 << cfg.depths.back();
            cr.seed = cfg.seed;
            if (cfg.m - 1 >= 1 && map.d >= cfg.m - 1 && map.n == 2 && cfg.m - 1 <= 2) {
                // restriction of the map to its first m-1 components
                const MapSpec& mm = map;
                MapSpec proj = mm;
                proj.d = cfg.m - 1;
                proj.name = mm.name + "[0.." + std::to_string(cfg.m - 1) + ")";
                auto inner = mm.eval_fn;
                const int md = mm.d;
                proj.eval_fn = [inner, md](std::span<const double> x, std::span<double> out) {
                    std::vector<double> full(static_cast<size_t>(md));
                    inner(x, full);
                    std::copy(full.begin(), full.begin() + static_cast<long>(out.size()),
                              out.begin());
                };
                auto ip = mm.partial_fn;
                proj.partial_fn = ip;
                CellSet z = zs.back();
                auto rep = coarea_check(proj, z, cfg.m - 1, root, cfg.y_resolution);
                cr.measured = rep.lhs;
                cr.predicted = rep.rhs;
                cr.residual = rep.residual;
            }
            cr.wall_ms = timer.ms();
            rr.records.push_back(std::move(cr));
        } else {
            const double frac = interesting > 0 ? failing / interesting : 0.0;
            if (frac > 0.05) {
                rr.checks_passed = false;
                rr.notes.push_back("q=" + expdetail::fmt(q) + ": failing fraction " +
                                   expdetail::fmt(frac));
            }
        }
        return rr;
    });
    return expdetail::merge(std::move(result));
}

// Per-cube scaling: fit log Phi(Z'_v cap Q) against log ell(Q) over a dyadic
// ladder of cubes centered at a critical anchor.
inline RunResult run_cube_scaling(const ExperimentConfig& cfg, int jobs) {
    const MapSpec map = make_map(cfg);
    if (!map.smooth) throw ConfigError("cube_scaling: map lacks declared smoothness");
    ExponentParams ep{.n = map.n, .m = cfg.m, .d = map.d, .k = cfg.k, .alpha = cfg.alpha,
                      .p = cfg.p};
    ep.validate();
    const Point anchor = expdetail::critical_anchor(map);
    const int depth = cfg.depths.empty() ? 6 : cfg.depths.front();

    struct Item {
        double q;
        double side;
    };
    std::vector<Item> items;
    for (double q : cfg.q_grid)
        for (double side : cfg.sides) items.push_back({q, side});

    auto parts = expdetail::parallel_items(items, jobs, [&](const Item& it, size_t) {
        RunResult rr;
        expdetail::Timer timer;
        const double mu = std::max(mu_q(ep, it.q), 0.0);
        const Cube qcube = expdetail::clipped_cube(map.domain, anchor,
                                                   it.side * map.domain.side);
        CellSet z = critical_cells(map, qcube, cfg.m, depth);
        const double phi = phi_functional(map, z, mu, it.q, depth, qcube).value;
        ExperimentRecord r;
        r.experiment = cfg.experiment;
        r.map = map.name;
        r.n = map.n;
        r.d = map.d;
        r.m = cfg.m;
        r.k = cfg.k;
        r.alpha = cfg.alpha;
        r.p = cfg.p;
        r.q = it.q;
        r.mu = mu_q(ep, it.q);
        r.depth = depth;
        r.resolution = static_cast<int>(std::lround(1.0 / it.side));
        r.seed = cfg.seed;
        r.measured = phi;
        r.predicted = cube_scaling_exponent(ep, it.q);
        r.residual = 0;  // slope residual filled after the fit
        r.wall_ms = timer.ms();
        rr.records.push_back(std::move(r));
        return rr;
    });
    RunResult out = expdetail::merge(std::move(parts));

    // per-q regression of log phi against log side
    for (double q : cfg.q_grid) {
        std::vector<double> lx, ly;
        for (const auto& r : out.records)
            if (r.q == q && r.measured > 0) {
                lx.push_back(std::log(map.domain.side / r.resolution));
                ly.push_back(std::log(r.measured));
            }
        if (lx.size() < 2) {
            out.notes.push_back("q=" + expdetail::fmt(q) +
                                ": too few nonzero phi values to regress");
            continue;
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        const double nn = static_cast<double>(lx.size());
        const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
        const double predicted = cube_scaling_exponent(ep, q);
        for (auto& r : out.records)
            if (r.q == q) r.residual = slope - predicted;
        out.notes.push_back("q=" + expdetail::fmt(q) + ": slope " + expdetail::fmt(slope) +
                            " predicted " + expdetail::fmt(predicted));
        if (slope < predicted - 0.3) out.checks_passed = false;
    }
    return out;
}

// Entropy-law fit: the near-critical ball count N(eps, r) against the bound
// shape 1 + eps^(1-m).
inline RunResult run_yomdin_fit(const ExperimentConfig& cfg, int jobs) {
    const MapSpec map = make_map(cfg);
    const Point anchor = expdetail::critical_anchor(map);
    const MultiPoly poly = taylor_poly(map, anchor, std::max(cfg.k, 3));
    const int res = cfg.resolutions.front();

    struct Item {
        int eps_log2;
        double side;
    };
    std::vector<Item> items;
    for (int j = cfg.eps_min_log2; j <= cfg.eps_max_log2; ++j)
        for (double side : cfg.sides) items.push_back({j, side});

    auto parts = expdetail::parallel_items(items, jobs, [&](const Item& it, size_t) {
        RunResult rr;
        expdetail::Timer timer;
        const double eps = std::ldexp(1.0, -it.eps_log2);
        const Cube qcube = expdetail::clipped_cube(map.domain, anchor,
                                                   it.side * map.domain.side);
        const auto cover = yomdin_cover(poly, qcube, eps, cfg.m, res);
        ExperimentRecord r;
        r.experiment = cfg.experiment;
        r.map = map.name;
        r.n = map.n;
        r.d = map.d;
        r.m = cfg.m;
        r.k = cfg.k;
        r.alpha = cfg.alpha;
        r.p = cfg.p;
        r.q = eps;
        r.mu = 0;
        r.depth = it.eps_log2;
        r.resolution = res;
        r.seed = cfg.seed;
        r.measured = static_cast<double>(cover.count());
        r.predicted = 1.0 - cfg.m;
        r.residual = cover.count() / (1.0 + std::pow(eps, 1.0 - cfg.m));
        r.wall_ms = timer.ms();
        rr.records.push_back(std::move(r));
        return rr;
    });
    RunResult out = expdetail::merge(std::move(parts));

    std::vector<double> ratios;
    for (const auto& r : out.records)
        if (r.residual > 0) ratios.push_back(r.residual);
    if (!ratios.empty()) {
        const double med = expdetail::median(ratios);
        double worst = 0;
        for (double x : ratios) worst = std::max(worst, std::max(x / med, med / x));
        out.notes.push_back("fitted constant spread x" + expdetail::fmt(worst) + " around median " +
                            expdetail::fmt(med));
        if (worst >= 4.0) out.checks_passed = false;
    }
    return out;
}

// Two-sided coarea evaluation at each configured resolution, with the
// residual-halving note across consecutive resolutions.
inline RunResult run_coarea(const ExperimentConfig& cfg, int jobs) {
    const MapSpec map = make_map(cfg);
    if (map.n > 3) throw ConfigError("coarea: n <= 3 required");
    const Cube root = map.domain;

    auto parts = expdetail::parallel_items(cfg.resolutions, jobs, [&](int res, size_t) {
        RunResult rr;
        expdetail::Timer timer;
        int level = 0;
        while ((1 << level) < res) ++level;
        if ((1 << level) != res) throw ConfigError("coarea: resolutions must be powers of two");
        CellSet e = cells_from_predicate(root, level, [&](const Cube& c) {
            if (cfg.mask == "none") return true;
            const Point ctr = c.center();
            double r2 = 0;
            for (double x : ctr) r2 += x * x;
            return r2 <= 1.0;
        });
        auto rep = coarea_check(map, e, cfg.m, root, cfg.y_resolution);
        auto mk = [&](const std::string& suffix, double value) {
            ExperimentRecord r;
            r.experiment = cfg.experiment + suffix;
            r.map = map.name;
            r.n = map.n;
            r.d = map.d;
            r.m = cfg.m;
            r.k = cfg.k;
            r.alpha = cfg.alpha;
            r.p = cfg.p;
            r.q = 0;
            r.mu = 0;
            r.depth = level;
            r.resolution = res;
            r.seed = cfg.seed;
            r.measured = value;
            r.predicted = 0;
            r.residual = rep.residual;
            r.wall_ms = timer.ms();
            return r;
        };
        rr.records.push_back(mk(":lhs", rep.lhs));
        rr.records.push_back(mk(":rhs", rep.rhs));
        if (rep.rank_violations > 0)
            rr.notes.push_back("resolution " + std::to_string(res) + ": " +
                               std::to_string(rep.rank_violations) + " rank violations in E");
        return rr;
    });
    RunResult out = expdetail::merge(std::move(parts));

    // residual trend across consecutive resolutions
    std::vector<double> residuals;
    for (const auto& r : out.records)
        if (r.experiment.size() > 4 && r.experiment.rfind(":lhs") == r.experiment.size() - 4)
            residuals.push_back(r.residual);
    for (size_t i = 0; i + 1 < residuals.size(); ++i) {
        out.notes.push_back("residual ratio " + expdetail::fmt(residuals[i + 1] /
                                                               std::max(residuals[i], 1e-300)));
    }
    return out;
}

// Choquet boundedness sweeps over seeded random densities.
inline RunResult run_choquet(const ExperimentConfig& cfg, int jobs) {
    const int n = 2;
    const Cube dom = Cube::unit(n);

    struct Item {
        int res;
        int seed_index;
    };
    std::vector<Item> items;
    for (int res : cfg.resolutions)
        for (int si = 0; si < cfg.count; ++si) items.push_back({res, si});

    auto parts = expdetail::parallel_items(items, jobs, [&](const Item& it, size_t) {
        RunResult rr;
        expdetail::Timer timer;
        std::mt19937_64 rng(cfg.seed + 10007 * static_cast<std::uint64_t>(it.seed_index));

        ExperimentRecord r;
        r.experiment = cfg.experiment + ":" + cfg.regime;
        r.map = "random";
        r.n = n;
        r.d = 1;
        r.m = cfg.m;
        r.k = cfg.k;
        r.alpha = cfg.alpha;
        r.p = cfg.p;
        r.seed = cfg.seed + 10007 * static_cast<std::uint64_t>(it.seed_index);
        r.depth = it.seed_index;
        r.resolution = it.res;
        r.predicted = 0;

        if (cfg.regime == "sobolev") {
            // polynomial bump zoo: random coefficients against a fixed C^2 bump
            std::uniform_real_distribution<double> cdist(-1.0, 1.0);
            const double c0 = cdist(rng), c1 = cdist(rng), c2 = cdist(rng);
            GridField f = sample_field(dom, it.res, 1,
                                       [&](std::span<const double> x, std::span<double> o) {
                                           const double bump = std::pow(x[0] * (1 - x[0]) * x[1] *
                                                                        (1 - x[1]), 2.0);
                                           o[0] = bump * (c0 + c1 * std::sin(3 * x[0] + x[1]) +
                                                          c2 * x[0] * x[1]);
                                       });
            GridField g1 = gradient_magnitude(f);
            GridField g2 = hessian_magnitude(f);
            const double denom = lp_norm(g2, 1.0);
            GridField mg = maximal_function(g1);
            const ChoquetParams cp = ChoquetParams::sobolev(n, cfg.k, cfg.l);
            const double num = choquet_integral(mg, cp, dyadic_content_oracle());
            r.q = 0;
            r.mu = cp.tau;
            r.measured = denom > 1e-12 ? num / denom : 0.0;
        } else {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            GridField g = sample_field(dom, it.res, 1,
                                       [&](std::span<const double>, std::span<double> o) {
                                           o[0] = u(rng);
                                       });
            const double pval = cfg.p.value_or(1.5);
            const ChoquetParams cp = (cfg.regime == "adams")
                                         ? ChoquetParams::adams(n, pval, cfg.s, cfg.beta)
                                         : ChoquetParams::lorentz(n, pval, cfg.beta);
            // M(I_beta g) on the grid
            GridField pot = g;
            for_each_lattice(n, g.resolution, [&](std::int64_t flat, std::span<const int> idx) {
                const Point x = g.node(idx);
                pot.value(flat)[0] = riesz_potential(g, cfg.beta, x);
            });
            GridField mpot = maximal_function(pot);
            const double num = choquet_integral(mpot, cp, dyadic_content_oracle());
            const double denom = (cfg.regime == "adams")
                                     ? std::pow(lp_norm(g, pval), cp.s)
                                     : std::pow(lorentz_p1_norm(g, pval), pval);
            r.q = cp.s;
            r.mu = cp.tau;
            r.measured = denom > 1e-12 ? num / denom : 0.0;
        }
        r.residual = 0;  // spread filled after the median pass
        r.wall_ms = timer.ms();
        rr.records.push_back(std::move(r));
        return rr;
    });
    RunResult out = expdetail::merge(std::move(parts));

    std::vector<double> ratios;
    for (const auto& r : out.records)
        if (r.measured > 0) ratios.push_back(r.measured);
    const double med = expdetail::median(ratios);
    double worst = 0;
    for (auto& r : out.records) {
        r.residual = med > 0 ? r.measured / med : 0.0;
        worst = std::max(worst, r.residual);
    }
    out.notes.push_back("max/median ratio " + expdetail::fmt(worst));
    if (worst >= 10.0) {
        out.checks_passed = false;
        out.notes.push_back("boundedness alarm: ratio exceeded 10x the median");
    }
    return out;
}

inline RunResult run_experiment(const ExperimentConfig& cfg, int jobs = 1) {
    validate_config(cfg);
    if (cfg.experiment == "exponent_sweep") return run_exponent_sweep(cfg, jobs);
    if (cfg.experiment == "cube_scaling") return run_cube_scaling(cfg, jobs);
    if (cfg.experiment == "yomdin_fit") return run_yomdin_fit(cfg, jobs);
    if (cfg.experiment == "coarea") return run_coarea(cfg, jobs);
    if (cfg.experiment == "choquet") return run_choquet(cfg, jobs);
    throw ConfigError("unknown experiment: " + cfg.experiment);
}

} // namespace gmtlab
