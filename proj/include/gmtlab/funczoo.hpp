#pragma once

// The test-mapping registry: DSL-backed maps plus analytic constructions
// with known critical structure (linear maps of prescribed rank, the
// conformal square, the paraboloid, and Cantor staircase/bump families).

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmtlab/expr.hpp"
#include "gmtlab/mapspec.hpp"

namespace gmtlab {

// ---- DSL-backed maps ------------------------------------------------------

struct DslOptions {
    std::string name;
    int declared_n = 0;                  // 0: infer from highest variable index
    std::optional<Smoothness> smooth;
    std::optional<double> lipschitz;     // exact bound if known; else estimated
    std::optional<Cube> domain;          // default [0,1]^n
    bool gradient_normalized = false;
    int deriv_order = 3;                 // symbolic partials precomputed to this order
};

namespace zoodetail {

struct PartialTable {
    int n = 1;
    int max_order = 0;
    // per component: multi-index -> expression
    std::vector<std::map<std::vector<int>, ExprPtr>> table;

    const ExprPtr& lookup(int component, std::span<const int> gamma) const {
        std::vector<int> key(gamma.begin(), gamma.end());
        const auto& m = table[static_cast<size_t>(component)];
        auto it = m.find(key);
        if (it == m.end())
            throw std::logic_error("partial table: order exceeds precomputed depth");
        return it->second;
    }
};

inline PartialTable build_partials(const std::vector<ExprPtr>& comps, int n, int max_order) {
    PartialTable pt;
    pt.n = n;
    pt.max_order = max_order;
    pt.table.resize(comps.size());
    for (size_t c = 0; c < comps.size(); ++c) {
        auto& m = pt.table[c];
        m[std::vector<int>(static_cast<size_t>(n), 0)] = comps[c];
        // breadth-first over total order; differentiate from the parent that
        // drops the first positive axis
        std::vector<std::vector<int>> frontier = {std::vector<int>(static_cast<size_t>(n), 0)};
        for (int order = 1; order <= max_order; ++order) {
            std::vector<std::vector<int>> next;
            for (const auto& g : frontier) {
                for (int axis = 0; axis < n; ++axis) {
                    std::vector<int> ng = g;
                    ++ng[static_cast<size_t>(axis)];
                    if (m.count(ng)) continue;
                    m[ng] = differentiate(m[g], axis);
                    next.push_back(ng);
                }
            }
            frontier = std::move(next);
        }
    }
    return pt;
}

inline double estimate_lipschitz(const MapSpec& map, int res = 17) {
    double worst = 0;
    for_each_lattice(map.n, res, [&](std::int64_t, std::span<const int> idx) {
        Point x(map.domain.corner);
        const double h = map.domain.side / (res - 1);
        for (int i = 0; i < map.n; ++i) x[i] += idx[i] * h;
        worst = std::max(worst, operator_norm(map.jacobian(x)));
    });
    return worst * 1.25;
}

} // namespace zoodetail

// Parse a map from DSL text and assemble exact evaluators with symbolic
// partial derivatives.  n is inferred from the highest variable index unless
// declared; d is the tuple length.
inline MapSpec parse_map(const std::string& text, DslOptions opt = {}) {
    std::vector<ExprPtr> comps = parse_map_exprs(text);
    int n = opt.declared_n;
    for (const auto& c : comps) n = std::max(n, max_var_index(*c) + 1);
    if (n < 1) n = 1;  // constant map: 1-dimensional domain by convention

    const int d = static_cast<int>(comps.size());
    int max_order = opt.deriv_order;
    if (opt.smooth) max_order = std::max(max_order, opt.smooth->k);
    auto pt = std::make_shared<zoodetail::PartialTable>(
        zoodetail::build_partials(comps, n, max_order));

    MapSpec ms;
    ms.name = opt.name.empty() ? text : opt.name;
    ms.n = n;
    ms.d = d;
    ms.deriv_order = max_order;
    auto comps_ptr = std::make_shared<std::vector<ExprPtr>>(std::move(comps));
    ms.eval_fn = [comps_ptr](std::span<const double> x, std::span<double> out) {
        for (size_t i = 0; i < comps_ptr->size(); ++i) out[i] = eval(*(*comps_ptr)[i], x);
    };
    ms.partial_fn = [pt](int component, std::span<const int> gamma, std::span<const double> x) {
        return eval(*pt->lookup(component, gamma), x);
    };
    ms.smooth = opt.smooth;
    ms.domain = opt.domain ? *opt.domain : Cube::unit(n);
    ms.gradient_normalized = opt.gradient_normalized;
    ms.lipschitz = opt.lipschitz ? *opt.lipschitz : zoodetail::estimate_lipschitz(ms);
    run_registration_gates(ms);
    return ms;
}

// ---- Cantor constructions -------------------------------------------------

// The ratio-lambda Cantor set in [0,1]: keep [0,l] and [1-l,1], recurse.
class CantorSet {
public:
    explicit CantorSet(double lambda) : lambda_(lambda) {
        if (!(lambda > 0 && lambda < 0.5))
            throw std::invalid_argument("CantorSet: ratio must lie in (0, 1/2)");
    }

    double ratio() const { return lambda_; }
    double dimension() const { return std::numbers::ln2 / std::log(1.0 / lambda_); }

    bool intersects(double a, double b, int max_generation = 80) const {
        return intersects_rec(a, b, max_generation);
    }

private:
    bool intersects_rec(double a, double b, int depth) const {
        if (b < 0.0 || a > 1.0 || b < a) return false;
        if (a <= 0.0 && b >= 1.0) return true;
        if (depth == 0) return true;  // unresolved: conservative
        const double l = lambda_;
        if (a <= l && intersects_rec(a / l, b / l, depth - 1)) return true;
        const double lo = 1.0 - l;
        return b >= lo && intersects_rec((a - lo) / l, (b - lo) / l, depth - 1);
    }

    double lambda_;
};

namespace zoodetail {

// Smooth step profile S = I/I(1) with I(t) = integral of u^(k+1) (1-u)^(k+1):
// the per-gap shape of the bump construction.  All derivatives explicit.
struct StepProfile {
    int k = 1;
    std::vector<double> coeff;  // I(t) = sum coeff[i] * t^(k+2+i), i = 0..k+1
    double i1 = 1;              // I(1)

    explicit StepProfile(int kk) : k(kk) {
        coeff.resize(static_cast<size_t>(k) + 2);
        double binom = 1;
        for (int i = 0; i <= k + 1; ++i) {
            coeff[static_cast<size_t>(i)] = binom * ((i % 2 == 0) ? 1.0 : -1.0) / (k + 2 + i);
            binom = binom * (k + 1 - i) / (i + 1);
        }
        i1 = 0;
        for (double c : coeff) i1 += c;
    }

    // S^(j)(t)
    double deriv(int j, double t) const {
        double s = 0;
        for (int i = 0; i <= k + 1; ++i) {
            const int p = k + 2 + i;
            if (p < j) continue;
            double fac = 1;
            for (int l = 0; l < j; ++l) fac *= (p - l);
            s += coeff[static_cast<size_t>(i)] * fac * std::pow(t, p - j);
        }
        return s / i1;
    }

    double value(double t) const { return deriv(0, t); }

    double max_abs_deriv(int j, int samples = 4001) const {
        double m = 0;
        for (int i = 0; i <= samples; ++i)
            m = std::max(m, std::abs(deriv(j, static_cast<double>(i) / samples)));
        return m;
    }

    // Holder-alpha seminorm of S^(k) on [0,1], dense-grid estimate.
    double holder_seminorm(double alpha, int samples = 1200) const {
        double worst = 0;
        std::vector<double> v(static_cast<size_t>(samples) + 1);
        for (int i = 0; i <= samples; ++i)
            v[static_cast<size_t>(i)] = deriv(k, static_cast<double>(i) / samples);
        for (int i = 0; i <= samples; ++i)
            for (int j = i + 1; j <= samples; ++j) {
                const double dt = static_cast<double>(j - i) / samples;
                worst = std::max(worst, std::abs(v[static_cast<size_t>(j)] - v[static_cast<size_t>(i)]) /
                                        std::pow(dt, alpha));
            }
        return worst;
    }

    // sup over t of |S^(k)(t)| / min(t, 1-t)^alpha (finite: S^(k) vanishes
    // quadratically at the endpoints)
    double edge_ratio(double alpha, int samples = 4001) const {
        double worst = 0;
        for (int i = 1; i < samples; ++i) {
            const double t = static_cast<double>(i) / samples;
            worst = std::max(worst, std::abs(deriv(k, t)) / std::pow(std::min(t, 1.0 - t), alpha));
        }
        return worst;
    }
};

// Shared state of one Cantor bump/staircase construction.
struct CantorFamily {
    double lambda;        // geometric ratio of the Cantor set
    double value_ratio;   // lambda' of the value set (1/2 for the staircase)
    int k = 0;            // 0: staircase (no gap profile)
    double alpha = 0;
    std::shared_ptr<StepProfile> step;
    int max_generation = 800;

    // Locate x: walk generations until x falls in a gap (then the value is a
    // polynomial, exact) or the scale underflows (x is on the Cantor set to
    // double precision).
    struct Location {
        bool in_gap = false;
        double base = 0, vscale = 1, xscale = 1;
        double t = 0;  // gap-local coordinate in [0,1]
        int generation = 0;
    };

    Location locate(double x) const {
        Location loc;
        if (x <= 0) {
            loc.base = 0;
            loc.vscale = 0;
            return loc;
        }
        if (x >= 1) {
            loc.base = 1;
            loc.vscale = 0;
            return loc;
        }
        const double l = lambda, lp = value_ratio;
        for (int g = 0; g < max_generation; ++g) {
            if (x < l) {
                x /= l;
                loc.vscale *= lp;
                loc.xscale *= l;
            } else if (x > 1.0 - l) {
                x = (x - (1.0 - l)) / l;
                loc.base += loc.vscale * (1.0 - lp);
                loc.vscale *= lp;
                loc.xscale *= l;
            } else {
                loc.in_gap = true;
                loc.t = (x - l) / (1.0 - 2.0 * l);
                loc.generation = g;
                return loc;
            }
            if (loc.xscale < 1e-300) break;
        }
        loc.generation = max_generation;
        return loc;  // on the Cantor set to machine resolution
    }

    double value(double x) const {
        Location loc = locate(x);
        if (!loc.in_gap) return loc.base + loc.vscale * 0.5;
        if (k == 0) return loc.base + loc.vscale * 0.5;  // staircase: flat gap
        return loc.base + loc.vscale * (value_ratio + (1.0 - 2.0 * value_ratio) * step->value(loc.t));
    }

    double derivative(int j, double x) const {
        if (j == 0) return value(x);
        Location loc = locate(x);
        if (!loc.in_gap || k == 0) return 0.0;  // exact on the Cantor set
        const double dscale = loc.vscale * (1.0 - 2.0 * value_ratio) /
                              std::pow(loc.xscale * (1.0 - 2.0 * lambda), j);
        return dscale * step->deriv(j, loc.t);
    }
};

} // namespace zoodetail

// Monotone Cantor staircase, constant on the gaps of the ratio-lambda set.
inline MapSpec cantor_staircase(double ratio) {
    CantorSet cs(ratio);  // validates ratio
    auto fam = std::make_shared<zoodetail::CantorFamily>();
    fam->lambda = ratio;
    fam->value_ratio = 0.5;
    fam->k = 0;

    MapSpec ms;
    ms.name = "cantor_staircase";
    ms.n = 1;
    ms.d = 1;
    ms.deriv_order = 0;
    ms.eval_fn = [fam](std::span<const double> x, std::span<double> out) {
        out[0] = fam->value(x[0]);
    };
    ms.domain = Cube::unit(1);
    const double theta = cs.dimension();  // Holder exponent of the staircase
    ms.modulus = [theta](double t) { return 4.0 * std::pow(std::max(t, 0.0), theta); };
    ms.critical_cube = [cs](const Cube& c) { return cs.intersects(c.corner[0], c.corner[0] + c.side); };
    ms.critical_value_cube = [](const Cube& c) {
        return c.corner[0] <= 1.0 && c.corner[0] + c.side >= 0.0;
    };
    ms.critical_set_dim = cs.dimension();
    ms.critical_value_dim = 1.0;
    run_registration_gates(ms);
    return ms;
}

// C^{k,alpha} monotone "smooth staircase": on each gap of the ratio-lambda
// Cantor set the derivative is a rescaled polynomial bump, so the derivative
// vanishes exactly on the Cantor set while the values there form a Cantor
// set of ratio lambda^(k+alpha) -- the sharp value-scaling for the declared
// smoothness.
inline MapSpec cantor_bump(int k, double alpha, double ratio = 1.0 / 3.0) {
    if (k < 1) throw std::invalid_argument("cantor_bump: k must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("cantor_bump: alpha must lie in [0, 1]");
    CantorSet cs(ratio);
    const double lp = std::pow(ratio, k + alpha);

    auto fam = std::make_shared<zoodetail::CantorFamily>();
    fam->lambda = ratio;
    fam->value_ratio = lp;
    fam->k = k;
    fam->alpha = alpha;
    fam->step = std::make_shared<zoodetail::StepProfile>(k);

    MapSpec ms;
    ms.name = "cantor_bump";
    ms.n = 1;
    ms.d = 1;
    ms.deriv_order = k;
    ms.eval_fn = [fam](std::span<const double> x, std::span<double> out) {
        out[0] = fam->value(x[0]);
    };
    ms.partial_fn = [fam](int, std::span<const int> gamma, std::span<const double> x) {
        return fam->derivative(gamma[0], x[0]);
    };
    ms.domain = Cube::unit(1);

    // Certified Holder constant of the k-th derivative: per-gap seminorm and
    // the cross-gap bound via the edge decay of the profile, small safety
    // margin on the dense-grid suprema.
    const double unit = (1.0 - 2.0 * lp) / std::pow(1.0 - 2.0 * ratio, k + alpha);
    const double seminorm = fam->step->holder_seminorm(alpha);
    const double edge = fam->step->edge_ratio(alpha);
    const double a_const = 1.05 * unit * std::max(seminorm, 2.0 * edge);
    ms.smooth = Smoothness{k, alpha, a_const};

    const double lip = (1.0 - 2.0 * lp) / (1.0 - 2.0 * ratio) * fam->step->max_abs_deriv(1);
    ms.lipschitz = lip;
    ms.modulus = [lip](double t) { return lip * t; };

    ms.critical_cube = [cs](const Cube& c) { return cs.intersects(c.corner[0], c.corner[0] + c.side); };
    CantorSet vset(lp);
    ms.critical_value_cube = [vset](const Cube& c) {
        return vset.intersects(c.corner[0], c.corner[0] + c.side);
    };
    ms.critical_set_dim = cs.dimension();
    ms.critical_value_dim = vset.dimension();

    // An FD stencil is resolvable only when it sits inside one gap, with
    // clearance from the gap ends and a controlled third derivative there.
    const double s3max = fam->step->max_abs_deriv(3);
    ms.fd_gate_filter = [fam, s3max](std::span<const double> x, double h) {
        const auto loc = fam->locate(x[0]);
        if (!loc.in_gap) return false;
        const double width = loc.xscale * (1.0 - 2.0 * fam->lambda);
        if (width * std::min(loc.t, 1.0 - loc.t) < 4.0 * h) return false;
        const double d3 = loc.vscale * (1.0 - 2.0 * fam->value_ratio) /
                          std::pow(width, 3) * s3max;
        return h * h * d3 / 6.0 < 1e-6;
    };
    run_registration_gates(ms);
    return ms;
}

// ---- polynomial builtins ---------------------------------------------------

// Linear map of rank r embedded in d x n (identity on the first r axes).
inline MapSpec linear_rank(int n, int d, int r) {
    if (r < 0 || r > std::min(n, d))
        throw std::invalid_argument("linear_rank: need 0 <= r <= min(n, d)");
    std::ostringstream text;
    text << "(";
    for (int i = 0; i < d; ++i) {
        if (i) text << ", ";
        if (i < r) text << "x" << i;
        else text << "0";
    }
    text << ")";
    DslOptions opt;
    opt.name = "linear_rank";
    opt.declared_n = n;
    opt.smooth = Smoothness{1, 1.0, 0.0};  // gradient constant
    opt.lipschitz = r > 0 ? 1.0 : 0.0;
    opt.gradient_normalized = true;
    opt.domain = Cube::unit(n);
    MapSpec ms = parse_map(text.str(), opt);
    // rank r everywhere: for m > r the whole domain is critical
    ms.critical_cube = [](const Cube&) { return true; };
    ms.critical_set_dim = static_cast<double>(n);
    return ms;
}

// (x^2 - y^2, 2xy): conformal square map, both singular values 2|x|.
inline MapSpec conformal_square() {
    DslOptions opt;
    opt.name = "conformal_square";
    opt.declared_n = 2;
    opt.smooth = Smoothness{1, 1.0, 2.0 * std::numbers::sqrt2};
    opt.lipschitz = 2.0 * std::numbers::sqrt2;  // on [-1,1]^2
    opt.domain = Cube(Point{-1.0, -1.0}, 2.0);
    MapSpec ms = parse_map("(x0^2 - x1^2, 2*x0*x1)", opt);
    ms.critical_cube = [](const Cube& c) { return c.contains(Point{0.0, 0.0}); };
    ms.critical_value_cube = [](const Cube& c) { return c.contains(Point{0.0, 0.0}); };
    ms.critical_set_dim = 0.0;
    ms.critical_value_dim = 0.0;
    return ms;
}

// x^2 + y^2: scalar paraboloid with the single critical point 0.
inline MapSpec paraboloid() {
    DslOptions opt;
    opt.name = "paraboloid";
    opt.declared_n = 2;
    opt.smooth = Smoothness{1, 1.0, 2.0};
    opt.lipschitz = 2.0 * std::numbers::sqrt2;  // on [-1,1]^2
    opt.domain = Cube(Point{-1.0, -1.0}, 2.0);
    MapSpec ms = parse_map("(x0^2 + x1^2)", opt);
    ms.critical_cube = [](const Cube& c) { return c.contains(Point{0.0, 0.0}); };
    ms.critical_value_cube = [](const Cube& c) { return c.contains(Point{0.0}); };
    ms.critical_set_dim = 0.0;
    ms.critical_value_dim = 0.0;
    return ms;
}

// ---- registry ---------------------------------------------------------------

struct BuiltinInfo {
    std::string name;
    std::string signature;
    std::string description;
};

inline const std::vector<BuiltinInfo>& builtin_catalog() {
    static const std::vector<BuiltinInfo> cat = {
        {"linear_rank", "linear_rank(n,d,r)", "linear map of rank r from R^n to R^d"},
        {"conformal_square", "conformal_square", "(x^2-y^2, 2xy), critical only at the origin"},
        {"paraboloid", "paraboloid", "x^2+y^2 on [-1,1]^2, critical only at the origin"},
        {"cantor_staircase", "cantor_staircase(ratio)", "monotone staircase of the ratio-l Cantor set"},
        {"cantor_bump", "cantor_bump(k,alpha[,ratio])",
         "C^{k,a} smooth staircase with Cantor critical values"},
    };
    return cat;
}

inline MapSpec make_builtin(const std::string& name, const std::vector<double>& params) {
    auto want = [&](size_t lo, size_t hi) {
        if (params.size() < lo || params.size() > hi)
            throw std::invalid_argument("builtin '" + name + "': wrong number of parameters");
    };
    if (name == "linear_rank") {
        want(3, 3);
        return linear_rank(static_cast<int>(params[0]), static_cast<int>(params[1]),
                           static_cast<int>(params[2]));
    }
    if (name == "conformal_square") {
        want(0, 0);
        return conformal_square();
    }
    if (name == "paraboloid") {
        want(0, 0);
        return paraboloid();
    }
    if (name == "cantor_staircase") {
        want(1, 1);
        return cantor_staircase(params[0]);
    }
    if (name == "cantor_bump") {
        want(2, 3);
        return cantor_bump(static_cast<int>(params[0]), params[1],
                           params.size() == 3 ? params[2] : 1.0 / 3.0);
    }
    throw std::invalid_argument("unknown builtin map '" + name + "'");
}

} // namespace gmtlab
