#pragma once

// Potential-theory toolkit on sampled grids: Bessel kernel, Riesz potential,
// Hardy-Littlewood maximal functions, Lorentz layer-cake norms, Choquet
// integrals against a Hausdorff-content oracle, and the Lipschitz
// sublevel-diameter check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gmtlab/geometry.hpp"
#include "gmtlab/measures.hpp"

namespace gmtlab {

inline double unit_ball_volume(int n) {
    return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

inline double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

struct KernelParams {
    double alpha = 1.0;      // order, > 0
    int n = 1;               // dimension
    int nodes = 64;          // initial quadrature nodes, >= 16
    double u_min = -40.0;    // truncation after the log substitution
    double u_max = 40.0;

    void validate() const {
        if (!(alpha > 0)) throw std::invalid_argument("KernelParams: alpha must be > 0");
        if (n < 1) throw std::invalid_argument("KernelParams: n must be >= 1");
        if (nodes < 16) throw std::invalid_argument("KernelParams: node count >= 16 required");
    }
};

// Normalization making the kernel a probability density: the radial profile
// integrates over R^n to (4 pi)^(a/2) Gamma(a/2).
inline double bessel_normalizer(const KernelParams& kp) {
    return 1.0 / (std::pow(4.0 * std::numbers::pi, kp.alpha / 2.0) * std::tgamma(kp.alpha / 2.0));
}

struct QuadratureError : std::runtime_error {
    double residual;
    QuadratureError(const std::string& msg, double res)
        : std::runtime_error(msg + " (residual " + std::to_string(res) + ")"), residual(res) {}
};

// Radial Bessel kernel value at radius r > 0: the heat-kernel integral after
// the substitution t = e^u, refined until the relative change is below 1e-8.
inline double bessel_kernel_radial(const KernelParams& kp, double r) {
    kp.validate();
    if (!(r > 0)) throw std::invalid_argument("bessel_kernel: requires |x| > 0");
    const double a = kp.alpha, n = kp.n;
    auto integrand = [&](double u) {
        const double t = std::exp(u);
        const double logv = 0.5 * (a - n) * u - std::numbers::pi * r * r / t -
                            t / (4.0 * std::numbers::pi);
        return std::exp(logv);
    };
    auto simpson = [&](int m) {
        // composite Simpson with m intervals (even)
        const double h = (kp.u_max - kp.u_min) / m;
        double s = integrand(kp.u_min) + integrand(kp.u_max);
        for (int i = 1; i < m; ++i) s += integrand(kp.u_min + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
        return s * h / 3.0;
    };
    int m = kp.nodes + (kp.nodes % 2);
    double prev = simpson(m);
    for (int it = 0; it < 16; ++it) {
        m *= 2;
        const double cur = simpson(m);
        if (std::abs(cur - prev) <= 1e-8 * std::max(std::abs(cur), 1e-300))
            return bessel_normalizer(kp) * cur;
        prev = cur;
    }
    throw QuadratureError("bessel_kernel: quadrature did not converge", std::abs(prev));
}

inline double bessel_kernel(const KernelParams& kp, std::span<const double> x) {
    double r2 = 0;
    for (double xi : x) r2 += xi * xi;
    return bessel_kernel_radial(kp, std::sqrt(r2));
}

// Classical Riesz potential of a sampled density: grid quadrature of
// g(y) |y-x|^(beta-n) with the singular node replaced by the exact radial
// integral over the equal-volume ball.
inline double riesz_potential(const GridField& g, double beta, std::span<const double> x) {
    if (g.d != 1) throw std::invalid_argument("riesz_potential: scalar field expected");
    const int n = g.dim();
    if (static_cast<int>(x.size()) != n)
        throw std::invalid_argument("riesz_potential: dimension mismatch");
    for (double xi : x)
        if (!std::isfinite(xi)) throw std::invalid_argument("riesz_potential: non-finite point");
    if (!(beta > 0 && beta < n))
        throw std::invalid_argument("riesz_potential: need 0 < beta < n");

    const auto aw = g.axis_weights();
    const double h = g.spacing();
    double total = 0;
    for_each_lattice(n, g.resolution, [&](std::int64_t flat, std::span<const int> idx) {
        const Point y = g.node(idx);
        double r2 = 0;
        for (int i = 0; i < n; ++i) {
            const double t = y[static_cast<size_t>(i)] - x[static_cast<size_t>(i)];
            r2 += t * t;
        }
        const double w = g.node_weight(idx, aw);
        const double gv = g.value(flat)[0];
        const double r = std::sqrt(r2);
        if (r < 0.5 * h) {
            // exact integral of |z|^(beta-n) over the ball of the node's volume
            const double rho = std::pow(w / unit_ball_volume(n), 1.0 / n);
            total += gv * unit_sphere_area(n) * std::pow(rho, beta) / beta;
        } else {
            total += gv * w * std::pow(r, beta - n);
        }
    });
    return total;
}

// Hardy-Littlewood maximal function on the grid: at each node the supremum,
// over a geometric radius ladder of ratio 2^(1/4) (plus the r -> 0 value
// |f(x)| itself), of the average of |f| over B(x, r) against the full ball
// volume.  With a region given, the integrand is restricted to the region
// (the M_Q variant), while the denominator stays |B(x, r)|.
inline GridField maximal_function(const GridField& f,
                                  const std::optional<Cube>& region = std::nullopt) {
    if (f.d != 1) throw std::invalid_argument("maximal_function: scalar field expected");
    const int n = f.dim();
    const double h = f.spacing();
    const double dom_diam = f.cube.diam();
    auto rung_radius = [&](int j) { return h * std::exp2(0.25 * j); };
    int ladder = 1;
    while (rung_radius(ladder - 1) < dom_diam) ++ladder;

    // |B(x, r)| discretized on the same lattice (full balls of the infinite
    // lattice, so the zero-extension and restricted variants keep the full
    // ball volume in the denominator)
    std::vector<double> ball_measure(static_cast<size_t>(ladder), 0.0);
    {
        const int reach = static_cast<int>(std::ceil(rung_radius(ladder - 1) / h)) + 1;
        std::vector<std::int64_t> counts(static_cast<size_t>(ladder), 0);
        std::vector<int> z(static_cast<size_t>(n), -reach);
        for (;;) {
            double r2 = 0;
            for (int i = 0; i < n; ++i) r2 += static_cast<double>(z[static_cast<size_t>(i)]) *
                                              z[static_cast<size_t>(i)];
            const double dist = h * std::sqrt(r2);
            for (int j = 0; j < ladder; ++j)
                if (dist < rung_radius(j)) {
                    ++counts[static_cast<size_t>(j)];
                    break;
                }
            int axis = n - 1;
            while (axis >= 0 && ++z[static_cast<size_t>(axis)] > reach) {
                z[static_cast<size_t>(axis)] = -reach;
                --axis;
            }
            if (axis < 0) break;
        }
        std::int64_t acc = 0;
        for (int j = 0; j < ladder; ++j) {
            acc += counts[static_cast<size_t>(j)];
            ball_measure[static_cast<size_t>(j)] = static_cast<double>(acc) * std::pow(h, n);
        }
    }

    const auto aw = f.cell_axis_weights();
    const std::int64_t count = f.node_count();

    // flat list of node positions, weights, |f| values (optionally masked)
    std::vector<Point> pos(static_cast<size_t>(count));
    std::vector<double> wf(static_cast<size_t>(count));
    for_each_lattice(n, f.resolution, [&](std::int64_t flat, std::span<const int> idx) {
        pos[static_cast<size_t>(flat)] = f.node(idx);
        double v = std::abs(f.value(flat)[0]);
        if (region && !region->contains(pos[static_cast<size_t>(flat)])) v = 0.0;
        wf[static_cast<size_t>(flat)] = f.node_weight(idx, aw) * v;
    });

    // smallest rung whose (open) ball contains a point at this distance
    auto rung_for = [&](double dist) {
        if (dist < h) return 0;
        int j = static_cast<int>(std::floor(4.0 * std::log2(dist / h))) + 1;
        if (j < 0) j = 0;
        while (j > 0 && rung_radius(j - 1) > dist) --j;
        while (rung_radius(j) <= dist) ++j;
        return j;
    };

    GridField out = f;
    std::vector<double> bucket(static_cast<size_t>(ladder), 0.0);
    for (std::int64_t i = 0; i < count; ++i) {
        std::fill(bucket.begin(), bucket.end(), 0.0);
        const Point& xi = pos[static_cast<size_t>(i)];
        for (std::int64_t j = 0; j < count; ++j) {
            double r2 = 0;
            for (int kk = 0; kk < n; ++kk) {
                const double t = pos[static_cast<size_t>(j)][static_cast<size_t>(kk)] -
                                 xi[static_cast<size_t>(kk)];
                r2 += t * t;
            }
            const int rung = rung_for(std::sqrt(r2));
            if (rung < ladder) bucket[static_cast<size_t>(rung)] += wf[static_cast<size_t>(j)];
        }
        double best = std::abs(f.value(i)[0]);
        if (region && !region->contains(xi)) best = 0.0;
        double acc = 0;
        for (int rung = 0; rung < ladder; ++rung) {
            acc += bucket[static_cast<size_t>(rung)];
            best = std::max(best, acc / ball_measure[static_cast<size_t>(rung)]);
        }
        out.value(i)[0] = best;
    }
    return out;
}

// Grid L_p norm against the cell measure (consistent with the layer-cake).
inline double lp_norm(const GridField& f, double p) {
    const auto aw = f.cell_axis_weights();
    double s = 0;
    for_each_lattice(f.dim(), f.resolution, [&](std::int64_t flat, std::span<const int> idx) {
        s += f.node_weight(idx, aw) * std::pow(std::abs(f.value(flat)[0]), p);
    });
    return std::pow(s, 1.0 / p);
}

// Lorentz L_{p,1} layer-cake norm: the sampled measure function is piecewise
// constant, so the threshold integral is computed exactly.
inline double lorentz_p1_norm(const GridField& f, double p) {
    if (p < 1) throw std::invalid_argument("lorentz_p1_norm: p must be >= 1");
    const auto aw = f.cell_axis_weights();
    std::vector<std::pair<double, double>> vw;  // (|f|, weight)
    vw.reserve(static_cast<size_t>(f.node_count()));
    for_each_lattice(f.dim(), f.resolution, [&](std::int64_t flat, std::span<const int> idx) {
        vw.emplace_back(std::abs(f.value(flat)[0]), f.node_weight(idx, aw));
    });
    std::sort(vw.begin(), vw.end());
    // suffix weights: W(v) = measure{|f| >= v}
    double total = 0;
    for (const auto& [v, w] : vw) total += w;
    double norm = 0, prev = 0, remaining = total;
    for (size_t i = 0; i < vw.size();) {
        const double v = vw[i].first;
        if (v > prev) {
            norm += (v - prev) * std::pow(remaining, 1.0 / p);
            prev = v;
        }
        double levelw = 0;
        size_t j = i;
        while (j < vw.size() && vw[j].first == v) levelw += vw[j++].second;
        remaining -= levelw;
        i = j;
    }
    return norm;
}

struct ChoquetParams {
    double tau = 0;   // content exponent, >= 0
    double s = 1;     // threshold scaling, > 0
    double p = 2;     // integrability
    double beta = 0;  // potential order

    // Adams trace regime: s > p, tau = (s/p)(n - beta p)
    static ChoquetParams adams(int n, double p, double s, double beta) {
        if (!(s > p && p > 1)) throw std::invalid_argument("ChoquetParams::adams: need s > p > 1");
        if (!(n - beta * p > 0)) throw std::invalid_argument("ChoquetParams::adams: need n > beta p");
        return ChoquetParams{(s / p) * (n - beta * p), s, p, beta};
    }
    // Lorentz limiting regime: s = p, tau = n - beta p
    static ChoquetParams lorentz(int n, double p, double beta) {
        if (!(p > 1)) throw std::invalid_argument("ChoquetParams::lorentz: need p > 1");
        if (!(n - beta * p > 0)) throw std::invalid_argument("ChoquetParams::lorentz: need n > beta p");
        return ChoquetParams{n - beta * p, p, p, beta};
    }
    // Sobolev L_1 regime of the gradient estimates: tau = n - k + l, s = 1
    static ChoquetParams sobolev(int n, int k, int l) {
        if (!(1 <= l && l < k && k <= n))
            throw std::invalid_argument("ChoquetParams::sobolev: need 1 <= l < k <= n");
        return ChoquetParams{static_cast<double>(n - k + l), 1.0, 1.0, 0.0};
    }
};

using ContentOracle = std::function<double(const CellSet&, double /*tau*/, const Cube& /*root*/)>;

// The measures-module content estimator packaged as an oracle.
inline ContentOracle dyadic_content_oracle() {
    return [](const CellSet& s, double tau, const Cube& root) {
        return hausdorff_content(s, tau, s.level, root).value;
    };
}

// Choquet integral of the superlevel contents of F:
//   integral over t of H^tau({x : F(x) >= t^(1/s)}) dt
// on a geometric t-grid of ratio 2^(1/4) between the extreme sampled values.
// Superlevel sets are marked on the dyadic cells of the field's cube (any
// qualifying corner node marks the cell).
inline double choquet_integral(const GridField& big_f, const ChoquetParams& cp,
                               const ContentOracle& content) {
    if (big_f.d != 1) throw std::invalid_argument("choquet_integral: scalar field expected");
    const int n = big_f.dim();
    const int cells_per_axis = big_f.resolution - 1;
    int level = 0;
    while ((1 << level) < cells_per_axis) ++level;
    if ((1 << level) != cells_per_axis)
        throw std::invalid_argument("choquet_integral: resolution must be 2^L + 1");

    double vmax = 0, vmin_pos = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < big_f.node_count(); ++i) {
        const double v = big_f.value(i)[0];
        vmax = std::max(vmax, v);
        if (v > 0) vmin_pos = std::min(vmin_pos, v);
    }
    if (!(vmax > 0)) return 0.0;

    auto superlevel = [&](double thr) {
        CellSet s;
        s.level = level;
        CellIndex idx(static_cast<size_t>(n), 0);
        std::vector<int> node(static_cast<size_t>(n), 0);
        std::function<void(int)> rec = [&](int axis) {
            if (axis == n) {
                // any corner node of the cell at or above the threshold
                for (std::uint64_t b = 0; b < (static_cast<std::uint64_t>(1) << n); ++b) {
                    for (int i = 0; i < n; ++i)
                        node[static_cast<size_t>(i)] =
                            static_cast<int>(idx[static_cast<size_t>(i)]) + static_cast<int>((b >> i) & 1);
                    if (big_f.value(big_f.flat_index(node))[0] >= thr) {
                        s.cells.insert(idx);
                        break;
                    }
                }
                return;
            }
            for (std::int64_t i = 0; i < cells_per_axis; ++i) {
                idx[static_cast<size_t>(axis)] = i;
                rec(axis + 1);
            }
        };
        rec(0);
        return s;
    };

    const double t_lo = std::pow(vmin_pos, cp.s);
    const double t_hi = std::pow(vmax, cp.s);
    const double ratio = std::pow(2.0, 0.25);
    std::vector<double> ts = {t_lo};
    while (ts.back() < t_hi) ts.push_back(std::min(ts.back() * ratio, t_hi));

    std::vector<double> contents(ts.size());
    for (size_t i = 0; i < ts.size(); ++i)
        contents[i] = content(superlevel(std::pow(ts[i], 1.0 / cp.s)), cp.tau, big_f.cube);

    // below t_lo the superlevel set is unchanged, so that segment is exact
    double integral = t_lo * contents.front();
    for (size_t i = 0; i + 1 < ts.size(); ++i)
        integral += 0.5 * (contents[i] + contents[i + 1]) * (ts[i + 1] - ts[i]);
    return integral;
}

struct Ball {
    Point center;
    double radius = 1.0;

    bool contains(std::span<const double> x) const {
        double r2 = 0;
        for (size_t i = 0; i < center.size(); ++i) {
            const double t = x[i] - center[i];
            r2 += t * t;
        }
        return r2 <= radius * radius;
    }
};

// Gradient magnitude of a sampled (possibly vector-valued) field: central
// differences inside, one-sided at the boundary; Frobenius over components.
inline GridField gradient_magnitude(const GridField& u) {
    const int n = u.dim();
    const double h = u.spacing();
    GridField out;
    out.cube = u.cube;
    out.resolution = u.resolution;
    out.d = 1;
    out.values.resize(static_cast<size_t>(u.node_count()));
    for_each_lattice(n, u.resolution, [&](std::int64_t flat, std::span<const int> idx) {
        double s = 0;
        std::vector<int> jdx(idx.begin(), idx.end());
        for (int axis = 0; axis < n; ++axis) {
            const int i = idx[axis];
            int ip = std::min(i + 1, u.resolution - 1);
            int im = std::max(i - 1, 0);
            jdx[static_cast<size_t>(axis)] = ip;
            const std::int64_t fp = u.flat_index(jdx);
            jdx[static_cast<size_t>(axis)] = im;
            const std::int64_t fm = u.flat_index(jdx);
            jdx[static_cast<size_t>(axis)] = i;
            const double dx = (ip - im) * h;
            for (int r = 0; r < u.d; ++r) {
                const double g = (u.value(fp)[static_cast<size_t>(r)] - u.value(fm)[static_cast<size_t>(r)]) / dx;
                s += g * g;
            }
        }
        out.values[static_cast<size_t>(flat)] = std::sqrt(s);
    });
    return out;
}

// Frobenius norm of the second-difference Hessian at each node.
inline GridField hessian_magnitude(const GridField& u) {
    if (u.d != 1) throw std::invalid_argument("hessian_magnitude: scalar field expected");
    const int n = u.dim();
    const double h = u.spacing();
    GridField out;
    out.cube = u.cube;
    out.resolution = u.resolution;
    out.d = 1;
    out.values.resize(static_cast<size_t>(u.node_count()));
    for_each_lattice(n, u.resolution, [&](std::int64_t flat, std::span<const int> idx) {
        // shift the stencil center inward at the boundary
        std::vector<int> c(idx.begin(), idx.end());
        for (int a = 0; a < n; ++a)
            c[static_cast<size_t>(a)] = std::max(1, std::min(idx[a], u.resolution - 2));
        auto val = [&](const std::vector<int>& id) { return u.value(u.flat_index(id))[0]; };
        double s = 0;
        for (int a = 0; a < n; ++a) {
            for (int b = a; b < n; ++b) {
                double d2;
                if (a == b) {
                    std::vector<int> jp = c, jm = c;
                    ++jp[static_cast<size_t>(a)];
                    --jm[static_cast<size_t>(a)];
                    d2 = (val(jp) - 2 * val(c) + val(jm)) / (h * h);
                } else {
                    std::vector<int> pp = c, pm = c, mp = c, mm = c;
                    ++pp[static_cast<size_t>(a)];
                    ++pp[static_cast<size_t>(b)];
                    ++pm[static_cast<size_t>(a)];
                    --pm[static_cast<size_t>(b)];
                    --mp[static_cast<size_t>(a)];
                    ++mp[static_cast<size_t>(b)];
                    --mm[static_cast<size_t>(a)];
                    --mm[static_cast<size_t>(b)];
                    d2 = (val(pp) - val(pm) - val(mp) + val(mm)) / (4 * h * h);
                }
                s += (a == b ? 1.0 : 2.0) * d2 * d2;
            }
        }
        out.values[static_cast<size_t>(flat)] = std::sqrt(s);
    });
    return out;
}

struct SublevelDiam {
    double diam = 0;
    double ratio = 0;   // diam / (eps * r): the empirical constant C_M
    std::int64_t points = 0;
};

// diam{u(x) : x in B, M|grad u|(x) <= eps} and its ratio to eps * r.
inline SublevelDiam sublevel_diam_check(const GridField& u, const Ball& b, double eps) {
    const GridField g = gradient_magnitude(u);
    const GridField mg = maximal_function(g);
    SublevelDiam out;
    std::vector<std::int64_t> keep;
    for_each_lattice(u.dim(), u.resolution, [&](std::int64_t flat, std::span<const int> idx) {
        const Point x = u.node(idx);
        if (b.contains(x) && mg.value(flat)[0] <= eps) keep.push_back(flat);
    });
    out.points = static_cast<std::int64_t>(keep.size());
    double best = 0;
    for (size_t i = 0; i < keep.size(); ++i)
        for (size_t j = i + 1; j < keep.size(); ++j) {
            double s = 0;
            for (int r = 0; r < u.d; ++r) {
                const double t = u.value(keep[i])[static_cast<size_t>(r)] -
                                 u.value(keep[j])[static_cast<size_t>(r)];
                s += t * t;
            }
            best = std::max(best, s);
        }
    out.diam = std::sqrt(best);
    out.ratio = out.diam / (eps * b.radius);
    return out;
}

} // namespace gmtlab
