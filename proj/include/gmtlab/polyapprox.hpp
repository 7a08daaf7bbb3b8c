#pragma once

// Multivariate polynomial maps, Taylor and moment-matching approximants on
// cubes, and the near-critical cover builder behind the entropy law checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gmtlab/geometry.hpp"
#include "gmtlab/mapspec.hpp"
#include "gmtlab/smallmat.hpp"

namespace gmtlab {

struct MultiIndex {
    std::vector<int> exponents;

    int order() const {
        int s = 0;
        for (int e : exponents) s += e;
        return s;
    }
};

// Polynomial map R^n -> R^d in the shifted monomial basis (x - center)^gamma.
class MultiPoly {
public:
    int n = 1;
    int d = 1;
    int degree = 0;
    Point center;                                        // empty: origin
    std::map<std::vector<int>, std::vector<double>> coeffs;  // gamma -> d-vector

    MultiPoly() = default;
    MultiPoly(int nn, int dd, int deg) : n(nn), d(dd), degree(deg), center(nn, 0.0) {}

    void set_coeff(const std::vector<int>& gamma, std::vector<double> c) {
        int o = 0;
        for (int g : gamma) o += g;
        if (o > degree) throw std::invalid_argument("MultiPoly: term above degree bound");
        coeffs[gamma] = std::move(c);
    }

    void add_coeff(const std::vector<int>& gamma, int component, double v) {
        auto it = coeffs.find(gamma);
        if (it == coeffs.end()) {
            int o = 0;
            for (int g : gamma) o += g;
            if (o > degree) throw std::invalid_argument("MultiPoly: term above degree bound");
            it = coeffs.emplace(gamma, std::vector<double>(static_cast<size_t>(d), 0.0)).first;
        }
        it->second[static_cast<size_t>(component)] += v;
    }

    std::vector<double> eval(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != n)
            throw std::invalid_argument("MultiPoly::eval: dimension mismatch");
        std::vector<double> s(x.begin(), x.end());
        if (!center.empty())
            for (int i = 0; i < n; ++i) s[static_cast<size_t>(i)] -= center[static_cast<size_t>(i)];
        std::vector<double> out(static_cast<size_t>(d), 0.0);
        std::vector<std::pair<const std::vector<int>*, const std::vector<double>*>> terms;
        terms.reserve(coeffs.size());
        for (const auto& [g, c] : coeffs) terms.emplace_back(&g, &c);
        eval_horner(terms, 0, terms.size(), 0, s, 1.0, out);
        return out;
    }

    // Jacobian at x: differentiate termwise.
    SmallMatrix grad(std::span<const double> x) const {
        SmallMatrix j(d, n);
        std::vector<double> s(x.begin(), x.end());
        if (!center.empty())
            for (int i = 0; i < n; ++i) s[static_cast<size_t>(i)] -= center[static_cast<size_t>(i)];
        for (const auto& [gamma, c] : coeffs) {
            for (int v = 0; v < n; ++v) {
                const int gv = gamma[static_cast<size_t>(v)];
                if (gv == 0) continue;
                double mono = static_cast<double>(gv);
                for (int i = 0; i < n; ++i) {
                    const int e = gamma[static_cast<size_t>(i)] - (i == v ? 1 : 0);
                    for (int t = 0; t < e; ++t) mono *= s[static_cast<size_t>(i)];
                }
                for (int r = 0; r < d; ++r) j(r, v) += c[static_cast<size_t>(r)] * mono;
            }
        }
        return j;
    }

    MultiPoly derivative(int var) const {
        MultiPoly out(n, d, std::max(degree - 1, 0));
        out.center = center;
        for (const auto& [gamma, c] : coeffs) {
            const int gv = gamma[static_cast<size_t>(var)];
            if (gv == 0) continue;
            std::vector<int> ng = gamma;
            --ng[static_cast<size_t>(var)];
            std::vector<double> nc = c;
            for (double& x : nc) x *= gv;
            for (int r = 0; r < d; ++r) out.add_coeff(ng, r, nc[static_cast<size_t>(r)]);
        }
        return out;
    }

    // Wrap as a MapSpec so the covering machinery can consume polynomials.
    MapSpec as_map(const std::string& name, const Cube& domain) const;

private:
    using TermRef = std::pair<const std::vector<int>*, const std::vector<double>*>;

    // Recursive Horner: factor on the current axis, recurse on the rest.
    void eval_horner(const std::vector<TermRef>& terms, size_t lo, size_t hi, int axis,
                     const std::vector<double>& s, double prefix,
                     std::vector<double>& out) const {
        if (lo >= hi) return;
        if (axis == n) {
            for (size_t t = lo; t < hi; ++t)
                for (int r = 0; r < d; ++r)
                    out[static_cast<size_t>(r)] += prefix * (*terms[t].second)[static_cast<size_t>(r)];
            return;
        }
        // terms are sorted lexicographically by exponent vector, so runs of a
        // fixed exponent on this axis are contiguous
        size_t i = lo;
        while (i < hi) {
            const int e = (*terms[i].first)[static_cast<size_t>(axis)];
            size_t j = i;
            while (j < hi && (*terms[j].first)[static_cast<size_t>(axis)] == e) ++j;
            double pw = prefix;
            for (int t = 0; t < e; ++t) pw *= s[static_cast<size_t>(axis)];
            eval_horner(terms, i, j, axis + 1, s, pw, out);
            i = j;
        }
    }
};

inline MapSpec MultiPoly::as_map(const std::string& name, const Cube& domain) const {
    MapSpec ms;
    ms.name = name;
    ms.n = n;
    ms.d = d;
    ms.deriv_order = degree + 1;
    MultiPoly self = *this;
    ms.eval_fn = [self](std::span<const double> x, std::span<double> out) {
        auto v = self.eval(x);
        std::copy(v.begin(), v.end(), out.begin());
    };
    ms.partial_fn = [self](int component, std::span<const int> gamma, std::span<const double> x) {
        MultiPoly p = self;
        for (int v = 0; v < self.n; ++v)
            for (int t = 0; t < gamma[static_cast<size_t>(v)]; ++t) p = p.derivative(v);
        return p.eval(x)[static_cast<size_t>(component)];
    };
    ms.domain = domain;
    double worst = 0;
    const int res = 17;
    for_each_lattice(ms.n, res, [&](std::int64_t, std::span<const int> idx) {
        Point x(domain.corner);
        const double h = domain.side / (res - 1);
        for (int i = 0; i < ms.n; ++i) x[i] += idx[i] * h;
        worst = std::max(worst, operator_norm(grad(x)));
    });
    ms.lipschitz = worst * 1.25;
    return ms;
}

// Taylor polynomial of degree k at `center`: all partials up to order k match
// the map's (exact evaluators when available, finite differences otherwise).
inline MultiPoly taylor_poly(const MapSpec& map, std::span<const double> center, int k) {
    MultiPoly p(map.n, map.d, k);
    p.center.assign(center.begin(), center.end());
    std::vector<int> gamma(static_cast<size_t>(map.n), 0);
    std::function<void(int, int)> rec = [&](int axis, int rem) {
        if (axis == map.n) {
            double fact = 1;
            for (int g : gamma)
                for (int i = 2; i <= g; ++i) fact *= i;
            std::vector<double> c(static_cast<size_t>(map.d));
            for (int r = 0; r < map.d; ++r)
                c[static_cast<size_t>(r)] = map.partial(r, gamma, center) / fact;
            p.set_coeff(gamma, std::move(c));
            return;
        }
        for (int g = 0; g <= rem; ++g) {
            gamma[static_cast<size_t>(axis)] = g;
            rec(axis + 1, rem - g);
            gamma[static_cast<size_t>(axis)] = 0;
        }
    };
    rec(0, k);
    return p;
}

namespace polydetail {

// Solve A x = b by Gaussian elimination with partial pivoting (small dense).
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n) {
    auto at = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(at(r, col)) > std::abs(at(piv, col))) piv = r;
        if (std::abs(at(piv, col)) < 1e-300)
            throw std::runtime_error("moment system is numerically singular");
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(at(piv, j), at(col, j));
            std::swap(b[static_cast<size_t>(piv)], b[static_cast<size_t>(col)]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = at(r, col) / at(col, col);
            if (f == 0) continue;
            for (int j = col; j < n; ++j) at(r, j) -= f * at(col, j);
            b[static_cast<size_t>(r)] -= f * b[static_cast<size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        double s = b[static_cast<size_t>(r)];
        for (int j = r + 1; j < n; ++j) s -= at(r, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(r)] = s / at(r, r);
    }
    return x;
}

inline std::vector<std::vector<int>> multiindices_up_to(int n, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> gamma(static_cast<size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int axis, int rem) {
        if (axis == n) {
            out.push_back(gamma);
            return;
        }
        for (int g = 0; g <= rem; ++g) {
            gamma[static_cast<size_t>(axis)] = g;
            rec(axis + 1, rem - g);
            gamma[static_cast<size_t>(axis)] = 0;
        }
    };
    rec(0, degree);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace polydetail

// L2 moment projection onto polynomials of the given degree: the discrete
// moments of u - P against every monomial of order <= degree vanish for the
// grid quadrature.  Basis centered at the cube center for conditioning.
inline MultiPoly moment_projection(const GridField& u, int degree) {
    const int n = u.dim();
    const auto basis = polydetail::multiindices_up_to(n, degree);
    const int nb = static_cast<int>(basis.size());
    const Point c = u.cube.center();

    std::vector<double> gram(static_cast<size_t>(nb) * nb, 0.0);
    std::vector<std::vector<double>> rhs(static_cast<size_t>(u.d),
                                         std::vector<double>(static_cast<size_t>(nb), 0.0));
    const auto aw = u.axis_weights();

    std::vector<double> mono(static_cast<size_t>(nb));
    for_each_lattice(n, u.resolution, [&](std::int64_t flat, std::span<const int> idx) {
        const Point x = u.node(idx);
        const double w = u.node_weight(idx, aw);
        for (int b = 0; b < nb; ++b) {
            double m = 1;
            for (int i = 0; i < n; ++i)
                for (int t = 0; t < basis[static_cast<size_t>(b)][static_cast<size_t>(i)]; ++t)
                    m *= x[static_cast<size_t>(i)] - c[static_cast<size_t>(i)];
            mono[static_cast<size_t>(b)] = m;
        }
        for (int b = 0; b < nb; ++b) {
            for (int b2 = b; b2 < nb; ++b2)
                gram[static_cast<size_t>(b) * nb + b2] += w * mono[static_cast<size_t>(b)] *
                                                          mono[static_cast<size_t>(b2)];
            const auto fv = u.value(flat);
            for (int r = 0; r < u.d; ++r)
                rhs[static_cast<size_t>(r)][static_cast<size_t>(b)] += w * mono[static_cast<size_t>(b)] *
                                                                       fv[static_cast<size_t>(r)];
        }
    });
    for (int b = 0; b < nb; ++b)
        for (int b2 = 0; b2 < b; ++b2)
            gram[static_cast<size_t>(b) * nb + b2] = gram[static_cast<size_t>(b2) * nb + b];

    MultiPoly p(n, u.d, degree);
    p.center = c;
    for (int r = 0; r < u.d; ++r) {
        auto sol = polydetail::solve_dense(gram, rhs[static_cast<size_t>(r)], nb);
        for (int b = 0; b < nb; ++b) p.add_coeff(basis[static_cast<size_t>(b)], r, sol[static_cast<size_t>(b)]);
    }
    return p;
}

// Certified and empirical bounds on sup_Q |grad(v - Taylor_k v)|.
struct RemainderBound {
    double certified = 0;   // A r^(k+alpha-1), r = sqrt(n) ell(Q)
    double empirical = 0;   // dense-grid sup of the Jacobian difference (Frobenius)
};

inline RemainderBound remainder_gradient_bound(const MapSpec& map, const Cube& q, int k,
                                               double alpha, int resolution = 17) {
    if (!map.smooth)
        throw std::invalid_argument("remainder_gradient_bound: map lacks smoothness metadata");
    if (map.smooth->k != k || map.smooth->alpha != alpha)
        throw std::invalid_argument("remainder_gradient_bound: (k, alpha) differ from declared");
    const double a = map.smooth->holder_const;
    const double r = std::sqrt(static_cast<double>(q.dim())) * q.side;
    RemainderBound rb;
    rb.certified = a * std::pow(r, k + alpha - 1);

    const Point c = q.center();
    const MultiPoly p = taylor_poly(map, c, k);
    double worst = 0;
    for_each_lattice(q.dim(), resolution, [&](std::int64_t, std::span<const int> idx) {
        Point x(q.corner);
        const double h = q.side / (resolution - 1);
        for (int i = 0; i < q.dim(); ++i) x[i] += idx[i] * h;
        const SmallMatrix jv = map.jacobian(x);
        const SmallMatrix jp = p.grad(x);
        double s = 0;
        for (int rr = 0; rr < map.d; ++rr)
            for (int cc = 0; cc < map.n; ++cc) {
                const double t = jv(rr, cc) - jp(rr, cc);
                s += t * t;
            }
        worst = std::max(worst, s);
    });
    rb.empirical = std::sqrt(worst);
    return rb;
}

// Lattice points of Q whose Jacobian spectrum satisfies the near-critical
// inequalities: lambda_1..lambda_{m-1} <= 1+eps and lambda_m <= eps.
inline std::vector<Point> near_critical_set(const MultiPoly& p, const Cube& q, double eps, int m,
                                            int resolution) {
    if (eps <= 0) throw std::invalid_argument("near_critical_set: eps must be > 0");
    if (m < 1 || m > std::min(p.n, p.d))
        throw std::invalid_argument("near_critical_set: m out of range");
    std::vector<MultiPoly> partials;
    partials.reserve(static_cast<size_t>(p.n));
    for (int v = 0; v < p.n; ++v) partials.push_back(p.derivative(v));

    std::vector<Point> out;
    const double h = q.side / (resolution - 1);
    for_each_lattice(q.dim(), resolution, [&](std::int64_t, std::span<const int> idx) {
        Point x(q.corner);
        for (int i = 0; i < q.dim(); ++i) x[i] += idx[i] * h;
        SmallMatrix j(p.d, p.n);
        for (int v = 0; v < p.n; ++v) {
            auto col = partials[static_cast<size_t>(v)].eval(x);
            for (int r = 0; r < p.d; ++r) j(r, v) = col[static_cast<size_t>(r)];
        }
        const SingularSpectrum s = singular_values(j);
        bool ok = true;
        for (int l = 0; l < m - 1; ++l) ok = ok && s[static_cast<size_t>(l)] <= 1.0 + eps;
        ok = ok && s[static_cast<size_t>(m - 1)] <= eps;
        if (ok) out.push_back(std::move(x));
    });
    return out;
}

struct YomdinCover {
    Cube q;
    double epsilon = 0;
    int m = 1;
    std::vector<std::pair<Point, double>> balls;  // (center in R^d, radius)
    std::vector<Point> nearcritical_samples;

    size_t count() const { return balls.size(); }
};

// Greedy farthest-point cover of the image of the near-critical lattice set
// by balls of radius eps * ell(Q); ties broken by lattice order.
inline YomdinCover yomdin_cover(const MultiPoly& p, const Cube& q, double eps, int m,
                                int resolution) {
    YomdinCover cover;
    cover.q = q;
    cover.epsilon = eps;
    cover.m = m;
    cover.nearcritical_samples = near_critical_set(p, q, eps, m, resolution);
    const double radius = eps * q.side;
    const double r2 = radius * radius;

    std::vector<std::vector<double>> imgs;
    imgs.reserve(cover.nearcritical_samples.size());
    for (const auto& x : cover.nearcritical_samples) imgs.push_back(p.eval(x));

    std::vector<double> dist2(imgs.size(), std::numeric_limits<double>::infinity());
    while (true) {
        size_t best = imgs.size();
        double bestd = r2;
        for (size_t i = 0; i < imgs.size(); ++i)
            if (dist2[i] > bestd) {
                bestd = dist2[i];
                best = i;
            }
        if (best == imgs.size()) break;  // everything within radius of a center
        cover.balls.emplace_back(Point(imgs[best].begin(), imgs[best].end()), radius);
        for (size_t i = 0; i < imgs.size(); ++i) {
            double s = 0;
            for (size_t c = 0; c < imgs[i].size(); ++c) {
                const double t = imgs[i][c] - imgs[best][c];
                s += t * t;
            }
            dist2[i] = std::min(dist2[i], s);
        }
    }
    return cover;
}

} // namespace gmtlab
