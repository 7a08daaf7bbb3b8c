#pragma once

// MapSpec: a differentiable test mapping R^n -> R^d with exact evaluators,
// derivative evaluators up to a declared order, smoothness metadata and
// optional analytic descriptors of its critical structure.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmtlab/expr.hpp"
#include "gmtlab/geometry.hpp"
#include "gmtlab/smallmat.hpp"

namespace gmtlab {

struct Smoothness {
    int k = 1;                 // derivative order whose Holder seminorm is declared
    double alpha = 0.0;        // Holder exponent of the k-th derivative
    double holder_const = 0;   // A in |D^k v(x) - D^k v(y)| <= A |x-y|^alpha
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class MapSpec {
public:
    using EvalFn = std::function<void(std::span<const double>, std::span<double>)>;
    // partial(component, multi-index, x)
    using PartialFn = std::function<double(int, std::span<const int>, std::span<const double>)>;

    std::string name;
    int n = 1;
    int d = 1;
    int deriv_order = 0;          // orders with exact (non finite-difference) partials
    EvalFn eval_fn;
    PartialFn partial_fn;         // may be empty: finite differences are used
    std::optional<Smoothness> smooth;
    double lipschitz = std::numeric_limits<double>::quiet_NaN(); // sup of |grad v| (operator norm)
    std::function<double(double)> modulus;  // certified |v(x)-v(y)| <= modulus(|x-y|)
    bool gradient_normalized = false;       // claims |grad v| <= 1 on the domain
    Cube domain = Cube::unit(1);            // reference cube for gates and experiments

    // analytic descriptors; empty when unknown
    std::function<bool(const Cube&)> critical_cube;        // domain cube meets the exact critical set
    std::function<bool(const Cube&)> critical_value_cube;  // image cube meets the exact critical values
    std::optional<double> critical_set_dim;
    std::optional<double> critical_value_dim;

    // Validity predicate for the finite-difference consistency oracle: maps
    // with microstructure finer than the FD step reject stencils the oracle
    // cannot resolve.  Empty: every point is usable.
    std::function<bool(std::span<const double>, double)> fd_gate_filter;

    std::vector<double> eval(std::span<const double> x) const {
        std::vector<double> out(d);
        eval_fn(x, out);
        return out;
    }

    double partial(int component, std::span<const int> gamma, std::span<const double> x) const {
        int order = 0;
        for (int g : gamma) order += g;
        if (order == 0) {
            std::vector<double> out(d);
            eval_fn(x, out);
            return out[static_cast<size_t>(component)];
        }
        if (partial_fn && order <= deriv_order) return partial_fn(component, gamma, x);
        return fd_partial(component, gamma, x, order);
    }

    SmallMatrix jacobian(std::span<const double> x) const {
        SmallMatrix j(d, n);
        std::vector<int> gamma(n, 0);
        for (int v = 0; v < n; ++v) {
            gamma[v] = 1;
            for (int r = 0; r < d; ++r) j(r, v) = partial(r, gamma, x);
            gamma[v] = 0;
        }
        return j;
    }

    // Certified |v(x)-v(y)| bound; falls back to lipschitz*t.
    double modulus_bound(double t) const {
        if (modulus) return modulus(t);
        if (std::isfinite(lipschitz)) return lipschitz * t;
        throw std::logic_error("MapSpec '" + name + "': no modulus of continuity declared");
    }

private:
    // Central differences, recursing one derivative at a time; the step for
    // order j balances truncation against rounding.
    double fd_partial(int component, std::span<const int> gamma, std::span<const double> x,
                      int order) const {
        int axis = -1;
        for (int i = 0; i < n; ++i)
            if (gamma[i] > 0) {
                axis = i;
                break;
            }
        const double h = std::pow(std::numeric_limits<double>::epsilon(),
                                  1.0 / (order + 2));
        std::vector<int> lower(gamma.begin(), gamma.end());
        lower[static_cast<size_t>(axis)] -= 1;
        std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
        xp[static_cast<size_t>(axis)] += h;
        xm[static_cast<size_t>(axis)] -= h;
        const double fp = (order == 1) ? component_at(component, xp)
                                       : fd_partial(component, lower, xp, order - 1);
        const double fm = (order == 1) ? component_at(component, xm)
                                       : fd_partial(component, lower, xm, order - 1);
        return (fp - fm) / (2 * h);
    }

    double component_at(int component, std::span<const double> x) const {
        std::vector<double> out(d);
        eval_fn(x, out);
        return out[static_cast<size_t>(component)];
    }
};

// Sample a map over a cube lattice.  Evaluation failures are rethrown with
// the offending lattice point attached.
inline GridField sample(const MapSpec& map, const Cube& cube, int resolution) {
    if (map.n != cube.dim())
        throw std::invalid_argument("sample: map/cube dimension mismatch");
    GridField g;
    g.cube = cube;
    g.resolution = resolution;
    g.d = map.d;
    g.values.resize(static_cast<size_t>(g.node_count()) * map.d);
    for_each_lattice(cube.dim(), resolution, [&](std::int64_t flat, std::span<const int> idx) {
        Point x = g.node(idx);
        try {
            map.eval_fn(x, g.value(flat));
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "sample: evaluation failed at lattice point (";
            for (size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
            os << "): " << e.what();
            throw EvalError(os.str());
        }
    });
    return g;
}

// Upper bound on diam v(cube).  Two certified routes, take the smaller:
// max pairwise sample distance plus the declared modulus at the sampling
// gap; and, for maps declaring a first-order Holder seminorm, the local
// gradient bound (sampled sup |grad v| plus its Holder increment) times the
// cube diameter.  The second route is what makes image diameters shrink at
// the right order near critical points.
inline double certified_image_diam(const MapSpec& map, const Cube& cube,
                                   int samples_per_axis = 3) {
    const int n = cube.dim();
    std::vector<std::vector<double>> imgs;
    const double h = cube.side / (samples_per_axis - 1);
    const double gap = h * std::sqrt(static_cast<double>(n));
    const bool grad_route = map.smooth && map.smooth->k == 1;
    double grad_sup = 0;
    for_each_lattice(n, samples_per_axis, [&](std::int64_t, std::span<const int> idx) {
        Point x(cube.corner);
        for (int i = 0; i < n; ++i) x[i] += idx[i] * h;
        if (grad_route) grad_sup = std::max(grad_sup, operator_norm(map.jacobian(x)));
        imgs.push_back(map.eval(x));
    });
    double best = 0;
    for (size_t i = 0; i < imgs.size(); ++i)
        for (size_t j = i + 1; j < imgs.size(); ++j) {
            double s = 0;
            for (int c = 0; c < map.d; ++c) {
                const double t = imgs[i][static_cast<size_t>(c)] - imgs[j][static_cast<size_t>(c)];
                s += t * t;
            }
            best = std::max(best, s);
        }
    double bound = std::sqrt(best) + map.modulus_bound(gap);
    if (grad_route) {
        const double local_grad =
            grad_sup + map.smooth->holder_const * std::pow(gap, map.smooth->alpha);
        bound = std::min(bound, local_grad * cube.diam());
    }
    return bound;
}

// ---- registration gates -------------------------------------------------

// Multi-indices of length exactly k in n variables, with their multinomial
// multiplicities (so sums over them reproduce full-tensor Euclidean norms).
inline void for_each_multiindex_of_order(int n, int k,
                                         const std::function<void(std::span<const int>, double)>& f) {
    std::vector<int> gamma(n, 0);
    std::function<void(int, int)> rec = [&](int axis, int rem) {
        if (axis == n - 1) {
            gamma[static_cast<size_t>(axis)] = rem;
            double mult = 1.0; // k! / prod(gamma_i!)
            double num = 1.0, den = 1.0;
            for (int i = 2; i <= k; ++i) num *= i;
            for (int g : gamma)
                for (int i = 2; i <= g; ++i) den *= i;
            mult = num / den;
            f(gamma, mult);
            return;
        }
        for (int g = 0; g <= rem; ++g) {
            gamma[static_cast<size_t>(axis)] = g;
            rec(axis + 1, rem - g);
        }
    };
    if (k == 0) {
        f(gamma, 1.0);
        return;
    }
    rec(0, k);
}

// Euclidean norm of the full k-th derivative tensor at x.
inline double deriv_tensor_norm(const MapSpec& map, int k, std::span<const double> x) {
    double s = 0;
    for_each_multiindex_of_order(map.n, k, [&](std::span<const int> gamma, double mult) {
        for (int r = 0; r < map.d; ++r) {
            const double p = map.partial(r, gamma, x);
            s += mult * p * p;
        }
    });
    return std::sqrt(s);
}

inline double deriv_tensor_dist(const MapSpec& map, int k, std::span<const double> x,
                                std::span<const double> y) {
    double s = 0;
    for_each_multiindex_of_order(map.n, k, [&](std::span<const int> gamma, double mult) {
        for (int r = 0; r < map.d; ++r) {
            const double p = map.partial(r, gamma, x) - map.partial(r, gamma, y);
            s += mult * p * p;
        }
    });
    return std::sqrt(s);
}

inline Point random_point_in(const Cube& c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Point x(c.corner);
    for (double& xi : x) xi += u(rng) * c.side;
    return x;
}

// First derivatives must agree with central differences of the evaluator.
inline void check_derivative_consistency(const MapSpec& map, std::uint64_t seed = 2024,
                                         int points = 100, double rel_tol = 1e-4) {
    if (map.deriv_order < 1) return;
    std::mt19937_64 rng(seed);
    const double h = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / 3.0);
    for (int t = 0; t < points; ++t) {
        Point x = random_point_in(map.domain, rng);
        if (map.fd_gate_filter) {
            int attempts = 0;
            while (!map.fd_gate_filter(x, h) && ++attempts < 4096)
                x = random_point_in(map.domain, rng);
            if (attempts >= 4096)
                throw std::logic_error("MapSpec '" + map.name +
                                       "': no FD-resolvable sample points found");
        }
        SmallMatrix j = map.jacobian(x);
        for (int v = 0; v < map.n; ++v) {
            Point xp = x, xm = x;
            xp[static_cast<size_t>(v)] += h;
            xm[static_cast<size_t>(v)] -= h;
            auto fp = map.eval(xp), fm = map.eval(xm);
            for (int r = 0; r < map.d; ++r) {
                const double fd = (fp[static_cast<size_t>(r)] - fm[static_cast<size_t>(r)]) / (2 * h);
                const double ex = j(r, v);
                if (std::abs(fd - ex) > rel_tol * (1.0 + std::abs(ex)))
                    throw std::logic_error("MapSpec '" + map.name +
                                           "': derivative evaluator disagrees with finite differences");
            }
        }
    }
}

// Empirical Holder seminorm of the declared k-th derivative over seeded
// point pairs; must not exceed the declared constant.
inline double empirical_holder_seminorm(const MapSpec& map, std::uint64_t seed = 2025,
                                        int pairs = 10000) {
    if (!map.smooth) return 0.0;
    std::mt19937_64 rng(seed);
    double worst = 0;
    for (int t = 0; t < pairs; ++t) {
        Point x = random_point_in(map.domain, rng);
        Point y = random_point_in(map.domain, rng);
        double dist = 0;
        for (int i = 0; i < map.n; ++i) dist += (x[static_cast<size_t>(i)] - y[static_cast<size_t>(i)]) *
                                                (x[static_cast<size_t>(i)] - y[static_cast<size_t>(i)]);
        dist = std::sqrt(dist);
        if (dist < 1e-12) continue;
        const double num = deriv_tensor_dist(map, map.smooth->k, x, y);
        worst = std::max(worst, num / std::pow(dist, map.smooth->alpha));
    }
    return worst;
}

inline void check_holder_gate(const MapSpec& map, std::uint64_t seed = 2025, int pairs = 10000) {
    if (!map.smooth) return;
    const double emp = empirical_holder_seminorm(map, seed, pairs);
    if (emp > map.smooth->holder_const * (1.0 + 1e-3))
        throw std::logic_error("MapSpec '" + map.name + "': empirical Holder seminorm " +
                               std::to_string(emp) + " exceeds declared " +
                               std::to_string(map.smooth->holder_const));
}

inline void check_gradient_normalization(const MapSpec& map, std::uint64_t seed = 2026,
                                         int points = 1000) {
    if (!map.gradient_normalized) return;
    std::mt19937_64 rng(seed);
    for (int t = 0; t < points; ++t) {
        Point x = random_point_in(map.domain, rng);
        if (operator_norm(map.jacobian(x)) > 1.0 + 1e-9)
            throw std::logic_error("MapSpec '" + map.name +
                                   "': |grad v| <= 1 claimed but violated samplewise");
    }
}

inline void run_registration_gates(const MapSpec& map) {
    check_derivative_consistency(map);
    check_holder_gate(map);
    check_gradient_normalization(map);
}

} // namespace gmtlab
