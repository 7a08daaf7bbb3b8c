#pragma once

// Axis-aligned cubes, dyadic cells, uniform sampling grids and finite
// covers: the substrate every covering functional is computed on.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace gmtlab {

using Point = std::vector<double>;

struct Cube {
    Point corner;      // lowest coordinates
    double side = 1.0;

    Cube() = default;
    Cube(Point c, double s) : corner(std::move(c)), side(s) {
        if (!(side > 0)) throw std::invalid_argument("Cube: side must be > 0");
    }

    static Cube unit(int n) { return Cube(Point(n, 0.0), 1.0); }

    int dim() const { return static_cast<int>(corner.size()); }
    double diam() const { return side * std::sqrt(static_cast<double>(dim())); }
    double volume() const { return std::pow(side, dim()); }

    Point center() const {
        Point c = corner;
        for (double& x : c) x += side / 2;
        return c;
    }

    bool contains(std::span<const double> x) const {
        for (int i = 0; i < dim(); ++i)
            if (x[i] < corner[i] || x[i] > corner[i] + side) return false;
        return true;
    }
};

// A cell of the level-L dyadic decomposition of a root cube: index i along
// each axis marks the slab [i 2^-L, (i+1) 2^-L) in root coordinates.
struct DyadicCell {
    int level = 0;
    std::vector<std::int64_t> index;

    int dim() const { return static_cast<int>(index.size()); }

    Cube cube(const Cube& root) const {
        const double s = root.side * std::ldexp(1.0, -level);
        Point c(root.corner);
        for (int i = 0; i < dim(); ++i) c[i] += static_cast<double>(index[i]) * s;
        return Cube(std::move(c), s);
    }

    DyadicCell parent() const {
        DyadicCell p;
        p.level = level - 1;
        p.index.reserve(index.size());
        for (auto i : index) p.index.push_back(i >> 1);
        return p;
    }

    auto operator<=>(const DyadicCell&) const = default;
};

// The 2^n children tile the parent exactly.
inline std::vector<DyadicCell> children(const DyadicCell& cell) {
    const int n = cell.dim();
    std::vector<DyadicCell> out;
    out.reserve(static_cast<size_t>(1) << n);
    for (std::uint64_t b = 0; b < (static_cast<std::uint64_t>(1) << n); ++b) {
        DyadicCell c;
        c.level = cell.level + 1;
        c.index.resize(n);
        for (int i = 0; i < n; ++i)
            c.index[i] = 2 * cell.index[i] + ((b >> i) & 1);
        out.push_back(std::move(c));
    }
    return out;
}

inline double diam(const Cube& c) { return c.diam(); }

struct CoverElement {
    Point center;      // representative point (cube corner or ball center)
    double diameter = 0.0;
};

struct FiniteCover {
    std::vector<CoverElement> elements;

    double weight_sum(double beta) const {
        double s = 0;
        for (const auto& e : elements) s += std::pow(e.diameter, beta);
        return s;
    }
};

// Multi-index walker over an n-dimensional lattice with `res` nodes per axis.
// Calls f with the flat index and the index vector; iteration order is
// lexicographic, hence deterministic.
template <class F>
inline void for_each_lattice(int n, int res, F&& f) {
    std::vector<int> idx(n, 0);
    const std::int64_t total = [&] {
        std::int64_t t = 1;
        for (int i = 0; i < n; ++i) t *= res;
        return t;
    }();
    for (std::int64_t flat = 0; flat < total; ++flat) {
        f(flat, std::span<const int>(idx));
        for (int axis = n - 1; axis >= 0; --axis) {
            if (++idx[axis] < res) break;
            idx[axis] = 0;
        }
    }
}

// Values of a d-vector map sampled on the closed lattice of a cube
// (boundary nodes included), spacing h = side/(res-1).
struct GridField {
    Cube cube;
    int resolution = 2;      // nodes per axis, >= 2
    int d = 1;               // components per node
    std::vector<double> values;   // res^n * d, node-major

    int dim() const { return cube.dim(); }
    double spacing() const { return cube.side / (resolution - 1); }

    std::int64_t node_count() const {
        std::int64_t t = 1;
        for (int i = 0; i < dim(); ++i) t *= resolution;
        return t;
    }

    std::span<const double> value(std::int64_t flat) const {
        return {values.data() + flat * d, static_cast<size_t>(d)};
    }
    std::span<double> value(std::int64_t flat) {
        return {values.data() + flat * d, static_cast<size_t>(d)};
    }

    Point node(std::span<const int> idx) const {
        Point x(cube.corner);
        const double h = spacing();
        for (int i = 0; i < dim(); ++i) x[i] += idx[i] * h;
        return x;
    }

    std::int64_t flat_index(std::span<const int> idx) const {
        std::int64_t f = 0;
        for (int i = 0; i < dim(); ++i) f = f * resolution + idx[i];
        return f;
    }

    // Product quadrature weights on the closed lattice: composite Simpson
    // when the resolution is odd (>= 3), trapezoid otherwise.  Returned per
    // axis; the weight of a node is the product over axes times h^n.
    std::vector<double> axis_weights() const {
        const int r = resolution;
        std::vector<double> w(r, 1.0);
        if (r >= 3 && r % 2 == 1) {
            w[0] = w[r - 1] = 1.0 / 3.0;
            for (int i = 1; i < r - 1; ++i) w[i] = (i % 2 == 1) ? 4.0 / 3.0 : 2.0 / 3.0;
        } else {
            w[0] = w[r - 1] = 0.5;
        }
        return w;
    }

    double node_weight(std::span<const int> idx, const std::vector<double>& aw) const {
        double w = std::pow(spacing(), dim());
        for (int i = 0; i < dim(); ++i) w *= aw[idx[i]];
        return w;
    }

    // Piecewise-constant (cell) measure: each node represents the spacing
    // cell around it, halved at the boundary.  The right weights for
    // measure-functions and ball averages, as opposed to smooth quadrature.
    std::vector<double> cell_axis_weights() const {
        std::vector<double> w(static_cast<size_t>(resolution), 1.0);
        w.front() = w.back() = 0.5;
        return w;
    }
};

// Sample any callable f(x, out) with out of size d over the cube lattice.
template <class F>
inline GridField sample_field(const Cube& cube, int resolution, int d, F&& f) {
    if (resolution < 2) throw std::invalid_argument("sample_field: resolution >= 2 required");
    GridField g;
    g.cube = cube;
    g.resolution = resolution;
    g.d = d;
    g.values.resize(static_cast<size_t>(g.node_count()) * d);
    for_each_lattice(cube.dim(), resolution, [&](std::int64_t flat, std::span<const int> idx) {
        Point x = g.node(idx);
        f(std::span<const double>(x), g.value(flat));
    });
    return g;
}

} // namespace gmtlab
