#pragma once

// Covering functionals on the dyadic tree: Hausdorff content upper bounds,
// box dimension, the bridge functionals Phi and Psi, level-set contents and
// the Fubini-type distributional check.  The infimum over arbitrary compact
// covers is relaxed to dyadic-antichain covers, so every value here is an
// upper bound of the corresponding set function on the sampled set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "gmtlab/geometry.hpp"
#include "gmtlab/mapspec.hpp"
#include "gmtlab/smallmat.hpp"

namespace gmtlab {

using CellIndex = std::vector<std::int64_t>;

struct CellSet {
    int level = 0;
    std::set<CellIndex> cells;

    bool empty() const { return cells.empty(); }
    std::int64_t count() const { return static_cast<std::int64_t>(cells.size()); }

    CellSet united(const CellSet& other) const {
        if (other.level != level)
            throw std::invalid_argument("CellSet::united: levels differ");
        CellSet out = *this;
        out.cells.insert(other.cells.begin(), other.cells.end());
        return out;
    }
};

inline Cube cell_cube(const Cube& root, int level, const CellIndex& idx) {
    DyadicCell c;
    c.level = level;
    c.index = idx;
    return c.cube(root);
}

// Mark the level-L cells whose cube satisfies a predicate (used with the
// zoo's exact critical-set descriptors).
inline CellSet cells_from_predicate(const Cube& root, int level,
                                    const std::function<bool(const Cube&)>& pred) {
    CellSet s;
    s.level = level;
    const int n = root.dim();
    const std::int64_t per_axis = static_cast<std::int64_t>(1) << level;
    CellIndex idx(static_cast<size_t>(n), 0);
    std::function<void(int)> rec = [&](int axis) {
        if (axis == n) {
            if (pred(cell_cube(root, level, idx))) s.cells.insert(idx);
            return;
        }
        for (std::int64_t i = 0; i < per_axis; ++i) {
            idx[static_cast<size_t>(axis)] = i;
            rec(axis + 1);
        }
    };
    rec(0);
    return s;
}

// Discretized Z'_v: cells where any sample (center or corner) has
// rank grad v < m and |grad v| <= 1.  Over-approximates by construction.
inline CellSet critical_cells(const MapSpec& map, const Cube& q, int m, int level,
                              std::optional<double> grad_tol = std::nullopt) {
    CellSet s;
    s.level = level;
    const int n = q.dim();
    if (map.n != n) throw std::invalid_argument("critical_cells: dimension mismatch");
    const std::int64_t per_axis = static_cast<std::int64_t>(1) << level;
    const double side = q.side / static_cast<double>(per_axis);

    CellIndex idx(static_cast<size_t>(n), 0);
    std::vector<Point> offsets;
    offsets.push_back(Point(static_cast<size_t>(n), 0.5));  // center
    for (std::uint64_t b = 0; b < (static_cast<std::uint64_t>(1) << n); ++b) {
        Point o(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) o[static_cast<size_t>(i)] = static_cast<double>((b >> i) & 1);
        offsets.push_back(std::move(o));
    }

    std::function<void(int)> rec = [&](int axis) {
        if (axis == n) {
            for (const auto& o : offsets) {
                Point x(q.corner);
                for (int i = 0; i < n; ++i)
                    x[static_cast<size_t>(i)] +=
                        (static_cast<double>(idx[static_cast<size_t>(i)]) + o[static_cast<size_t>(i)]) * side;
                const SingularSpectrum sp = singular_values(map.jacobian(x));
                const double tol = grad_tol ? *grad_tol : default_rank_tol(sp);
                if (rank_eps(sp, tol) < m && sp.largest() <= 1.0 + 1e-12) {
                    s.cells.insert(idx);
                    break;
                }
            }
            return;
        }
        for (std::int64_t i = 0; i < per_axis; ++i) {
            idx[static_cast<size_t>(axis)] = i;
            rec(axis + 1);
        }
    };
    rec(0);
    return s;
}

struct CoverEstimate {
    double value = 0;
    double mu = 0, q = 0, beta = 0;
    FiniteCover cover;
    int max_depth = 0;
    std::optional<double> delta;
};

namespace dpdetail {

// Post-order dynamic program over the occupied closure of the dyadic tree.
// weight(level, index) is the cost of covering a cell by itself; cells with
// diameter above delta are forced to refine (except at the leaf level, where
// no finer cells exist).  Returns the optimal value and the chosen antichain.
inline std::pair<double, std::vector<std::pair<int, CellIndex>>> cover_dp(
    const std::set<CellIndex>& leaves, int leaf_level, const Cube& root,
    const std::function<double(int, const CellIndex&)>& weight, std::optional<double> delta) {
    if (leaves.empty()) return {0.0, {}};
    const int n = root.dim();

    struct Node {
        double value = 0;
        bool refine = false;
    };
    // per level: index -> node
    std::vector<std::map<CellIndex, Node>> tree(static_cast<size_t>(leaf_level) + 1);

    for (const auto& idx : leaves)
        tree[static_cast<size_t>(leaf_level)][idx] = Node{weight(leaf_level, idx), false};

    for (int lv = leaf_level - 1; lv >= 0; --lv) {
        auto& cur = tree[static_cast<size_t>(lv)];
        for (const auto& [cidx, cnode] : tree[static_cast<size_t>(lv) + 1]) {
            CellIndex pidx(cidx.size());
            for (size_t i = 0; i < cidx.size(); ++i) pidx[i] = cidx[i] >> 1;
            cur[pidx].value += cnode.value;  // children sum first
        }
        const double diam = root.diam() * std::ldexp(1.0, -lv);
        for (auto& [idx, node] : cur) {
            const double own = (delta && diam > *delta) ? std::numeric_limits<double>::infinity()
                                                        : weight(lv, idx);
            if (own <= node.value) {
                node.value = own;
                node.refine = false;
            } else {
                node.refine = true;
            }
        }
    }

    // reconstruct the chosen antichain top-down
    std::vector<std::pair<int, CellIndex>> chosen;
    std::function<void(int, const CellIndex&)> walk = [&](int lv, const CellIndex& idx) {
        const Node& node = tree[static_cast<size_t>(lv)].at(idx);
        if (!node.refine) {
            chosen.emplace_back(lv, idx);
            return;
        }
        for (std::uint64_t b = 0; b < (static_cast<std::uint64_t>(1) << n); ++b) {
            CellIndex c(idx.size());
            for (size_t i = 0; i < idx.size(); ++i)
                c[i] = 2 * idx[i] + ((b >> i) & 1);
            if (tree[static_cast<size_t>(lv) + 1].count(c)) walk(lv + 1, c);
        }
    };
    double total = 0;
    for (const auto& [idx, node] : tree[0]) {
        total += node.value;
        walk(0, idx);
    }
    return {total, chosen};
}

inline std::set<CellIndex> project_to_level(const CellSet& s, int target_level) {
    if (target_level == s.level) return s.cells;
    std::set<CellIndex> out;
    if (target_level < s.level) {
        const int shift = s.level - target_level;
        for (const auto& idx : s.cells) {
            CellIndex p(idx.size());
            for (size_t i = 0; i < idx.size(); ++i) p[i] = idx[i] >> shift;
            out.insert(std::move(p));
        }
        return out;
    }
    // refining marks every descendant occupied (the set is only resolved to
    // its own level)
    const int shift = target_level - s.level;
    std::function<void(CellIndex, int)> expand = [&](CellIndex idx, int depth) {
        if (depth == 0) {
            out.insert(std::move(idx));
            return;
        }
        const size_t n = idx.size();
        for (std::uint64_t b = 0; b < (static_cast<std::uint64_t>(1) << n); ++b) {
            CellIndex c(n);
            for (size_t i = 0; i < n; ++i) c[i] = 2 * idx[i] + ((b >> i) & 1);
            expand(std::move(c), depth - 1);
        }
    };
    for (const auto& idx : s.cells) expand(idx, shift);
    return out;
}

inline FiniteCover antichain_to_cover(const std::vector<std::pair<int, CellIndex>>& chosen,
                                      const Cube& root) {
    FiniteCover fc;
    fc.elements.reserve(chosen.size());
    for (const auto& [lv, idx] : chosen) {
        const Cube c = cell_cube(root, lv, idx);
        fc.elements.push_back(CoverElement{c.corner, c.diam()});
    }
    return fc;
}

} // namespace dpdetail

// Dyadic upper bound of the Hausdorff content H^beta of the region marked by
// S, optimizing covers over levels 0..max_depth.
inline CoverEstimate hausdorff_content(const CellSet& s, double beta, int max_depth,
                                       const Cube& root) {
    if (beta < 0) throw std::invalid_argument("hausdorff_content: beta must be >= 0");
    CoverEstimate ce;
    ce.beta = beta;
    ce.max_depth = max_depth;
    if (s.empty()) return ce;
    const int leaf = max_depth;
    auto leaves = dpdetail::project_to_level(s, leaf);
    auto weight = [&](int lv, const CellIndex&) {
        return std::pow(root.diam() * std::ldexp(1.0, -lv), beta);
    };
    auto [value, chosen] = dpdetail::cover_dp(leaves, leaf, root, weight, std::nullopt);
    ce.value = value;
    ce.cover = dpdetail::antichain_to_cover(chosen, root);
    return ce;
}

// Least-squares slope of log(count) against level * log 2.
inline double box_dimension(const std::vector<CellSet>& levels) {
    if (levels.size() < 4)
        throw std::invalid_argument("box_dimension: need at least 4 levels");
    std::vector<double> xs, ys;
    for (const auto& s : levels) {
        if (s.empty()) continue;
        xs.push_back(s.level * std::log(2.0));
        ys.push_back(std::log(static_cast<double>(s.count())));
    }
    if (xs.size() < 4) throw std::invalid_argument("box_dimension: too few nonempty levels");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double nn = static_cast<double>(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double den = nn * sxx - sx * sx;
    if (den < 1e-12) throw std::invalid_argument("box_dimension: degenerate regression");
    return (nn * sxy - sx * sy) / den;
}

// The bridge functional: dyadic upper bound for
//   Phi(S) = inf sum (diam D)^mu (diam v(D))^q,
// with image diameters certified through the map's declared modulus.  With
// delta set, cells wider than delta are forced to refine (the Psi variant).
inline CoverEstimate phi_functional(const MapSpec& map, const CellSet& s, double mu, double q,
                                    int max_depth, const Cube& root,
                                    std::optional<double> delta = std::nullopt) {
    if (mu < 0) throw std::invalid_argument("phi_functional: mu must be >= 0");
    if (q <= 0) throw std::invalid_argument("phi_functional: q must be > 0");
    CoverEstimate ce;
    ce.mu = mu;
    ce.q = q;
    ce.max_depth = max_depth;
    ce.delta = delta;
    if (s.empty()) return ce;
    const int leaf = max_depth;
    auto leaves = dpdetail::project_to_level(s, leaf);
    auto weight = [&](int lv, const CellIndex& idx) {
        const Cube c = cell_cube(root, lv, idx);
        const double dv = certified_image_diam(map, c);
        return std::pow(c.diam(), mu) * std::pow(dv, q);
    };
    auto [value, chosen] = dpdetail::cover_dp(leaves, leaf, root, weight, delta);
    ce.value = value;
    ce.cover = dpdetail::antichain_to_cover(chosen, root);
    return ce;
}

// Upper bound of H^mu(S cap v^{-1}(y)): keep the cells of S that can meet
// the preimage of y under the certified modulus, then take their content.
inline CoverEstimate level_set_content(const MapSpec& map, const Point& y, const CellSet& s,
                                       double mu, const Cube& root, int max_depth = -1) {
    CellSet selected;
    selected.level = s.level;
    for (const auto& idx : s.cells) {
        const Cube c = cell_cube(root, s.level, idx);
        const Point ctr = c.center();
        const auto v = map.eval(ctr);
        double dist = 0;
        for (size_t i = 0; i < v.size(); ++i) {
            const double t = v[i] - y[i];
            dist += t * t;
        }
        if (std::sqrt(dist) <= map.modulus_bound(c.diam())) selected.cells.insert(idx);
    }
    return hausdorff_content(selected, mu, max_depth < 0 ? s.level : max_depth, root);
}

struct FubiniReport {
    double psi = 0;
    struct Row {
        double lambda = 0;
        double superlevel_content = 0;  // H^q-content of {y : H^mu(S cap v^-1 y) >= lambda}
        double bound = 0;               // 5 Psi / lambda
        double ratio = 0;
    };
    std::vector<Row> rows;
    int depth = 0;
    int y_level = 0;

    bool pass(double tol) const {
        for (const auto& r : rows)
            if (r.ratio > 1.0 + tol) return false;
        return true;
    }
};

// Distributional inequality check: the H^q-content of values with large
// preimage content against 5 Psi(S) / lambda.
inline FubiniReport fubini_check(const MapSpec& map, const CellSet& s, double mu, double q,
                                 const std::vector<double>& lambda_grid, int y_level,
                                 const Cube& root) {
    FubiniReport rep;
    rep.depth = s.level;
    rep.y_level = y_level;
    const double leaf_diam = root.diam() * std::ldexp(1.0, -s.level);
    rep.psi = phi_functional(map, s, mu, q, s.level, root, leaf_diam).value;

    // image bounding box of the sampled set, padded by the certified modulus
    std::vector<double> lo(static_cast<size_t>(map.d), std::numeric_limits<double>::infinity());
    std::vector<double> hi(static_cast<size_t>(map.d), -std::numeric_limits<double>::infinity());
    struct CellData {
        std::vector<double> v;
        double pad = 0;
    };
    std::vector<CellData> data;
    data.reserve(s.cells.size());
    for (const auto& idx : s.cells) {
        const Cube c = cell_cube(root, s.level, idx);
        CellData cd;
        cd.v = map.eval(c.center());
        cd.pad = map.modulus_bound(c.diam());
        for (int i = 0; i < map.d; ++i) {
            lo[static_cast<size_t>(i)] = std::min(lo[static_cast<size_t>(i)], cd.v[static_cast<size_t>(i)] - cd.pad);
            hi[static_cast<size_t>(i)] = std::max(hi[static_cast<size_t>(i)], cd.v[static_cast<size_t>(i)] + cd.pad);
        }
        data.push_back(std::move(cd));
    }
    if (data.empty()) {
        for (double l : lambda_grid) rep.rows.push_back({l, 0.0, 0.0, 0.0});
        return rep;
    }
    double extent = 0;
    for (int i = 0; i < map.d; ++i)
        extent = std::max(extent, hi[static_cast<size_t>(i)] - lo[static_cast<size_t>(i)]);
    extent = std::max(extent, 1e-9);
    const double y_h = extent / std::ldexp(1.0, y_level);
    Point y_corner(lo.begin(), lo.end());
    for (double& c : y_corner) c -= y_h;  // pad one cell
    Cube y_root(y_corner, extent + 2 * y_h);

    // preimage content per y-cell center, reusing the per-cell image data
    const std::int64_t per_axis = static_cast<std::int64_t>(1) << y_level;
    std::map<CellIndex, double> content_at;
    CellIndex yidx(static_cast<size_t>(map.d), 0);
    std::vector<CellIndex> sel_scratch;
    std::function<void(int)> rec = [&](int axis) {
        if (axis == map.d) {
            const Cube yc = cell_cube(y_root, y_level, yidx);
            const Point y = yc.center();
            CellSet selected;
            selected.level = s.level;
            size_t di = 0;
            for (const auto& idx : s.cells) {
                const auto& cd = data[di++];
                double dist = 0;
                for (int i = 0; i < map.d; ++i) {
                    const double t = cd.v[static_cast<size_t>(i)] - y[static_cast<size_t>(i)];
                    dist += t * t;
                }
                if (std::sqrt(dist) <= cd.pad) selected.cells.insert(idx);
            }
            if (!selected.empty())
                content_at[yidx] = hausdorff_content(selected, mu, s.level, root).value;
            return;
        }
        for (std::int64_t i = 0; i < per_axis; ++i) {
            yidx[static_cast<size_t>(axis)] = i;
            rec(axis + 1);
        }
    };
    rec(0);

    for (double lambda : lambda_grid) {
        CellSet super;
        super.level = y_level;
        for (const auto& [idx, c] : content_at)
            if (c >= lambda) super.cells.insert(idx);
        const double lhs = hausdorff_content(super, q, y_level, y_root).value;
        const double bound = 5.0 * rep.psi / lambda;
        rep.rows.push_back({lambda, lhs, bound, bound > 0 ? lhs / bound : (lhs > 0 ? std::numeric_limits<double>::infinity() : 0.0)});
    }
    return rep;
}

} // namespace gmtlab
