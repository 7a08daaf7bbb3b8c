#pragma once

// Two-sided numerical evaluation of the generalized coarea identity
//   integral_E J_m v dx  =  integral over y of H^(n-m)(E cap v^-1(y)) dH^m(y)
// on grid-sampled maps.  Supported slices: (n=2, m=1, d=1) via marching
// squares, (n=2, m=2, d=2) via Banach counting, (n=3, m=1, d=1) via marching
// cubes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gmtlab/geometry.hpp"
#include "gmtlab/mapspec.hpp"
#include "gmtlab/mc_tables.hpp"
#include "gmtlab/measures.hpp"
#include "gmtlab/smallmat.hpp"

namespace gmtlab {

struct CoareaReport {
    double lhs = 0;
    double rhs = 0;
    double residual = 0;      // |lhs - rhs| / max(lhs, 1e-12)
    int resolution = 0;       // cells per axis of the x-grid
    int m = 1;
    int rank_violations = 0;  // samples of E with rank grad v > m
};

namespace coareadetail {

struct CenterGrid {
    int n = 0;
    int cells = 0;            // per axis
    double h = 0;
    Point corner;             // position of center (0,...,0)
    std::vector<double> values;   // d components per node
    std::vector<char> in_e;       // cell of this center belongs to E
    int d = 1;

    std::int64_t flat(std::span<const int> idx) const {
        std::int64_t f = 0;
        for (int i = 0; i < n; ++i) f = f * cells + idx[i];
        return f;
    }
    std::span<const double> value(std::int64_t f) const {
        return {values.data() + f * d, static_cast<size_t>(d)};
    }
};

inline CenterGrid make_center_grid(const MapSpec& map, const CellSet& e, const Cube& root) {
    CenterGrid g;
    g.n = root.dim();
    g.cells = 1 << e.level;
    g.h = root.side / g.cells;
    g.d = map.d;
    g.corner = root.corner;
    for (double& c : g.corner) c += g.h / 2;
    std::int64_t total = 1;
    for (int i = 0; i < g.n; ++i) total *= g.cells;
    g.values.resize(static_cast<size_t>(total) * map.d);
    g.in_e.assign(static_cast<size_t>(total), 0);
    for_each_lattice(g.n, g.cells, [&](std::int64_t flat, std::span<const int> idx) {
        Point x = g.corner;
        for (int i = 0; i < g.n; ++i) x[static_cast<size_t>(i)] += idx[i] * g.h;
        map.eval_fn(x, {g.values.data() + flat * map.d, static_cast<size_t>(map.d)});
        CellIndex ci(idx.begin(), idx.end());
        if (e.cells.count(ci)) g.in_e[static_cast<size_t>(flat)] = 1;
    });
    return g;
}

// Marching squares: contour length of {f = iso} in one square of the center
// lattice, with the asymptotic decider on the two ambiguous cases.  The
// square's corners are (i,j),(i+1,j),(i+1,j+1),(i,j+1) scaled by h.
inline double square_contour_length(double f00, double f10, double f11, double f01, double iso,
                                    double h) {
    const bool b0 = f00 > iso, b1 = f10 > iso, b2 = f11 > iso, b3 = f01 > iso;
    const int mask = (b0 ? 1 : 0) | (b1 ? 2 : 0) | (b2 ? 4 : 0) | (b3 ? 8 : 0);
    if (mask == 0 || mask == 15) return 0.0;

    auto lerp = [&](double fa, double fb) { return (iso - fa) / (fb - fa); };
    // edge midpoints in unit-square coordinates
    const std::array<double, 2> eb = {lerp(f00, f10), 0.0};          // bottom
    const std::array<double, 2> er = {1.0, lerp(f10, f11)};          // right
    const std::array<double, 2> et = {lerp(f01, f11), 1.0};          // top
    const std::array<double, 2> el = {0.0, lerp(f00, f01)};          // left
    auto seg = [&](const std::array<double, 2>& a, const std::array<double, 2>& b) {
        const double dx = a[0] - b[0], dy = a[1] - b[1];
        return h * std::sqrt(dx * dx + dy * dy);
    };

    switch (mask) {
        case 1: case 14: return seg(eb, el);
        case 2: case 13: return seg(eb, er);
        case 4: case 11: return seg(er, et);
        case 8: case 7:  return seg(et, el);
        case 3: case 12: return seg(el, er);
        case 6: case 9:  return seg(eb, et);
        case 5: case 10: {
            // saddle: connect by the sign of the bilinear stationary value
            const double den = f00 + f11 - f10 - f01;
            double fs = 0.5 * (f00 + f11);  // fallback when degenerate
            if (std::abs(den) > 1e-300) fs = (f00 * f11 - f10 * f01) / den;
            const bool center_pos = fs > iso;
            if (mask == 5) {
                // corners 00 and 11 positive
                if (center_pos) return seg(eb, er) + seg(et, el);
                return seg(eb, el) + seg(et, er);
            }
            // corners 10 and 01 positive
            if (center_pos) return seg(eb, el) + seg(et, er);
            return seg(eb, er) + seg(et, el);
        }
        default: return 0.0;
    }
}

// crossing-number point-in-polygon for the image quadrilateral
inline bool point_in_quad(const std::array<std::array<double, 2>, 4>& q, double px, double py) {
    bool inside = false;
    for (int i = 0, j = 3; i < 4; j = i++) {
        const double xi = q[static_cast<size_t>(i)][0], yi = q[static_cast<size_t>(i)][1];
        const double xj = q[static_cast<size_t>(j)][0], yj = q[static_cast<size_t>(j)][1];
        if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi)
            inside = !inside;
    }
    return inside;
}

} // namespace coareadetail

// Midpoint quadrature of the m-Jacobian over E, plus the samplewise rank
// precondition count.
inline CoareaReport coarea_lhs(const MapSpec& map, const CellSet& e, int m, const Cube& root) {
    CoareaReport rep;
    rep.m = m;
    rep.resolution = 1 << e.level;
    const double side = root.side * std::ldexp(1.0, -e.level);
    const double vol = std::pow(side, root.dim());
    double total = 0;
    for (const auto& idx : e.cells) {
        const Cube c = cell_cube(root, e.level, idx);
        const SingularSpectrum s = singular_values(map.jacobian(c.center()));
        if (rank_eps(s, default_rank_tol(s)) > m) ++rep.rank_violations;
        total += vol * jm(s, m);
    }
    rep.lhs = total;
    return rep;
}

// The right-hand side, dispatched on (n, m).
inline double coarea_rhs(const MapSpec& map, const CellSet& e, int m, const Cube& root,
                         int y_resolution) {
    const int n = root.dim();
    if (map.d != m)
        throw std::invalid_argument("coarea_rhs: supported slices integrate over y in R^m = R^d");
    if (e.empty()) return 0.0;
    const auto g = coareadetail::make_center_grid(map, e, root);

    // y bounding box over sampled values in E, padded by one y-cell
    std::vector<double> ylo(static_cast<size_t>(m), std::numeric_limits<double>::infinity());
    std::vector<double> yhi(static_cast<size_t>(m), -std::numeric_limits<double>::infinity());
    std::int64_t total_nodes = 1;
    for (int i = 0; i < n; ++i) total_nodes *= g.cells;
    for (std::int64_t f = 0; f < total_nodes; ++f) {
        if (!g.in_e[static_cast<size_t>(f)]) continue;
        for (int c = 0; c < m; ++c) {
            ylo[static_cast<size_t>(c)] = std::min(ylo[static_cast<size_t>(c)], g.value(f)[static_cast<size_t>(c)]);
            yhi[static_cast<size_t>(c)] = std::max(yhi[static_cast<size_t>(c)], g.value(f)[static_cast<size_t>(c)]);
        }
    }
    std::vector<double> yh(static_cast<size_t>(m));
    for (int c = 0; c < m; ++c) {
        double ext = yhi[static_cast<size_t>(c)] - ylo[static_cast<size_t>(c)];
        if (!(ext > 0)) ext = 1e-9;
        yh[static_cast<size_t>(c)] = ext / (y_resolution - 1);
        ylo[static_cast<size_t>(c)] -= yh[static_cast<size_t>(c)];
        yhi[static_cast<size_t>(c)] += yh[static_cast<size_t>(c)];
        yh[static_cast<size_t>(c)] = (yhi[static_cast<size_t>(c)] - ylo[static_cast<size_t>(c)]) / (y_resolution + 1);
    }

    // trapezoid weight along each y axis
    auto yw = [&](int node) { return (node == 0 || node == y_resolution + 1) ? 0.5 : 1.0; };

    if (n == 2 && m == 1) {
        // slice length per y node via marching squares, weighted by the
        // fraction of the square's corner cells inside E
        double integral = 0;
        for (int t = 0; t <= y_resolution + 1; ++t) {
            const double y = ylo[0] + t * yh[0];
            double len = 0;
            for (int i = 0; i + 1 < g.cells; ++i)
                for (int j = 0; j + 1 < g.cells; ++j) {
                    const std::array<int, 2> i00 = {i, j}, i10 = {i + 1, j}, i11 = {i + 1, j + 1},
                                             i01 = {i, j + 1};
                    const auto f00 = g.flat(i00), f10 = g.flat(i10), f11 = g.flat(i11),
                               f01 = g.flat(i01);
                    const int corners = g.in_e[static_cast<size_t>(f00)] + g.in_e[static_cast<size_t>(f10)] +
                                        g.in_e[static_cast<size_t>(f11)] + g.in_e[static_cast<size_t>(f01)];
                    if (corners == 0) continue;
                    const double l = coareadetail::square_contour_length(
                        g.value(f00)[0], g.value(f10)[0], g.value(f11)[0], g.value(f01)[0], y, g.h);
                    len += l * corners / 4.0;
                }
            integral += yw(t) * yh[0] * len;
        }
        return integral;
    }

    if (n == 2 && m == 2) {
        // counting measure per y node: how many image quadrilaterals of the
        // center lattice contain y
        struct Quad {
            std::array<std::array<double, 2>, 4> pts;
            double w;
            double xlo, xhi, ylo2, yhi2;
        };
        std::vector<Quad> quads;
        for (int i = 0; i + 1 < g.cells; ++i)
            for (int j = 0; j + 1 < g.cells; ++j) {
                const std::array<int, 2> i00 = {i, j}, i10 = {i + 1, j}, i11 = {i + 1, j + 1},
                                         i01 = {i, j + 1};
                const auto f00 = g.flat(i00), f10 = g.flat(i10), f11 = g.flat(i11), f01 = g.flat(i01);
                const int corners = g.in_e[static_cast<size_t>(f00)] + g.in_e[static_cast<size_t>(f10)] +
                                    g.in_e[static_cast<size_t>(f11)] + g.in_e[static_cast<size_t>(f01)];
                if (corners == 0) continue;
                Quad qd;
                qd.pts = {{{g.value(f00)[0], g.value(f00)[1]},
                           {g.value(f10)[0], g.value(f10)[1]},
                           {g.value(f11)[0], g.value(f11)[1]},
                           {g.value(f01)[0], g.value(f01)[1]}}};
                qd.w = corners / 4.0;
                qd.xlo = qd.xhi = qd.pts[0][0];
                qd.ylo2 = qd.yhi2 = qd.pts[0][1];
                for (int c = 1; c < 4; ++c) {
                    qd.xlo = std::min(qd.xlo, qd.pts[static_cast<size_t>(c)][0]);
                    qd.xhi = std::max(qd.xhi, qd.pts[static_cast<size_t>(c)][0]);
                    qd.ylo2 = std::min(qd.ylo2, qd.pts[static_cast<size_t>(c)][1]);
                    qd.yhi2 = std::max(qd.yhi2, qd.pts[static_cast<size_t>(c)][1]);
                }
                quads.push_back(qd);
            }
        double integral = 0;
        for (int ti = 0; ti <= y_resolution + 1; ++ti)
            for (int tj = 0; tj <= y_resolution + 1; ++tj) {
                const double px = ylo[0] + ti * yh[0];
                const double py = ylo[1] + tj * yh[1];
                double count = 0;
                for (const auto& qd : quads) {
                    if (px < qd.xlo || px > qd.xhi || py < qd.ylo2 || py > qd.yhi2) continue;
                    if (coareadetail::point_in_quad(qd.pts, px, py)) count += qd.w;
                }
                integral += yw(ti) * yw(tj) * yh[0] * yh[1] * count;
            }
        return integral;
    }

    if (n == 3 && m == 1) {
        // isosurface area per y node via marching cubes
        using coareadetail::mc_edge_table;
        using coareadetail::mc_tri_table;
        double integral = 0;
        // vertex offsets in the classic ordering
        static const int voff[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                       {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
        static const int edges[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                         {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
        for (int t = 0; t <= y_resolution + 1; ++t) {
            const double iso = ylo[0] + t * yh[0];
            double area = 0;
            for (int i = 0; i + 1 < g.cells; ++i)
                for (int j = 0; j + 1 < g.cells; ++j)
                    for (int kk = 0; kk + 1 < g.cells; ++kk) {
                        double fv[8];
                        int inside = 0;
                        double wsum = 0;
                        for (int v = 0; v < 8; ++v) {
                            const std::array<int, 3> id = {i + voff[v][0], j + voff[v][1],
                                                           kk + voff[v][2]};
                            const auto fl = g.flat(id);
                            fv[v] = g.value(fl)[0];
                            wsum += g.in_e[static_cast<size_t>(fl)];
                            if (fv[v] > iso) inside |= (1 << v);
                        }
                        if (wsum == 0) continue;
                        const int etab = mc_edge_table[inside];
                        if (etab == 0) continue;
                        std::array<std::array<double, 3>, 12> vert{};
                        for (int eidx = 0; eidx < 12; ++eidx) {
                            if (!(etab & (1 << eidx))) continue;
                            const int a = edges[eidx][0], b = edges[eidx][1];
                            const double tt = (iso - fv[a]) / (fv[b] - fv[a]);
                            for (int c = 0; c < 3; ++c) {
                                const double pa = voff[a][c], pb = voff[b][c];
                                vert[static_cast<size_t>(eidx)][static_cast<size_t>(c)] =
                                    pa + tt * (pb - pa);
                            }
                        }
                        const double w = wsum / 8.0;
                        for (int ti2 = 0; mc_tri_table[inside][ti2] != -1; ti2 += 3) {
                            const auto& p0 = vert[static_cast<size_t>(mc_tri_table[inside][ti2])];
                            const auto& p1 = vert[static_cast<size_t>(mc_tri_table[inside][ti2 + 1])];
                            const auto& p2 = vert[static_cast<size_t>(mc_tri_table[inside][ti2 + 2])];
                            double ux[3], vx[3];
                            for (int c = 0; c < 3; ++c) {
                                ux[c] = p1[static_cast<size_t>(c)] - p0[static_cast<size_t>(c)];
                                vx[c] = p2[static_cast<size_t>(c)] - p0[static_cast<size_t>(c)];
                            }
                            const double cx = ux[1] * vx[2] - ux[2] * vx[1];
                            const double cy = ux[2] * vx[0] - ux[0] * vx[2];
                            const double cz = ux[0] * vx[1] - ux[1] * vx[0];
                            area += w * 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz) * g.h * g.h;
                        }
                    }
            integral += yw(t) * yh[0] * area;
        }
        return integral;
    }

    throw std::invalid_argument("coarea_rhs: unsupported (n, m) combination");
}

inline CoareaReport coarea_check(const MapSpec& map, const CellSet& e, int m, const Cube& root,
                                 int y_resolution) {
    CoareaReport rep = coarea_lhs(map, e, m, root);
    rep.rhs = coarea_rhs(map, e, m, root, y_resolution);
    rep.residual = std::abs(rep.lhs - rep.rhs) / std::max(rep.lhs, 1e-12);
    return rep;
}

} // namespace gmtlab
