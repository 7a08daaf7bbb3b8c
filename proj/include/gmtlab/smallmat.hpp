#pragma once

// Singular-value analysis of small Jacobian matrices (dimensions <= 8).
// Spectra are obtained from a cyclic-Jacobi eigen-decomposition of the
// smaller Gram matrix, which is plenty robust at these sizes.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace gmtlab {

struct SmallMatrix {
    int rows = 0;                  // d: one row per coordinate function
    int cols = 0;                  // n
    std::vector<double> a;         // row-major, rows*cols entries

    SmallMatrix() = default;
    SmallMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

    bool finite() const {
        for (double x : a)
            if (!std::isfinite(x)) return false;
        return true;
    }

    double frobenius_norm() const {
        double s = 0;
        for (double x : a) s += x * x;
        return std::sqrt(s);
    }
};

struct SingularSpectrum {
    std::vector<double> values;    // descending, nonnegative, length min(rows, cols)

    double largest() const { return values.empty() ? 0.0 : values.front(); }
    double operator[](size_t i) const { return values[i]; }
    size_t size() const { return values.size(); }
};

namespace detail {

// Cyclic Jacobi on a symmetric matrix stored dense; returns eigenvalues.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> s, int n) {
    auto at = [&](int i, int j) -> double& { return s[static_cast<size_t>(i) * n + j]; };
    double norm0 = 0;
    for (double x : s) norm0 += x * x;
    norm0 = std::sqrt(norm0);
    const double stop = 1e-14 * std::max(norm0, 1e-300);

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += 2 * at(i, j) * at(i, j);
        if (std::sqrt(off) < stop) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double app = at(p, p), aqq = at(q, q);
                const double theta = (aqq - app) / (2 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - sn * akq;
                    at(k, q) = sn * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - sn * aqk;
                    at(q, k) = sn * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = at(i, i);
    return ev;
}

} // namespace detail

// Singular values of M, descending.  Computed as sqrt of the eigenvalues of
// the smaller of M M^T and M^T M.
inline SingularSpectrum singular_values(const SmallMatrix& m) {
    if (!m.finite()) throw std::invalid_argument("singular_values: non-finite entries");
    const int r = m.rows, c = m.cols;
    const int g = std::min(r, c);
    std::vector<double> gram(static_cast<size_t>(g) * g, 0.0);
    if (r <= c) {
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                double s = 0;
                for (int k = 0; k < c; ++k) s += m(i, k) * m(j, k);
                gram[static_cast<size_t>(i) * g + j] = s;
            }
    } else {
        for (int i = 0; i < c; ++i)
            for (int j = 0; j < c; ++j) {
                double s = 0;
                for (int k = 0; k < r; ++k) s += m(k, i) * m(k, j);
                gram[static_cast<size_t>(i) * g + j] = s;
            }
    }
    std::vector<double> ev = detail::jacobi_eigenvalues(std::move(gram), g);
    SingularSpectrum out;
    out.values.reserve(ev.size());
    for (double e : ev) out.values.push_back(std::sqrt(std::max(e, 0.0)));
    std::sort(out.values.begin(), out.values.end(), std::greater<double>());
    return out;
}

// Number of singular values strictly above tol.
inline int rank_eps(const SingularSpectrum& s, double tol) {
    if (tol < 0) throw std::invalid_argument("rank_eps: tol must be >= 0");
    int r = 0;
    for (double v : s.values)
        if (v > tol) ++r;
    return r;
}

// Scale-aware tolerance used as the grid discretization of "rank < m".
inline double default_rank_tol(const SingularSpectrum& s) {
    return 1e-8 * (1.0 + s.largest());
}

// m-Jacobian: product of the m largest singular values.
inline double jm(const SingularSpectrum& s, int m) {
    if (m < 1 || static_cast<size_t>(m) > s.values.size())
        throw std::invalid_argument("jm: m out of range");
    double p = 1.0;
    for (int i = 0; i < m; ++i) p *= s.values[static_cast<size_t>(i)];
    return p;
}

// Operator norm, = largest singular value.
inline double operator_norm(const SmallMatrix& m) { return singular_values(m).largest(); }

} // namespace gmtlab
