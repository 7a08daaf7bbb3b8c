#pragma once

// Exponent arithmetic for the critical-value covering laws. Everything the
// experiment runners predict comes through here, so the formulas live in one
// place and nowhere else.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace gmtlab {

struct ExponentParams {
    int n = 1;                    // domain dimension
    int m = 1;                    // critical rank bound, 1 <= m <= min(n, d)
    int d = 1;                    // target dimension, d >= m
    int k = 1;                    // smoothness order, k >= 1
    double alpha = 0.0;           // Holder exponent in [0, 1]
    std::optional<double> p;      // integrability, >= 1 when set
    std::optional<double> q;      // image-measure exponent, > m - 1 when set

    void validate() const {
        if (n < 1) throw std::invalid_argument("ExponentParams: n must be >= 1");
        if (m < 1 || m > std::min(n, d))
            throw std::invalid_argument("ExponentParams: need 1 <= m <= min(n, d)");
        if (d < m) throw std::invalid_argument("ExponentParams: need d >= m");
        if (k < 1) throw std::invalid_argument("ExponentParams: need k >= 1");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw std::invalid_argument("ExponentParams: need 0 <= alpha <= 1");
        if (p && *p < 1.0) throw std::invalid_argument("ExponentParams: need p >= 1");
        if (q && !(*q > m - 1))
            throw std::invalid_argument("ExponentParams: need q > m - 1");
    }
};

// mu_q = n - m + 1 - (k + alpha) (q - m + 1).  May be negative; a
// non-positive exponent means "counting measure" downstream.
inline double mu_q(const ExponentParams& pr, double q) {
    pr.validate();
    return pr.n - pr.m + 1 - (pr.k + pr.alpha) * (q - pr.m + 1);
}

inline double mu_q(const ExponentParams& pr) {
    if (!pr.q) throw std::invalid_argument("mu_q: q not set");
    return mu_q(pr, *pr.q);
}

// q at which mu_q vanishes: q_o = m - 1 + (n - m + 1)/(k + alpha).
inline double q_circle(const ExponentParams& pr) {
    pr.validate();
    if (!(pr.k + pr.alpha > 0))
        throw std::invalid_argument("q_circle: need k + alpha > 0");
    return pr.m - 1 + (pr.n - pr.m + 1) / (pr.k + pr.alpha);
}

// nu = n - m - k + 1 (the preimage exponent at q = m for C^k maps).
inline double nu(const ExponentParams& pr) {
    pr.validate();
    return pr.n - pr.m - pr.k + 1;
}

// tau_* = n - (k + alpha - 1) p, the size exponent of the bad set.
inline double tau_star(const ExponentParams& pr) {
    pr.validate();
    if (!pr.p) throw std::invalid_argument("tau_star: p not set");
    return pr.n - (pr.k + pr.alpha - 1) * (*pr.p);
}

// Predicted per-cube scaling exponent of Phi(Z'_v cap Q) in ell(Q):
// q + mu + (k + alpha - 1)(q - m + 1).
inline double cube_scaling_exponent(const ExponentParams& pr, double q) {
    const double mu = mu_q(pr, q);
    return q + mu + (pr.k + pr.alpha - 1) * (q - pr.m + 1);
}

} // namespace gmtlab
