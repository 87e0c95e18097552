#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kerrdg {

// Gauss-Legendre rule on the reference interval (-1, 1).
struct QuadratureRule {
    std::vector<double> nodes;    // strictly increasing, symmetric about 0
    std::vector<double> weights;  // positive, sum = 2

    int size() const { return static_cast<int>(nodes.size()); }
};

namespace detail {

// Legendre P_n(x) and its derivative via the three-term recurrence.
inline void legendre_pair(int n, double x, double& p, double& dp) {
    double p0 = 1.0, d0 = 0.0;
    if (n == 0) {
        p = p0;
        dp = d0;
        return;
    }
    double p1 = x, d1 = 1.0;
    for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        const double d2 = d0 + (2.0 * j - 1.0) * p1;
        p0 = p1;
        d0 = d1;
        p1 = p2;
        d1 = d2;
    }
    p = p1;
    dp = d1;
}

}  // namespace detail

// Classical m-point Gauss-Legendre rule, exact for polynomials of degree
// 2m-1. Nodes found by Newton iteration from the Chebyshev-like guess.
inline QuadratureRule gauss_legendre(int m) {
    if (m < 1 || m > 32)
        throw std::invalid_argument("gauss_legendre: node count must be in [1, 32], got " +
                                    std::to_string(m));
    QuadratureRule rule;
    rule.nodes.resize(m);
    rule.weights.resize(m);
    for (int i = 0; i < m; ++i) {
        double x = -std::cos(M_PI * (i + 0.75) / (m + 0.5));
        double p = 0.0, dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            detail::legendre_pair(m, x, p, dp);
            const double dx = -p / dp;
            x += dx;
            if (std::abs(dx) < 1e-15) break;
        }
        detail::legendre_pair(m, x, p, dp);
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Enforce exact symmetry so downstream tables are symmetric too.
    for (int i = 0; i < m / 2; ++i) {
        const double xs = 0.5 * (rule.nodes[m - 1 - i] - rule.nodes[i]);
        rule.nodes[i] = -xs;
        rule.nodes[m - 1 - i] = xs;
        const double ws = 0.5 * (rule.weights[i] + rule.weights[m - 1 - i]);
        rule.weights[i] = ws;
        rule.weights[m - 1 - i] = ws;
    }
    if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
    return rule;
}

}  // namespace kerrdg
