#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "kerrdg/quadrature.hpp"

namespace kerrdg {

// L2-orthonormal Legendre basis of degree <= k on the reference interval
// (-1, 1), tabulated at the nodes of an m-point Gauss rule. phi_n has degree
// exactly n, and the mass matrix w.r.t. the reference inner product is the
// identity, so constant-coefficient mass solves reduce to scaling.
struct Basis1D {
    int k = 0;  // polynomial degree
    int m = 0;  // quadrature node count
    QuadratureRule rule;
    std::vector<double> V;      // m x (k+1), V[q*(k+1)+n] = phi_n(node q)
    std::vector<double> D;      // m x (k+1), first derivatives at nodes
    std::vector<double> left;   // phi_n(-1)
    std::vector<double> right;  // phi_n(+1)

    double value(int q, int n) const { return V[q * (k + 1) + n]; }
    double deriv(int q, int n) const { return D[q * (k + 1) + n]; }
    int n_modes() const { return k + 1; }
};

// phi_n(x) = sqrt((2n+1)/2) P_n(x); fills values (and optionally derivatives)
// for n = 0..k at a single point.
inline void eval_orthonormal_legendre(int k, double x, double* values, double* derivs = nullptr) {
    double p0 = 1.0, d0 = 0.0;
    double p1 = x, d1 = 1.0;
    for (int n = 0; n <= k; ++n) {
        double p, d;
        if (n == 0) {
            p = p0;
            d = d0;
        } else if (n == 1) {
            p = p1;
            d = d1;
        } else {
            p = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
            d = d0 + (2.0 * n - 1.0) * p1;
            p0 = p1;
            d0 = d1;
            p1 = p;
            d1 = d;
        }
        const double scale = std::sqrt((2.0 * n + 1.0) / 2.0);
        values[n] = scale * p;
        if (derivs) derivs[n] = scale * d;
    }
}

inline Basis1D build_basis(int k, int m) {
    if (k < 0) throw std::invalid_argument("build_basis: degree must be nonnegative");
    if (m < k + 1)
        throw std::invalid_argument("build_basis: need at least k+1 quadrature nodes (got m=" +
                                    std::to_string(m) + " for k=" + std::to_string(k) + ")");
    Basis1D b;
    b.k = k;
    b.m = m;
    b.rule = gauss_legendre(m);
    b.V.resize(static_cast<std::size_t>(m) * (k + 1));
    b.D.resize(static_cast<std::size_t>(m) * (k + 1));
    for (int q = 0; q < m; ++q)
        eval_orthonormal_legendre(k, b.rule.nodes[q], &b.V[q * (k + 1)], &b.D[q * (k + 1)]);
    b.left.resize(k + 1);
    b.right.resize(k + 1);
    eval_orthonormal_legendre(k, -1.0, b.left.data());
    eval_orthonormal_legendre(k, 1.0, b.right.data());
    return b;
}

// Sum_n coeffs[n] * phi_n(x_ref).
inline double eval_modal_1d(std::span<const double> coeffs, const Basis1D& basis, double x_ref) {
    std::vector<double> phi(basis.k + 1);
    eval_orthonormal_legendre(basis.k, x_ref, phi.data());
    double s = 0.0;
    for (int n = 0; n <= basis.k; ++n) s += coeffs[n] * phi[n];
    return s;
}

}  // namespace kerrdg
