#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "kerrdg/basis.hpp"
#include "kerrdg/field_state.hpp"
#include "kerrdg/mesh.hpp"
#include "kerrdg/parallel.hpp"

namespace kerrdg {

enum class Axis { x, y };

// plain: all k+1 moments. plus: moments of degree <= k-1 plus the left
// endpoint value. minus: moments plus the right endpoint value. For k = 0 the
// one-sided flavors reduce to endpoint interpolation.
enum class ProjFlavor { plain, plus, minus };

struct ProjectorKind {
    Axis axis = Axis::x;
    ProjFlavor flavor = ProjFlavor::plain;
};

// Tensor-product 2D projectors:
//   pi1 = (x: plain) (x) (y: plus),   pi2 = (x: plus)  (x) (y: plain),
//   pi3 = (x: minus) (x) (y: minus),  pi4 = (x: plain) (x) (y: plain).
enum class TensorProjector { pi1, pi2, pi3, pi4 };

inline ProjFlavor tensor_flavor_x(TensorProjector p) {
    switch (p) {
        case TensorProjector::pi1: return ProjFlavor::plain;
        case TensorProjector::pi2: return ProjFlavor::plus;
        case TensorProjector::pi3: return ProjFlavor::minus;
        default: return ProjFlavor::plain;
    }
}

inline ProjFlavor tensor_flavor_y(TensorProjector p) {
    switch (p) {
        case TensorProjector::pi1: return ProjFlavor::plus;
        case TensorProjector::pi2: return ProjFlavor::plain;
        case TensorProjector::pi3: return ProjFlavor::minus;
        default: return ProjFlavor::plain;
    }
}

// Core 1D projection from samples of u at the basis quadrature nodes plus
// (for one-sided flavors) the matched endpoint value. Solves the small
// moment/endpoint system directly; unconditionally well-posed.
inline void project_1d_from_samples(ProjFlavor flavor, std::span<const double> quad_values,
                                    double endpoint_value, const Basis1D& basis, double* coeffs) {
    const int k = basis.k, np = k + 1, m = basis.m;
    // Moments against the orthonormal basis on the reference interval.
    double moments[64];
    for (int n = 0; n < np; ++n) {
        double s = 0.0;
        for (int q = 0; q < m; ++q) s += basis.rule.weights[q] * quad_values[q] * basis.value(q, n);
        moments[n] = s;
    }
    if (flavor == ProjFlavor::plain) {
        for (int n = 0; n < np; ++n) coeffs[n] = moments[n];
        return;
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(np, np);
    Eigen::VectorXd b(np);
    for (int n = 0; n < k; ++n) {
        A(n, n) = 1.0;  // orthonormality: moment row against phi_n
        b(n) = moments[n];
    }
    const std::vector<double>& edge = (flavor == ProjFlavor::plus) ? basis.left : basis.right;
    for (int j = 0; j < np; ++j) A(k, j) = edge[j];
    b(k) = endpoint_value;
    Eigen::VectorXd c = A.partialPivLu().solve(b);
    for (int n = 0; n < np; ++n) coeffs[n] = c(n);
}

// 1D projection of a scalar function over the physical interval [a, b].
inline std::vector<double> project_1d(ProjFlavor flavor, const std::function<double(double)>& u,
                                      double a, double b, const Basis1D& basis) {
    const int m = basis.m;
    std::vector<double> samples(m);
    for (int q = 0; q < m; ++q) samples[q] = u(a + 0.5 * (basis.rule.nodes[q] + 1.0) * (b - a));
    const double endpoint = (flavor == ProjFlavor::plus) ? u(a) : u(b);
    std::vector<double> coeffs(basis.n_modes());
    project_1d_from_samples(flavor, samples, endpoint, basis, coeffs.data());
    return coeffs;
}

// Tensor-product projection of u over all cells; returns per-element
// (k+1)^2 blocks in state layout (mode = iy*(k+1) + ix).
inline std::vector<double> project_2d(TensorProjector which,
                                      const std::function<double(double, double)>& u,
                                      const Mesh& mesh, const Basis1D& basis) {
    const int np = basis.n_modes(), m = basis.m;
    const ProjFlavor fx = tensor_flavor_x(which), fy = tensor_flavor_y(which);
    std::vector<double> out(static_cast<std::size_t>(mesh.n_cells()) * np * np);
    parallel_for(mesh.n_cells(), [&](std::size_t ee) {
        const int e = static_cast<int>(ee);
        const int i = mesh.cell_i(e), j = mesh.cell_j(e);
        const double x0 = mesh.x_edges[i], hx = mesh.hx[i];
        const double y0 = mesh.y_edges[j], hy = mesh.hy[j];
        auto xq = [&](int q) { return x0 + 0.5 * (basis.rule.nodes[q] + 1.0) * hx; };
        auto yq = [&](int q) { return y0 + 0.5 * (basis.rule.nodes[q] + 1.0) * hy; };
        const double x_end = (fx == ProjFlavor::plus) ? x0 : x0 + hx;
        const double y_end = (fy == ProjFlavor::plus) ? y0 : y0 + hy;

        // Stage 1: project along x for each y sample (quad nodes + endpoint).
        double cx[32 * 33];       // cx[s*np + ix], s = y-sample index
        double row[32];
        for (int s = 0; s <= m; ++s) {
            const double y = (s < m) ? yq(s) : y_end;
            for (int q = 0; q < m; ++q) row[q] = u(xq(q), y);
            project_1d_from_samples(fx, {row, static_cast<std::size_t>(m)}, u(x_end, y), basis,
                                    &cx[s * np]);
        }
        // Stage 2: project along y each x-mode's sampled profile.
        double col[32];
        double cy[32];
        for (int ix = 0; ix < np; ++ix) {
            for (int s = 0; s < m; ++s) col[s] = cx[s * np + ix];
            project_1d_from_samples(fy, {col, static_cast<std::size_t>(m)}, cx[m * np + ix], basis,
                                    cy);
            for (int iy = 0; iy < np; ++iy) out[static_cast<std::size_t>(e) * np * np + iy * np + ix] = cy[iy];
        }
    });
    return out;
}

// L2 projection errors of u on a ladder of uniformly refined meshes over the
// unit square; the error is measured with two extra quadrature nodes.
inline std::vector<std::pair<double, double>> projection_error_study(
    TensorProjector which, const std::function<double(double, double)>& u, int k, int base_n,
    int levels) {
    std::vector<std::pair<double, double>> result;
    const Basis1D basis = build_basis(k, 2 * k + 2);
    const Basis1D fine = build_basis(k, basis.m + 2);
    for (int l = 0; l < levels; ++l) {
        const int n = base_n << l;
        const Mesh mesh = build_mesh(0.0, 1.0, 0.0, 1.0, n, n);
        const std::vector<double> coeffs = project_2d(which, u, mesh, basis);
        const int mq = fine.m, np = basis.n_modes();
        std::vector<double> diff(static_cast<std::size_t>(mesh.n_cells()) * mq * mq);
        std::vector<double> ones(diff.size(), 1.0);
        parallel_for(mesh.n_cells(), [&](std::size_t ee) {
            const int e = static_cast<int>(ee);
            const int i = mesh.cell_i(e), j = mesh.cell_j(e);
            double vals[32 * 32];
            eval_cell_values({coeffs.data() + static_cast<std::size_t>(e) * np * np,
                              static_cast<std::size_t>(np * np)},
                             fine, vals);
            for (int qy = 0; qy < mq; ++qy)
                for (int qx = 0; qx < mq; ++qx) {
                    const double x = mesh.x_edges[i] + 0.5 * (fine.rule.nodes[qx] + 1.0) * mesh.hx[i];
                    const double y = mesh.y_edges[j] + 0.5 * (fine.rule.nodes[qy] + 1.0) * mesh.hy[j];
                    diff[static_cast<std::size_t>(e) * mq * mq + qy * mq + qx] =
                        vals[qy * mq + qx] - u(x, y);
                }
        });
        result.emplace_back(mesh.h_max, weighted_l2_norm(diff, ones, mesh, fine.rule));
    }
    return result;
}

}  // namespace kerrdg
