#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrdg/basis.hpp"
#include "kerrdg/materials.hpp"
#include "kerrdg/mesh.hpp"
#include "kerrdg/parallel.hpp"

namespace kerrdg {

// A scalar field of space and time, e.g. an exact solution component.
using ExactField = std::function<double(double, double, double)>;

// Modal DG coefficients for (E_x, E_y, H_z). Layout [cell * n_modes + mode]
// with mode = iy*(k+1) + ix. Value-like: stepping produces new states.
struct FieldState {
    int nx = 0, ny = 0;
    int n_modes = 0;  // (k+1)^2
    double t = 0.0;
    std::vector<double> ex, ey, hz;

    int n_cells() const { return nx * ny; }
    std::span<double> ex_cell(int e) { return {ex.data() + static_cast<std::size_t>(e) * n_modes, static_cast<std::size_t>(n_modes)}; }
    std::span<double> ey_cell(int e) { return {ey.data() + static_cast<std::size_t>(e) * n_modes, static_cast<std::size_t>(n_modes)}; }
    std::span<double> hz_cell(int e) { return {hz.data() + static_cast<std::size_t>(e) * n_modes, static_cast<std::size_t>(n_modes)}; }
    std::span<const double> ex_cell(int e) const { return {ex.data() + static_cast<std::size_t>(e) * n_modes, static_cast<std::size_t>(n_modes)}; }
    std::span<const double> ey_cell(int e) const { return {ey.data() + static_cast<std::size_t>(e) * n_modes, static_cast<std::size_t>(n_modes)}; }
    std::span<const double> hz_cell(int e) const { return {hz.data() + static_cast<std::size_t>(e) * n_modes, static_cast<std::size_t>(n_modes)}; }

    bool all_finite() const {
        for (double v : ex)
            if (!std::isfinite(v)) return false;
        for (double v : ey)
            if (!std::isfinite(v)) return false;
        for (double v : hz)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline FieldState make_state(const Mesh& mesh, const Basis1D& basis, double t = 0.0) {
    FieldState s;
    s.nx = mesh.nx();
    s.ny = mesh.ny();
    s.n_modes = basis.n_modes() * basis.n_modes();
    s.t = t;
    const std::size_t total = static_cast<std::size_t>(s.n_cells()) * s.n_modes;
    s.ex.assign(total, 0.0);
    s.ey.assign(total, 0.0);
    s.hz.assign(total, 0.0);
    return s;
}

// Values of one modal block at the tensor quadrature nodes of its cell,
// out[qy*m + qx]; exact for the stored polynomial.
inline void eval_cell_values(std::span<const double> coeffs, const Basis1D& basis, double* out) {
    const int m = basis.m, np = basis.n_modes();
    // tmp[iy][qx] = sum_ix c[iy*np+ix] V[qx][ix]
    double tmp[32 * 32];
    for (int iy = 0; iy < np; ++iy)
        for (int qx = 0; qx < m; ++qx) {
            double s = 0.0;
            for (int ix = 0; ix < np; ++ix) s += coeffs[iy * np + ix] * basis.value(qx, ix);
            tmp[iy * m + qx] = s;
        }
    for (int qy = 0; qy < m; ++qy)
        for (int qx = 0; qx < m; ++qx) {
            double s = 0.0;
            for (int iy = 0; iy < np; ++iy) s += tmp[iy * m + qx] * basis.value(qy, iy);
            out[qy * m + qx] = s;
        }
}

// Per-cell quadrature-point values of all three fields, [cell * m^2 + q].
struct FieldValues {
    int nq = 0;
    std::vector<double> ex, ey, hz;
    std::size_t cell_offset(int e) const { return static_cast<std::size_t>(e) * nq * nq; }
};

inline FieldValues evaluate_volume(const FieldState& state, const Mesh& mesh,
                                   const Basis1D& basis) {
    FieldValues v;
    v.nq = basis.m;
    const std::size_t total = static_cast<std::size_t>(mesh.n_cells()) * basis.m * basis.m;
    v.ex.resize(total);
    v.ey.resize(total);
    v.hz.resize(total);
    parallel_for(mesh.n_cells(), [&](std::size_t e) {
        const std::size_t at = v.cell_offset(static_cast<int>(e));
        eval_cell_values(state.ex_cell(static_cast<int>(e)), basis, v.ex.data() + at);
        eval_cell_values(state.ey_cell(static_cast<int>(e)), basis, v.ey.data() + at);
        eval_cell_values(state.hz_cell(static_cast<int>(e)), basis, v.hz.data() + at);
    });
    return v;
}

// One-sided limits at cell faces, tabulated at the m face quadrature nodes.
// Vertical faces (constant x) live at i = 0..nx, j = 0..ny-1 and carry
// (E_y, H_z); horizontal faces at j = 0..ny, i = 0..nx-1 carry (E_x, H_z).
// "lo" is the limit from the lower-index cell, "hi" from the higher-index
// cell; on boundary faces only the interior side is meaningful (the other is
// left at zero and never read by the flux rules).
struct TraceSet {
    int nx = 0, ny = 0, m = 0;
    std::vector<double> v_ey_lo, v_ey_hi, v_hz_lo, v_hz_hi;  // vertical faces
    std::vector<double> h_ex_lo, h_ex_hi, h_hz_lo, h_hz_hi;  // horizontal faces

    std::size_t vface(int i, int j) const {
        return (static_cast<std::size_t>(j) * (nx + 1) + i) * m;
    }
    std::size_t hface(int i, int j) const {
        return (static_cast<std::size_t>(j) * nx + i) * m;
    }
};

namespace detail {

// Trace of a modal block on one cell edge. axis_x: faces with constant x
// (trace varies in y); at_hi: trace at the upper edge of the cell.
inline void cell_edge_trace(std::span<const double> coeffs, const Basis1D& basis, bool axis_x,
                            bool at_hi, double* out) {
    const int m = basis.m, np = basis.n_modes();
    const std::vector<double>& edge = at_hi ? basis.right : basis.left;
    for (int q = 0; q < m; ++q) {
        double s = 0.0;
        if (axis_x) {
            for (int iy = 0; iy < np; ++iy) {
                double sx = 0.0;
                for (int ix = 0; ix < np; ++ix) sx += coeffs[iy * np + ix] * edge[ix];
                s += sx * basis.value(q, iy);
            }
        } else {
            for (int iy = 0; iy < np; ++iy) {
                double sx = 0.0;
                for (int ix = 0; ix < np; ++ix) sx += coeffs[iy * np + ix] * basis.value(q, ix);
                s += sx * edge[iy];
            }
        }
        out[q] = s;
    }
}

}  // namespace detail

inline TraceSet extract_traces(const FieldState& state, const Mesh& mesh, const Basis1D& basis) {
    TraceSet tr;
    tr.nx = mesh.nx();
    tr.ny = mesh.ny();
    tr.m = basis.m;
    const std::size_t nv = static_cast<std::size_t>(tr.nx + 1) * tr.ny * tr.m;
    const std::size_t nh = static_cast<std::size_t>(tr.ny + 1) * tr.nx * tr.m;
    tr.v_ey_lo.assign(nv, 0.0);
    tr.v_ey_hi.assign(nv, 0.0);
    tr.v_hz_lo.assign(nv, 0.0);
    tr.v_hz_hi.assign(nv, 0.0);
    tr.h_ex_lo.assign(nh, 0.0);
    tr.h_ex_hi.assign(nh, 0.0);
    tr.h_hz_lo.assign(nh, 0.0);
    tr.h_hz_hi.assign(nh, 0.0);
    parallel_for(mesh.n_cells(), [&](std::size_t ee) {
        const int e = static_cast<int>(ee);
        const int i = mesh.cell_i(e), j = mesh.cell_j(e);
        // Right edge of the cell is the "lo" side of face i+1; left edge is
        // the "hi" side of face i (this cell lies above/right of that face).
        detail::cell_edge_trace(state.ey_cell(e), basis, true, true, &tr.v_ey_lo[tr.vface(i + 1, j)]);
        detail::cell_edge_trace(state.ey_cell(e), basis, true, false, &tr.v_ey_hi[tr.vface(i, j)]);
        detail::cell_edge_trace(state.hz_cell(e), basis, true, true, &tr.v_hz_lo[tr.vface(i + 1, j)]);
        detail::cell_edge_trace(state.hz_cell(e), basis, true, false, &tr.v_hz_hi[tr.vface(i, j)]);
        detail::cell_edge_trace(state.ex_cell(e), basis, false, true, &tr.h_ex_lo[tr.hface(i, j + 1)]);
        detail::cell_edge_trace(state.ex_cell(e), basis, false, false, &tr.h_ex_hi[tr.hface(i, j)]);
        detail::cell_edge_trace(state.hz_cell(e), basis, false, true, &tr.h_hz_lo[tr.hface(i, j + 1)]);
        detail::cell_edge_trace(state.hz_cell(e), basis, false, false, &tr.h_hz_hi[tr.hface(i, j)]);
    });
    return tr;
}

// sqrt( sum_cells sum_q w_q * weight_q * v_q^2 * hx*hy/4 ), deterministic
// cell-major pairwise reduction.
inline double weighted_l2_norm(const std::vector<double>& values,
                               const std::vector<double>& weight, const Mesh& mesh,
                               const QuadratureRule& rule) {
    const int m = rule.size();
    std::vector<double> per_cell(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](std::size_t ee) {
        const int e = static_cast<int>(ee);
        const double jac = 0.25 * mesh.hx[mesh.cell_i(e)] * mesh.hy[mesh.cell_j(e)];
        const std::size_t base = static_cast<std::size_t>(e) * m * m;
        double acc = 0.0;
        for (int qy = 0; qy < m; ++qy)
            for (int qx = 0; qx < m; ++qx) {
                const std::size_t at = base + qy * m + qx;
                acc += rule.weights[qx] * rule.weights[qy] * weight[at] * values[at] * values[at];
            }
        per_cell[e] = acc * jac;
    });
    return std::sqrt(pairwise_sum(per_cell));
}

// Plain-text snapshot: one row per (cell_i, cell_j, mode_ix, mode_iy).
inline void write_snapshot(const std::string& path, const FieldState& state,
                           const Basis1D& basis) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open snapshot file: " + path);
    out << "cell_i,cell_j,mode_ix,mode_iy,coeff_Ex,coeff_Ey,coeff_Hz\n";
    const int np = basis.n_modes();
    char buf[192];
    for (int j = 0; j < state.ny; ++j)
        for (int i = 0; i < state.nx; ++i) {
            const int e = i + j * state.nx;
            for (int ix = 0; ix < np; ++ix)
                for (int iy = 0; iy < np; ++iy) {
                    const int mode = iy * np + ix;
                    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.17g,%.17g,%.17g\n", i, j, ix, iy,
                                  state.ex_cell(e)[mode], state.ey_cell(e)[mode],
                                  state.hz_cell(e)[mode]);
                    out << buf;
                }
        }
}

}  // namespace kerrdg
