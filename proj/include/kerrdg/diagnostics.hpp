#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kerrdg/basis.hpp"
#include "kerrdg/field_state.hpp"
#include "kerrdg/materials.hpp"
#include "kerrdg/mesh.hpp"
#include "kerrdg/parallel.hpp"
#include "kerrdg/spatial_operator.hpp"

namespace kerrdg {

// Components of the nonlinear electromagnetic energy. The quartic term
// enters the semi-discrete total with coefficient 3/2 and the fully discrete
// total with coefficient 1; both totals are kept so either stability law can
// be checked against the same components.
struct EnergyReport {
    double quadratic_E = 0.0;           // ||E||^2 weighted by eps0 (1 + chi1)
    double quadratic_H = 0.0;           // ||H_z||^2 weighted by mu0
    double quartic = 0.0;               // || |E|^2 ||^2 weighted by eps0 chi3
    double boundary_accumulator = 0.0;  // 2 c0 int_0^t (bottom + left) traces
    double total_semidiscrete = 0.0;
    double total_fullydiscrete = 0.0;
};

namespace detail {

inline std::array<double, 3> energy_components(const FieldState& state, const MaterialField& mat,
                                               const Mesh& mesh, const Basis1D& basis) {
    const int m = basis.m;
    const FieldValues vol = evaluate_volume(state, mesh, basis);
    std::vector<double> qe(mesh.n_cells()), qh(mesh.n_cells()), qq(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](std::size_t ee) {
        const int e = static_cast<int>(ee);
        const double jac = 0.25 * mesh.hx[mesh.cell_i(e)] * mesh.hy[mesh.cell_j(e)];
        const std::size_t at = vol.cell_offset(e);
        const MaterialSlice ms = material_slice(mat, e);
        double ae = 0.0, ah = 0.0, aq = 0.0;
        for (int qy = 0; qy < m; ++qy)
            for (int qx = 0; qx < m; ++qx) {
                const int ql = qy * m + qx;
                const double w = basis.rule.weights[qx] * basis.rule.weights[qy];
                const double Ex = vol.ex[at + ql], Ey = vol.ey[at + ql], H = vol.hz[at + ql];
                const double S = Ex * Ex + Ey * Ey;
                ae += w * ms.eps0 * (1.0 + ms.chi1[ql]) * S;
                ah += w * ms.mu0[ql] * H * H;
                aq += w * ms.eps0 * ms.chi3[ql] * S * S;
            }
        qe[e] = jac * ae;
        qh[e] = jac * ah;
        qq[e] = jac * aq;
    });
    return {pairwise_sum(qe), pairwise_sum(qh), pairwise_sum(qq)};
}

}  // namespace detail

inline EnergyReport energy_semidiscrete(const FieldState& state, double accumulator_so_far,
                                        const MaterialField& mat, const Mesh& mesh,
                                        const Basis1D& basis) {
    const auto [qe, qh, qq] = detail::energy_components(state, mat, mesh, basis);
    EnergyReport rep;
    rep.quadratic_E = qe;
    rep.quadratic_H = qh;
    rep.quartic = qq;
    rep.boundary_accumulator = accumulator_so_far;
    rep.total_semidiscrete = qe + qh + 1.5 * qq + accumulator_so_far;
    rep.total_fullydiscrete = qe + qh + qq;
    return rep;
}

// Energy of the staggered pair: state.ex/ey at level n, state.hz at n+1/2.
inline EnergyReport energy_fully_discrete(const FieldState& state, const MaterialField& mat,
                                          const Mesh& mesh, const Basis1D& basis) {
    return energy_semidiscrete(state, 0.0, mat, mesh, basis);
}

// Trapezoidal accumulation of the boundary-dissipation rate for leapfrog
// energy traces (the RK4 path integrates the rate with its own stages).
struct BoundaryAccumulator {
    double value = 0.0;
    double prev_rate = 0.0;
    bool primed = false;

    void prime(double rate) {
        prev_rate = rate;
        primed = true;
    }
    void advance(double rate, double dt) {
        if (primed) value += 0.5 * dt * (prev_rate + rate);
        prev_rate = rate;
        primed = true;
    }
};

inline double boundary_dissipation_rate(const FieldState& state, const FluxConfig& cfg,
                                        const Mesh& mesh, const Basis1D& basis) {
    const TraceSet tr = extract_traces(state, mesh, basis);
    const auto [bottom, left] = boundary_trace_integrals(tr, mesh, basis);
    return 2.0 * cfg.c0 * (bottom + left);
}

// || J(t) || weighted by (eps0 (1 + chi1))^{-1}.
inline double current_norm(const CurrentDensity& source, double t, const MaterialField& mat,
                           const Mesh& mesh, const Basis1D& basis) {
    if (!source.any()) return 0.0;
    const int m = basis.m;
    std::vector<double> per_cell(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](std::size_t ee) {
        const int e = static_cast<int>(ee);
        const int i = mesh.cell_i(e), j = mesh.cell_j(e);
        const double jac = 0.25 * mesh.hx[i] * mesh.hy[j];
        const MaterialSlice ms = material_slice(mat, e);
        double acc = 0.0;
        for (int qy = 0; qy < m; ++qy)
            for (int qx = 0; qx < m; ++qx) {
                const double x = mesh.x_edges[i] + 0.5 * (basis.rule.nodes[qx] + 1.0) * mesh.hx[i];
                const double y = mesh.y_edges[j] + 0.5 * (basis.rule.nodes[qy] + 1.0) * mesh.hy[j];
                const double jx = source.jx ? source.jx(x, y, t) : 0.0;
                const double jy = source.jy ? source.jy(x, y, t) : 0.0;
                const double w = basis.rule.weights[qx] * basis.rule.weights[qy];
                acc += w * (jx * jx + jy * jy) / (ms.eps0 * (1.0 + ms.chi1[qy * m + qx]));
            }
        per_cell[e] = jac * acc;
    });
    return std::sqrt(pairwise_sum(per_cell));
}

// Both sides of the semi-discrete source bound:
//   E_h(t) <= 2 E_h(0) + 8 (int_0^t ||J|| ds)^2.
inline std::pair<double, double> semidiscrete_source_bound(double energy0, double energy_t,
                                                           double j_norm_time_integral) {
    return {energy_t, 2.0 * energy0 + 8.0 * j_norm_time_integral * j_norm_time_integral};
}

// Both sides of the fully discrete source bound:
//   E_h^N <= exp(8T+1) [ 3 E_h^0 + dt sum_n ||J^{n+1/2}||^2 ].
inline std::pair<double, double> fully_discrete_source_bound(double energy0, double energyN,
                                                             double j_sq_sum, double dt,
                                                             double T) {
    return {energyN, std::exp(8.0 * T + 1.0) * (3.0 * energy0 + dt * j_sq_sum)};
}

// Weighted L2 errors against reference fields at state.t, over-integrated
// with two extra nodes per direction to avoid aliasing the error into the
// quadrature null space.
inline std::array<double, 3> l2_error_vs_reference(const FieldState& state, const ExactField& ex,
                                                   const ExactField& ey, const ExactField& hz,
                                                   const MaterialField& mat, const Mesh& mesh,
                                                   const Basis1D& basis) {
    const Basis1D fine = build_basis(basis.k, basis.m + 2);
    const MaterialField fmat = sample_materials(mat.spec, mesh, fine);
    const int m = fine.m, np = basis.n_modes();
    const double t = state.t;
    std::vector<double> pe_x(mesh.n_cells()), pe_y(mesh.n_cells()), pe_h(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](std::size_t eidx) {
        const int e = static_cast<int>(eidx);
        const int i = mesh.cell_i(e), j = mesh.cell_j(e);
        const double jac = 0.25 * mesh.hx[i] * mesh.hy[j];
        double vx[32 * 32], vy[32 * 32], vh[32 * 32];
        eval_cell_values(state.ex_cell(e), fine, vx);
        eval_cell_values(state.ey_cell(e), fine, vy);
        eval_cell_values(state.hz_cell(e), fine, vh);
        (void)np;
        const MaterialSlice ms = material_slice(fmat, e);
        double ax = 0.0, ay = 0.0, ah = 0.0;
        for (int qy = 0; qy < m; ++qy)
            for (int qx = 0; qx < m; ++qx) {
                const double x = mesh.x_edges[i] + 0.5 * (fine.rule.nodes[qx] + 1.0) * mesh.hx[i];
                const double y = mesh.y_edges[j] + 0.5 * (fine.rule.nodes[qy] + 1.0) * mesh.hy[j];
                const int ql = qy * m + qx;
                const double w = fine.rule.weights[qx] * fine.rule.weights[qy];
                const double we = ms.eps0 * (1.0 + ms.chi1[ql]);
                const double dx = vx[ql] - ex(x, y, t);
                const double dy = vy[ql] - ey(x, y, t);
                const double dh = vh[ql] - hz(x, y, t);
                ax += w * we * dx * dx;
                ay += w * we * dy * dy;
                ah += w * ms.mu0[ql] * dh * dh;
            }
        pe_x[e] = jac * ax;
        pe_y[e] = jac * ay;
        pe_h[e] = jac * ah;
    });
    return {std::sqrt(pairwise_sum(pe_x)), std::sqrt(pairwise_sum(pe_y)),
            std::sqrt(pairwise_sum(pe_h))};
}

// Observed order between consecutive (h, error) pairs.
inline std::vector<double> convergence_rates(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 2)
        throw std::invalid_argument("convergence_rates: need at least two (h, error) pairs");
    std::vector<double> orders;
    for (std::size_t l = 0; l + 1 < pairs.size(); ++l) {
        const auto& [h1, e1] = pairs[l];
        const auto& [h2, e2] = pairs[l + 1];
        if (!(e1 > 0.0) || !(e2 > 0.0))
            throw std::invalid_argument(
                "convergence_rates: nonpositive error (exact to rounding); no order to report");
        if (!(h1 > 0.0) || !(h2 > 0.0) || h1 == h2)
            throw std::invalid_argument("convergence_rates: h values must be positive and distinct");
        orders.push_back(std::log(e1 / e2) / std::log(h1 / h2));
    }
    return orders;
}

struct EnergyTraceRow {
    long step = 0;
    double t = 0.0;
    EnergyReport energy;
};

inline void write_energy_trace(const std::string& path, const std::vector<EnergyTraceRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open energy trace file: " + path);
    out << "step,t,quadratic_E,quadratic_H,quartic,boundary_accumulator,total_semidiscrete,"
           "total_fullydiscrete\n";
    char buf[256];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.step,
                      row.t, row.energy.quadratic_E, row.energy.quadratic_H, row.energy.quartic,
                      row.energy.boundary_accumulator, row.energy.total_semidiscrete,
                      row.energy.total_fullydiscrete);
        out << buf;
    }
}

}  // namespace kerrdg
