#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrdg/constitutive.hpp"
#include "kerrdg/field_state.hpp"
#include "kerrdg/materials.hpp"
#include "kerrdg/mesh.hpp"
#include "kerrdg/parallel.hpp"
#include "kerrdg/spatial_operator.hpp"

namespace kerrdg {

struct StepPlan {
    double dt = 0.0;
    long n_steps = 0;
    double T = 0.0;
    double cfl_safety = 0.9;
    double c_inv_estimate = 1.0;
};

// Stability bound: dt <= safety * min( h / (4 C_inv C_epsmu), 1/4 ) with
// h the minimum cell dimension and C_epsmu the worst inverse wave speed
// sqrt-factor over the material samples.
inline double cfl_max_dt(const Mesh& mesh, const MaterialField& mat, double c_inv_estimate,
                         double cfl_safety) {
    if (!(c_inv_estimate > 0.0) || !(cfl_safety > 0.0))
        throw std::invalid_argument("cfl_max_dt: inputs must be positive");
    const double c_epsmu = material_wave_speed_bound(mat);
    return cfl_safety * std::min(mesh.h_min() / (4.0 * c_inv_estimate * c_epsmu), 0.25);
}

// N steps of size T/N covering (0, T]; dt_request = 0 selects the CFL bound.
inline StepPlan make_step_plan(double T, double dt_request, const Mesh& mesh,
                               const MaterialField& mat, double c_inv_estimate,
                               double cfl_safety) {
    if (!(T > 0.0)) throw std::invalid_argument("make_step_plan: final time must be positive");
    StepPlan plan;
    plan.T = T;
    plan.cfl_safety = cfl_safety;
    plan.c_inv_estimate = c_inv_estimate;
    double dt = dt_request;
    if (dt <= 0.0) dt = cfl_max_dt(mesh, mat, c_inv_estimate, cfl_safety);
    plan.n_steps = std::max<long>(1, std::lround(std::ceil(T / dt - 1e-9)));
    plan.dt = T / static_cast<double>(plan.n_steps);
    return plan;
}

// Taylor start for the staggered scheme: H^{1/2} = H^0 + (dt/2) dtH(0) with
// the semi-discrete magnetic velocity (depends only on the electric field).
inline std::vector<double> init_half_step_H(const FieldState& state, double dt,
                                            const FluxConfig& cfg, const MaterialField& mat,
                                            const Mesh& mesh, const Basis1D& basis) {
    const TraceSet tr = extract_traces(state, mesh, basis);
    const FaceFluxes flux = compute_fluxes(tr, cfg);
    const WeakResidual r = curl_residual(state, flux, mesh, basis, nullptr, state.t,
                                         ResidualParts::magnetic_only);
    std::vector<double> dhz;
    solve_weighted_mass(r.rz, mat.mu0.data(), mesh, basis, dhz);
    std::vector<double> h_half(state.hz.size());
    for (std::size_t a = 0; a < h_half.size(); ++a) h_half[a] = state.hz[a] + 0.5 * dt * dhz[a];
    return h_half;
}

struct StepReport {
    bool ok = true;
    int max_newton_iterations = 0;
    int failed_element = -1;
    double failed_residual = 0.0;
    std::string error;
};

namespace detail {

struct ElectricUpdateResult {
    std::vector<double> ex, ey;
    StepReport report;
};

// Solves the implicit electric update on every element. rhs_scale multiplies
// the assembled curl/source residual (dt forward, -dt for the reverse step).
inline ElectricUpdateResult solve_electric_updates(const FieldState& state,
                                                   const WeakResidual& r, double dt,
                                                   const FluxConfig& cfg,
                                                   const MaterialField& mat, const Mesh& mesh,
                                                   const Basis1D& basis,
                                                   const NewtonOptions& nopt) {
    const int N = basis.n_modes() * basis.n_modes();
    const QuadKernel ker(basis);
    ElectricUpdateResult res;
    res.ex.resize(state.ex.size());
    res.ey.resize(state.ey.size());
    std::vector<int> iters(mesh.n_cells(), 0);
    std::vector<char> bad(mesh.n_cells(), 0);
    std::vector<double> badnorm(mesh.n_cells(), 0.0);
    parallel_for(mesh.n_cells(), [&](std::size_t ee) {
        const int e = static_cast<int>(ee);
        const int i = mesh.cell_i(e), j = mesh.cell_j(e);
        thread_local std::vector<double> rhs, out;
        rhs.resize(2 * N);
        out.resize(2 * N);
        for (int A = 0; A < N; ++A) {
            rhs[A] = dt * r.rx[static_cast<std::size_t>(e) * N + A];
            rhs[N + A] = dt * r.ry[static_cast<std::size_t>(e) * N + A];
        }
        ElectricUpdateProblem prob;
        prob.ex_n = state.ex_cell(e).data();
        prob.ey_n = state.ey_cell(e).data();
        prob.rhs = rhs.data();
        prob.mat = material_slice(mat, e);
        prob.hx = mesh.hx[i];
        prob.hy = mesh.hy[j];
        prob.bottom_penalty = (j == 0 && cfg.c0 != 0.0);
        prob.left_penalty = (i == 0 && cfg.c0 != 0.0);
        prob.pen_scale = dt * cfg.c0 * 0.5;
        const NewtonReport rep =
            newton_electric_update(prob, basis, ker, element_workspace(), nopt, out.data());
        iters[e] = rep.iterations;
        if (!rep.converged || rep.nan) {
            bad[e] = 1;
            badnorm[e] = rep.residual_norm;
        }
        for (int A = 0; A < N; ++A) {
            res.ex[static_cast<std::size_t>(e) * N + A] = out[A];
            res.ey[static_cast<std::size_t>(e) * N + A] = out[N + A];
        }
    });
    for (int e = 0; e < mesh.n_cells(); ++e) {
        res.report.max_newton_iterations = std::max(res.report.max_newton_iterations, iters[e]);
        if (bad[e] && res.report.ok) {
            res.report.ok = false;
            res.report.failed_element = e;
            res.report.failed_residual = badnorm[e];
            res.report.error = "Newton did not converge on element " + std::to_string(e) +
                               " (residual " + std::to_string(badnorm[e]) + ")";
        }
    }
    return res;
}

}  // namespace detail

// One leapfrog step: state holds (E^n, H^{n+1/2}) with state.t = t^n; on
// return it holds (E^{n+1}, H^{n+3/2}). The magnetic flux for the electric
// update is assembled penalty-free; the c0/2 pair penalty is part of the
// element-local Newton system.
inline StepReport step_leapfrog(FieldState& state, double dt, const FluxConfig& cfg,
                                const MaterialField& mat, const Mesh& mesh, const Basis1D& basis,
                                const CurrentDensity* source, const NewtonOptions& nopt) {
    const TraceSet tr_n = extract_traces(state, mesh, basis);
    FluxConfig bare = cfg;
    bare.c0 = 0.0;
    const FaceFluxes flux_h = compute_fluxes(tr_n, bare);
    const WeakResidual re = curl_residual(state, flux_h, mesh, basis, source, state.t + 0.5 * dt,
                                          ResidualParts::electric_only);
    detail::ElectricUpdateResult upd =
        detail::solve_electric_updates(state, re, dt, cfg, mat, mesh, basis, nopt);
    if (!upd.report.ok) return upd.report;

    FieldState next = state;
    next.ex = std::move(upd.ex);
    next.ey = std::move(upd.ey);
    const TraceSet tr_np1 = extract_traces(next, mesh, basis);
    const FaceFluxes flux_e = compute_fluxes(tr_np1, bare);
    const WeakResidual rh = curl_residual(next, flux_e, mesh, basis, nullptr, state.t + dt,
                                          ResidualParts::magnetic_only);
    std::vector<double> dhz;
    solve_weighted_mass(rh.rz, mat.mu0.data(), mesh, basis, dhz);
    for (std::size_t a = 0; a < next.hz.size(); ++a) next.hz[a] += dt * dhz[a];
    next.t = state.t + dt;
    if (!next.all_finite()) {
        upd.report.ok = false;
        upd.report.error = "non-finite field after step";
        return upd.report;
    }
    state = std::move(next);
    return upd.report;
}

// Exactly undoes step_leapfrog: first the explicit magnetic downdate, then
// the electric solve with the time levels swapped (the midpoint constitutive
// difference is antisymmetric under the swap).
inline StepReport step_leapfrog_reverse(FieldState& state, double dt, const FluxConfig& cfg,
                                        const MaterialField& mat, const Mesh& mesh,
                                        const Basis1D& basis, const CurrentDensity* source,
                                        const NewtonOptions& nopt) {
    FluxConfig bare = cfg;
    bare.c0 = 0.0;
    const TraceSet tr_now = extract_traces(state, mesh, basis);
    const FaceFluxes flux_e = compute_fluxes(tr_now, bare);
    const WeakResidual rh =
        curl_residual(state, flux_e, mesh, basis, nullptr, state.t, ResidualParts::magnetic_only);
    std::vector<double> dhz;
    solve_weighted_mass(rh.rz, mat.mu0.data(), mesh, basis, dhz);
    FieldState prev = state;
    for (std::size_t a = 0; a < prev.hz.size(); ++a) prev.hz[a] -= dt * dhz[a];

    // prev now holds (E^{n+1}, H^{n+1/2}); assemble the electric rhs at the
    // true half level and solve the swapped update for E^n.
    const TraceSet tr_half = extract_traces(prev, mesh, basis);
    const FaceFluxes flux_h = compute_fluxes(tr_half, bare);
    const WeakResidual re = curl_residual(prev, flux_h, mesh, basis, source, state.t - 0.5 * dt,
                                          ResidualParts::electric_only);
    detail::ElectricUpdateResult upd =
        detail::solve_electric_updates(prev, re, -dt, cfg, mat, mesh, basis, nopt);
    // Note the sign: with rhs and penalty both scaled by -dt, the swapped
    // system is exactly the forward relation read backwards.
    if (!upd.report.ok) return upd.report;
    prev.ex = std::move(upd.ex);
    prev.ey = std::move(upd.ey);
    prev.t = state.t - dt;
    if (!prev.all_finite()) {
        upd.report.ok = false;
        upd.report.error = "non-finite field after reverse step";
        return upd.report;
    }
    state = std::move(prev);
    return upd.report;
}

// Semi-discrete velocity of the full system plus the boundary-dissipation
// rate 2 c0 [ int_bottom (Ex^+)^2 + int_left (Ey^+)^2 ].
struct SemiDiscreteRhs {
    std::vector<double> dex, dey, dhz;
    double accumulator_rate = 0.0;
};

inline SemiDiscreteRhs semidiscrete_rhs(const FieldState& state, const FluxConfig& cfg,
                                        const MaterialField& mat, const Mesh& mesh,
                                        const Basis1D& basis, const CurrentDensity* source) {
    const FieldValues vol = evaluate_volume(state, mesh, basis);
    const TraceSet tr = extract_traces(state, mesh, basis);
    const FaceFluxes flux = compute_fluxes(tr, cfg);
    const WeakResidual r = curl_residual(vol, flux, mesh, basis, source, state.t);
    SemiDiscreteRhs rhs;
    solve_semidiscrete_velocity(state, vol, r.rx, r.ry, mat, mesh, basis, rhs.dex, rhs.dey);
    solve_weighted_mass(r.rz, mat.mu0.data(), mesh, basis, rhs.dhz);
    const auto [bottom, left] = boundary_trace_integrals(tr, mesh, basis);
    rhs.accumulator_rate = 2.0 * cfg.c0 * (bottom + left);
    return rhs;
}

// Classical RK4 on the semi-discrete system; the boundary accumulator rides
// along as an appended quadrature variable so the augmented energy is
// integrated at the same order as the fields.
struct Rk4Observer {
    std::function<void(const FieldState&, double accumulator)> on_step;
};

inline double integrate_semidiscrete_rk4(FieldState& state, double dt, long n_steps,
                                         const FluxConfig& cfg, const MaterialField& mat,
                                         const Mesh& mesh, const Basis1D& basis,
                                         const CurrentDensity* source,
                                         double accumulator0 = 0.0,
                                         const Rk4Observer* observer = nullptr) {
    double acc = accumulator0;
    const std::size_t n = state.ex.size();
    auto axpy = [n](FieldState& out, const FieldState& base, double a, const SemiDiscreteRhs& k) {
        for (std::size_t q = 0; q < n; ++q) {
            out.ex[q] = base.ex[q] + a * k.dex[q];
            out.ey[q] = base.ey[q] + a * k.dey[q];
            out.hz[q] = base.hz[q] + a * k.dhz[q];
        }
    };
    FieldState stage = state;
    for (long step = 0; step < n_steps; ++step) {
        const double t0 = state.t;
        const SemiDiscreteRhs k1 = semidiscrete_rhs(state, cfg, mat, mesh, basis, source);
        axpy(stage, state, 0.5 * dt, k1);
        stage.t = t0 + 0.5 * dt;
        const SemiDiscreteRhs k2 = semidiscrete_rhs(stage, cfg, mat, mesh, basis, source);
        axpy(stage, state, 0.5 * dt, k2);
        stage.t = t0 + 0.5 * dt;
        const SemiDiscreteRhs k3 = semidiscrete_rhs(stage, cfg, mat, mesh, basis, source);
        axpy(stage, state, dt, k3);
        stage.t = t0 + dt;
        const SemiDiscreteRhs k4 = semidiscrete_rhs(stage, cfg, mat, mesh, basis, source);
        for (std::size_t q = 0; q < n; ++q) {
            state.ex[q] += dt / 6.0 * (k1.dex[q] + 2.0 * k2.dex[q] + 2.0 * k3.dex[q] + k4.dex[q]);
            state.ey[q] += dt / 6.0 * (k1.dey[q] + 2.0 * k2.dey[q] + 2.0 * k3.dey[q] + k4.dey[q]);
            state.hz[q] += dt / 6.0 * (k1.dhz[q] + 2.0 * k2.dhz[q] + 2.0 * k3.dhz[q] + k4.dhz[q]);
        }
        acc += dt / 6.0 *
               (k1.accumulator_rate + 2.0 * k2.accumulator_rate + 2.0 * k3.accumulator_rate +
                k4.accumulator_rate);
        state.t = t0 + dt;
        if (!state.all_finite())
            throw std::runtime_error("rk4: non-finite field at step " + std::to_string(step));
        if (observer && observer->on_step) observer->on_step(state, acc);
    }
    return acc;
}

}  // namespace kerrdg
