#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "kerrdg/config.hpp"
#include "kerrdg/diagnostics.hpp"
#include "kerrdg/projection.hpp"
#include "kerrdg/scenarios.hpp"
#include "kerrdg/timestepping.hpp"

namespace kerrdg {

inline Scenario build_scenario(const RunConfig& cfg) {
    Scenario sc;
    const double eps0 = std::isnan(cfg.material_eps0) ? 1.0 : cfg.material_eps0;
    const double mu0 = std::isnan(cfg.material_mu0) ? 1.0 : cfg.material_mu0;
    const double chi1 = std::isnan(cfg.material_chi1) ? 1.0 : cfg.material_chi1;
    const double chi3 = std::isnan(cfg.material_chi3) ? 1.0 : cfg.material_chi3;
    if (cfg.scenario == "cavity") {
        sc = cavity_mode(cfg.scenario_m, cfg.scenario_n, cfg.scenario_eps_r);
        // Material overrides detach the scenario from its exact solution but
        // keep its initial data (used by energy studies).
        bool overridden = false;
        MaterialSpec ms = sc.materials;
        if (!std::isnan(cfg.material_eps0)) { ms.eps0 = eps0; overridden = true; }
        if (!std::isnan(cfg.material_mu0)) { ms.mu0 = [mu0](double, double) { return mu0; }; overridden = true; }
        if (!std::isnan(cfg.material_chi1)) { ms.chi1 = [chi1](double, double) { return chi1; }; overridden = true; }
        if (!std::isnan(cfg.material_chi3)) { ms.chi3 = [chi3](double, double) { return chi3; }; overridden = true; }
        if (overridden) {
            sc.materials = ms;
            sc.has_exact = false;
            sc.notes += " (materials overridden; exact solution disabled)";
        }
    } else if (cfg.scenario == "manufactured_kerr") {
        sc = manufactured_kerr(cfg.scenario_amplitude, eps0, mu0, chi1, chi3);
    } else if (cfg.scenario == "gaussian_pulse") {
        sc = gaussian_pulse(cfg.scenario_center_x, cfg.scenario_center_y, cfg.scenario_width,
                            cfg.scenario_amplitude, eps0, mu0, chi1, chi3);
    } else {
        throw std::invalid_argument("unknown scenario: " + cfg.scenario);
    }
    return sc;
}

// Initial data per the error analysis: E_x via Pi1, E_y via Pi2, H_z via Pi3.
inline FieldState project_initial_state(const Scenario& sc, const Mesh& mesh,
                                        const Basis1D& basis) {
    FieldState state = make_state(mesh, basis, 0.0);
    state.ex = project_2d(TensorProjector::pi1,
                          [&](double x, double y) { return sc.ex(x, y, 0.0); }, mesh, basis);
    state.ey = project_2d(TensorProjector::pi2,
                          [&](double x, double y) { return sc.ey(x, y, 0.0); }, mesh, basis);
    state.hz = project_2d(TensorProjector::pi3,
                          [&](double x, double y) { return sc.hz(x, y, 0.0); }, mesh, basis);
    return state;
}

struct RunResult {
    int exit_code = 1;
    double energy0 = 0.0;
    double energyN = 0.0;
    double ratio = 0.0;
    int max_newton_iterations = 0;
    long steps_done = 0;
    FieldState final_state;
};

inline RunResult cmd_run(const RunConfig& cfg, std::ostream& out) {
    if (cfg.threads > 0) set_thread_count(cfg.threads);
    for (const auto& w : cfg.warnings) out << "warning: " << w << "\n";
    out << "# effective configuration\n" << effective_config_echo(cfg);

    const Scenario sc = build_scenario(cfg);
    const Mesh mesh = build_mesh(sc.r, sc.s, sc.p, sc.q, cfg.nx, cfg.ny);
    const Basis1D basis = build_basis(cfg.order, cfg.quadrature_nodes());
    const MaterialField mat = sample_materials(sc.materials, mesh, basis);
    const FluxConfig flux_cfg{cfg.c0, FluxMode::semi_discrete};
    const NewtonOptions nopt{cfg.newton_tol, cfg.newton_max_iter};

    const StepPlan plan = make_step_plan(cfg.final_time, cfg.dt, mesh, mat,
                                         cfg.effective_c_inv(), cfg.cfl_safety);
    const double dt_bound = cfl_max_dt(mesh, mat, cfg.effective_c_inv(), 1.0);
    if (plan.dt > dt_bound)
        out << "warning: dt=" << plan.dt << " exceeds the stability bound " << dt_bound << "\n";
    out << "dt=" << plan.dt << " steps=" << plan.n_steps << "\n";

    FieldState state = project_initial_state(sc, mesh, basis);
    RunResult res;
    std::vector<EnergyTraceRow> trace;
    const CurrentDensity* source = sc.source.any() ? &sc.source : nullptr;

    auto maybe_snapshot = [&](long step, const FieldState& s) {
        if (cfg.snapshot_path.empty()) return;
        const bool last = step == plan.n_steps;
        const bool strided = cfg.snapshot_stride > 0 && step % cfg.snapshot_stride == 0;
        if (last || strided) {
            std::string path = cfg.snapshot_path;
            if (cfg.snapshot_stride > 0) {
                const auto dot = path.rfind('.');
                const std::string tag = "_step" + std::to_string(step);
                path = dot == std::string::npos ? path + tag
                                                : path.substr(0, dot) + tag + path.substr(dot);
            }
            write_snapshot(path, s, basis);
        }
    };

    if (cfg.integrator == "leapfrog") {
        if (cfg.start == "analytic" && sc.has_exact) {
            state.hz = project_2d(TensorProjector::pi3,
                                  [&](double x, double y) { return sc.hz(x, y, 0.5 * plan.dt); },
                                  mesh, basis);
        } else {
            state.hz = init_half_step_H(state, plan.dt, flux_cfg, mat, mesh, basis);
        }
        BoundaryAccumulator acc;
        acc.prime(boundary_dissipation_rate(state, flux_cfg, mesh, basis));
        EnergyReport er = energy_semidiscrete(state, acc.value, mat, mesh, basis);
        res.energy0 = er.total_fullydiscrete;
        trace.push_back({0, 0.0, er});
        maybe_snapshot(0, state);
        for (long n = 0; n < plan.n_steps; ++n) {
            const StepReport rep =
                step_leapfrog(state, plan.dt, flux_cfg, mat, mesh, basis, source, nopt);
            res.max_newton_iterations =
                std::max(res.max_newton_iterations, rep.max_newton_iterations);
            if (!rep.ok) {
                out << "error: step " << n + 1 << ": " << rep.error << "\n";
                res.exit_code = 2;
                res.steps_done = n;
                res.final_state = std::move(state);
                return res;
            }
            acc.advance(boundary_dissipation_rate(state, flux_cfg, mesh, basis), plan.dt);
            er = energy_semidiscrete(state, acc.value, mat, mesh, basis);
            trace.push_back({n + 1, state.t, er});
            maybe_snapshot(n + 1, state);
        }
        res.energyN = er.total_fullydiscrete;
    } else {
        EnergyReport er = energy_semidiscrete(state, 0.0, mat, mesh, basis);
        res.energy0 = er.total_semidiscrete;
        trace.push_back({0, 0.0, er});
        maybe_snapshot(0, state);
        long step_counter = 0;
        Rk4Observer obs;
        obs.on_step = [&](const FieldState& s, double accumulator) {
            ++step_counter;
            trace.push_back(
                {step_counter, s.t, energy_semidiscrete(s, accumulator, mat, mesh, basis)});
        };
        try {
            integrate_semidiscrete_rk4(state, plan.dt, plan.n_steps, flux_cfg, mat, mesh, basis,
                                       source, 0.0, &obs);
        } catch (const std::exception& e) {
            out << "error: " << e.what() << "\n";
            res.exit_code = 2;
            res.steps_done = step_counter;
            res.final_state = std::move(state);
            return res;
        }
        maybe_snapshot(plan.n_steps, state);
        res.energyN = trace.back().energy.total_semidiscrete;
    }

    if (!cfg.energy_trace_path.empty()) write_energy_trace(cfg.energy_trace_path, trace);
    res.steps_done = plan.n_steps;
    res.ratio = res.energy0 > 0.0 ? res.energyN / res.energy0 : (res.energyN > 0.0 ? INFINITY : 0.0);
    res.final_state = std::move(state);
    char line[160];
    std::snprintf(line, sizeof line, "E0=%.12g EN=%.12g ratio=%.12g max_newton_iters=%d\n",
                  res.energy0, res.energyN, res.ratio, res.max_newton_iterations);
    out << line;
    if (res.ratio > 3.0) {
        out << "stability: VIOLATED (energy ratio exceeds 3)\n";
        res.exit_code = 3;
    } else {
        out << "stability: OK\n";
        res.exit_code = 0;
    }
    return res;
}

struct ConvergenceRow {
    int level = 0;
    double spacing = 0.0;  // h or dt
    double err_ex = 0.0, err_ey = 0.0, err_hz = 0.0;
    double order = 0.0;  // from the combined error; 0 on the first row
};

// The H error is measured at the half level the scheme stores (state.t +
// dt/2 for leapfrog), so both fields are compared at their own time points.
inline std::array<double, 3> run_errors_vs_exact(const Scenario& sc, const RunConfig& cfg,
                                                 int nx, int ny, double dt_request,
                                                 std::ostream& out, int* max_newton = nullptr) {
    RunConfig rc = cfg;
    rc.nx = nx;
    rc.ny = ny;
    rc.dt = dt_request;
    rc.energy_trace_path.clear();
    rc.snapshot_path.clear();
    std::ostringstream sink;
    RunResult rr = cmd_run(rc, sink);
    if (rr.exit_code != 0 && rr.exit_code != 3)
        throw std::runtime_error("convergence run failed on " + std::to_string(nx) + "x" +
                                 std::to_string(ny) + ": " + sink.str());
    if (max_newton) *max_newton = std::max(*max_newton, rr.max_newton_iterations);
    const Mesh mesh = build_mesh(sc.r, sc.s, sc.p, sc.q, nx, ny);
    const Basis1D basis = build_basis(cfg.order, cfg.quadrature_nodes());
    const MaterialField mat = sample_materials(sc.materials, mesh, basis);
    const double t_e = rr.final_state.t;
    const double dt_used = rr.steps_done > 0 ? cfg.final_time / rr.steps_done : 0.0;
    const double t_h =
        cfg.integrator == "leapfrog" ? t_e + 0.5 * dt_used : t_e;
    (void)out;
    return l2_error_vs_reference(
        rr.final_state, sc.ex, sc.ey,
        [&](double x, double y, double) { return sc.hz(x, y, t_h); }, mat, mesh, basis);
}

enum class ConvergenceAxis { space, time };

inline std::vector<ConvergenceRow> converge_study(const RunConfig& cfg, ConvergenceAxis axis,
                                                  int levels, std::ostream& out) {
    const Scenario sc = build_scenario(cfg);
    if (!sc.has_exact)
        throw std::invalid_argument("converge: scenario '" + cfg.scenario +
                                    "' has no exact solution");
    if (cfg.threads > 0) set_thread_count(cfg.threads);
    std::vector<ConvergenceRow> rows;
    double prev_err = 0.0, prev_sp = 0.0;
    for (int l = 0; l < levels; ++l) {
        ConvergenceRow row;
        row.level = l;
        std::array<double, 3> errs{};
        if (axis == ConvergenceAxis::space) {
            const int n = cfg.nx << l;
            const double dt = cfg.dt > 0.0 ? cfg.dt / (1 << l) : 0.0;  // dt ~ h via fixed safety
            errs = run_errors_vs_exact(sc, cfg, n, (cfg.ny * n) / cfg.nx, dt, out);
            row.spacing = (sc.s - sc.r) / n;
        } else {
            if (!(cfg.dt > 0.0))
                throw std::invalid_argument("converge --axis time requires an explicit dt");
            const double dt = cfg.dt / (1 << l);
            errs = run_errors_vs_exact(sc, cfg, cfg.nx, cfg.ny, dt, out);
            row.spacing = cfg.final_time / std::lround(cfg.final_time / dt);
        }
        row.err_ex = errs[0];
        row.err_ey = errs[1];
        row.err_hz = errs[2];
        const double total =
            std::sqrt(errs[0] * errs[0] + errs[1] * errs[1] + errs[2] * errs[2]);
        if (l > 0 && total > 0.0 && prev_err > 0.0)
            row.order = std::log(prev_err / total) / std::log(prev_sp / row.spacing);
        prev_err = total;
        prev_sp = row.spacing;
        rows.push_back(row);
        char buf[180];
        std::snprintf(buf, sizeof buf, "level=%d %s=%.8g err_Ex=%.8e err_Ey=%.8e err_Hz=%.8e order=%.3f\n",
                      l, axis == ConvergenceAxis::space ? "h" : "dt", row.spacing, row.err_ex,
                      row.err_ey, row.err_hz, row.order);
        out << buf;
    }
    return rows;
}

inline int cmd_converge(const RunConfig& cfg, ConvergenceAxis axis, int levels,
                        std::ostream& out) {
    const std::vector<ConvergenceRow> rows = converge_study(cfg, axis, levels, out);
    if (!cfg.rates_path.empty()) {
        std::ofstream f(cfg.rates_path);
        if (!f) throw std::runtime_error("cannot open rates file: " + cfg.rates_path);
        f << "level," << (axis == ConvergenceAxis::space ? "h" : "dt")
          << ",err_Ex,err_Ey,err_Hz,order\n";
        char buf[180];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.level,
                          r.spacing, r.err_ex, r.err_ey, r.err_hz, r.order);
            f << buf;
        }
    }
    return 0;
}

}  // namespace kerrdg
