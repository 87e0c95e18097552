#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "kerrdg/projection.hpp"
#include "kerrdg/scenarios.hpp"
#include "kerrdg/spatial_operator.hpp"

using namespace kerrdg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

FieldState random_state(const Mesh& mesh, const Basis1D& basis, unsigned seed, double scale = 1.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> val(-scale, scale);
    FieldState s = make_state(mesh, basis);
    for (auto& v : s.ex) v = val(rng);
    for (auto& v : s.ey) v = val(rng);
    for (auto& v : s.hz) v = val(rng);
    return s;
}

MaterialSpec wavy_materials() {
    MaterialSpec spec;
    spec.eps0 = 1.3;
    spec.mu0 = [](double x, double y) { return 1.2 + 0.3 * std::sin(2.0 * x + y); };
    spec.chi1 = [](double x, double y) { return 0.5 + 0.2 * std::cos(x) * std::cos(y); };
    spec.chi3 = [](double x, double y) { return 0.8 + 0.3 * std::sin(3.0 * y) * std::sin(x); };
    return spec;
}

}  // namespace

TEST_CASE("flux values follow the alternating rules") {
    const Mesh mesh = build_mesh(0.0, 1.0, 0.0, 1.0, 3, 3);
    const Basis1D basis = build_basis(1, 4);
    const FieldState state = random_state(mesh, basis, 42);
    const TraceSet tr = extract_traces(state, mesh, basis);
    const FaceFluxes f = compute_fluxes(tr, {0.25, FluxMode::semi_discrete});
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i <= 3; ++i)
            for (int q = 0; q < basis.m; ++q) {
                const std::size_t at = tr.vface(i, j) + q;
                if (i == 0) {
                    REQUIRE(f.v_ey_hat[at] == 0.0);
                    REQUIRE_THAT(f.v_hz_hat[at],
                                 WithinAbs(tr.v_hz_hi[at] - 0.25 * tr.v_ey_hi[at], 1e-15));
                } else if (i == 3) {
                    REQUIRE(f.v_ey_hat[at] == 0.0);
                    REQUIRE(f.v_hz_hat[at] == tr.v_hz_lo[at]);
                } else {
                    REQUIRE(f.v_ey_hat[at] == tr.v_ey_hi[at]);  // E from the right
                    REQUIRE(f.v_hz_hat[at] == tr.v_hz_lo[at]);  // H from the left
                }
            }
    for (int j = 0; j <= 3; ++j)
        for (int i = 0; i < 3; ++i)
            for (int q = 0; q < basis.m; ++q) {
                const std::size_t at = tr.hface(i, j) + q;
                if (j == 0) {
                    REQUIRE(f.h_ex_hat[at] == 0.0);
                    REQUIRE_THAT(f.h_hz_hat[at],
                                 WithinAbs(tr.h_hz_hi[at] + 0.25 * tr.h_ex_hi[at], 1e-15));
                } else if (j == 3) {
                    REQUIRE(f.h_ex_hat[at] == 0.0);
                    REQUIRE(f.h_hz_hat[at] == tr.h_hz_lo[at]);
                } else {
                    REQUIRE(f.h_ex_hat[at] == tr.h_ex_hi[at]);
                    REQUIRE(f.h_hz_hat[at] == tr.h_hz_lo[at]);
                }
            }
}

TEST_CASE("boundary flux arithmetic and upwind equivalence at c0 = 1/2") {
    // Constant fields so the bottom-boundary traces are Ex = 2, Hz = 3.
    const Mesh mesh = build_mesh(0.0, 1.0, 0.0, 1.0, 2, 2);
    const Basis1D basis = build_basis(1, 4);
    FieldState state = make_state(mesh, basis);
    state.ex = project_2d(TensorProjector::pi4, [](double, double) { return 2.0; }, mesh, basis);
    state.hz = project_2d(TensorProjector::pi4, [](double, double) { return 3.0; }, mesh, basis);
    const TraceSet tr = extract_traces(state, mesh, basis);
    const FaceFluxes f = compute_fluxes(tr, {0.5, FluxMode::semi_discrete});
    for (int q = 0; q < basis.m; ++q)
        REQUIRE_THAT(f.h_hz_hat[f.hface(0, 0) + q], WithinAbs(4.0, 1e-13));

    // c0 = 1/2 equals the upwind form 0.5 (H+ + H-) + 0.5 [Ex] with H- := H+.
    for (int q = 0; q < basis.m; ++q) {
        const std::size_t at = tr.hface(1, 0) + q;
        const double upwind = 0.5 * (tr.h_hz_hi[at] + tr.h_hz_hi[at]) + 0.5 * (tr.h_ex_hi[at] - 0.0);
        REQUIRE_THAT(f.h_hz_hat[at], WithinAbs(upwind, 1e-13));
    }

    // Constant H with c0 = 0: the flux is the constant on every face.
    FieldState hone = make_state(mesh, basis);
    hone.hz = project_2d(TensorProjector::pi4, [](double, double) { return 1.0; }, mesh, basis);
    const FaceFluxes f0 =
        compute_fluxes(extract_traces(hone, mesh, basis), {0.0, FluxMode::semi_discrete});
    for (double v : f0.v_hz_hat) REQUIRE_THAT(v, WithinAbs(1.0, 1e-13));
    for (double v : f0.h_hz_hat) REQUIRE_THAT(v, WithinAbs(1.0, 1e-13));
}

TEST_CASE("pair mode averages the penalty trace") {
    const Mesh mesh = build_mesh(0.0, 1.0, 0.0, 1.0, 2, 2);
    const Basis1D basis = build_basis(1, 4);
    const FieldState a = random_state(mesh, basis, 1);
    const FieldState b = random_state(mesh, basis, 2);
    const TraceSet ta = extract_traces(a, mesh, basis);
    const TraceSet tb = extract_traces(b, mesh, basis);
    const FaceFluxes f = compute_fluxes(ta, {0.5, FluxMode::fully_discrete_pair}, &tb);
    for (int q = 0; q < basis.m; ++q) {
        const std::size_t at = ta.hface(0, 0) + q;
        const double want = ta.h_hz_hi[at] + 0.5 * 0.5 * (ta.h_ex_hi[at] + tb.h_ex_hi[at]);
        REQUIRE_THAT(f.h_hz_hat[at], WithinAbs(want, 1e-14));
    }
}

TEST_CASE("curl residual of the zero state vanishes") {
    const Mesh mesh = build_mesh(0.0, 1.0, 0.0, 1.0, 3, 2);
    const Basis1D basis = build_basis(2, 6);
    const FieldState state = make_state(mesh, basis);
    const FaceFluxes f =
        compute_fluxes(extract_traces(state, mesh, basis), {0.5, FluxMode::semi_discrete});
    const WeakResidual r = curl_residual(state, f, mesh, basis, nullptr, 0.0);
    for (double v : r.rx) REQUIRE(v == 0.0);
    for (double v : r.ry) REQUIRE(v == 0.0);
    for (double v : r.rz) REQUIRE(v == 0.0);
}

TEST_CASE("rx of a globally linear H_z is the load vector of its y-derivative") {
    const Mesh mesh = build_mesh({0.0, 0.3, 1.0}, {0.0, 0.55, 1.0});
    const Basis1D basis = build_basis(2, 6);
    FieldState state = make_state(mesh, basis);
    state.hz = project_2d(TensorProjector::pi3, [](double, double y) { return y; }, mesh, basis);
    const FaceFluxes f =
        compute_fluxes(extract_traces(state, mesh, basis), {0.0, FluxMode::semi_discrete});
    const WeakResidual r = curl_residual(state, f, mesh, basis, nullptr, 0.0);
    const int np = basis.n_modes(), N = np * np;
    for (int e = 0; e < mesh.n_cells(); ++e) {
        const double jac = 0.25 * mesh.hx[mesh.cell_i(e)] * mesh.hy[mesh.cell_j(e)];
        for (int b = 0; b < np; ++b)
            for (int a = 0; a < np; ++a) {
                double load = 0.0;  // int 1 * Phi over the cell
                for (int qy = 0; qy < basis.m; ++qy)
                    for (int qx = 0; qx < basis.m; ++qx)
                        load += basis.rule.weights[qx] * basis.rule.weights[qy] *
                                basis.value(qx, a) * basis.value(qy, b);
                load *= jac;
                REQUIRE_THAT(r.rx[static_cast<std::size_t>(e) * N + b * np + a],
                             WithinAbs(load, 1e-13));
            }
    }
}

TEST_CASE("rz approaches the weak form of the negative curl under refinement") {
    const Scenario sc = cavity_mode(1, 1, 1.0);
    const int k = 1;
    const Basis1D basis = build_basis(k, 2 * k + 2);
    const double t = 0.3;
    const double w = M_PI * std::sqrt(2.0);
    auto curl_e = [&](double x, double y) {
        const double dxey = M_PI * M_PI / w * std::cos(M_PI * x) * std::cos(M_PI * y) * std::sin(w * t);
        const double dyex = -M_PI * M_PI / w * std::cos(M_PI * x) * std::cos(M_PI * y) * std::sin(w * t);
        return dxey - dyex;
    };
    double prev = 0.0;
    for (int n : {4, 8}) {
        const Mesh mesh = build_mesh(0.0, 1.0, 0.0, 1.0, n, n);
        FieldState state = make_state(mesh, basis);
        state.ex = project_2d(TensorProjector::pi1,
                              [&](double x, double y) { return sc.ex(x, y, t); }, mesh, basis);
        state.ey = project_2d(TensorProjector::pi2,
                              [&](double x, double y) { return sc.ey(x, y, t); }, mesh, basis);
        const FaceFluxes f =
            compute_fluxes(extract_traces(state, mesh, basis), {0.0, FluxMode::semi_discrete});
        const WeakResidual r = curl_residual(state, f, mesh, basis, nullptr, t);
        const int np = basis.n_modes(), N = np * np;
        double err = 0.0, scale = 0.0;
        for (int e = 0; e < mesh.n_cells(); ++e) {
            const int i = mesh.cell_i(e), j = mesh.cell_j(e);
            const double jac = 0.25 * mesh.hx[i] * mesh.hy[j];
            for (int b = 0; b < np; ++b)
                for (int a = 0; a < np; ++a) {
                    double load = 0.0;
                    for (int qy = 0; qy < basis.m; ++qy)
                        for (int qx = 0; qx < basis.m; ++qx) {
                            const double x =
                                mesh.x_edges[i] + 0.5 * (basis.rule.nodes[qx] + 1.0) * mesh.hx[i];
                            const double y =
                                mesh.y_edges[j] + 0.5 * (basis.rule.nodes[qy] + 1.0) * mesh.hy[j];
                            load += basis.rule.weights[qx] * basis.rule.weights[qy] *
                                    (-curl_e(x, y)) * basis.value(qx, a) * basis.value(qy, b);
                        }
                    load *= jac;
                    err = std::max(err,
                                   std::abs(r.rz[static_cast<std::size_t>(e) * N + b * np + a] -
                                            load));
                    scale = std::max(scale, std::abs(load));
                }
        }
        const double rel = err / scale;
        if (prev > 0.0) REQUIRE(prev / rel > 2.8);  // about order k+1 = 2
        prev = rel;
    }
}

TEST_CASE("summation by parts: discrete power balance") {
    const Mesh mesh = build_mesh(0.0, 1.0, 0.0, 1.0, 4, 3);
    const Basis1D basis = build_basis(2, 6);
    const FieldState state = random_state(mesh, basis, 7);
    const TraceSet tr = extract_traces(state, mesh, basis);
    auto power = [&](double c0) {
        const FaceFluxes f = compute_fluxes(tr, {c0, FluxMode::semi_discrete});
        const WeakResidual r = curl_residual(state, f, mesh, basis, nullptr, 0.0);
        double p = 0.0, scale = 0.0;
        for (std::size_t a = 0; a < r.rx.size(); ++a) {
            p += r.rx[a] * state.ex[a] + r.ry[a] * state.ey[a] + r.rz[a] * state.hz[a];
            scale += std::abs(r.rx[a] * state.ex[a]) + std::abs(r.ry[a] * state.ey[a]) +
                     std::abs(r.rz[a] * state.hz[a]);
        }
        return std::pair<double, double>{p, scale};
    };
    const auto [p0, s0] = power(0.0);
    REQUIRE_THAT(p0, WithinAbs(0.0, 1e-11 * s0));

    const auto [bottom, left] = boundary_trace_integrals(tr, mesh, basis);
    const double c0 = 0.8;
    const auto [pc, sc] = power(c0);
    (void)sc;
    REQUIRE_THAT(pc, WithinRel(-c0 * (bottom + left), 1e-11));
}

TEST_CASE("energy rate identity") {
    const Mesh mesh = build_mesh(0.0, 1.0, 0.0, 1.0, 4, 4);
    const Basis1D basis = build_basis(2, 6);
    const MaterialField mat = sample_materials(wavy_materials(), mesh, basis);

    SECTION("zero state gives zero terms") {
        const FieldState z = make_state(mesh, basis);
        const EnergyRateTerms t =
            discrete_energy_rate_identity(z, {0.5, FluxMode::semi_discrete}, mat, mesh, basis);
        REQUIRE(t.lhs_rate == 0.0);
        REQUIRE(t.boundary_dissipation == 0.0);
        REQUIRE(t.source_power == 0.0);
    }

    SECTION("conservative without penalty or source") {
        const FieldState s = random_state(mesh, basis, 11);
        const EnergyRateTerms t =
            discrete_energy_rate_identity(s, {0.0, FluxMode::semi_discrete}, mat, mesh, basis);
        REQUIRE_THAT(t.lhs_rate, WithinAbs(0.0, 1e-11));
        REQUIRE(t.boundary_dissipation == 0.0);
    }

    SECTION("penalty balance at c0 = 1") {
        const FieldState s = random_state(mesh, basis, 13);
        const EnergyRateTerms t =
            discrete_energy_rate_identity(s, {1.0, FluxMode::semi_discrete}, mat, mesh, basis);
        REQUIRE(t.boundary_dissipation > 0.0);
        REQUIRE_THAT(t.lhs_rate, WithinRel(-t.boundary_dissipation, 1e-11));
    }

    SECTION("full balance with a source") {
        CurrentDensity j;
        j.jx = [](double x, double y, double t) { return std::sin(x + t) * std::cos(y); };
        j.jy = [](double x, double y, double t) { return std::cos(2.0 * x) * std::sin(y - t); };
        FieldState s = random_state(mesh, basis, 17);
        s.t = 0.4;
        const EnergyRateTerms t = discrete_energy_rate_identity(
            s, {0.7, FluxMode::semi_discrete}, mat, mesh, basis, &j);
        const double defect = t.lhs_rate + t.boundary_dissipation - t.source_power;
        const double scale =
            std::abs(t.lhs_rate) + std::abs(t.boundary_dissipation) + std::abs(t.source_power);
        REQUIRE_THAT(defect, WithinAbs(0.0, 1e-11 * scale));
    }
}
