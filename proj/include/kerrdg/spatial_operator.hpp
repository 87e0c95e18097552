#pragma once

#include <cassert>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "kerrdg/basis.hpp"
#include "kerrdg/constitutive.hpp"
#include "kerrdg/field_state.hpp"
#include "kerrdg/materials.hpp"
#include "kerrdg/mesh.hpp"
#include "kerrdg/parallel.hpp"

namespace kerrdg {

enum class FluxMode { semi_discrete, fully_discrete_pair };

// Alternating flux configuration. c0 is the PEC boundary penalty on the
// bottom (y = p) and left (x = r) walls only; the top and right walls take
// the plain one-sided magnetic trace. c0 = 1/2 reproduces the upwind flux
// with the ghost convention H^- := H^+.
struct FluxConfig {
    double c0 = 0.5;
    FluxMode mode = FluxMode::semi_discrete;
};

// Current density J(x, y, t); empty components mean zero.
struct CurrentDensity {
    std::function<double(double, double, double)> jx;
    std::function<double(double, double, double)> jy;
    bool any() const { return static_cast<bool>(jx) || static_cast<bool>(jy); }
};

// Single-valued flux densities at the face quadrature nodes (same face
// indexing as TraceSet).
struct FaceFluxes {
    int nx = 0, ny = 0, m = 0;
    std::vector<double> v_ey_hat, v_hz_hat;  // vertical faces
    std::vector<double> h_ex_hat, h_hz_hat;  // horizontal faces

    std::size_t vface(int i, int j) const {
        return (static_cast<std::size_t>(j) * (nx + 1) + i) * m;
    }
    std::size_t hface(int i, int j) const {
        return (static_cast<std::size_t>(j) * nx + i) * m;
    }
};

// Interior faces: E from the upper/right side, H from the lower/left side.
// PEC walls: E_hat = 0 everywhere; H_hat on the bottom/left walls is the
// interior trace plus the c0 jump penalty, on the top/right walls the plain
// interior trace. In fully_discrete_pair mode the penalty trace is the
// average of the current and previous electric traces.
inline FaceFluxes compute_fluxes(const TraceSet& tr, const FluxConfig& cfg,
                                 const TraceSet* previous = nullptr) {
    assert((cfg.mode == FluxMode::fully_discrete_pair) == (previous != nullptr));
    FaceFluxes f;
    f.nx = tr.nx;
    f.ny = tr.ny;
    f.m = tr.m;
    f.v_ey_hat.assign(tr.v_ey_lo.size(), 0.0);
    f.v_hz_hat.assign(tr.v_hz_lo.size(), 0.0);
    f.h_ex_hat.assign(tr.h_ex_lo.size(), 0.0);
    f.h_hz_hat.assign(tr.h_hz_lo.size(), 0.0);
    const int m = tr.m;
    for (int j = 0; j < tr.ny; ++j)
        for (int i = 0; i <= tr.nx; ++i) {
            const std::size_t at = tr.vface(i, j);
            if (i == 0) {
                for (int q = 0; q < m; ++q) {
                    double pen = tr.v_ey_hi[at + q];
                    if (previous) pen = 0.5 * (pen + previous->v_ey_hi[at + q]);
                    f.v_hz_hat[at + q] = tr.v_hz_hi[at + q] - cfg.c0 * pen;
                }
            } else if (i == tr.nx) {
                for (int q = 0; q < m; ++q) f.v_hz_hat[at + q] = tr.v_hz_lo[at + q];
            } else {
                for (int q = 0; q < m; ++q) {
                    f.v_ey_hat[at + q] = tr.v_ey_hi[at + q];
                    f.v_hz_hat[at + q] = tr.v_hz_lo[at + q];
                }
            }
        }
    for (int j = 0; j <= tr.ny; ++j)
        for (int i = 0; i < tr.nx; ++i) {
            const std::size_t at = tr.hface(i, j);
            if (j == 0) {
                for (int q = 0; q < m; ++q) {
                    double pen = tr.h_ex_hi[at + q];
                    if (previous) pen = 0.5 * (pen + previous->h_ex_hi[at + q]);
                    f.h_hz_hat[at + q] = tr.h_hz_hi[at + q] + cfg.c0 * pen;
                }
            } else if (j == tr.ny) {
                for (int q = 0; q < m; ++q) f.h_hz_hat[at + q] = tr.h_hz_lo[at + q];
            } else {
                for (int q = 0; q < m; ++q) {
                    f.h_ex_hat[at + q] = tr.h_ex_hi[at + q];
                    f.h_hz_hat[at + q] = tr.h_hz_lo[at + q];
                }
            }
        }
    return f;
}

// Weak-form right-hand sides before constitutive inversion: rx and ry are
// the values of int dtD_x.Phi and int dtD_y.Phi, rz of int mu0 dtH_z.Phi.
struct WeakResidual {
    std::vector<double> rx, ry, rz;  // state layout
};

enum class ResidualParts { all, electric_only, magnetic_only };

inline WeakResidual curl_residual(const FieldValues& vol, const FaceFluxes& flux, const Mesh& mesh,
                                  const Basis1D& basis, const CurrentDensity* source, double t,
                                  ResidualParts parts = ResidualParts::all) {
    const int m = basis.m, np = basis.n_modes(), N = np * np;
    const bool do_e = parts != ResidualParts::magnetic_only;
    const bool do_h = parts != ResidualParts::electric_only;
    WeakResidual r;
    const std::size_t total = static_cast<std::size_t>(mesh.n_cells()) * N;
    if (do_e) {
        r.rx.assign(total, 0.0);
        r.ry.assign(total, 0.0);
    }
    if (do_h) r.rz.assign(total, 0.0);
    parallel_for(mesh.n_cells(), [&](std::size_t ee) {
        const int e = static_cast<int>(ee);
        const int i = mesh.cell_i(e), j = mesh.cell_j(e);
        const double jx2 = 0.5 * mesh.hx[i], jy2 = 0.5 * mesh.hy[j];
        const auto& w = basis.rule.weights;
        double face_a[32], face_b[32], volT[32 * 32];

        if (do_e) {
            double* rx = r.rx.data() + static_cast<std::size_t>(e) * N;
            double* ry = r.ry.data() + static_cast<std::size_t>(e) * N;
            // rx: [Hhat Phi]_{top} - [Hhat Phi]_{bottom} - int H dyPhi + int Jx Phi
            const double* hz_top = &flux.h_hz_hat[flux.hface(i, j + 1)];
            const double* hz_bot = &flux.h_hz_hat[flux.hface(i, j)];
            for (int a = 0; a < np; ++a) {
                double sa = 0.0, sb = 0.0;
                for (int q = 0; q < m; ++q) {
                    sa += w[q] * hz_top[q] * basis.value(q, a);
                    sb += w[q] * hz_bot[q] * basis.value(q, a);
                }
                face_a[a] = jx2 * sa;
                face_b[a] = jx2 * sb;
            }
            const double* hzv = vol.hz.data() + vol.cell_offset(e);
            for (int a = 0; a < np; ++a)
                for (int qy = 0; qy < m; ++qy) {
                    double s = 0.0;
                    for (int qx = 0; qx < m; ++qx) s += w[qx] * hzv[qy * m + qx] * basis.value(qx, a);
                    volT[a * m + qy] = s;
                }
            for (int b = 0; b < np; ++b)
                for (int a = 0; a < np; ++a) {
                    double vterm = 0.0;
                    for (int qy = 0; qy < m; ++qy) vterm += w[qy] * volT[a * m + qy] * basis.deriv(qy, b);
                    rx[b * np + a] =
                        face_a[a] * basis.right[b] - face_b[a] * basis.left[b] - jx2 * vterm;
                }
            // ry: -([Hhat Phi]_{right} - [Hhat Phi]_{left}) + int H dxPhi + int Jy Phi
            const double* hz_r = &flux.v_hz_hat[flux.vface(i + 1, j)];
            const double* hz_l = &flux.v_hz_hat[flux.vface(i, j)];
            for (int b = 0; b < np; ++b) {
                double sa = 0.0, sb = 0.0;
                for (int q = 0; q < m; ++q) {
                    sa += w[q] * hz_r[q] * basis.value(q, b);
                    sb += w[q] * hz_l[q] * basis.value(q, b);
                }
                face_a[b] = jy2 * sa;
                face_b[b] = jy2 * sb;
            }
            for (int b = 0; b < np; ++b)
                for (int qx = 0; qx < m; ++qx) {
                    double s = 0.0;
                    for (int qy = 0; qy < m; ++qy) s += w[qy] * hzv[qy * m + qx] * basis.value(qy, b);
                    volT[b * m + qx] = s;
                }
            for (int b = 0; b < np; ++b)
                for (int a = 0; a < np; ++a) {
                    double vterm = 0.0;
                    for (int qx = 0; qx < m; ++qx) vterm += w[qx] * volT[b * m + qx] * basis.deriv(qx, a);
                    ry[b * np + a] =
                        -face_a[b] * basis.right[a] + face_b[b] * basis.left[a] + jy2 * vterm;
                }
            if (source && source->any()) {
                const double x0 = mesh.x_edges[i], y0 = mesh.y_edges[j];
                const double jac = jx2 * jy2;
                // Separable contraction of the load: first over qx, then qy.
                double jxa[32 * 32], jya[32 * 32];
                for (int qy = 0; qy < m; ++qy) {
                    const double y = y0 + (basis.rule.nodes[qy] + 1.0) * jy2;
                    double sx[32], sy[32];
                    for (int qx = 0; qx < m; ++qx) {
                        const double x = x0 + (basis.rule.nodes[qx] + 1.0) * jx2;
                        sx[qx] = source->jx ? w[qx] * source->jx(x, y, t) : 0.0;
                        sy[qx] = source->jy ? w[qx] * source->jy(x, y, t) : 0.0;
                    }
                    for (int a = 0; a < np; ++a) {
                        double ax = 0.0, ay = 0.0;
                        for (int qx = 0; qx < m; ++qx) {
                            ax += sx[qx] * basis.value(qx, a);
                            ay += sy[qx] * basis.value(qx, a);
                        }
                        jxa[a * m + qy] = ax;
                        jya[a * m + qy] = ay;
                    }
                }
                for (int b = 0; b < np; ++b)
                    for (int a = 0; a < np; ++a) {
                        double ax = 0.0, ay = 0.0;
                        for (int qy = 0; qy < m; ++qy) {
                            ax += w[qy] * jxa[a * m + qy] * basis.value(qy, b);
                            ay += w[qy] * jya[a * m + qy] * basis.value(qy, b);
                        }
                        rx[b * np + a] += jac * ax;
                        ry[b * np + a] += jac * ay;
                    }
            }
        }

        if (do_h) {
            double* rz = r.rz.data() + static_cast<std::size_t>(e) * N;
            // rz: -([Eyhat Phi]_{right} - [Eyhat Phi]_{left}) + int Ey dxPhi
            //     + [Exhat Phi]_{top} - [Exhat Phi]_{bottom} - int Ex dyPhi
            const double* ey_r = &flux.v_ey_hat[flux.vface(i + 1, j)];
            const double* ey_l = &flux.v_ey_hat[flux.vface(i, j)];
            const double* ex_t = &flux.h_ex_hat[flux.hface(i, j + 1)];
            const double* ex_b = &flux.h_ex_hat[flux.hface(i, j)];
            const double* exv = vol.ex.data() + vol.cell_offset(e);
            const double* eyv = vol.ey.data() + vol.cell_offset(e);
            double fy_r[32], fy_l[32], fx_t[32], fx_b[32];
            for (int n = 0; n < np; ++n) {
                double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
                for (int q = 0; q < m; ++q) {
                    s1 += w[q] * ey_r[q] * basis.value(q, n);
                    s2 += w[q] * ey_l[q] * basis.value(q, n);
                    s3 += w[q] * ex_t[q] * basis.value(q, n);
                    s4 += w[q] * ex_b[q] * basis.value(q, n);
                }
                fy_r[n] = jy2 * s1;
                fy_l[n] = jy2 * s2;
                fx_t[n] = jx2 * s3;
                fx_b[n] = jx2 * s4;
            }
            for (int b = 0; b < np; ++b)
                for (int qx = 0; qx < m; ++qx) {
                    double s = 0.0;
                    for (int qy = 0; qy < m; ++qy) s += w[qy] * eyv[qy * m + qx] * basis.value(qy, b);
                    volT[b * m + qx] = s;
                }
            double volX[32 * 32];
            for (int a = 0; a < np; ++a)
                for (int qy = 0; qy < m; ++qy) {
                    double s = 0.0;
                    for (int qx = 0; qx < m; ++qx) s += w[qx] * exv[qy * m + qx] * basis.value(qx, a);
                    volX[a * m + qy] = s;
                }
            for (int b = 0; b < np; ++b)
                for (int a = 0; a < np; ++a) {
                    double vy = 0.0, vx = 0.0;
                    for (int qx = 0; qx < m; ++qx) vy += w[qx] * volT[b * m + qx] * basis.deriv(qx, a);
                    for (int qy = 0; qy < m; ++qy) vx += w[qy] * volX[a * m + qy] * basis.deriv(qy, b);
                    rz[b * np + a] = -fy_r[b] * basis.right[a] + fy_l[b] * basis.left[a] +
                                     jy2 * vy + fx_t[a] * basis.right[b] - fx_b[a] * basis.left[b] -
                                     jx2 * vx;
                }
        }
    });
    return r;
}

inline WeakResidual curl_residual(const FieldState& state, const FaceFluxes& flux,
                                  const Mesh& mesh, const Basis1D& basis,
                                  const CurrentDensity* source, double t,
                                  ResidualParts parts = ResidualParts::all) {
    const FieldValues vol = evaluate_volume(state, mesh, basis);
    return curl_residual(vol, flux, mesh, basis, source, t, parts);
}

// Squared boundary traces entering the dissipation terms:
// first = int_bottom (Ex^+)^2 dx, second = int_left (Ey^+)^2 dy.
inline std::pair<double, double> boundary_trace_integrals(const TraceSet& tr, const Mesh& mesh,
                                                          const Basis1D& basis) {
    std::vector<double> bottom(mesh.nx()), left(mesh.ny());
    for (int i = 0; i < mesh.nx(); ++i) {
        const double* ex = &tr.h_ex_hi[tr.hface(i, 0)];
        double s = 0.0;
        for (int q = 0; q < basis.m; ++q) s += basis.rule.weights[q] * ex[q] * ex[q];
        bottom[i] = 0.5 * mesh.hx[i] * s;
    }
    for (int j = 0; j < mesh.ny(); ++j) {
        const double* ey = &tr.v_ey_hi[tr.vface(0, j)];
        double s = 0.0;
        for (int q = 0; q < basis.m; ++q) s += basis.rule.weights[q] * ey[q] * ey[q];
        left[j] = 0.5 * mesh.hy[j] * s;
    }
    return {pairwise_sum(bottom), pairwise_sum(left)};
}

// The three groups of the semi-discrete energy rate identity, evaluated from
// one state and its semi-discrete velocity:
//   lhs_rate + boundary_dissipation - source_power = 0.
struct EnergyRateTerms {
    double lhs_rate = 0.0;             // d/dt of the nonlinear energy (without accumulator)
    double boundary_dissipation = 0.0; // c0 (bottom + left) squared-trace integrals
    double source_power = 0.0;         // int J . E
};

inline EnergyRateTerms discrete_energy_rate_identity(const FieldState& state,
                                                     const FluxConfig& cfg,
                                                     const MaterialField& mat, const Mesh& mesh,
                                                     const Basis1D& basis,
                                                     const CurrentDensity* source = nullptr) {
    assert(cfg.mode == FluxMode::semi_discrete);
    const FieldValues vol = evaluate_volume(state, mesh, basis);
    const TraceSet tr = extract_traces(state, mesh, basis);
    const FaceFluxes flux = compute_fluxes(tr, cfg);
    const WeakResidual r = curl_residual(vol, flux, mesh, basis, source, state.t);
    std::vector<double> dex, dey, dhz;
    solve_semidiscrete_velocity(state, vol, r.rx, r.ry, mat, mesh, basis, dex, dey);
    solve_weighted_mass(r.rz, mat.mu0.data(), mesh, basis, dhz);

    const int m = basis.m, N = basis.n_modes() * basis.n_modes();
    FieldState vel = state;
    vel.ex = dex;
    vel.ey = dey;
    vel.hz = dhz;
    const FieldValues dvol = evaluate_volume(vel, mesh, basis);
    (void)N;

    std::vector<double> rate(mesh.n_cells()), power(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](std::size_t ee) {
        const int e = static_cast<int>(ee);
        const int i = mesh.cell_i(e), j = mesh.cell_j(e);
        const double jac = 0.25 * mesh.hx[i] * mesh.hy[j];
        const std::size_t at = vol.cell_offset(e);
        const MaterialSlice ms = material_slice(mat, e);
        double acc = 0.0, pacc = 0.0;
        const double x0 = mesh.x_edges[i], y0 = mesh.y_edges[j];
        for (int qy = 0; qy < m; ++qy)
            for (int qx = 0; qx < m; ++qx) {
                const std::size_t q = at + qy * m + qx;
                const int ql = qy * m + qx;
                const double w = basis.rule.weights[qx] * basis.rule.weights[qy];
                const double Ex = vol.ex[q], Ey = vol.ey[q], H = vol.hz[q];
                const double dEx = dvol.ex[q], dEy = dvol.ey[q], dH = dvol.hz[q];
                const double lin = ms.eps0 * (1.0 + ms.chi1[ql]);
                const double edot = Ex * dEx + Ey * dEy;
                acc += w * (lin * edot + ms.mu0[ql] * H * dH +
                            3.0 * ms.eps0 * ms.chi3[ql] * (Ex * Ex + Ey * Ey) * edot);
                if (source && source->any()) {
                    const double x = x0 + (basis.rule.nodes[qx] + 1.0) * 0.5 * mesh.hx[i];
                    const double y = y0 + (basis.rule.nodes[qy] + 1.0) * 0.5 * mesh.hy[j];
                    const double jxs = source->jx ? source->jx(x, y, state.t) : 0.0;
                    const double jys = source->jy ? source->jy(x, y, state.t) : 0.0;
                    pacc += w * (jxs * Ex + jys * Ey);
                }
            }
        rate[e] = jac * acc;
        power[e] = jac * pacc;
    });
    const auto [bottom, left] = boundary_trace_integrals(tr, mesh, basis);
    EnergyRateTerms out;
    out.lhs_rate = pairwise_sum(rate);
    out.boundary_dissipation = cfg.c0 * (bottom + left);
    out.source_power = pairwise_sum(power);
    return out;
}

}  // namespace kerrdg
