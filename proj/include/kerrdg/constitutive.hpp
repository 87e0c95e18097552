#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstring>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kerrdg/basis.hpp"
#include "kerrdg/field_state.hpp"
#include "kerrdg/materials.hpp"
#include "kerrdg/mesh.hpp"
#include "kerrdg/parallel.hpp"

namespace kerrdg {

// Per-cell view into sampled materials.
struct MaterialSlice {
    double eps0 = 1.0;
    const double* mu0 = nullptr;
    const double* chi1 = nullptr;
    const double* chi3 = nullptr;
};

inline MaterialSlice material_slice(const MaterialField& mat, int e) {
    const std::size_t at = mat.cell_offset(e);
    return {mat.eps0, mat.mu0.data() + at, mat.chi1.data() + at, mat.chi3.data() + at};
}

// 2D basis values phi[q*N + mode] and combined weights wq[q] at the tensor
// quadrature nodes, q = qy*m + qx, mode = iy*(k+1) + ix. Built once per basis
// and shared by all element kernels.
struct QuadKernel {
    int m = 0;
    int np = 0;
    std::vector<double> phi;  // m^2 x N
    std::vector<double> wq;   // m^2

    QuadKernel() = default;
    explicit QuadKernel(const Basis1D& basis) : m(basis.m), np(basis.n_modes()) {
        const int N = np * np, m2 = m * m;
        phi.resize(static_cast<std::size_t>(m2) * N);
        wq.resize(m2);
        for (int qy = 0; qy < m; ++qy)
            for (int qx = 0; qx < m; ++qx) {
                const int q = qy * m + qx;
                wq[q] = basis.rule.weights[qx] * basis.rule.weights[qy];
                for (int iy = 0; iy < np; ++iy)
                    for (int ix = 0; ix < np; ++ix)
                        phi[static_cast<std::size_t>(q) * N + iy * np + ix] =
                            basis.value(qx, ix) * basis.value(qy, iy);
            }
    }
    int n_modes_2d() const { return np * np; }
    int n_points() const { return m * m; }
};

// Reusable per-worker scratch for the element solves.
struct ElementWorkspace {
    std::vector<double> exo, eyo, exn, eyn;
    std::vector<double> t11, t12, t22;  // packed upper triangles
    Eigen::MatrixXd J;
    Eigen::VectorXd u, R, du, u_try, R_try;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;

    void resize(int m2, int n) {
        exo.resize(m2);
        eyo.resize(m2);
        exn.resize(m2);
        eyn.resize(m2);
        const int half = n / 2;
        t11.resize(static_cast<std::size_t>(half) * (half + 1) / 2);
        t12.resize(t11.size());
        t22.resize(t11.size());
        J.resize(n, n);
        u.resize(n);
        R.resize(n);
        du.resize(n);
        u_try.resize(n);
        R_try.resize(n);
    }
};

inline ElementWorkspace& element_workspace() {
    thread_local ElementWorkspace ws;
    return ws;
}

namespace detail {

// Accumulates the three symmetric blocks sum_q a(q) phi[A] phi[B] into packed
// upper triangles, then scatters them into the 2N x 2N matrix
// [ M11  M12 ; M12  M22 ].
template <class PointCoeffs>
inline void accumulate_symmetric_blocks(const QuadKernel& ker, double jac, ElementWorkspace& ws,
                                        Eigen::MatrixXd& M, PointCoeffs&& coeffs_at) {
    const int N = ker.n_modes_2d(), m2 = ker.n_points();
    std::fill(ws.t11.begin(), ws.t11.end(), 0.0);
    std::fill(ws.t12.begin(), ws.t12.end(), 0.0);
    std::fill(ws.t22.begin(), ws.t22.end(), 0.0);
    double* t11 = ws.t11.data();
    double* t12 = ws.t12.data();
    double* t22 = ws.t22.data();
    for (int q = 0; q < m2; ++q) {
        double a11, a12, a22;
        coeffs_at(q, a11, a12, a22);
        const double w = jac * ker.wq[q];
        a11 *= w;
        a12 *= w;
        a22 *= w;
        const double* phi = &ker.phi[static_cast<std::size_t>(q) * N];
        int idx = 0;
        for (int A = 0; A < N; ++A) {
            const double pA = phi[A];
            for (int B = A; B < N; ++B, ++idx) {
                const double pAB = pA * phi[B];
                t11[idx] += a11 * pAB;
                t12[idx] += a12 * pAB;
                t22[idx] += a22 * pAB;
            }
        }
    }
    M.setZero(2 * N, 2 * N);
    int idx = 0;
    for (int A = 0; A < N; ++A)
        for (int B = A; B < N; ++B, ++idx) {
            M(A, B) = M(B, A) = t11[idx];
            M(A, N + B) = M(B, N + A) = M(N + A, B) = M(N + B, A) = t12[idx];
            M(N + A, N + B) = M(N + B, N + A) = t22[idx];
        }
}

}  // namespace detail

// Matrix of the bilinear form (dtE, Phi) -> int eps0(1+chi1) dtE.Phi
// + eps0 chi3 [|E|^2 dtE.Phi + 2 (E.dtE)(E.Phi)], acting on stacked
// (Ex, Ey) coefficient blocks. Symmetric positive definite.
inline void assemble_nonlinear_mass_into(const double* ex_vals, const double* ey_vals,
                                         const MaterialSlice& mat, const QuadKernel& ker,
                                         ElementWorkspace& ws, double hx, double hy,
                                         Eigen::MatrixXd& M) {
    detail::accumulate_symmetric_blocks(
        ker, 0.25 * hx * hy, ws, M, [&](int q, double& a11, double& a12, double& a22) {
            const double Ex = ex_vals[q], Ey = ey_vals[q];
            const double S = Ex * Ex + Ey * Ey;
            const double lin = mat.eps0 * (1.0 + mat.chi1[q]);
            const double c3 = mat.eps0 * mat.chi3[q];
            a11 = lin + c3 * (S + 2.0 * Ex * Ex);
            a12 = c3 * 2.0 * Ex * Ey;
            a22 = lin + c3 * (S + 2.0 * Ey * Ey);
        });
}

inline Eigen::MatrixXd assemble_nonlinear_mass(const double* ex_vals, const double* ey_vals,
                                               const MaterialSlice& mat, const Basis1D& basis,
                                               double hx, double hy) {
    const QuadKernel ker(basis);
    ElementWorkspace ws;
    ws.resize(ker.n_points(), 2 * ker.n_modes_2d());
    Eigen::MatrixXd M;
    assemble_nonlinear_mass_into(ex_vals, ey_vals, mat, ker, ws, hx, hy, M);
    return M;
}

// Both closed forms of the cubic-nonlinearity rate identity; they agree for
// every (E, dtE) pair, which is what makes the quartic energy term telescope.
inline std::pair<double, double> cubic_energy_identity_check(const std::array<double, 2>& E,
                                                             const std::array<double, 2>& Edot) {
    const double Ex = E[0], Ey = E[1], dEx = Edot[0], dEy = Edot[1];
    const double S = Ex * Ex + Ey * Ey;
    const double dot = Ex * dEx + Ey * dEy;
    const double lhs = S * dot + 2.0 * (Ex * Ex * dEx * Ex + Ey * Ey * dEy * Ey) +
                       2.0 * Ex * Ey * (dEy * Ex + dEx * Ey);
    const double rhs = 3.0 * S * dot;
    return {lhs, rhs};
}

namespace detail {

// Pointwise midpoint-weighted constitutive difference D^{n+1}-D^n and its
// derivative w.r.t. the new field values.
inline void midpoint_delta_point(double Exo, double Eyo, double Exn, double Eyn, double lin,
                                 double c3, double& dx, double& dy) {
    const double So = Exo * Exo + Eyo * Eyo;
    const double Sn = Exn * Exn + Eyn * Eyn;
    const double half_s = 0.5 * (Sn + So);
    const double cross = Exn * Eyn + Exo * Eyo;
    dx = lin * (Exn - Exo) +
         c3 * (half_s * (Exn - Exo) + (Exn * Exn + Exo * Exo) * (Exn - Exo) + cross * (Eyn - Eyo));
    dy = lin * (Eyn - Eyo) +
         c3 * (half_s * (Eyn - Eyo) + (Eyn * Eyn + Eyo * Eyo) * (Eyn - Eyo) + cross * (Exn - Exo));
}

inline void midpoint_delta_point_jacobian(double Exo, double Eyo, double Exn, double Eyn,
                                          double lin, double c3, double& a11, double& a12,
                                          double& a22) {
    const double So = Exo * Exo + Eyo * Eyo;
    const double Sn = Exn * Exn + Eyn * Eyn;
    const double half_s = 0.5 * (Sn + So);
    a11 = lin + c3 * (3.0 * Exn * (Exn - Exo) + half_s + Exn * Exn + Exo * Exo +
                      Eyn * (Eyn - Eyo));
    a12 = c3 * (Eyn * (Exn - Exo) + Exn * (Eyn - Eyo) + Exn * Eyn + Exo * Eyo);
    a22 = lin + c3 * (3.0 * Eyn * (Eyn - Eyo) + half_s + Eyn * Eyn + Eyo * Eyo +
                      Exn * (Exn - Exo));
}

}  // namespace detail

// Weak form of int (D^{n+1} - D^n) . Phi over one cell from old/new field
// values at the quadrature nodes; out has 2N entries (x block then y block).
inline void midpoint_constitutive_delta(const double* ex_old, const double* ey_old,
                                        const double* ex_new, const double* ey_new,
                                        const MaterialSlice& mat, const QuadKernel& ker, double hx,
                                        double hy, double* out) {
    const int N = ker.n_modes_2d(), m2 = ker.n_points();
    const double jac = 0.25 * hx * hy;
    std::memset(out, 0, sizeof(double) * 2 * N);
    for (int q = 0; q < m2; ++q) {
        double dx, dy;
        detail::midpoint_delta_point(ex_old[q], ey_old[q], ex_new[q], ey_new[q],
                                     mat.eps0 * (1.0 + mat.chi1[q]), mat.eps0 * mat.chi3[q], dx,
                                     dy);
        const double wdx = jac * ker.wq[q] * dx;
        const double wdy = jac * ker.wq[q] * dy;
        const double* phi = &ker.phi[static_cast<std::size_t>(q) * N];
        for (int A = 0; A < N; ++A) {
            out[A] += wdx * phi[A];
            out[N + A] += wdy * phi[A];
        }
    }
}

inline void midpoint_constitutive_delta(const double* ex_old, const double* ey_old,
                                        const double* ex_new, const double* ey_new,
                                        const MaterialSlice& mat, const Basis1D& basis, double hx,
                                        double hy, double* out) {
    midpoint_constitutive_delta(ex_old, ey_old, ex_new, ey_new, mat, QuadKernel(basis), hx, hy,
                                out);
}

struct NewtonOptions {
    double tol = 1e-12;
    int max_iter = 50;
};

struct NewtonReport {
    int iterations = 0;
    double residual_norm = 0.0;
    bool converged = false;
    bool nan = false;
};

// Element-local implicit electric update. The unknown u stacks the new
// (Ex, Ey) coefficient blocks; the residual is
//   R(u) = int (D(u)-D(u_n)).Phi + Pen(u) + Pen(u_n) - rhs,
// where rhs carries dt * (magnetic flux/volume terms + current load) and Pen
// is the dt*c0/2 boundary trace penalty (bottom face acts on Ex, left face
// on Ey). The system is element-local because the penalty involves only the
// element's own boundary trace.
struct ElectricUpdateProblem {
    const double* ex_n = nullptr;  // N coefficients
    const double* ey_n = nullptr;
    const double* rhs = nullptr;  // 2N
    MaterialSlice mat;
    double hx = 0.0, hy = 0.0;
    bool bottom_penalty = false;
    bool left_penalty = false;
    double pen_scale = 0.0;  // dt * c0 / 2
};

namespace detail {

// Adds Pen(u) for one face: scale * jac1d * (edge edge^T applied along the
// transverse mode index). For the bottom face u is the Ex block and the edge
// vector acts on iy; for the left face u is the Ey block acting on ix.
inline void apply_trace_penalty(const double* u, const Basis1D& basis, bool bottom, double scale,
                                double* out) {
    const int np = basis.n_modes();
    const std::vector<double>& edge = basis.left;
    if (bottom) {
        for (int ix = 0; ix < np; ++ix) {
            double tr = 0.0;
            for (int iy = 0; iy < np; ++iy) tr += u[iy * np + ix] * edge[iy];
            tr *= scale;
            for (int iy = 0; iy < np; ++iy) out[iy * np + ix] += tr * edge[iy];
        }
    } else {
        for (int iy = 0; iy < np; ++iy) {
            double tr = 0.0;
            for (int ix = 0; ix < np; ++ix) tr += u[iy * np + ix] * edge[ix];
            tr *= scale;
            for (int ix = 0; ix < np; ++ix) out[iy * np + ix] += tr * edge[ix];
        }
    }
}

}  // namespace detail

inline void electric_update_residual(const ElectricUpdateProblem& prob, const Basis1D& basis,
                                     const QuadKernel& ker, ElementWorkspace& ws, const double* u,
                                     double* R) {
    const int N = ker.n_modes_2d();
    eval_cell_values({u, static_cast<std::size_t>(N)}, basis, ws.exn.data());
    eval_cell_values({u + N, static_cast<std::size_t>(N)}, basis, ws.eyn.data());
    midpoint_constitutive_delta(ws.exo.data(), ws.eyo.data(), ws.exn.data(), ws.eyn.data(),
                                prob.mat, ker, prob.hx, prob.hy, R);
    if (prob.bottom_penalty) {
        const double sb = prob.pen_scale * 0.5 * prob.hx;
        detail::apply_trace_penalty(u, basis, true, sb, R);
        detail::apply_trace_penalty(prob.ex_n, basis, true, sb, R);
    }
    if (prob.left_penalty) {
        const double sl = prob.pen_scale * 0.5 * prob.hy;
        detail::apply_trace_penalty(u + N, basis, false, sl, R + N);
        detail::apply_trace_penalty(prob.ey_n, basis, false, sl, R + N);
    }
    for (int A = 0; A < 2 * N; ++A) R[A] -= prob.rhs[A];
}

inline void electric_update_jacobian_into(const ElectricUpdateProblem& prob, const Basis1D& basis,
                                          const QuadKernel& ker, ElementWorkspace& ws,
                                          const double* u, Eigen::MatrixXd& J) {
    const int N = ker.n_modes_2d(), np = ker.np;
    eval_cell_values({u, static_cast<std::size_t>(N)}, basis, ws.exn.data());
    eval_cell_values({u + N, static_cast<std::size_t>(N)}, basis, ws.eyn.data());
    detail::accumulate_symmetric_blocks(
        ker, 0.25 * prob.hx * prob.hy, ws, J, [&](int q, double& a11, double& a12, double& a22) {
            detail::midpoint_delta_point_jacobian(ws.exo[q], ws.eyo[q], ws.exn[q], ws.eyn[q],
                                                  prob.mat.eps0 * (1.0 + prob.mat.chi1[q]),
                                                  prob.mat.eps0 * prob.mat.chi3[q], a11, a12, a22);
        });
    if (prob.bottom_penalty) {
        const double sb = prob.pen_scale * 0.5 * prob.hx;
        for (int ix = 0; ix < np; ++ix)
            for (int iy = 0; iy < np; ++iy)
                for (int jy = 0; jy < np; ++jy)
                    J(iy * np + ix, jy * np + ix) += sb * basis.left[iy] * basis.left[jy];
    }
    if (prob.left_penalty) {
        const double sl = prob.pen_scale * 0.5 * prob.hy;
        for (int iy = 0; iy < np; ++iy)
            for (int ix = 0; ix < np; ++ix)
                for (int jx = 0; jx < np; ++jx)
                    J(N + iy * np + ix, N + iy * np + jx) += sl * basis.left[ix] * basis.left[jx];
    }
}

namespace detail {

inline void load_old_values(const ElectricUpdateProblem& prob, const Basis1D& basis,
                            const QuadKernel& ker, ElementWorkspace& ws) {
    const int N = ker.n_modes_2d();
    ws.resize(ker.n_points(), 2 * N);
    eval_cell_values({prob.ex_n, static_cast<std::size_t>(N)}, basis, ws.exo.data());
    eval_cell_values({prob.ey_n, static_cast<std::size_t>(N)}, basis, ws.eyo.data());
}

}  // namespace detail

// Convenience wrappers evaluating from scratch (test surface).
inline void electric_update_residual(const ElectricUpdateProblem& prob, const Basis1D& basis,
                                     const double* u, double* R) {
    const QuadKernel ker(basis);
    ElementWorkspace ws;
    detail::load_old_values(prob, basis, ker, ws);
    electric_update_residual(prob, basis, ker, ws, u, R);
}

inline Eigen::MatrixXd electric_update_jacobian(const ElectricUpdateProblem& prob,
                                                const Basis1D& basis, const double* u) {
    const QuadKernel ker(basis);
    ElementWorkspace ws;
    detail::load_old_values(prob, basis, ker, ws);
    Eigen::MatrixXd J;
    electric_update_jacobian_into(prob, basis, ker, ws, u, J);
    return J;
}

// Newton iteration from the guess u = u_n. A halving line search activates
// only if the residual norm increases.
inline NewtonReport newton_electric_update(const ElectricUpdateProblem& prob, const Basis1D& basis,
                                           const QuadKernel& ker, ElementWorkspace& ws,
                                           const NewtonOptions& opt, double* out) {
    const int N = ker.n_modes_2d();
    const int n = 2 * N;
    detail::load_old_values(prob, basis, ker, ws);
    for (int A = 0; A < N; ++A) {
        ws.u(A) = prob.ex_n[A];
        ws.u(N + A) = prob.ey_n[A];
    }
    NewtonReport rep;
    electric_update_residual(prob, basis, ker, ws, ws.u.data(), ws.R.data());
    double rnorm = ws.R.norm();
    if (!std::isfinite(rnorm)) {
        rep.nan = true;
        return rep;
    }
    const double target = opt.tol * (1.0 + rnorm);
    while (true) {
        if (rnorm <= target) {
            rep.converged = true;
            break;
        }
        if (rep.iterations >= opt.max_iter) break;
        electric_update_jacobian_into(prob, basis, ker, ws, ws.u.data(), ws.J);
        ws.lu.compute(ws.J);
        ws.du = ws.lu.solve(-ws.R);
        double lambda = 1.0;
        double rnorm_try = 0.0;
        for (int ls = 0; ls < 30; ++ls) {
            ws.u_try = ws.u + lambda * ws.du;
            electric_update_residual(prob, basis, ker, ws, ws.u_try.data(), ws.R_try.data());
            rnorm_try = ws.R_try.norm();
            if (!std::isfinite(rnorm_try)) {
                rep.nan = true;
                rep.residual_norm = rnorm;
                return rep;
            }
            if (rnorm_try <= rnorm || rnorm_try <= target) break;
            lambda *= 0.5;
        }
        ws.u.swap(ws.u_try);
        ws.R.swap(ws.R_try);
        rnorm = rnorm_try;
        ++rep.iterations;
    }
    rep.residual_norm = rnorm;
    for (int A = 0; A < N; ++A) {
        out[A] = ws.u(A);
        out[N + A] = ws.u(N + A);
    }
    return rep;
}

inline NewtonReport newton_electric_update(const ElectricUpdateProblem& prob, const Basis1D& basis,
                                           const NewtonOptions& opt, double* out) {
    const QuadKernel ker(basis);
    ElementWorkspace ws;
    return newton_electric_update(prob, basis, ker, ws, opt, out);
}

// Per-element inversion of the nonlinear mass action: M(E) v = (rx, ry).
// Cholesky is applicable because M is SPD; a failed factorization signals
// NaN contamination and is reported as an error.
inline void solve_semidiscrete_velocity(const FieldState& state, const FieldValues& vol,
                                        const std::vector<double>& rx,
                                        const std::vector<double>& ry, const MaterialField& mat,
                                        const Mesh& mesh, const Basis1D& basis,
                                        std::vector<double>& dex, std::vector<double>& dey) {
    const int N = basis.n_modes() * basis.n_modes();
    const QuadKernel ker(basis);
    dex.resize(rx.size());
    dey.resize(ry.size());
    std::vector<char> failed(mesh.n_cells(), 0);
    parallel_for(mesh.n_cells(), [&](std::size_t ee) {
        const int e = static_cast<int>(ee);
        ElementWorkspace& ws = element_workspace();
        ws.resize(ker.n_points(), 2 * N);
        const std::size_t at = vol.cell_offset(e);
        assemble_nonlinear_mass_into(vol.ex.data() + at, vol.ey.data() + at,
                                     material_slice(mat, e), ker, ws, mesh.hx[mesh.cell_i(e)],
                                     mesh.hy[mesh.cell_j(e)], ws.J);
        Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(ws.J);  // in-place factorization
        if (llt.info() != Eigen::Success) {
            failed[e] = 1;
            return;
        }
        for (int A = 0; A < N; ++A) {
            ws.u(A) = rx[static_cast<std::size_t>(e) * N + A];
            ws.u(N + A) = ry[static_cast<std::size_t>(e) * N + A];
        }
        ws.R = llt.solve(ws.u);
        for (int A = 0; A < N; ++A) {
            dex[static_cast<std::size_t>(e) * N + A] = ws.R(A);
            dey[static_cast<std::size_t>(e) * N + A] = ws.R(N + A);
        }
    });
    (void)state;
    for (int e = 0; e < mesh.n_cells(); ++e)
        if (failed[e])
            throw std::runtime_error("nonlinear mass factorization failed on element " +
                                     std::to_string(e) + " (non-positive pivot; NaN state?)");
}

// Inverts the weighted linear mass (weight w > 0, e.g. mu0) cellwise:
// (w dtH, Phi) = rz. Constant-weight cells reduce to a scaling.
inline void solve_weighted_mass(const std::vector<double>& rz, const double* weight_samples,
                                const Mesh& mesh, const Basis1D& basis,
                                std::vector<double>& out) {
    const int np = basis.n_modes(), N = np * np, m2 = basis.m * basis.m;
    const QuadKernel ker(basis);
    out.resize(rz.size());
    parallel_for(mesh.n_cells(), [&](std::size_t ee) {
        const int e = static_cast<int>(ee);
        const double jac = 0.25 * mesh.hx[mesh.cell_i(e)] * mesh.hy[mesh.cell_j(e)];
        const double* w = weight_samples + static_cast<std::size_t>(e) * m2;
        double wmin = w[0], wmax = w[0];
        for (int q = 1; q < m2; ++q) {
            wmin = std::min(wmin, w[q]);
            wmax = std::max(wmax, w[q]);
        }
        if (wmax - wmin <= 1e-14 * std::abs(wmax)) {
            const double inv = 1.0 / (jac * w[0]);
            for (int A = 0; A < N; ++A)
                out[static_cast<std::size_t>(e) * N + A] =
                    rz[static_cast<std::size_t>(e) * N + A] * inv;
            return;
        }
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
        for (int q = 0; q < m2; ++q) {
            const double s = jac * ker.wq[q] * w[q];
            const double* phi = &ker.phi[static_cast<std::size_t>(q) * N];
            for (int A = 0; A < N; ++A)
                for (int B = A; B < N; ++B) {
                    M(A, B) += s * phi[A] * phi[B];
                    if (B != A) M(B, A) = M(A, B);
                }
        }
        Eigen::VectorXd b(N);
        for (int A = 0; A < N; ++A) b(A) = rz[static_cast<std::size_t>(e) * N + A];
        Eigen::VectorXd v = M.llt().solve(b);
        for (int A = 0; A < N; ++A) out[static_cast<std::size_t>(e) * N + A] = v(A);
    });
}

}  // namespace kerrdg
