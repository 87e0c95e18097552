#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "kerrdg/field_state.hpp"
#include "kerrdg/projection.hpp"

using namespace kerrdg;
using Catch::Matchers::WithinAbs;

namespace {

double eval_on_cell(std::span<const double> coeffs, const Basis1D& basis, double a, double b,
                    double x) {
    return eval_modal_1d(coeffs, basis, 2.0 * (x - a) / (b - a) - 1.0);
}

double eval_2d_on_cell(const double* coeffs, const Basis1D& basis, double x0, double hx, double y0,
                       double hy, double x, double y) {
    const int np = basis.n_modes();
    std::vector<double> px(np), py(np);
    eval_orthonormal_legendre(basis.k, 2.0 * (x - x0) / hx - 1.0, px.data());
    eval_orthonormal_legendre(basis.k, 2.0 * (y - y0) / hy - 1.0, py.data());
    double s = 0.0;
    for (int iy = 0; iy < np; ++iy)
        for (int ix = 0; ix < np; ++ix) s += coeffs[iy * np + ix] * px[ix] * py[iy];
    return s;
}

}  // namespace

TEST_CASE("one-sided 1D projections of x^2 at k=1 match the closed forms") {
    const Basis1D basis = build_basis(1, 4);
    auto u = [](double x) { return x * x; };

    const std::vector<double> cm = project_1d(ProjFlavor::minus, u, 0.0, 1.0, basis);
    for (double x : {0.0, 0.3, 0.7, 1.0})
        REQUIRE_THAT(eval_on_cell(cm, basis, 0.0, 1.0, x), WithinAbs((4.0 * x - 1.0) / 3.0, 1e-13));
    REQUIRE_THAT(eval_on_cell(cm, basis, 0.0, 1.0, 1.0), WithinAbs(1.0, 1e-13));

    const std::vector<double> cp = project_1d(ProjFlavor::plus, u, 0.0, 1.0, basis);
    for (double x : {0.0, 0.25, 0.6, 1.0})
        REQUIRE_THAT(eval_on_cell(cp, basis, 0.0, 1.0, x), WithinAbs(2.0 * x / 3.0, 1e-13));
    REQUIRE_THAT(eval_on_cell(cp, basis, 0.0, 1.0, 0.0), WithinAbs(0.0, 1e-13));
}

TEST_CASE("1D projections are the identity on P_k") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> coef(-1.5, 1.5);
    for (int k = 0; k <= 4; ++k) {
        const Basis1D basis = build_basis(k, 2 * k + 2);
        std::vector<double> poly(k + 1);
        for (double& c : poly) c = coef(rng);
        auto p = [&](double x) {
            double s = 0.0, xp = 1.0;
            for (int d = 0; d <= k; ++d) {
                s += poly[d] * xp;
                xp *= x;
            }
            return s;
        };
        for (ProjFlavor f : {ProjFlavor::plain, ProjFlavor::plus, ProjFlavor::minus}) {
            const std::vector<double> c = project_1d(f, p, -0.4, 1.7, basis);
            for (double x : {-0.4, 0.1, 0.9, 1.7})
                REQUIRE_THAT(eval_on_cell(c, basis, -0.4, 1.7, x), WithinAbs(p(x), 1e-12));
        }
    }
}

TEST_CASE("defining moment and endpoint conditions hold discretely") {
    auto u = [](double x) { return std::sin(2.0 * x) + 0.3 * std::exp(x); };
    for (int k = 1; k <= 4; ++k) {
        const Basis1D basis = build_basis(k, 2 * k + 2);
        for (ProjFlavor f : {ProjFlavor::plus, ProjFlavor::minus}) {
            const std::vector<double> c = project_1d(f, u, 0.2, 1.1, basis);
            // Moments of (Pu - u) against basis polynomials of degree <= k-1,
            // with u sampled at the same quadrature nodes the projector used.
            for (int n = 0; n < k; ++n) {
                double moment = 0.0;
                for (int q = 0; q < basis.m; ++q) {
                    const double x = 0.2 + 0.5 * (basis.rule.nodes[q] + 1.0) * 0.9;
                    double pu = 0.0;
                    for (int l = 0; l <= k; ++l) pu += c[l] * basis.value(q, l);
                    moment += basis.rule.weights[q] * (pu - u(x)) * basis.value(q, n);
                }
                REQUIRE_THAT(moment, WithinAbs(0.0, 1e-12));
            }
            const double endpoint = (f == ProjFlavor::plus) ? 0.2 : 1.1;
            REQUIRE_THAT(eval_on_cell(c, basis, 0.2, 1.1, endpoint), WithinAbs(u(endpoint), 1e-12));
        }
    }
}

TEST_CASE("Pi3 of x^2 y^2 at k=1 is the product of the 1D minus projections") {
    const Basis1D basis = build_basis(1, 4);
    const Mesh mesh = build_mesh(0.0, 1.0, 0.0, 1.0, 1, 1);
    const std::vector<double> c = project_2d(
        TensorProjector::pi3, [](double x, double y) { return x * x * y * y; }, mesh, basis);
    for (double x : {0.0, 0.4, 1.0})
        for (double y : {0.1, 0.75, 1.0}) {
            const double want = ((4.0 * x - 1.0) / 3.0) * ((4.0 * y - 1.0) / 3.0);
            REQUIRE_THAT(eval_2d_on_cell(c.data(), basis, 0.0, 1.0, 0.0, 1.0, x, y),
                         WithinAbs(want, 1e-13));
        }
}

TEST_CASE("tensor factorization for separable functions") {
    auto f = [](double x) { return std::cos(1.3 * x) + x; };
    auto g = [](double y) { return std::exp(-y) * (1.0 + y * y); };
    const Mesh mesh = build_mesh(0.0, 1.0, 0.0, 1.0, 3, 2);
    for (int k = 1; k <= 3; ++k) {
        const Basis1D basis = build_basis(k, 2 * k + 2);
        const int np = basis.n_modes();
        for (TensorProjector which : {TensorProjector::pi1, TensorProjector::pi2,
                                      TensorProjector::pi3, TensorProjector::pi4}) {
            const std::vector<double> c2d = project_2d(
                which, [&](double x, double y) { return f(x) * g(y); }, mesh, basis);
            for (int e = 0; e < mesh.n_cells(); ++e) {
                const int i = mesh.cell_i(e), j = mesh.cell_j(e);
                const std::vector<double> cf = project_1d(
                    tensor_flavor_x(which), f, mesh.x_edges[i], mesh.x_edges[i + 1], basis);
                const std::vector<double> cg = project_1d(
                    tensor_flavor_y(which), g, mesh.y_edges[j], mesh.y_edges[j + 1], basis);
                for (int iy = 0; iy < np; ++iy)
                    for (int ix = 0; ix < np; ++ix)
                        REQUIRE_THAT(c2d[static_cast<std::size_t>(e) * np * np + iy * np + ix],
                                     WithinAbs(cf[ix] * cg[iy], 1e-13));
            }
        }
    }
}

TEST_CASE("2D projectors reproduce Q_k and match corner values") {
    const Mesh mesh = build_mesh({0.0, 0.4, 1.0}, {0.0, 0.7, 1.0});
    for (int k = 1; k <= 3; ++k) {
        const Basis1D basis = build_basis(k, 2 * k + 2);
        auto u = [k](double x, double y) {
            return std::pow(0.5 + x, k) * std::pow(1.2 - y, k) + x - 2.0 * y;
        };
        const int np = basis.n_modes();
        for (TensorProjector which : {TensorProjector::pi1, TensorProjector::pi2,
                                      TensorProjector::pi3, TensorProjector::pi4}) {
            const std::vector<double> c = project_2d(which, u, mesh, basis);
            for (int e = 0; e < mesh.n_cells(); ++e) {
                const int i = mesh.cell_i(e), j = mesh.cell_j(e);
                for (double fx : {0.15, 0.62})
                    for (double fy : {0.3, 0.9}) {
                        const double x = mesh.x_edges[i] + fx * mesh.hx[i];
                        const double y = mesh.y_edges[j] + fy * mesh.hy[j];
                        REQUIRE_THAT(eval_2d_on_cell(&c[static_cast<std::size_t>(e) * np * np],
                                                     basis, mesh.x_edges[i], mesh.hx[i],
                                                     mesh.y_edges[j], mesh.hy[j], x, y),
                                     WithinAbs(u(x, y), 1e-12));
                    }
            }
        }
        // Pi3 corner condition at the (right, top) cell corner for smooth
        // non-polynomial data; implied by the tensor construction.
        auto v = [](double x, double y) { return std::sin(3.0 * x + 0.4) * std::cosh(y - 0.2); };
        const std::vector<double> c3 = project_2d(TensorProjector::pi3, v, mesh, basis);
        for (int e = 0; e < mesh.n_cells(); ++e) {
            const int i = mesh.cell_i(e), j = mesh.cell_j(e);
            const double xc = mesh.x_edges[i + 1], yc = mesh.y_edges[j + 1];
            REQUIRE_THAT(eval_2d_on_cell(&c3[static_cast<std::size_t>(e) * np * np], basis,
                                         mesh.x_edges[i], mesh.hx[i], mesh.y_edges[j], mesh.hy[j],
                                         xc, yc),
                         WithinAbs(v(xc, yc), 1e-12));
        }
    }
}

TEST_CASE("projection error study") {
    auto constant = [](double, double) { return 3.25; };
    for (auto [h, err] : projection_error_study(TensorProjector::pi2, constant, 2, 4, 3)) {
        (void)h;
        REQUIRE_THAT(err, WithinAbs(0.0, 1e-13));
    }

    auto qk = [](double x, double y) { return (x - 0.2) * (y + 0.1); };
    for (auto [h, err] : projection_error_study(TensorProjector::pi1, qk, 1, 4, 3)) {
        (void)h;
        REQUIRE_THAT(err, WithinAbs(0.0, 1e-12));
    }

    auto smooth = [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); };
    const auto pairs = projection_error_study(TensorProjector::pi4, smooth, 1, 8, 2);
    const double ratio = pairs[0].second / pairs[1].second;
    REQUIRE(ratio > 3.4);
    REQUIRE(ratio < 4.6);
}
