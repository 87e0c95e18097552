#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "kerrdg/basis.hpp"
#include "kerrdg/mesh.hpp"

namespace kerrdg {

using SpatialFn = std::function<double(double, double)>;

// Pointwise material description: eps0 constant, the rest positive bounded
// functions of (x, y).
struct MaterialSpec {
    double eps0 = 1.0;
    SpatialFn mu0;
    SpatialFn chi1;
    SpatialFn chi3;
};

inline MaterialSpec constant_materials(double eps0, double mu0, double chi1, double chi3) {
    MaterialSpec spec;
    spec.eps0 = eps0;
    spec.mu0 = [mu0](double, double) { return mu0; };
    spec.chi1 = [chi1](double, double) { return chi1; };
    spec.chi3 = [chi3](double, double) { return chi3; };
    return spec;
}

// Materials sampled at the tensor-product volume quadrature nodes of every
// cell; layout [cell * m^2 + q] with q = qy*m + qx. The generating spec is
// kept so diagnostics can resample on finer rules.
struct MaterialField {
    double eps0 = 1.0;
    int nq = 0;  // nodes per direction
    std::vector<double> mu0;
    std::vector<double> chi1;
    std::vector<double> chi3;
    MaterialSpec spec;

    std::size_t cell_offset(int e) const {
        return static_cast<std::size_t>(e) * nq * nq;
    }
};

inline MaterialField sample_materials(const MaterialSpec& spec, const Mesh& mesh,
                                      const Basis1D& basis) {
    MaterialField f;
    f.eps0 = spec.eps0;
    f.nq = basis.m;
    f.spec = spec;
    if (!(spec.eps0 > 0.0)) throw std::invalid_argument("materials: eps0 must be positive");
    const int m = basis.m;
    const std::size_t total = static_cast<std::size_t>(mesh.n_cells()) * m * m;
    f.mu0.resize(total);
    f.chi1.resize(total);
    f.chi3.resize(total);
    for (int e = 0; e < mesh.n_cells(); ++e) {
        const int i = mesh.cell_i(e), j = mesh.cell_j(e);
        const double x0 = mesh.x_edges[i], hx = mesh.hx[i];
        const double y0 = mesh.y_edges[j], hy = mesh.hy[j];
        std::size_t base = f.cell_offset(e);
        for (int qy = 0; qy < m; ++qy) {
            const double y = y0 + 0.5 * (basis.rule.nodes[qy] + 1.0) * hy;
            for (int qx = 0; qx < m; ++qx) {
                const double x = x0 + 0.5 * (basis.rule.nodes[qx] + 1.0) * hx;
                const std::size_t at = base + qy * m + qx;
                f.mu0[at] = spec.mu0(x, y);
                f.chi1[at] = spec.chi1(x, y);
                f.chi3[at] = spec.chi3(x, y);
                if (!(f.mu0[at] > 0.0) || !(f.chi1[at] >= 0.0) || !(f.chi3[at] >= 0.0))
                    throw std::invalid_argument(
                        "materials: need mu0 > 0 and chi1, chi3 >= 0 everywhere");
            }
        }
    }
    return f;
}

// max over samples of (eps0 * mu0 * (1 + chi1))^(-1/2); enters the CFL bound.
inline double material_wave_speed_bound(const MaterialField& mat) {
    double worst = 0.0;
    for (std::size_t q = 0; q < mat.mu0.size(); ++q) {
        const double c = 1.0 / std::sqrt(mat.eps0 * mat.mu0[q] * (1.0 + mat.chi1[q]));
        worst = std::max(worst, c);
    }
    return worst;
}

}  // namespace kerrdg
