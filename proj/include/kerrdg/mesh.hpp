#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace kerrdg {

// Rectangular partition of (r,s) x (p,q) into cells K_ij = I_i x J_j.
// Cells are indexed (i, j) with i fastest; immutable after construction.
struct Mesh {
    std::vector<double> x_edges;  // N_x + 1, strictly increasing
    std::vector<double> y_edges;  // N_y + 1
    std::vector<double> hx;       // N_x cell widths
    std::vector<double> hy;       // N_y cell heights
    double h_max = 0.0;

    int nx() const { return static_cast<int>(hx.size()); }
    int ny() const { return static_cast<int>(hy.size()); }
    int n_cells() const { return nx() * ny(); }
    int cell_index(int i, int j) const { return i + j * nx(); }
    int cell_i(int e) const { return e % nx(); }
    int cell_j(int e) const { return e / nx(); }

    double x_lo() const { return x_edges.front(); }
    double x_hi() const { return x_edges.back(); }
    double y_lo() const { return y_edges.front(); }
    double y_hi() const { return y_edges.back(); }
    double h_min() const {
        return std::min(*std::min_element(hx.begin(), hx.end()),
                        *std::min_element(hy.begin(), hy.end()));
    }
};

inline Mesh build_mesh(std::vector<double> x_edges, std::vector<double> y_edges) {
    if (x_edges.size() < 2 || y_edges.size() < 2)
        throw std::invalid_argument("build_mesh: need at least one cell per direction");
    Mesh mesh;
    mesh.x_edges = std::move(x_edges);
    mesh.y_edges = std::move(y_edges);
    auto widths = [](const std::vector<double>& e, const char* dir) {
        std::vector<double> h(e.size() - 1);
        for (std::size_t i = 0; i + 1 < e.size(); ++i) {
            h[i] = e[i + 1] - e[i];
            if (!(h[i] > 0.0))
                throw std::invalid_argument(std::string("build_mesh: ") + dir +
                                            " edges must be strictly increasing");
        }
        return h;
    };
    mesh.hx = widths(mesh.x_edges, "x");
    mesh.hy = widths(mesh.y_edges, "y");
    mesh.h_max = std::max(*std::max_element(mesh.hx.begin(), mesh.hx.end()),
                          *std::max_element(mesh.hy.begin(), mesh.hy.end()));
    return mesh;
}

// Uniform partition of (r,s) x (p,q) with Nx x Ny cells.
inline Mesh build_mesh(double r, double s, double p, double q, int Nx, int Ny) {
    if (!(r < s) || !(p < q))
        throw std::invalid_argument("build_mesh: degenerate domain (need r < s and p < q)");
    if (Nx < 1 || Ny < 1) throw std::invalid_argument("build_mesh: cell counts must be >= 1");
    std::vector<double> xe(Nx + 1), ye(Ny + 1);
    for (int i = 0; i <= Nx; ++i) xe[i] = (i == Nx) ? s : r + (s - r) * i / Nx;
    for (int j = 0; j <= Ny; ++j) ye[j] = (j == Ny) ? q : p + (q - p) * j / Ny;
    return build_mesh(std::move(xe), std::move(ye));
}

// Max over cells of hx*hy / rho with rho the cell inradius min(hx,hy)/2.
// Diagnostic only; not enforced.
inline double shape_regularity(const Mesh& mesh) {
    double worst = 0.0;
    for (double a : mesh.hx)
        for (double b : mesh.hy) worst = std::max(worst, a * b / (0.5 * std::min(a, b)));
    return worst;
}

}  // namespace kerrdg
