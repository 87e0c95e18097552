#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "kerrdg/materials.hpp"
#include "kerrdg/spatial_operator.hpp"

namespace kerrdg {

// A reference problem: domain, materials, optional exact fields (also used
// as initial data at t = 0) and the current density that makes them solve
// the system exactly. The solver uses the +J sign convention throughout:
// dtD - curl H = J.
struct Scenario {
    std::string name;
    std::string notes;
    double r = 0.0, s = 1.0, p = 0.0, q = 1.0;
    MaterialSpec materials;
    bool has_exact = false;
    ExactField ex, ey, hz;  // exact fields, or initial profiles if !has_exact
    CurrentDensity source;  // empty members mean zero
};

// PEC cavity eigenmode on the unit square, linear materials (chi3 set to a
// negligible value so the nonlinear code path still runs):
//   H_z = cos(m pi x) cos(n pi y) cos(w t),
//   E_x = -(n pi / (eps w)) cos(m pi x) sin(n pi y) sin(w t),
//   E_y =  (m pi / (eps w)) sin(m pi x) cos(n pi y) sin(w t),
// with w^2 = pi^2 (m^2 + n^2) / (eps mu0) and eps = eps0 (1 + chi1) = eps_r.
inline Scenario cavity_mode(int m, int n, double eps_r) {
    if (m == 0 && n == 0) throw std::invalid_argument("cavity_mode: need m or n nonzero");
    if (!(eps_r >= 1.0)) throw std::invalid_argument("cavity_mode: eps_r must be >= 1");
    Scenario sc;
    sc.name = "cavity";
    sc.notes = "linear PEC cavity eigenmode (" + std::to_string(m) + "," + std::to_string(n) + ")";
    sc.materials = constant_materials(1.0, 1.0, eps_r - 1.0, 1e-30);
    const double eps = eps_r;
    const double w = M_PI * std::sqrt((static_cast<double>(m) * m + static_cast<double>(n) * n) / eps);
    const double ax = -n * M_PI / (eps * w);
    const double ay = m * M_PI / (eps * w);
    sc.has_exact = true;
    sc.ex = [=](double x, double y, double t) {
        return ax * std::cos(m * M_PI * x) * std::sin(n * M_PI * y) * std::sin(w * t);
    };
    sc.ey = [=](double x, double y, double t) {
        return ay * std::sin(m * M_PI * x) * std::cos(n * M_PI * y) * std::sin(w * t);
    };
    sc.hz = [=](double x, double y, double t) {
        return std::cos(m * M_PI * x) * std::cos(n * M_PI * y) * std::cos(w * t);
    };
    return sc;
}

// Kerr manufactured solution on the unit square with constant materials:
//   E_x =  A cos(pi x) sin(pi y) cos t,
//   E_y = -A sin(pi x) cos(pi y) cos t,
//   H_z = (2 pi A / mu0) cos(pi x) cos(pi y) sin t,
// which satisfies the magnetic equation exactly; the current density
// J_x = dtD_x - dyH_z, J_y = dtD_y + dxH_z closes the electric equations
// with D = eps0 ((1 + chi1) E + chi3 |E|^2 E).
inline Scenario manufactured_kerr(double amplitude, double eps0 = 1.0, double mu0 = 1.0,
                                  double chi1 = 1.0, double chi3 = 1.0) {
    Scenario sc;
    sc.name = "manufactured_kerr";
    sc.notes = "trigonometric Kerr solution with reconstructed source";
    sc.materials = constant_materials(eps0, mu0, chi1, chi3);
    const double A = amplitude;
    const double B = 2.0 * M_PI * A / mu0;
    sc.has_exact = true;
    sc.ex = [A](double x, double y, double t) {
        return A * std::cos(M_PI * x) * std::sin(M_PI * y) * std::cos(t);
    };
    sc.ey = [A](double x, double y, double t) {
        return -A * std::sin(M_PI * x) * std::cos(M_PI * y) * std::cos(t);
    };
    sc.hz = [B](double x, double y, double t) {
        return B * std::cos(M_PI * x) * std::cos(M_PI * y) * std::sin(t);
    };
    if (A != 0.0) {
        // Shared factor: J = +/- trig * sin t * (B pi - eps0 A [(1+chi1) + 3 chi3 A^2 cos^2 t Q])
        // with Q = cos^2(pi x) sin^2(pi y) + sin^2(pi x) cos^2(pi y).
        auto coef = [=](double x, double y, double t) {
            const double cx = std::cos(M_PI * x), sx = std::sin(M_PI * x);
            const double cy = std::cos(M_PI * y), sy = std::sin(M_PI * y);
            const double g = std::cos(t);
            const double Q = cx * cx * sy * sy + sx * sx * cy * cy;
            return B * M_PI - eps0 * A * ((1.0 + chi1) + 3.0 * chi3 * A * A * g * g * Q);
        };
        sc.source.jx = [=](double x, double y, double t) {
            return std::cos(M_PI * x) * std::sin(M_PI * y) * std::sin(t) * coef(x, y, t);
        };
        sc.source.jy = [=](double x, double y, double t) {
            return -std::sin(M_PI * x) * std::cos(M_PI * y) * std::sin(t) * coef(x, y, t);
        };
    }
    return sc;
}

// Source-free stability exercise: a Gaussian magnetic hump well inside the
// domain, zero electric field, no exact solution.
inline Scenario gaussian_pulse(double center_x, double center_y, double width, double amplitude,
                               double eps0 = 1.0, double mu0 = 1.0, double chi1 = 1.0,
                               double chi3 = 1.0) {
    if (!(width > 0.0)) throw std::invalid_argument("gaussian_pulse: width must be positive");
    Scenario sc;
    sc.name = "gaussian_pulse";
    sc.notes = "Gaussian H_z hump, E = 0, J = 0";
    sc.materials = constant_materials(eps0, mu0, chi1, chi3);
    sc.has_exact = false;
    sc.ex = [](double, double, double) { return 0.0; };
    sc.ey = [](double, double, double) { return 0.0; };
    sc.hz = [=](double x, double y, double) {
        const double dx = x - center_x, dy = y - center_y;
        return amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
    };
    return sc;
}

}  // namespace kerrdg
