#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <complex>
#include <random>

#include "kerrdg/scenarios.hpp"

using namespace kerrdg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Complex-step differentiation: exact to rounding for analytic functions.
constexpr double kStep = 1e-100;

using C = std::complex<double>;

struct FieldsOnC {
    double A, B, eps0, chi1, chi3;
    C ex(C x, C y, C t) const { return A * cos(M_PI * x) * sin(M_PI * y) * cos(t); }
    C ey(C x, C y, C t) const { return -A * sin(M_PI * x) * cos(M_PI * y) * cos(t); }
    C hz(C x, C y, C t) const { return B * cos(M_PI * x) * cos(M_PI * y) * sin(t); }
    C dx(C x, C y, C t) const {
        const C Ex = ex(x, y, t), Ey = ey(x, y, t);
        const C S = Ex * Ex + Ey * Ey;
        return eps0 * ((1.0 + chi1) * Ex + chi3 * S * Ex);
    }
    C dy(C x, C y, C t) const {
        const C Ex = ex(x, y, t), Ey = ey(x, y, t);
        const C S = Ex * Ex + Ey * Ey;
        return eps0 * ((1.0 + chi1) * Ey + chi3 * S * Ey);
    }
};

template <class F>
double cstep(F&& f, double at) {
    return f(C(at, kStep)).imag() / kStep;
}

}  // namespace

TEST_CASE("cavity mode frequency, PEC traces, and initial data") {
    const Scenario sc = cavity_mode(1, 1, 1.0);
    // omega = pi sqrt(2): H(0,0,t) = cos(w t)
    const double w = M_PI * std::sqrt(2.0);
    REQUIRE_THAT(sc.hz(0.0, 0.0, 0.25), WithinRel(std::cos(w * 0.25), 1e-13));

    std::mt19937 rng(55);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
        const double x = u(rng), y = u(rng), t = 3.0 * u(rng);
        REQUIRE_THAT(sc.ex(x, 0.0, t), WithinAbs(0.0, 1e-14));
        REQUIRE_THAT(sc.ex(x, 1.0, t), WithinAbs(0.0, 1e-14));
        REQUIRE_THAT(sc.ey(0.0, y, t), WithinAbs(0.0, 1e-14));
        REQUIRE_THAT(sc.ey(1.0, y, t), WithinAbs(0.0, 1e-14));
        // t = 0: purely magnetic initial data
        REQUIRE(sc.ex(x, y, 0.0) == 0.0);
        REQUIRE(sc.ey(x, y, 0.0) == 0.0);
    }
    REQUIRE(!sc.source.any());
    REQUIRE_THROWS_AS(cavity_mode(0, 0, 1.0), std::invalid_argument);
}

TEST_CASE("cavity mode satisfies the linear system") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (double eps_r : {1.0, 2.5}) {
        const Scenario sc = cavity_mode(2, 1, eps_r);
        for (int rep = 0; rep < 20; ++rep) {
            const double x = u(rng), y = u(rng), t = 2.0 * u(rng);
            const double dtEx = cstep([&](C tc) {
                const double w = M_PI * std::sqrt((4.0 + 1.0) / eps_r);
                return C(-M_PI / (eps_r * w)) * cos(2.0 * M_PI * x) * sin(M_PI * y) * sin(w * tc);
            }, t);
            const double dyHz = cstep([&](C yc) {
                const double w = M_PI * std::sqrt(5.0 / eps_r);
                return cos(2.0 * M_PI * x) * cos(M_PI * yc) * cos(w * t);
            }, y);
            // dtD_x = dyH_z with D = eps_r E (chi3 negligible)
            REQUIRE_THAT(eps_r * dtEx, WithinAbs(dyHz, 1e-11));
        }
    }
}

TEST_CASE("manufactured Kerr solution closes the full nonlinear system") {
    std::mt19937 rng(2025);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    struct Case {
        double A, eps0, mu0, chi1, chi3;
    };
    for (const Case cs : {Case{1.0, 1.0, 1.0, 1.0, 1.0}, Case{2.0, 1.3, 1.5, 0.7, 2.0}}) {
        const Scenario sc = manufactured_kerr(cs.A, cs.eps0, cs.mu0, cs.chi1, cs.chi3);
        const FieldsOnC f{cs.A, 2.0 * M_PI * cs.A / cs.mu0, cs.eps0, cs.chi1, cs.chi3};
        for (int rep = 0; rep < 40; ++rep) {
            const double x = u(rng), y = u(rng), t = 4.0 * u(rng);
            // Scenario functions agree with the reference forms.
            REQUIRE_THAT(sc.ex(x, y, t), WithinAbs(f.ex(C(x), C(y), C(t)).real(), 1e-14));
            REQUIRE_THAT(sc.hz(x, y, t), WithinAbs(f.hz(C(x), C(y), C(t)).real(), 1e-13));

            // Magnetic equation: mu0 dtH + dxEy - dyEx = 0.
            const double dtH = cstep([&](C tc) { return f.hz(C(x), C(y), tc); }, t);
            const double dxEy = cstep([&](C xc) { return f.ey(xc, C(y), C(t)); }, x);
            const double dyEx = cstep([&](C yc) { return f.ex(C(x), yc, C(t)); }, y);
            REQUIRE_THAT(cs.mu0 * dtH + dxEy - dyEx, WithinAbs(0.0, 1e-10));

            // Electric equations: dtD - curl H = J with the declared source.
            const double dtDx = cstep([&](C tc) { return f.dx(C(x), C(y), tc); }, t);
            const double dtDy = cstep([&](C tc) { return f.dy(C(x), C(y), tc); }, t);
            const double dyHz = cstep([&](C yc) { return f.hz(C(x), yc, C(t)); }, y);
            const double dxHz = cstep([&](C xc) { return f.hz(xc, C(y), C(t)); }, x);
            const double scale = 1.0 + std::abs(sc.source.jx(x, y, t));
            REQUIRE_THAT(dtDx - dyHz - sc.source.jx(x, y, t), WithinAbs(0.0, 1e-10 * scale));
            REQUIRE_THAT(dtDy + dxHz - sc.source.jy(x, y, t), WithinAbs(0.0, 1e-10 * scale));
        }
        // PEC at all four walls.
        for (int rep = 0; rep < 10; ++rep) {
            const double s = u(rng), t = 3.0 * u(rng);
            REQUIRE_THAT(sc.ex(s, 0.0, t), WithinAbs(0.0, 1e-14));
            REQUIRE_THAT(sc.ex(s, 1.0, t), WithinAbs(0.0, 1e-14));
            REQUIRE_THAT(sc.ey(0.0, s, t), WithinAbs(0.0, 1e-14));
            REQUIRE_THAT(sc.ey(1.0, s, t), WithinAbs(0.0, 1e-14));
        }
    }
}

TEST_CASE("zero-amplitude manufactured solution has no source") {
    const Scenario sc = manufactured_kerr(0.0);
    REQUIRE(!sc.source.any());
    REQUIRE(sc.ex(0.3, 0.4, 1.0) == 0.0);
    REQUIRE(sc.hz(0.3, 0.4, 1.0) == 0.0);
}

TEST_CASE("gaussian pulse scenario") {
    const Scenario zero = gaussian_pulse(0.5, 0.5, 0.1, 0.0);
    REQUIRE(zero.hz(0.5, 0.5, 0.0) == 0.0);

    const Scenario sc = gaussian_pulse(0.4, 0.6, 0.08, 2.0);
    REQUIRE(!sc.has_exact);
    REQUIRE(!sc.source.any());
    REQUIRE_THAT(sc.hz(0.4, 0.6, 0.0), WithinRel(2.0, 1e-14));
    REQUIRE(sc.ex(0.2, 0.9, 0.0) == 0.0);
    REQUIRE(sc.ey(0.2, 0.9, 0.0) == 0.0);
    REQUIRE_THROWS_AS(gaussian_pulse(0.5, 0.5, 0.0, 1.0), std::invalid_argument);
}
