#pragma once

#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kerrdg {

// Run configuration parsed from flat key=value lines with dotted sections
// ('#' starts a comment). Unknown keys are rejected.
struct RunConfig {
    std::string scenario;  // cavity | manufactured_kerr | gaussian_pulse

    int scenario_m = 1, scenario_n = 1;
    double scenario_eps_r = 1.0;
    double scenario_amplitude = 1.0;
    double scenario_center_x = 0.5, scenario_center_y = 0.5;
    double scenario_width = 0.1;

    // NaN means "keep the scenario default".
    double material_eps0 = NAN, material_mu0 = NAN, material_chi1 = NAN, material_chi3 = NAN;

    int nx = 8, ny = 8;
    int order = 1;       // polynomial degree k
    int quadrature = 0;  // nodes per direction; 0 selects 2k+2
    double c0 = 0.5;
    double dt = 0.0;  // 0 selects the CFL bound
    double cfl_safety = 0.9;
    double final_time = 1.0;
    double c_inv_estimate = 0.0;  // 0 selects (k+1)^2

    std::string energy_trace_path;
    std::string snapshot_path;
    long snapshot_stride = 0;
    std::string rates_path;

    double newton_tol = 1e-12;
    int newton_max_iter = 50;

    std::string integrator = "leapfrog";  // leapfrog | rk4_reference
    std::string start = "taylor";         // taylor | analytic
    int threads = 0;

    std::vector<std::string> warnings;

    int quadrature_nodes() const { return quadrature > 0 ? quadrature : 2 * order + 2; }
    double effective_c_inv() const {
        return c_inv_estimate > 0.0 ? c_inv_estimate
                                    : static_cast<double>((order + 1) * (order + 1));
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw std::invalid_argument("config key '" + key + "': expected a number, got '" + v + "'");
    return x;
}

inline long parse_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw std::invalid_argument("config key '" + key + "': expected an integer, got '" + v +
                                    "'");
    return x;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value, got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw std::invalid_argument("config key '" + key + "' given more than once");
        kv[key] = val;
    }

    auto take = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) return std::pair<bool, std::string>{false, ""};
        std::string v = it->second;
        kv.erase(it);
        return std::pair<bool, std::string>{true, v};
    };
    auto real_opt = [&](const char* key, double& slot) {
        if (auto [ok, v] = take(key); ok) slot = detail::parse_real(key, v);
    };
    auto int_opt = [&](const char* key, int& slot) {
        if (auto [ok, v] = take(key); ok) slot = static_cast<int>(detail::parse_int(key, v));
    };
    auto long_opt = [&](const char* key, long& slot) {
        if (auto [ok, v] = take(key); ok) slot = detail::parse_int(key, v);
    };
    auto string_opt = [&](const char* key, std::string& slot) {
        if (auto [ok, v] = take(key); ok) slot = v;
    };

    string_opt("scenario", cfg.scenario);
    if (cfg.scenario.empty()) throw std::invalid_argument("config: missing required key 'scenario'");
    if (cfg.scenario != "cavity" && cfg.scenario != "manufactured_kerr" &&
        cfg.scenario != "gaussian_pulse")
        throw std::invalid_argument("config key 'scenario': unknown scenario '" + cfg.scenario +
                                    "'");
    int_opt("scenario.m", cfg.scenario_m);
    int_opt("scenario.n", cfg.scenario_n);
    real_opt("scenario.eps_r", cfg.scenario_eps_r);
    real_opt("scenario.amplitude", cfg.scenario_amplitude);
    real_opt("scenario.center_x", cfg.scenario_center_x);
    real_opt("scenario.center_y", cfg.scenario_center_y);
    real_opt("scenario.width", cfg.scenario_width);
    real_opt("material.eps0", cfg.material_eps0);
    real_opt("material.mu0", cfg.material_mu0);
    real_opt("material.chi1", cfg.material_chi1);
    real_opt("material.chi3", cfg.material_chi3);
    int_opt("Nx", cfg.nx);
    int_opt("Ny", cfg.ny);
    int_opt("k", cfg.order);
    int_opt("m", cfg.quadrature);
    real_opt("c0", cfg.c0);
    const bool has_dt = kv.count("dt") > 0;
    const bool has_cfl = kv.count("cfl_safety") > 0;
    const bool has_cinv = kv.count("c_inv_estimate") > 0;
    real_opt("dt", cfg.dt);
    real_opt("cfl_safety", cfg.cfl_safety);
    real_opt("T", cfg.final_time);
    real_opt("c_inv_estimate", cfg.c_inv_estimate);
    string_opt("output.energy_trace", cfg.energy_trace_path);
    string_opt("output.snapshots", cfg.snapshot_path);
    long_opt("output.snapshot_stride", cfg.snapshot_stride);
    string_opt("output.rates", cfg.rates_path);
    real_opt("newton.tol", cfg.newton_tol);
    int_opt("newton.max_iter", cfg.newton_max_iter);
    string_opt("integrator", cfg.integrator);
    string_opt("start", cfg.start);
    int_opt("threads", cfg.threads);

    if (!kv.empty()) throw std::invalid_argument("config: unknown key '" + kv.begin()->first + "'");

    if (cfg.nx < 1) throw std::invalid_argument("config key 'Nx': cell count must be >= 1");
    if (cfg.ny < 1) throw std::invalid_argument("config key 'Ny': cell count must be >= 1");
    if (cfg.order < 0 || cfg.order > 12)
        throw std::invalid_argument("config key 'k': polynomial order must be in [0, 12]");
    if (cfg.quadrature != 0 && (cfg.quadrature < cfg.order + 1 || cfg.quadrature > 32))
        throw std::invalid_argument("config key 'm': quadrature nodes must be in [k+1, 32]");
    if (cfg.c0 < 0.0) throw std::invalid_argument("config key 'c0': penalty must be nonnegative");
    if (has_dt && !(cfg.dt > 0.0))
        throw std::invalid_argument("config key 'dt': step size must be positive");
    if (!(cfg.cfl_safety > 0.0) || cfg.cfl_safety > 1.0)
        throw std::invalid_argument("config key 'cfl_safety': must lie in (0, 1]");
    if (!(cfg.final_time > 0.0)) throw std::invalid_argument("config key 'T': must be positive");
    if (cfg.c_inv_estimate < 0.0 || (has_cinv && cfg.c_inv_estimate == 0.0))
        throw std::invalid_argument("config key 'c_inv_estimate': must be positive");
    if (!(cfg.newton_tol > 0.0))
        throw std::invalid_argument("config key 'newton.tol': must be positive");
    if (cfg.newton_max_iter < 1)
        throw std::invalid_argument("config key 'newton.max_iter': must be >= 1");
    if (cfg.snapshot_stride < 0)
        throw std::invalid_argument("config key 'output.snapshot_stride': must be >= 0");
    if (cfg.integrator != "leapfrog" && cfg.integrator != "rk4_reference")
        throw std::invalid_argument("config key 'integrator': expected leapfrog or rk4_reference");
    if (cfg.start != "taylor" && cfg.start != "analytic")
        throw std::invalid_argument("config key 'start': expected taylor or analytic");
    if (cfg.threads < 0) throw std::invalid_argument("config key 'threads': must be >= 0");
    if (cfg.scenario == "cavity" && cfg.scenario_m == 0 && cfg.scenario_n == 0)
        throw std::invalid_argument("config key 'scenario.m': cavity needs m or n nonzero");
    if (has_dt && has_cfl)
        cfg.warnings.push_back("both dt and cfl_safety given; dt wins");
    return cfg;
}

inline std::string effective_config_echo(const RunConfig& c) {
    std::ostringstream out;
    out << "scenario=" << c.scenario << "\n";
    if (c.scenario == "cavity")
        out << "scenario.m=" << c.scenario_m << "\nscenario.n=" << c.scenario_n
            << "\nscenario.eps_r=" << c.scenario_eps_r << "\n";
    if (c.scenario == "manufactured_kerr")
        out << "scenario.amplitude=" << c.scenario_amplitude << "\n";
    if (c.scenario == "gaussian_pulse")
        out << "scenario.amplitude=" << c.scenario_amplitude
            << "\nscenario.center_x=" << c.scenario_center_x
            << "\nscenario.center_y=" << c.scenario_center_y
            << "\nscenario.width=" << c.scenario_width << "\n";
    if (!std::isnan(c.material_eps0)) out << "material.eps0=" << c.material_eps0 << "\n";
    if (!std::isnan(c.material_mu0)) out << "material.mu0=" << c.material_mu0 << "\n";
    if (!std::isnan(c.material_chi1)) out << "material.chi1=" << c.material_chi1 << "\n";
    if (!std::isnan(c.material_chi3)) out << "material.chi3=" << c.material_chi3 << "\n";
    out << "Nx=" << c.nx << "\nNy=" << c.ny << "\nk=" << c.order << "\nm=" << c.quadrature_nodes()
        << "\nc0=" << c.c0 << "\n";
    if (c.dt > 0.0)
        out << "dt=" << c.dt << "\n";
    else
        out << "cfl_safety=" << c.cfl_safety << "\n";
    out << "T=" << c.final_time << "\nc_inv_estimate=" << c.effective_c_inv()
        << "\nnewton.tol=" << c.newton_tol << "\nnewton.max_iter=" << c.newton_max_iter
        << "\nintegrator=" << c.integrator << "\nstart=" << c.start << "\n";
    return out.str();
}

}  // namespace kerrdg
