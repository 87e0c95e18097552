// Command-line driver: time-domain DG solver for the 2D TE_z Maxwell system
// with Kerr-type cubic nonlinearity.
//
//   kerrdg run <config>                      simulate and write outputs
//   kerrdg converge <config> --axis space|time --levels n
//                                            refinement study against the
//                                            scenario's exact solution

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "kerrdg/parallel.hpp"
#include "kerrdg/runner.hpp"

namespace {

kerrdg::RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return kerrdg::parse_config(buf.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-domain DG solver for nonlinear (Kerr) TE_z Maxwell equations"};
    app.require_subcommand(1);

    int threads = 0;
    unsigned long seed = 0;
    app.add_option("--threads", threads, "worker thread count (0 = hardware)");
    app.add_option("--seed", seed, "seed for randomized drivers");

    std::string run_config_path;
    CLI::App* run = app.add_subcommand("run", "run a simulation from a config file");
    run->add_option("config", run_config_path, "path to key=value config")->required();

    std::string conv_config_path, axis = "space";
    int levels = 3;
    CLI::App* conv = app.add_subcommand("converge", "refinement study with rate table");
    conv->add_option("config", conv_config_path, "path to key=value config")->required();
    conv->add_option("--axis", axis, "space or time")->check(CLI::IsMember({"space", "time"}));
    conv->add_option("--levels", levels, "number of refinement levels")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    (void)seed;  // reserved for randomized property drivers

    try {
        if (run->parsed()) {
            kerrdg::RunConfig cfg = load_config(run_config_path);
            if (threads > 0) cfg.threads = threads;
            return kerrdg::cmd_run(cfg, std::cout).exit_code;
        }
        kerrdg::RunConfig cfg = load_config(conv_config_path);
        if (threads > 0) cfg.threads = threads;
        const auto ax =
            axis == "space" ? kerrdg::ConvergenceAxis::space : kerrdg::ConvergenceAxis::time;
        return kerrdg::cmd_converge(cfg, ax, levels, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
