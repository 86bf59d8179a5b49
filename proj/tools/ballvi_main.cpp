// Frontend for the solvers: three subcommands sharing the same option set.
// Exit codes: 0 success, 1 config/usage error, 2 solver failure, 3 a
// verification did not pass.

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "ballvi/cli.hpp"

namespace {

void add_common(CLI::App* cmd, ballvi::CliOptions& opt) {
    cmd->add_option("config", opt.config_path, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opt.out_dir, "output directory")->required();
    cmd->add_option("--threads", opt.threads, "worker threads (reserved, kernels run serially)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", opt.seed, "seed for randomized spot checks");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"evolutionary ball-constrained diffusion: penalty and projection solvers"};
    app.require_subcommand(1);

    ballvi::CliOptions run_pen_opt, run_vi_opt, study_opt;
    CLI::App* run_pen = app.add_subcommand(
        "run-pen", "time stepping with the exponential penalty, plus the estimate audit");
    add_common(run_pen, run_pen_opt);
    CLI::App* run_vi = app.add_subcommand(
        "run-vi", "constrained reference solve with complementarity verification");
    add_common(run_vi, run_vi_opt);
    CLI::App* study = app.add_subcommand(
        "study", "parameter studies: epsilon limit, data dependence, multiplier agreement");
    add_common(study, study_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (run_pen->parsed()) return ballvi::cmd_run_pen(run_pen_opt);
        if (run_vi->parsed()) return ballvi::cmd_run_vi(run_vi_opt);
        if (study->parsed()) return ballvi::cmd_study(study_opt);
    } catch (const ballvi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ballvi::SolverError& e) {
        std::cerr << "solver error at step " << e.step() << " (residual " << e.residual()
                  << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
