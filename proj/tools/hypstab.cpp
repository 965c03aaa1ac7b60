// hypstab: kernel synthesis, closed-loop simulation and verification driver.

#include "hypstab/config.hpp"
#include "hypstab/csv.hpp"
#include "hypstab/dump.hpp"
#include "hypstab/verification.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace hypstab;

namespace {

enum ExitCode : int { ok = 0, config_error = 2, no_convergence = 3, verify_failed = 4, io_error = 5 };

struct Options {
    std::string config;
    std::string out;
    std::string kernels;
    bool print_config = false;
};

fs::path output_dir(const Options& opt, const RunConfig& cfg) {
    return opt.out.empty() ? fs::path(cfg.run.output_dir) : fs::path(opt.out);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
    return out;
}

struct Solved {
    KernelSolution kernels;
    TargetCouplings couplings;
    std::optional<ObserverSolution> observer;
    std::optional<ObserverTargetCouplings> observer_couplings;
};

int cmd_kernels(const RunConfig& cfg, const fs::path& out) {
    Solved s{solve_control_kernels(cfg.system, cfg.grid), {}, std::nullopt, std::nullopt};
    s.couplings = solve_target_couplings(s.kernels, cfg.system, cfg.grid);
    if (cfg.run.observer) {
        s.observer = solve_observer_kernels(cfg.system, cfg.grid);
        s.observer_couplings = target_couplings_observer(*s.observer, cfg.system, cfg.grid);
    }
    const ObserverSolution* obs = s.observer ? &*s.observer : nullptr;
    const ObserverTargetCouplings* d = s.observer_couplings ? &*s.observer_couplings : nullptr;
    const auto files = write_kernel_dumps(out, s.kernels, s.couplings, obs, d);
    for (const auto& r : convergence_records(s.kernels, s.couplings, obs, d))
        std::cout << r.solve << ": " << r.iterations << " iterations, final increment "
                  << format_double(r.final_increment) << '\n';
    std::cout << "wrote " << files.size() << " files to " << out.string() << '\n';
    return ok;
}

int cmd_simulate(const RunConfig& cfg, const fs::path& out, const std::string& kernel_dir) {
    const HyperbolicSystem& sys = cfg.system;
    const ControlMode mode = cfg.controller.mode;
    const bool need_kernels = mode != ControlMode::open_loop || cfg.controller.lyapunov;

    std::optional<KernelSolution> kernels;
    std::optional<ObserverSolution> observer;
    if (need_kernels) {
        if (!kernel_dir.empty()) kernels = load_control_kernels(kernel_dir, sys);
        else kernels = solve_control_kernels(sys, cfg.grid);
    }
    if (mode == ControlMode::output_feedback) {
        if (!kernel_dir.empty()) observer = load_observer_kernels(kernel_dir, sys);
        if (!observer) observer = solve_observer_kernels(sys, cfg.grid);
    }

    SimulationOptions opt;
    opt.t_end = cfg.run.t_end;
    opt.snapshot_times = cfg.run.snapshot_times;
    if (cfg.controller.lyapunov) {
        LyapunovParams p;
        p.l = cfg.controller.l.value_or(lyapunov_weight(sys));
        if (cfg.controller.delta) {
            p.delta = *cfg.controller.delta;
        } else {
            const TargetCouplings c = solve_target_couplings(*kernels, sys, cfg.grid);
            p.delta = choose_lyapunov_parameters(sys, *kernels, c).delta;
        }
        opt.lyapunov = p;
    }

    const ControllerSpec spec{mode, kernels ? &*kernels : nullptr, observer ? &*observer : nullptr};
    const Trajectory tr = simulate(sys, cfg.grid, spec, initial_state(cfg), opt);

    fs::create_directories(out);
    {
        std::ofstream f = open_out(out / "trajectory.csv");
        write_trajectory(f, tr, sys.m());
    }
    if (!tr.snapshots.empty()) {
        std::ofstream f = open_out(out / "snapshots.csv");
        write_snapshots(f, tr.snapshots);
    }
    if (!tr.error_l2.empty()) {
        std::ofstream f = open_out(out / "observer_error.csv");
        write_series(f, "error_l2", tr.times, tr.error_l2);
    }
    if (tr.truncated)
        std::cerr << "warning: state exceeded the blow-up threshold at t = " << format_double(tr.times.back())
                  << "; trajectory truncated\n";
    std::cout << to_string(mode) << ": " << tr.times.size() << " samples, l2(0) = " << format_double(tr.l2.front())
              << ", l2(" << format_double(tr.times.back()) << ") = " << format_double(tr.l2.back()) << '\n';
    return ok;
}

int cmd_verify(const RunConfig& cfg, const fs::path& out, const std::string& kernel_dir) {
    SuiteInputs in{cfg.system, cfg.grid, initial_state(cfg), cfg.run.t_end, cfg.run.observer};
    std::optional<KernelSolution> loaded;
    std::optional<ObserverSolution> loaded_obs;
    if (!kernel_dir.empty()) {
        loaded = load_control_kernels(kernel_dir, cfg.system);
        loaded_obs = load_observer_kernels(kernel_dir, cfg.system);
        in.loaded_kernels = &*loaded;
        if (loaded_obs) in.loaded_observer = &*loaded_obs;
    }
    const VerificationReport report = run_verification_suite(in);
    fs::create_directories(out);
    {
        std::ofstream f = open_out(out / "verify.csv");
        report.write(f);
    }
    report.write(std::cout);
    return report.ok() ? ok : verify_failed;
}

void add_common(CLI::App* sub, Options& opt, bool with_kernels) {
    sub->add_option("--config", opt.config, "YAML run configuration")->required();
    sub->add_option("--out", opt.out, "output directory (default: run.output_dir)");
    sub->add_flag("--print-config", opt.print_config, "echo the parsed configuration and exit");
    if (with_kernels) sub->add_option("--kernels", opt.kernels, "directory with a previous kernel dump");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Backstepping kernels, boundary observers and closed-loop simulation for "
                 "coupled hyperbolic systems"};
    app.require_subcommand(1);
    Options opt;
    CLI::App* kernels = app.add_subcommand("kernels", "solve and dump the kernels");
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "simulate the plant and write trajectories");
    CLI::App* verify = app.add_subcommand("verify", "run the verification suite");
    add_common(kernels, opt, false);
    add_common(simulate_cmd, opt, true);
    add_common(verify, opt, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        const RunConfig cfg = load_config(opt.config);
        if (opt.print_config) {
            std::cout << emit_config(cfg);
            return ok;
        }
        const fs::path out = output_dir(opt, cfg);
        if (kernels->parsed()) return cmd_kernels(cfg, out);
        if (simulate_cmd->parsed()) return cmd_simulate(cfg, out, opt.kernels);
        return cmd_verify(cfg, out, opt.kernels);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const ConvergenceError& e) {
        std::cerr << "no convergence: " << e.what() << '\n';
        return no_convergence;
    } catch (const CsvError& e) {
        std::cerr << "bad kernel dump: " << e.what() << '\n';
        return io_error;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return io_error;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return io_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
