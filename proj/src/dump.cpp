#include "hypstab/dump.hpp"

#include "hypstab/csv.hpp"

#include <fstream>

namespace hypstab {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

TriFieldArray read_named(const std::filesystem::path& path, const std::string& name) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot read " + path.string());
    try {
        return read_kernel_records(in, name);
    } catch (const CsvError& e) {
        throw CsvError(path.string() + ": " + e.what());
    }
}

void expect_shape(const TriFieldArray& f, int rows, int cols, const std::string& name) {
    if (f.rows() != rows || f.cols() != cols)
        throw CsvError(name + " dump is " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                       ", system needs " + std::to_string(rows) + "x" + std::to_string(cols));
}

}  // namespace

std::vector<ConvergenceRecord> convergence_records(const KernelSolution& kernels,
                                                   const TargetCouplings& couplings,
                                                   const ObserverSolution* observer,
                                                   const ObserverTargetCouplings* observer_couplings) {
    std::vector<ConvergenceRecord> out;
    for (std::size_t i = 0; i < kernels.increments.size(); ++i) {
        const auto& row = kernels.increments[i];
        out.push_back({"control_row_" + std::to_string(i + 1), static_cast<int>(row.size()),
                       row.empty() ? 0.0 : row.back()});
    }
    out.push_back({"target_couplings", couplings.iterations, couplings.final_increment});
    if (observer) {
        const auto& inc = observer->reflected.increments;
        for (std::size_t i = 0; i < inc.size(); ++i)
            out.push_back({"observer_column_" + std::to_string(i + 1), static_cast<int>(inc[i].size()),
                           inc[i].empty() ? 0.0 : inc[i].back()});
        if (observer_couplings)
            out.push_back({"observer_couplings", observer_couplings->iterations,
                           observer_couplings->final_increment});
    }
    return out;
}

std::vector<std::filesystem::path> write_kernel_dumps(const std::filesystem::path& dir,
                                                      const KernelSolution& kernels,
                                                      const TargetCouplings& couplings,
                                                      const ObserverSolution* observer,
                                                      const ObserverTargetCouplings* observer_couplings) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;

    auto tri = [&](const std::string& file, const std::string& name, const TriFieldArray& f,
                   const TriangleGrid& grid) {
        const auto path = dir / file;
        std::ofstream out = open_out(path);
        write_kernel_header(out);
        write_kernel_records(out, name, f, grid);
        finish(out, path);
        written.push_back(path);
    };

    tri("K.csv", "K", kernels.K, kernels.grid);
    tri("L.csv", "L", kernels.L, kernels.grid);
    {
        const auto path = dir / "Omega.csv";
        std::ofstream out = open_out(path);
        write_kernel_header(out);
        write_axis_records(out, "Omega", kernels.omega, kernels.grid, AxisPlacement::diagonal);
        finish(out, path);
        written.push_back(path);
    }
    tri("Cplus.csv", "Cplus", couplings.c_plus, kernels.grid);
    tri("Cminus.csv", "Cminus", couplings.c_minus, kernels.grid);

    if (observer) {
        tri("M.csv", "M", observer->M, observer->grid);
        tri("N.csv", "N", observer->N, observer->grid);
        const auto path = dir / "observer_gains.csv";
        std::ofstream out = open_out(path);
        write_kernel_header(out);
        write_axis_records(out, "Pplus", observer->p_plus, observer->grid, AxisPlacement::axis);
        write_axis_records(out, "Pminus", observer->p_minus, observer->grid, AxisPlacement::axis);
        finish(out, path);
        written.push_back(path);
        if (observer_couplings) {
            tri("Dplus.csv", "Dplus", observer_couplings->d_plus, observer->grid);
            tri("Dminus.csv", "Dminus", observer_couplings->d_minus, observer->grid);
        }
    }

    const auto path = dir / "convergence.csv";
    std::ofstream out = open_out(path);
    out << "solve,iterations,final_increment\n";
    for (const auto& r : convergence_records(kernels, couplings, observer, observer_couplings))
        out << r.solve << ',' << r.iterations << ',' << format_double(r.final_increment) << '\n';
    finish(out, path);
    written.push_back(path);
    return written;
}

KernelSolution load_control_kernels(const std::filesystem::path& dir, const HyperbolicSystem& s) {
    TriFieldArray K = read_named(dir / "K.csv", "K");
    TriFieldArray L = read_named(dir / "L.csv", "L");
    expect_shape(K, s.m(), s.n(), "K");
    expect_shape(L, s.m(), s.m(), "L");
    const int points = K(0, 0).points();
    if (L(0, 0).points() != points) throw CsvError("K and L dumps use different lattices");

    KernelSolution sol = empty_kernel_solution(s, points);
    sol.K = std::move(K);
    sol.L = std::move(L);
    sol.L_upper = sol.L;
    sol.L_lower = sol.L;
    sol.omega = omega_from_L(sol.L, s);
    return sol;
}

std::optional<ObserverSolution> load_observer_kernels(const std::filesystem::path& dir,
                                                      const HyperbolicSystem& s) {
    if (!std::filesystem::exists(dir / "M.csv")) return std::nullopt;
    ObserverSolution obs;
    obs.M = read_named(dir / "M.csv", "M");
    obs.N = read_named(dir / "N.csv", "N");
    expect_shape(obs.M, s.n(), s.m(), "M");
    expect_shape(obs.N, s.m(), s.m(), "N");
    const int points = obs.M(0, 0).points();
    if (obs.N(0, 0).points() != points) throw CsvError("M and N dumps use different lattices");
    obs.grid = TriangleGrid(points);
    obs.omega_bar = omega_bar_from_N(obs.N, s);
    ObserverGains gains = gains_from_kernels(obs.M, obs.N, s);
    obs.p_plus = std::move(gains.p_plus);
    obs.p_minus = std::move(gains.p_minus);
    return obs;
}

}  // namespace hypstab
