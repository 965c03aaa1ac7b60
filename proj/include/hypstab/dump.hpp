#pragma once

// Kernel dump directories.
//
//   K.csv L.csv Omega.csv Cplus.csv Cminus.csv   control side
//   M.csv N.csv observer_gains.csv               observer side (optional)
//   Dplus.csv Dminus.csv                         observer target couplings (optional)
//   convergence.csv                              solve,iterations,final_increment

#include "hypstab/kernel_solver.hpp"
#include "hypstab/observer.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace hypstab {

struct ConvergenceRecord {
    std::string solve;
    int iterations = 0;
    double final_increment = 0.0;
};

/// Writes every dump file into `dir` (created if needed). `observer` and
/// `observer_couplings` may be null; the couplings are written only with an
/// observer. Returns the paths written, in order.
std::vector<std::filesystem::path> write_kernel_dumps(const std::filesystem::path& dir,
                                                      const KernelSolution& kernels,
                                                      const TargetCouplings& couplings,
                                                      const ObserverSolution* observer,
                                                      const ObserverTargetCouplings* observer_couplings = nullptr);

[[nodiscard]] std::vector<ConvergenceRecord> convergence_records(
    const KernelSolution& kernels, const TargetCouplings& couplings, const ObserverSolution* observer,
    const ObserverTargetCouplings* observer_couplings = nullptr);

/// K and L from `dir`; Ω is rebuilt from the hypotenuse of L. Throws
/// CsvError on malformed files or a shape that does not fit `system`, and
/// std::ios_base::failure when a file cannot be opened.
[[nodiscard]] KernelSolution load_control_kernels(const std::filesystem::path& dir,
                                                  const HyperbolicSystem& system);

/// M and N from `dir` with Ω̄ and the gains recomputed; nullopt when M.csv
/// is absent.
[[nodiscard]] std::optional<ObserverSolution> load_observer_kernels(const std::filesystem::path& dir,
                                                                    const HyperbolicSystem& system);

}  // namespace hypstab
