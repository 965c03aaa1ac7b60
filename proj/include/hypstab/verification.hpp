#pragma once

// Independent numerical checks on solved kernels and closed-loop runs.

#include "hypstab/kernel_solver.hpp"
#include "hypstab/observer.hpp"
#include "hypstab/simulation.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hypstab {

struct CheckResult {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

/// value <= bound, with NaN failing.
[[nodiscard]] CheckResult check_at_most(std::string name, double value, double bound);
/// lo <= value <= hi.
[[nodiscard]] CheckResult check_within(std::string name, double value, double lo, double hi);

struct VerificationReport {
    std::vector<CheckResult> checks;

    [[nodiscard]] bool ok() const;
    /// One line per check: name,value,bound,PASS|FAIL (CSV with header).
    void write(std::ostream& out) const;
};

/// Largest deviation of K (all entries) and L (j < i) from their prescribed
/// hypotenuse values, over every diagonal node.
[[nodiscard]] double control_diagonal_error(const KernelSolution& kernels,
                                            const HyperbolicSystem& system);

/// Same for M (all entries) and N (j > i).
[[nodiscard]] double observer_diagonal_error(const ObserverSolution& observer,
                                             const HyperbolicSystem& system);

/// Largest deviation of μ_j L_ij(x,0) from Σ_k λ_k K_ik(x,0) q_kj, skipping
/// the origin for j < i where the hypotenuse value applies.
[[nodiscard]] double control_axis_error(const KernelSolution& kernels,
                                        const HyperbolicSystem& system);

/// Largest deviation of N(1,ξ) from R1 M(1,ξ), skipping the corner for j > i.
[[nodiscard]] double observer_edge_error(const ObserverSolution& observer,
                                         const HyperbolicSystem& system);

/// Lines through a corner of T along which L (control) or N (observer) jump.
/// A cell whose centre lies within `band` lattice steps of one of them is
/// skipped by the residual checks.
struct ResidualOptions {
    double band = 3.0;
};

/// Sup-norm of the cell-centred finite-difference residual of the kernel
/// PDEs, written in matrix form:
///   μ K_x - K_ξ Λ⁺ = K Σ⁺⁺ + L Σ⁻⁺ - Ω(x) K
///   μ L_x + L_ξ Λ⁻ = L Σ⁻⁻ + K Σ⁺⁻ - Ω(x) L
/// with μ = diag(Λ⁻) acting on rows and Ω rebuilt from the hypotenuse of L.
[[nodiscard]] double control_pde_residual(const KernelSolution& kernels,
                                          const HyperbolicSystem& system,
                                          const ResidualOptions& options = {});

/// Same for the observer kernels:
///   Λ⁺ M_x - M_ξ Λ⁻ =  Σ⁺⁺M + Σ⁺⁻N - M Ω̄(ξ)
///   Λ⁻ N_x + N_ξ Λ⁻ = -Σ⁻⁻N - Σ⁻⁺M + N Ω̄(ξ)
[[nodiscard]] double observer_pde_residual(const ObserverSolution& observer,
                                           const HyperbolicSystem& system,
                                           const ResidualOptions& options = {});

/// Sup-norm residual of X - F - X∘G for the given fields (trapezoid).
[[nodiscard]] double right_volterra_residual(const TriFieldArray& x, const TriFieldArray& forcing,
                                             const TriFieldArray& kernel, const TriangleGrid& grid);
[[nodiscard]] double left_volterra_residual(const TriFieldArray& d, const TriFieldArray& forcing,
                                            const TriFieldArray& kernel, const TriangleGrid& grid);

/// Decay parameter δ for the target-system Lyapunov functional: starting from
/// `start`, doubled until the matrices P and Q(x) of the stability estimate
/// are positive definite at every kernel abscissa. M is the largest absolute
/// entry of Σ⁺⁺, Σ⁺⁻, C⁺, C⁻ and Ω, ε = 0.99 min(λ, μ).
struct LyapunovChoice {
    double delta = 0.0;
    double l = 0.0;
    int doublings = 0;
};

[[nodiscard]] LyapunovChoice choose_lyapunov_parameters(const HyperbolicSystem& system,
                                                        const KernelSolution& kernels,
                                                        const TargetCouplings& couplings,
                                                        double start = 1.0);

/// l = 2 m max|q_ij| (at least a small positive floor when Q0 = 0).
[[nodiscard]] double lyapunov_weight(const HyperbolicSystem& system);

/// Largest d_{q+1}/d_q over q >= first (1-based), skipping zero increments.
/// Zero when the history is shorter than that.
[[nodiscard]] double max_increment_ratio(const std::vector<double>& increments, int first = 10);

/// Sup-norm gap between the transformed closed-loop plant trajectory and the
/// target system simulated from the transformed initial state, over every
/// time step up to t_end.
[[nodiscard]] double target_consistency_error(const HyperbolicSystem& system, const GridSpec& grid,
                                              const KernelSolution& kernels,
                                              const TargetCouplings& couplings,
                                              const SimState& initial, double t_end);

/// max |β(t,1)| along the full-state closed loop, over steps after the first.
[[nodiscard]] double target_boundary_error(const HyperbolicSystem& system, const GridSpec& grid,
                                           const KernelSolution& kernels, const SimState& initial,
                                           double t_end);

/// Sup error of transform followed by the resolvent inverse on `count`
/// random smooth states (fixed seed).
[[nodiscard]] double inverse_roundtrip_error(const KernelSolution& kernels, const GridSpec& grid,
                                             int count = 20, unsigned seed = 20240611);

/// Largest V(t_{k+1}) / V(t_k) - 1 along the full-state closed loop for
/// k >= 1, with the given Lyapunov parameters.
[[nodiscard]] double lyapunov_growth(const HyperbolicSystem& system, const GridSpec& grid,
                                     const KernelSolution& kernels, const SimState& initial,
                                     double t_end, double delta, double l);

struct SuiteInputs {
    HyperbolicSystem system;
    GridSpec grid;
    SimState initial;
    double t_end = 3.0;
    bool observer = true;
    /// Dumped kernels to check against a fresh solve (optional).
    const KernelSolution* loaded_kernels = nullptr;
    const ObserverSolution* loaded_observer = nullptr;
};

/// Every check the `verify` command reports. Throws ConvergenceError when a
/// fresh solve fails.
[[nodiscard]] VerificationReport run_verification_suite(const SuiteInputs& inputs);

}  // namespace hypstab
