#pragma once

// Plant description for n+m coupled linear transport equations
//
//   u_t + Λ⁺ u_x = Σ⁺⁺ u + Σ⁺⁻ v
//   v_t - Λ⁻ v_x = Σ⁻⁺ u + Σ⁻⁻ v
//   u(t,0) = Q0 v(t,0),   v(t,1) = R1 u(t,1) + U(t)
//
// with rightward speeds λ (non-decreasing) and leftward speeds μ (strictly
// increasing).

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace hypstab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct HyperbolicSystem {
    Vector lambda;     // n rightward speeds
    Vector mu;         // m leftward speeds
    Matrix sigma_pp;   // n x n
    Matrix sigma_pm;   // n x m
    Matrix sigma_mp;   // m x n
    Matrix sigma_mm;   // m x m
    Matrix q0;         // n x m
    Matrix r1;         // m x n

    [[nodiscard]] int n() const { return static_cast<int>(lambda.size()); }
    [[nodiscard]] int m() const { return static_cast<int>(mu.size()); }
};

/// Discretization parameters shared by the kernel solver and the simulator.
struct GridSpec {
    int nx = 400;
    double cfl = 0.9;
    int kernel_nx = 129;
    double picard_tol = 1e-10;
    int picard_max_iter = 200;
};

struct ValidationReport {
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const { return violations.empty(); }
    [[nodiscard]] std::string summary() const;
};

[[nodiscard]] ValidationReport validate(const HyperbolicSystem& system);
[[nodiscard]] ValidationReport validate(const GridSpec& grid);

/// Minimum control time 1/μ_1 + 1/λ_1.
[[nodiscard]] double min_control_time(const HyperbolicSystem& system);

/// The two-by-two example system with n = m = 2 used throughout the tests.
[[nodiscard]] HyperbolicSystem reference_system();

/// System whose control kernels are the reflected, transposed observer
/// kernels of `system` (see observer.hpp).
[[nodiscard]] HyperbolicSystem observer_dual(const HyperbolicSystem& system);

}  // namespace hypstab
