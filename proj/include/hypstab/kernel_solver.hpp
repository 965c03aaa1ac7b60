#pragma once

// Control-side backstepping kernels.
//
// The transformation  β = v - ∫_0^x (K u + L v) dξ  maps the plant onto a
// target whose v-part is an upper-triangular cascade. K (m x n) and L (m x m)
// solve a Goursat-type system on T with data on the hypotenuse (K, and L below
// the diagonal) and on ξ = 0 (L through Q0). Rows are solved from i = m-1 down
// to 0; row i only reads rows p > i, which makes each row's problem linear.

#include "hypstab/system.hpp"
#include "hypstab/triangle_grid.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace hypstab {

struct PicardOptions {
    double tol = 1e-10;
    int max_iter = 200;
};

[[nodiscard]] inline PicardOptions picard_options(const GridSpec& grid) {
    return PicardOptions{grid.picard_tol, grid.picard_max_iter};
}

/// Raised when successive approximations stall above tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}

    [[nodiscard]] const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

struct KernelSolution {
    TriangleGrid grid{2};
    TriFieldArray K;        // m x n
    TriFieldArray L;        // m x m
    AxisFieldArray omega;   // m x m, upper triangular
    /// For j < i, L_ij jumps across the line μ_i ξ = μ_j x through the origin.
    /// L_upper continues the hypotenuse-side values a few cells past that line
    /// and L_lower the axis-side values; only those entries are meaningful.
    TriFieldArray L_upper;
    TriFieldArray L_lower;
    Vector mu;
    /// Sup-norm Picard increments per row, indexed by row.
    std::vector<std::vector<double>> increments;

    /// L_ij at (x, ξ) read from the sheet on the same side of the jump line.
    [[nodiscard]] double L_at(int i, int j, const PointStencil& stencil, double x, double xi) const;

    [[nodiscard]] int iterations_used() const;
    [[nodiscard]] double final_increment() const;
};

/// True when (x, ξ) lies on the hypotenuse side of μ_i ξ = μ_j x.
[[nodiscard]] inline bool above_jump(double mu_i, double mu_j, double x, double xi) {
    return mu_i * xi - mu_j * x >= 0.0;
}

[[nodiscard]] KernelSolution solve_control_kernels(const HyperbolicSystem& system,
                                                   const GridSpec& grid);

/// Allocates an all-zero solution on `points` nodes per axis.
[[nodiscard]] KernelSolution empty_kernel_solution(const HyperbolicSystem& system, int points);

/// Solves row `row` of K and L in place; rows p > row of `solution` must
/// already hold their converged values. Refreshes the omega row afterwards.
void solve_kernel_row(const HyperbolicSystem& system, int row, const PicardOptions& options,
                      KernelSolution& solution);

/// ω_ij(x) = (μ_i - μ_j) L_ij(x,x) + σ⁻⁻_ij for i <= j, zero below the diagonal.
[[nodiscard]] AxisFieldArray omega_from_L(const TriFieldArray& L, const HyperbolicSystem& system);

struct TargetCouplings {
    TriFieldArray c_minus;  // n x m
    TriFieldArray c_plus;   // n x n
    int iterations = 0;
    double final_increment = 0.0;
};

[[nodiscard]] TargetCouplings solve_target_couplings(const KernelSolution& kernels,
                                                     const HyperbolicSystem& system,
                                                     const GridSpec& grid);

/// Kernel S of the inverse map (u,v) = (α,β) - ∫_0^x S (α,β) dξ.
struct Resolvent {
    TriFieldArray s;  // (n+m) x (n+m)
    int iterations = 0;
    double final_increment = 0.0;
};

[[nodiscard]] Resolvent inverse_transform_resolvent(const KernelSolution& kernels,
                                                    const GridSpec& grid);

}  // namespace hypstab
