#pragma once

// Anti-collocated boundary observer (measurement y = v(t,0)).
//
// The error (ũ, ṽ) is mapped onto a cascade target through
//   ũ = α̃ - ∫_0^x M β̃ dξ,   ṽ = β̃ - ∫_0^x N β̃ dξ,
// with M (n x m), N (m x m) solving
//   λ_i M_x - μ_j M_ξ =  Σ⁺⁺M + Σ⁺⁻N - M Ω̄(ξ)
//   μ_i N_x + μ_j N_ξ = -Σ⁻⁻N - Σ⁻⁺M + N Ω̄(ξ)
// on T, M(x,x) and N's above-diagonal entries fixed on the hypotenuse and
// N(1,ξ) = R1 M(1,ξ). Under (X, Y) = (1-ξ, 1-x) the transposed kernels solve
// the control kernel system of observer_dual(system), so the same cascade
// solver is reused. Ω̄ comes out lower triangular.

#include "hypstab/kernel_solver.hpp"

namespace hypstab {

struct ObserverSolution {
    TriangleGrid grid{2};
    TriFieldArray M;            // n x m
    TriFieldArray N;            // m x m
    AxisFieldArray omega_bar;   // m x m, lower triangular, indexed by hypotenuse position
    AxisFieldArray p_plus;      // n x m, p⁺_ij(x) = μ_j M_ij(x,0)
    AxisFieldArray p_minus;     // m x m, p⁻_ij(x) = μ_j N_ij(x,0)
    /// Reflected problem as solved (K' = M̄ᵀ, L' = N̄ᵀ).
    KernelSolution reflected;

    [[nodiscard]] int iterations_used() const { return reflected.iterations_used(); }
    [[nodiscard]] double final_increment() const { return reflected.final_increment(); }
};

[[nodiscard]] ObserverSolution solve_observer_kernels(const HyperbolicSystem& system,
                                                      const GridSpec& grid);

/// Maps a solution of the reflected control problem back to (M, N, Ω̄, P±).
[[nodiscard]] ObserverSolution observer_from_reflected(const HyperbolicSystem& system,
                                                       KernelSolution reflected);

/// ω̄_ij = (μ_j - μ_i) N_ij(s,s) + σ⁻⁻_ij for i >= j, zero above the diagonal.
[[nodiscard]] AxisFieldArray omega_bar_from_N(const TriFieldArray& N,
                                              const HyperbolicSystem& system);

struct ObserverGains {
    AxisFieldArray p_plus;
    AxisFieldArray p_minus;
};

[[nodiscard]] ObserverGains gains_from_kernels(const TriFieldArray& M, const TriFieldArray& N,
                                               const HyperbolicSystem& system);

struct ObserverTargetCouplings {
    TriFieldArray d_plus;   // n x n
    TriFieldArray d_minus;  // m x n
    int iterations = 0;
    double final_increment = 0.0;
};

/// D⁻ = N Σ⁻⁺ + ∫_ξ^x N(x,s) D⁻(s,ξ) ds,  D⁺ = M Σ⁻⁺ + ∫_ξ^x M(x,s) D⁻(s,ξ) ds.
[[nodiscard]] ObserverTargetCouplings target_couplings_observer(const ObserverSolution& observer,
                                                                const HyperbolicSystem& system,
                                                                const GridSpec& grid);

}  // namespace hypstab
