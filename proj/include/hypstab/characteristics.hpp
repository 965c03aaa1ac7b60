#pragma once

#include "hypstab/system.hpp"

namespace hypstab {

struct Point {
    double x;
    double xi;
};

/// Characteristic of the K-kernel equation for entry (i, j):
///   x(s) = x - μ_i s,   ξ(s) = ξ + λ_j s,   s ∈ [0, s_end],
/// terminating on the hypotenuse.
struct KCharacteristic {
    Point start;
    double dx;   // -μ_i
    double dxi;  // +λ_j
    double s_end;

    [[nodiscard]] Point at(double s) const { return {start.x + dx * s, start.xi + dxi * s}; }
    [[nodiscard]] Point end() const { return at(s_end); }
};

/// Characteristic of the L-kernel equation for entry (i, j):
///   χ(ν) = x - μ_i ν,   ζ(ν) = ξ - μ_j ν,   ν ∈ [0, nu_end],
/// terminating either on the hypotenuse (hits_diagonal) or on ξ = 0.
struct LCharacteristic {
    Point start;
    double dx;   // -μ_i
    double dxi;  // -μ_j
    double nu_end;
    bool hits_diagonal;

    [[nodiscard]] Point at(double nu) const { return {start.x + dx * nu, start.xi + dxi * nu}; }
    [[nodiscard]] Point end() const { return at(nu_end); }
};

/// Throws std::domain_error when (x, ξ) lies outside T. Indices are 0-based.
[[nodiscard]] KCharacteristic trace_characteristic_K(const HyperbolicSystem& system, int i, int j,
                                                     double x, double xi);
[[nodiscard]] LCharacteristic trace_characteristic_L(const HyperbolicSystem& system, int i, int j,
                                                     double x, double xi);

/// Generic forms used by the solver: speeds are passed directly.
[[nodiscard]] KCharacteristic k_characteristic(double mu_i, double lambda_j, double x, double xi);
[[nodiscard]] LCharacteristic l_characteristic(double mu_i, double mu_j, bool lower, double x,
                                               double xi);

}  // namespace hypstab
