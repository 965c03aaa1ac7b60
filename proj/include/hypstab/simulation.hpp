#pragma once

// Explicit first-order upwind simulation of the plant, the observer and the
// control target system on the uniform node grid x_c = c/nx, c = 0..nx.

#include "hypstab/kernel_solver.hpp"
#include "hypstab/observer.hpp"
#include "hypstab/system.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace hypstab {

struct SimState {
    double t = 0.0;
    Matrix u;                    // n x (nx+1)
    Matrix v;                    // m x (nx+1)
    std::optional<Matrix> hat_u; // observer estimate
    std::optional<Matrix> hat_v;

    [[nodiscard]] int nx() const { return static_cast<int>(u.cols()) - 1; }
};

class CflError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class NonFiniteError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[nodiscard]] std::vector<double> node_coordinates(int nx);

/// Trapezoid weights on [0,1] for nx cells.
[[nodiscard]] Vector trapezoid_weights(int nx);

/// sqrt(∫ |u|² + |v|² dx) by the trapezoid rule.
[[nodiscard]] double l2_norm(const Matrix& u, const Matrix& v);

/// u_k(x) = amplitudes_u[k] sin(πx), v_k(x) = amplitudes_v[k] sin(πx).
[[nodiscard]] SimState sine_state(const Vector& amplitudes_u, const Vector& amplitudes_v, int nx);
[[nodiscard]] SimState sine_state(const HyperbolicSystem& system, int nx);

/// Kernel fields resampled onto the simulation nodes (lower triangle of a
/// dense (nx+1) x (nx+1) matrix per entry).
class SampledKernel {
public:
    SampledKernel() = default;
    /// With `mu` given, the row x = 1 is read with the same jump-aware trace
    /// as the feedback law.
    SampledKernel(const TriFieldArray& fields, const TriangleGrid& grid, int nx, const Vector* mu = nullptr);

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }
    [[nodiscard]] int nx() const { return nx_; }
    [[nodiscard]] const Matrix& entry(int i, int j) const {
        return data_[static_cast<std::size_t>(i) * cols_ + j];
    }

    /// out(:, a) = ∫_0^{x_a} F(x_a, ξ) f(ξ) dξ, trapezoid on the nodes.
    [[nodiscard]] Matrix apply(const Matrix& f) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    int nx_ = 0;
    std::vector<Matrix> data_;
};

/// Samples a function array of x onto the simulation nodes: result(i,j) is
/// row i*cols+j of the returned matrix.
[[nodiscard]] Matrix sample_axis_fields(const AxisFieldArray& f, const TriangleGrid& grid, int nx);

/// Full-state law U = -R1 u(1) + ∫_0^1 K(1,ξ)u + L(1,ξ)v dξ on a fixed node grid.
class FeedbackLaw {
public:
    FeedbackLaw(const KernelSolution& kernels, const HyperbolicSystem& system, int nx);

    [[nodiscard]] int nx() const { return nx_; }

    /// Direct evaluation of the law on (u, v). Throws on a grid mismatch.
    [[nodiscard]] Vector evaluate(const Matrix& u, const Matrix& v) const;

    /// Input U for which the boundary value v(1) = R1 u(1) + U is consistent
    /// with the law evaluated on the same state (the v(1) node enters the
    /// integral with trapezoid weight dx/2).
    [[nodiscard]] Vector closed_loop_input(const Matrix& u, const Matrix& v) const;

private:
    int nx_;
    Matrix r1_;
    Matrix k_edge_;  // m x n(nx+1): block c holds K(1, x_c) * w_c
    Matrix l_edge_;  // m x m(nx+1)
    Eigen::PartialPivLU<Matrix> boundary_solve_;
};

[[nodiscard]] Vector full_state_control(const SimState& state, const FeedbackLaw& law);
[[nodiscard]] Vector output_feedback_control(const SimState& state, const FeedbackLaw& law);

/// One explicit upwind step of the plant with a given input U.
/// Throws CflError (state untouched) when dt exceeds dx / max speed.
void step_plant(SimState& state, const HyperbolicSystem& system, const Vector& control, double dt);

/// Observer gains resampled on the simulation nodes.
struct ObserverInjection {
    Matrix p_plus;   // n*m x (nx+1)
    Matrix p_minus;  // m*m x (nx+1)

    ObserverInjection(const ObserverSolution& observer, int nx);
};

/// One step of the observer. `y` is v(t,0) at the start of the step (used by
/// the output injection), `y_next` is v(t+dt,0) (used for û(t+dt,0) = Q0 y).
void step_observer(SimState& state, const Vector& y, const Vector& y_next,
                   const HyperbolicSystem& system, const ObserverInjection& injection,
                   const Vector& control, double dt);

enum class ControlMode { open_loop, full_state, output_feedback };

struct ControllerSpec {
    ControlMode mode = ControlMode::open_loop;
    const KernelSolution* kernels = nullptr;
    const ObserverSolution* observer = nullptr;
};

struct LyapunovParams {
    double delta = 1.0;
    double l = 1.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> l2;
    std::vector<double> lyapunov;         // empty unless requested
    std::vector<double> error_l2;         // observer error, output feedback only
    std::vector<Vector> control;
    std::vector<SimState> snapshots;
    bool truncated = false;

    /// Linear interpolation of the recorded L2 norm.
    [[nodiscard]] double l2_at(double t) const;
    [[nodiscard]] double error_l2_at(double t) const;
};

struct SimulationOptions {
    double t_end = 3.0;
    std::vector<double> snapshot_times;
    std::optional<LyapunovParams> lyapunov;
};

/// Fixed step dt = t_end / ceil(t_end max_speed / (cfl dx)).
[[nodiscard]] double time_step(const HyperbolicSystem& system, const GridSpec& grid, double t_end);

[[nodiscard]] Trajectory simulate(const HyperbolicSystem& system, const GridSpec& grid,
                                  const ControllerSpec& controller, const SimState& initial,
                                  const SimulationOptions& options);

/// (α, β) = (u, v - ∫_0^x K u + L v dξ).
struct TargetState {
    Matrix alpha;
    Matrix beta;
};

class TargetTransform {
public:
    TargetTransform(const KernelSolution& kernels, int nx);

    [[nodiscard]] TargetState apply(const Matrix& u, const Matrix& v) const;

private:
    SampledKernel k_;
    SampledKernel l_;
};

[[nodiscard]] TargetState transform_to_target(const SimState& state, const KernelSolution& kernels);

/// ∫_0^1 e^{-δx} Σ α_i²/λ_i + l e^{δx} Σ β_i²/μ_i dx.
[[nodiscard]] double lyapunov_value(const TargetState& target, const HyperbolicSystem& system,
                                    double delta, double l);

/// Inverse map (u, v) = (α, β) - ∫_0^x S (α, β) dξ.
[[nodiscard]] TargetState inverse_transform(const TargetState& target, const Resolvent& resolvent,
                                            const TriangleGrid& grid);

struct TargetTrajectory {
    std::vector<double> times;
    std::vector<double> l2;
    std::vector<TargetState> snapshots;
    std::vector<double> snapshot_times;
};

/// Upwind simulation of α_t + Λ⁺α_x = Σ⁺⁺α + Σ⁺⁻β + ∫C⁺α + ∫C⁻β,
/// β_t - Λ⁻β_x = Ω(x)β with α(0) = Q0 β(0), β(1) = 0.
[[nodiscard]] TargetTrajectory simulate_target(const HyperbolicSystem& system,
                                               const KernelSolution& kernels,
                                               const TargetCouplings& couplings,
                                               const GridSpec& grid, const TargetState& initial,
                                               const SimulationOptions& options);

}  // namespace hypstab
