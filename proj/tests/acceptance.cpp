// Acceptance run: one PASS/FAIL line per criterion on the two-by-two example
// (plus randomized plants for the residual check). Exit status 1 if any fails.

#include "hypstab/kernel_solver.hpp"
#include "hypstab/observer.hpp"
#include "hypstab/simulation.hpp"
#include "hypstab/verification.hpp"

#include "random_systems.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

using namespace hypstab;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("CRITERION %2d %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

GridSpec default_grid(int nx = 400) {
    GridSpec g;
    g.nx = nx;
    g.cfl = 0.9;
    g.kernel_nx = 129;
    g.picard_tol = 1e-10;
    g.picard_max_iter = 200;
    return g;
}

double sup_state(const Matrix& u, const Matrix& v) {
    return std::max(u.cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff());
}

// Sample index of time t on a trajectory with uniform steps.
std::size_t index_at(const std::vector<double>& times, double t) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - t) < std::abs(times[best] - t)) best = k;
    return best;
}

std::vector<double> every_step(const HyperbolicSystem& s, const GridSpec& g, double t_end) {
    const double dt = time_step(s, g, t_end);
    std::vector<double> out;
    for (long k = 0; k <= std::lround(t_end / dt); ++k) out.push_back(k * dt);
    return out;
}

}  // namespace

int main() {
    const auto started = std::chrono::steady_clock::now();
    const HyperbolicSystem s = reference_system();
    const GridSpec g = default_grid();
    const double h = 1.0 / (g.kernel_nx - 1);
    const SimState ic = sine_state(s, g.nx);
    const double ic_sup = sup_state(ic.u, ic.v);

    const KernelSolution kernels = solve_control_kernels(s, g);
    const TargetCouplings couplings = solve_target_couplings(kernels, s, g);
    const ObserverSolution observer = solve_observer_kernels(s, g);

    // 1. Closed loop collapses at the minimum time.
    {
        const double t_f = 1.0 / s.mu[0] + 1.0 / s.lambda[0];
        SimulationOptions opt;
        opt.t_end = 3.0;
        const Trajectory fs = simulate(s, g, ControllerSpec{ControlMode::full_state, &kernels, nullptr}, ic, opt);
        const double r225 = fs.l2[index_at(fs.times, 2.25)] / fs.l2.front();
        const double r3 = fs.l2[index_at(fs.times, 3.0)] / fs.l2.front();
        const GridSpec fine = default_grid(800);
        const Trajectory fs800 = simulate(s, fine, ControllerSpec{ControlMode::full_state, &kernels, nullptr},
                                          sine_state(s, 800), opt);
        const double r225_fine = fs800.l2[index_at(fs800.times, 2.25)] / fs800.l2.front();
        report(1, t_f == 2.0 && r225 <= 0.05 && r3 <= 0.01 && r225_fine < r225,
               fmt("t_F=%g  L2(2.25)/L2(0)=%.3e (<=0.05)  L2(3)/L2(0)=%.3e (<=0.01)  nx=800: %.3e (< nx=400)",
                   t_f, r225, r3, r225_fine));
    }

    // 2. Open loop diverges.
    {
        SimulationOptions opt;
        opt.t_end = 4.0;
        const Trajectory ol = simulate(s, g, ControllerSpec{}, ic, opt);
        const double l1 = ol.l2[index_at(ol.times, 1.0)];
        const double l4 = ol.l2[index_at(ol.times, 4.0)];
        report(2, !ol.truncated && l4 > 10.0 * l1, fmt("L2(4)=%.4g  L2(1)=%.4g  ratio %.2f (>10)", l4, l1, l4 / l1));
    }

    // 3. Hypotenuse values, written out from the closed forms.
    {
        double err = 0.0;
        const int last = g.kernel_nx - 1;
        for (int a = 0; a <= last; ++a) {
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    err = std::max(err, std::abs(kernels.K(i, j).at(a, a) + s.sigma_mp(i, j) / (s.mu[i] + s.lambda[j])));
                    err = std::max(err, std::abs(observer.M(i, j).at(a, a) + s.sigma_pm(i, j) / (s.lambda[i] + s.mu[j])));
                }
            err = std::max(err, std::abs(kernels.L(1, 0).at(a, a) + s.sigma_mm(1, 0) / (s.mu[1] - s.mu[0])));
            err = std::max(err, std::abs(observer.N(0, 1).at(a, a) + s.sigma_mm(0, 1) / (s.mu[1] - s.mu[0])));
        }
        double k21 = 0.0;
        for (int a = 0; a <= last; ++a) k21 = std::max(k21, std::abs(kernels.K(1, 0).at(a, a) + 1.0 / 3.0));
        report(3, err <= 1e-12 && k21 <= 1e-12,
               fmt("max hypotenuse deviation %.2e (<=1e-12)  max |K21(x,x)+1/3| %.2e", err, k21));
    }

    // 4. First-order residual decay, example plus three random plants.
    {
        std::mt19937_64 rng(20241019);
        std::vector<HyperbolicSystem> plants{s};
        const int dims[3][2] = {{3, 3}, {1, 3}, {2, 2}};
        for (const auto& d : dims) plants.push_back(hypstab::testing::random_system(rng, d[0], d[1]));
        bool pass = true;
        std::string detail;
        for (std::size_t p = 0; p < plants.size(); ++p) {
            GridSpec coarse = default_grid();
            coarse.kernel_nx = 65;
            const HyperbolicSystem& sys = plants[p];
            const double c0 = control_pde_residual(solve_control_kernels(sys, coarse), sys);
            const double c1 = control_pde_residual(p == 0 ? kernels : solve_control_kernels(sys, g), sys);
            const double o0 = observer_pde_residual(solve_observer_kernels(sys, coarse), sys);
            const double o1 = observer_pde_residual(p == 0 ? observer : solve_observer_kernels(sys, g), sys);
            const double rc = c0 / c1;
            const double ro = o0 / o1;
            pass = pass && rc >= 1.6 && rc <= 2.6 && ro >= 1.6 && ro <= 2.6;
            detail += fmt("%s(n=%d,m=%d) K/L %.2f M/N %.2f; ", p == 0 ? "example" : "random", sys.n(), sys.m(), rc, ro);
        }
        report(4, pass, detail + "ratios in [1.6, 2.6]");
    }

    // 5. Picard increments.
    {
        double worst = 0.0;
        for (const auto& row : kernels.increments) worst = std::max(worst, max_increment_ratio(row, 10));
        double worst_obs = 0.0;
        for (const auto& row : observer.reflected.increments) worst_obs = std::max(worst_obs, max_increment_ratio(row, 10));
        report(5, worst <= 0.5 && worst_obs <= 0.5,
               fmt("max d_{q+1}/d_q for q>=10: control %.3f, observer %.3f (<=0.5)", worst, worst_obs));
    }

    const double bound5h = 5.0 * h * ic_sup;
    SimulationOptions all_steps;
    all_steps.t_end = 3.0;
    all_steps.snapshot_times = every_step(s, g, 3.0);
    const Trajectory closed =
        simulate(s, g, ControllerSpec{ControlMode::full_state, &kernels, nullptr}, ic, all_steps);
    const TargetTransform transform(kernels, g.nx);

    // 6. Transformed plant trajectory against the target system.
    {
        const TargetTrajectory target =
            simulate_target(s, kernels, couplings, g, transform.apply(ic.u, ic.v), all_steps);
        double worst = 0.0;
        const std::size_t count = std::min(closed.snapshots.size(), target.snapshots.size());
        for (std::size_t k = 0; k < count; ++k) {
            const TargetState a = transform.apply(closed.snapshots[k].u, closed.snapshots[k].v);
            worst = std::max(worst, sup_state(a.alpha - target.snapshots[k].alpha, a.beta - target.snapshots[k].beta));
        }
        report(6, count == all_steps.snapshot_times.size() && worst <= bound5h,
               fmt("sup gap %.3e over %zu samples (<= 5 h |IC| = %.3e)", worst, count, bound5h));
    }

    // 7. Target boundary condition β(t,1) = 0, for t > 0.
    {
        double worst = 0.0;
        for (std::size_t k = 1; k < closed.snapshots.size(); ++k) {
            const TargetState a = transform.apply(closed.snapshots[k].u, closed.snapshots[k].v);
            worst = std::max(worst, a.beta.col(g.nx).cwiseAbs().maxCoeff());
        }
        report(7, worst <= bound5h, fmt("max |beta(t,1)| over steps after the first %.3e (<= %.3e)", worst, bound5h));
    }

    // 8. Inverse transformation round trip.
    {
        const Resolvent r = inverse_transform_resolvent(kernels, g);
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> c(-1.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            Matrix u(2, g.nx + 1);
            Matrix v(2, g.nx + 1);
            for (Matrix* f : {&u, &v})
                for (int i = 0; i < 2; ++i) {
                    const double a0 = c(rng), a1 = c(rng), a2 = c(rng);
                    for (int k = 0; k <= g.nx; ++k) {
                        const double x = static_cast<double>(k) / g.nx;
                        (*f)(i, k) = a0 + a1 * std::sin(3.0 * x) + a2 * std::exp(-x) * x;
                    }
                }
            const TargetState back = inverse_transform(transform.apply(u, v), r, kernels.grid);
            worst = std::max(worst, sup_state(back.alpha - u, back.beta - v));
        }
        report(8, worst <= 5.0 * h, fmt("sup round-trip error %.3e on 20 states (<= 5h = %.3e)", worst, 5.0 * h));
    }

    // 9 and 10. Observer from a zero estimate, then output feedback.
    {
        SimulationOptions opt;
        opt.t_end = 4.5;
        SimState start = ic;
        start.hat_u = Matrix::Zero(2, g.nx + 1);
        start.hat_v = Matrix::Zero(2, g.nx + 1);
        const Trajectory of =
            simulate(s, g, ControllerSpec{ControlMode::output_feedback, &kernels, &observer}, start, opt);
        const double err_ratio = of.error_l2[index_at(of.times, 2.25)] / of.error_l2.front();
        report(9, err_ratio <= 0.05, fmt("observer error L2(2.25)/L2(0) = %.3e (<=0.05)", err_ratio));
        const double l2_ratio = of.l2[index_at(of.times, 4.5)] / of.l2.front();
        report(10, l2_ratio <= 0.05, fmt("output feedback L2(4.5)/L2(0) = %.3e (<=0.05)", l2_ratio));
    }

    // 11. Lyapunov functional along the closed loop.
    {
        const double l = 2.0 * s.m() * s.q0.cwiseAbs().maxCoeff();
        const LyapunovChoice choice = choose_lyapunov_parameters(s, kernels, couplings, 1.0);
        SimulationOptions opt;
        opt.t_end = 3.0;
        opt.lyapunov = LyapunovParams{choice.delta, l};
        const Trajectory tr = simulate(s, g, ControllerSpec{ControlMode::full_state, &kernels, nullptr}, ic, opt);
        double worst = -1.0;
        for (std::size_t k = 1; k + 1 < tr.lyapunov.size(); ++k)
            worst = std::max(worst, tr.lyapunov[k + 1] / tr.lyapunov[k] - 1.0);
        report(11, choice.l == l && worst <= 10.0 * h,
               fmt("l=%g delta=%g (%d doublings)  max V(t_k+1)/V(t_k)-1 = %.3e (<= 10h = %.3e)", l, choice.delta,
                   choice.doublings, worst, 10.0 * h));
    }

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::printf("%d of 11 criteria failed (%.1f s)\n", failures, seconds);
    return failures == 0 ? 0 : 1;
}
