#include "hypstab/verification.hpp"

#include "hypstab/csv.hpp"
#include "hypstab/volterra.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>

namespace hypstab {

CheckResult check_at_most(std::string name, double value, double bound) {
    return CheckResult{std::move(name), value, bound, value <= bound};
}

CheckResult check_within(std::string name, double value, double lo, double hi) {
    CheckResult r{std::move(name), value, hi, value >= lo && value <= hi};
    return r;
}

bool VerificationReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

void VerificationReport::write(std::ostream& out) const {
    out << "check,value,bound,status\n";
    for (const auto& c : checks)
        out << c.name << ',' << format_double(c.value) << ',' << format_double(c.bound) << ',' << (c.pass ? "PASS" : "FAIL") << '\n';
}

double control_diagonal_error(const KernelSolution& sol, const HyperbolicSystem& s) {
    double err = 0.0;
    const int points = sol.grid.points();
    for (int i = 0; i < s.m(); ++i) {
        for (int j = 0; j < s.n(); ++j) {
            const double k = -s.sigma_mp(i, j) / (s.mu[i] + s.lambda[j]);
            for (int a = 0; a < points; ++a) err = std::max(err, std::abs(sol.K(i, j).at(a, a) - k));
        }
        for (int j = 0; j < i; ++j) {
            const double l = -s.sigma_mm(i, j) / (s.mu[i] - s.mu[j]);
            for (int a = 0; a < points; ++a) err = std::max(err, std::abs(sol.L(i, j).at(a, a) - l));
        }
    }
    return err;
}

double observer_diagonal_error(const ObserverSolution& obs, const HyperbolicSystem& s) {
    double err = 0.0;
    const int points = obs.grid.points();
    for (int i = 0; i < s.n(); ++i)
        for (int j = 0; j < s.m(); ++j) {
            const double k = -s.sigma_pm(i, j) / (s.lambda[i] + s.mu[j]);
            for (int a = 0; a < points; ++a) err = std::max(err, std::abs(obs.M(i, j).at(a, a) - k));
        }
    for (int i = 0; i < s.m(); ++i)
        for (int j = i + 1; j < s.m(); ++j) {
            const double k = -s.sigma_mm(i, j) / (s.mu[j] - s.mu[i]);
            for (int a = 0; a < points; ++a) err = std::max(err, std::abs(obs.N(i, j).at(a, a) - k));
        }
    return err;
}

double control_axis_error(const KernelSolution& sol, const HyperbolicSystem& s) {
    double err = 0.0;
    for (int i = 0; i < s.m(); ++i)
        for (int j = 0; j < s.m(); ++j)
            // For j < i the origin also carries hypotenuse data; the jump sits there.
            for (int a = j < i ? 1 : 0; a < sol.grid.points(); ++a) {
                double rhs = 0.0;
                for (int k = 0; k < s.n(); ++k) rhs += s.lambda[k] * sol.K(i, k).at(a, 0) * s.q0(k, j);
                err = std::max(err, std::abs(s.mu[j] * sol.L(i, j).at(a, 0) - rhs));
            }
    return err;
}

double observer_edge_error(const ObserverSolution& obs, const HyperbolicSystem& s) {
    double err = 0.0;
    const int last = obs.grid.points() - 1;
    for (int b = 0; b <= last; ++b)
        for (int i = 0; i < s.m(); ++i)
            for (int j = 0; j < s.m(); ++j) {
                if (j > i && b == last) continue;  // corner on the jump line
                double rhs = 0.0;
                for (int k = 0; k < s.n(); ++k) rhs += s.r1(i, k) * obs.M(k, j).at(last, b);
                err = std::max(err, std::abs(obs.N(i, j).at(last, b) - rhs));
            }
    return err;
}

namespace {

Matrix node_matrix(const TriFieldArray& f, int a, int b) {
    Matrix out(f.rows(), f.cols());
    for (int i = 0; i < f.rows(); ++i)
        for (int j = 0; j < f.cols(); ++j) out(i, j) = f(i, j).at(a, b);
    return out;
}

// Slopes r of the lines ξ = r x (through the origin) across which the
// L kernels of some row jump: r = μ_j / μ_p for j < p.
std::vector<double> jump_slopes(const Vector& mu) {
    std::vector<double> r;
    for (int p = 0; p < mu.size(); ++p)
        for (int j = 0; j < p; ++j) r.push_back(mu[j] / mu[p]);
    return r;
}

// Cell-centred residual sweep: `transport` maps the two difference quotients
// of `value` to the left-hand side, `source` is averaged over the four cell
// corners. `skip(x, xi)` drops cells near a jump.
double residual_sweep(int points, double h,
                      const std::function<Matrix(int, int)>& source,
                      const std::function<Matrix(const Matrix&, const Matrix&)>& transport,
                      const std::function<Matrix(int, int)>& value,
                      const std::function<bool(double, double)>& skip) {
    double worst = 0.0;
    for (int a = 0; a + 1 < points; ++a) {
        for (int b = 0; b + 1 <= a; ++b) {
            const double xc = (a + 0.5) * h;
            const double xic = (b + 0.5) * h;
            if (skip(xc, xic)) continue;
            const Matrix f00 = value(a, b);
            const Matrix f10 = value(a + 1, b);
            const Matrix f01 = value(a, b + 1);
            const Matrix f11 = value(a + 1, b + 1);
            const Matrix dx = (f10 + f11 - f00 - f01) / (2.0 * h);
            const Matrix dxi = (f01 + f11 - f00 - f10) / (2.0 * h);
            const Matrix src =
                0.25 * (source(a, b) + source(a + 1, b) + source(a, b + 1) + source(a + 1, b + 1));
            worst = std::max(worst, (transport(dx, dxi) - src).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

}  // namespace

double control_pde_residual(const KernelSolution& sol, const HyperbolicSystem& s,
                            const ResidualOptions& options) {
    const int n = s.n();
    const int m = s.m();
    const int points = sol.grid.points();
    const double h = sol.grid.h();

    // Ω(x_a) from the hypotenuse of L, independently of the solver's copy.
    std::vector<Matrix> omega(static_cast<std::size_t>(points), Matrix::Zero(m, m));
    for (int a = 0; a < points; ++a)
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j)
                omega[static_cast<std::size_t>(a)](i, j) =
                    (s.mu[i] - s.mu[j]) * sol.L(i, j).at(a, a) + s.sigma_mm(i, j);

    const std::vector<double> slopes = jump_slopes(s.mu);
    auto skip = [&](double x, double xi) {
        for (double r : slopes)
            if (std::abs(xi - r * x) < options.band * h) return true;
        return false;
    };

    auto stacked = [&](int a, int b) {
        Matrix out(m, n + m);
        out << node_matrix(sol.K, a, b), node_matrix(sol.L, a, b);
        return out;
    };
    auto source = [&](int a, int b) {
        const Matrix k = node_matrix(sol.K, a, b);
        const Matrix l = node_matrix(sol.L, a, b);
        const Matrix& om = omega[static_cast<std::size_t>(a)];
        Matrix out(m, n + m);
        out << k * s.sigma_pp + l * s.sigma_mp - om * k, l * s.sigma_mm + k * s.sigma_pm - om * l;
        return out;
    };
    auto transport = [&](const Matrix& dx, const Matrix& dxi) {
        Matrix out(m, n + m);
        out << s.mu.asDiagonal() * dx.leftCols(n) - dxi.leftCols(n) * s.lambda.asDiagonal(),
            s.mu.asDiagonal() * dx.rightCols(m) + dxi.rightCols(m) * s.mu.asDiagonal();
        return out;
    };
    return residual_sweep(points, h, source, transport, stacked, skip);
}

double observer_pde_residual(const ObserverSolution& obs, const HyperbolicSystem& s,
                             const ResidualOptions& options) {
    const int n = s.n();
    const int m = s.m();
    const int points = obs.grid.points();
    const double h = obs.grid.h();

    std::vector<Matrix> omega_bar(static_cast<std::size_t>(points), Matrix::Zero(m, m));
    for (int a = 0; a < points; ++a)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j <= i; ++j)
                omega_bar[static_cast<std::size_t>(a)](i, j) =
                    (s.mu[j] - s.mu[i]) * obs.N(i, j).at(a, a) + s.sigma_mm(i, j);

    // The N jumps sit on lines through the corner (1,1): 1 - x = r (1 - ξ).
    const std::vector<double> slopes = jump_slopes(s.mu);
    auto skip = [&](double x, double xi) {
        for (double r : slopes)
            if (std::abs((1.0 - x) - r * (1.0 - xi)) < options.band * h) return true;
        return false;
    };

    auto stacked = [&](int a, int b) {
        Matrix out(n + m, m);
        out << node_matrix(obs.M, a, b), node_matrix(obs.N, a, b);
        return out;
    };
    auto source = [&](int a, int b) {
        const Matrix mm = node_matrix(obs.M, a, b);
        const Matrix nn = node_matrix(obs.N, a, b);
        const Matrix& om = omega_bar[static_cast<std::size_t>(b)];
        Matrix out(n + m, m);
        out << s.sigma_pp * mm + s.sigma_pm * nn - mm * om,
            -s.sigma_mm * nn - s.sigma_mp * mm + nn * om;
        return out;
    };
    auto transport = [&](const Matrix& dx, const Matrix& dxi) {
        Matrix out(n + m, m);
        out << s.lambda.asDiagonal() * dx.topRows(n) - dxi.topRows(n) * s.mu.asDiagonal(),
            s.mu.asDiagonal() * dx.bottomRows(m) + dxi.bottomRows(m) * s.mu.asDiagonal();
        return out;
    };
    return residual_sweep(points, h, source, transport, stacked, skip);
}

double right_volterra_residual(const TriFieldArray& x, const TriFieldArray& forcing,
                               const TriFieldArray& kernel, const TriangleGrid& grid) {
    return sup_distance(x, add(forcing, compose(x, kernel, grid)));
}

double left_volterra_residual(const TriFieldArray& d, const TriFieldArray& forcing,
                              const TriFieldArray& kernel, const TriangleGrid& grid) {
    return sup_distance(d, add(forcing, compose(kernel, d, grid)));
}

double lyapunov_weight(const HyperbolicSystem& s) {
    const double q = s.q0.size() > 0 ? s.q0.cwiseAbs().maxCoeff() : 0.0;
    return std::max(2.0 * s.m() * q, 1e-3);
}

namespace {

double min_symmetric_eigenvalue(const Matrix& a) {
    const Matrix sym = 0.5 * (a + a.transpose());
    return Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double max_abs(const TriFieldArray& f) { return f.rows() * f.cols() > 0 ? sup_norm(f) : 0.0; }

}  // namespace

LyapunovChoice choose_lyapunov_parameters(const HyperbolicSystem& s, const KernelSolution& kernels,
                                          const TargetCouplings& couplings, double start) {
    const int n = s.n();
    const int m = s.m();
    const int points = kernels.grid.points();
    double big = std::max({s.sigma_pp.cwiseAbs().maxCoeff(), s.sigma_pm.cwiseAbs().maxCoeff(),
                           max_abs(couplings.c_plus), max_abs(couplings.c_minus)});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (double w : kernels.omega(i, j)) big = std::max(big, std::abs(w));
    big = std::max(big, 1e-12);
    const double eps = 0.99 * std::min(s.lambda.minCoeff(), s.mu.minCoeff());
    const double l = lyapunov_weight(s);

    const Matrix lambda_part = 2.0 * s.lambda.cwiseInverse().asDiagonal() * s.sigma_pp;
    auto positive = [&](double delta) {
        const double p_shift = delta - 2.0 * m * big / eps - n * big / eps - big * n / (delta * eps);
        if (min_symmetric_eigenvalue(p_shift * Matrix::Identity(n, n) - lambda_part) <= 0.0) return false;
        for (int a = 0; a < points; ++a) {
            const double x = kernels.grid.coord(a);
            const double decay = std::exp(-delta * x);
            const double q_shift =
                delta - m * n * big / (l * eps) * decay - big * n / (l * delta * eps) * decay;
            Matrix om(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) om(i, j) = kernels.omega(i, j)[static_cast<std::size_t>(a)];
            const Matrix q = q_shift * Matrix::Identity(m, m) - 2.0 * s.mu.cwiseInverse().asDiagonal() * om;
            if (min_symmetric_eigenvalue(q) <= 0.0) return false;
        }
        return true;
    };

    LyapunovChoice out{start, l, 0};
    while (!positive(out.delta)) {
        out.delta *= 2.0;
        ++out.doublings;
        if (out.doublings > 60) throw std::runtime_error("no admissible Lyapunov decay parameter");
    }
    return out;
}

double max_increment_ratio(const std::vector<double>& inc, int first) {
    double worst = 0.0;
    for (std::size_t q = static_cast<std::size_t>(std::max(first, 1)); q < inc.size(); ++q) {
        if (inc[q - 1] == 0.0) continue;
        worst = std::max(worst, inc[q] / inc[q - 1]);
    }
    return worst;
}

namespace {

std::vector<double> every_step(const HyperbolicSystem& s, const GridSpec& grid, double t_end) {
    const double dt = time_step(s, grid, t_end);
    const long steps = dt > 0.0 ? std::lround(t_end / dt) : 0;
    std::vector<double> out;
    for (long k = 0; k <= steps; ++k) out.push_back(k * dt);
    return out;
}

double sup_gap(const TargetState& a, const TargetState& b) {
    return std::max((a.alpha - b.alpha).cwiseAbs().maxCoeff(), (a.beta - b.beta).cwiseAbs().maxCoeff());
}

}  // namespace

double target_consistency_error(const HyperbolicSystem& s, const GridSpec& grid,
                                const KernelSolution& kernels, const TargetCouplings& couplings,
                                const SimState& initial, double t_end) {
    SimulationOptions opt;
    opt.t_end = t_end;
    opt.snapshot_times = every_step(s, grid, t_end);
    const Trajectory plant =
        simulate(s, grid, ControllerSpec{ControlMode::full_state, &kernels, nullptr}, initial, opt);
    const TargetTransform transform(kernels, grid.nx);
    const TargetTrajectory target =
        simulate_target(s, kernels, couplings, grid, transform.apply(initial.u, initial.v), opt);
    const std::size_t count = std::min(plant.snapshots.size(), target.snapshots.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const SimState& st = plant.snapshots[k];
        worst = std::max(worst, sup_gap(transform.apply(st.u, st.v), target.snapshots[k]));
    }
    return worst;
}

double target_boundary_error(const HyperbolicSystem& s, const GridSpec& grid,
                             const KernelSolution& kernels, const SimState& initial, double t_end) {
    SimulationOptions opt;
    opt.t_end = t_end;
    opt.snapshot_times = every_step(s, grid, t_end);
    const Trajectory plant =
        simulate(s, grid, ControllerSpec{ControlMode::full_state, &kernels, nullptr}, initial, opt);
    const TargetTransform transform(kernels, grid.nx);
    double worst = 0.0;
    for (std::size_t k = 1; k < plant.snapshots.size(); ++k) {
        const SimState& st = plant.snapshots[k];
        worst = std::max(worst, transform.apply(st.u, st.v).beta.col(grid.nx).cwiseAbs().maxCoeff());
    }
    return worst;
}

double inverse_roundtrip_error(const KernelSolution& kernels, const GridSpec& grid, int count,
                               unsigned seed) {
    const int n = kernels.K.cols();
    const int m = kernels.K.rows();
    const int nx = grid.nx;
    const Resolvent resolvent = inverse_transform_resolvent(kernels, grid);
    const TargetTransform transform(kernels, nx);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    double worst = 0.0;
    for (int r = 0; r < count; ++r) {
        // Low-order trigonometric polynomials: smooth, O(1) in size.
        Matrix u(n, nx + 1);
        Matrix v(m, nx + 1);
        auto fill = [&](Matrix& f) {
            for (Eigen::Index i = 0; i < f.rows(); ++i) {
                const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng), c3 = coef(rng);
                for (int c = 0; c <= nx; ++c) {
                    const double x = static_cast<double>(c) / nx;
                    f(i, c) = c0 + c1 * std::sin(M_PI * x) + c2 * std::cos(2.0 * M_PI * x) + c3 * x * x;
                }
            }
        };
        fill(u);
        fill(v);
        const TargetState back = inverse_transform(transform.apply(u, v), resolvent, kernels.grid);
        worst = std::max(worst, sup_gap(back, TargetState{u, v}));
    }
    return worst;
}

double lyapunov_growth(const HyperbolicSystem& s, const GridSpec& grid, const KernelSolution& kernels,
                       const SimState& initial, double t_end, double delta, double l) {
    SimulationOptions opt;
    opt.t_end = t_end;
    opt.lyapunov = LyapunovParams{delta, l};
    const Trajectory tr =
        simulate(s, grid, ControllerSpec{ControlMode::full_state, &kernels, nullptr}, initial, opt);
    double worst = -1.0;
    for (std::size_t k = 1; k + 1 < tr.lyapunov.size(); ++k) {
        if (tr.lyapunov[k] <= 0.0) continue;
        worst = std::max(worst, tr.lyapunov[k + 1] / tr.lyapunov[k] - 1.0);
    }
    return worst;
}

namespace {

// Residual ratio between a lattice of (points+1)/2 nodes and `points` nodes.
// Both residuals at rounding level count as exact.
CheckResult residual_ratio(std::string name, double coarse, double fine) {
    if (coarse <= 1e-13 && fine <= 1e-13) return CheckResult{std::move(name), 0.0, 2.6, true};
    return check_within(std::move(name), coarse / fine, 1.6, 2.6);
}

double max_row_ratio(const std::vector<std::vector<double>>& rows) {
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, max_increment_ratio(r));
    return worst;
}

}  // namespace

VerificationReport run_verification_suite(const SuiteInputs& in) {
    const HyperbolicSystem& s = in.system;
    const GridSpec& grid = in.grid;
    VerificationReport report;
    auto add_check = [&](CheckResult c) { report.checks.push_back(std::move(c)); };

    const KernelSolution kernels = solve_control_kernels(s, grid);
    const TargetCouplings couplings = solve_target_couplings(kernels, s, grid);
    const double h = kernels.grid.h();
    const double tol = grid.picard_tol;

    GridSpec coarse_grid = grid;
    coarse_grid.kernel_nx = (grid.kernel_nx + 1) / 2;
    const bool refine = grid.kernel_nx % 2 == 1 && coarse_grid.kernel_nx >= 9;

    add_check(check_at_most("control_diagonal", control_diagonal_error(kernels, s), 1e-12));
    add_check(check_at_most("control_axis", control_axis_error(kernels, s), 10.0 * h));
    const double control_res = control_pde_residual(kernels, s);
    if (refine) {
        const KernelSolution coarse = solve_control_kernels(s, coarse_grid);
        add_check(residual_ratio("control_residual_ratio", control_pde_residual(coarse, s), control_res));
    }
    add_check(check_at_most("control_picard_decay", max_row_ratio(kernels.increments), 0.5));
    add_check(check_at_most(
        "cminus_volterra",
        right_volterra_residual(couplings.c_minus, multiply(s.sigma_pm, kernels.L), kernels.L, kernels.grid),
        10.0 * tol));

    double observer_res = 0.0;
    std::optional<ObserverSolution> observer;
    if (in.observer) {
        observer = solve_observer_kernels(s, grid);
        add_check(check_at_most("observer_diagonal", observer_diagonal_error(*observer, s), 1e-12));
        add_check(check_at_most("observer_edge", observer_edge_error(*observer, s), 10.0 * h));
        observer_res = observer_pde_residual(*observer, s);
        if (refine) {
            const ObserverSolution coarse = solve_observer_kernels(s, coarse_grid);
            add_check(residual_ratio("observer_residual_ratio", observer_pde_residual(coarse, s), observer_res));
        }
        add_check(check_at_most("observer_picard_decay", max_row_ratio(observer->reflected.increments), 0.5));
        const ObserverTargetCouplings d = target_couplings_observer(*observer, s, grid);
        add_check(check_at_most(
            "dminus_volterra",
            left_volterra_residual(d.d_minus, multiply(observer->N, s.sigma_mp), observer->N, observer->grid),
            10.0 * tol));
    }

    const double ic_sup = std::max(in.initial.u.cwiseAbs().maxCoeff(), in.initial.v.cwiseAbs().maxCoeff());
    add_check(check_at_most("target_consistency",
                            target_consistency_error(s, grid, kernels, couplings, in.initial, in.t_end),
                            5.0 * h * ic_sup));
    add_check(check_at_most("target_boundary", target_boundary_error(s, grid, kernels, in.initial, in.t_end),
                            5.0 * h * ic_sup));
    add_check(check_at_most("inverse_roundtrip", inverse_roundtrip_error(kernels, grid), 5.0 * h));
    const LyapunovChoice lyap = choose_lyapunov_parameters(s, kernels, couplings);
    add_check(check_at_most("lyapunov_growth",
                            lyapunov_growth(s, grid, kernels, in.initial, in.t_end, lyap.delta, lyap.l),
                            10.0 * h));

    if (in.loaded_kernels) {
        const KernelSolution& k = *in.loaded_kernels;
        add_check(CheckResult{"loaded_control_points", static_cast<double>(k.grid.points()),
                              static_cast<double>(grid.kernel_nx), k.grid.points() == grid.kernel_nx});
        add_check(check_at_most("loaded_control_diagonal", control_diagonal_error(k, s), 1e-12));
        add_check(check_at_most("loaded_control_residual", control_pde_residual(k, s), 2.0 * control_res + 1e-12));
    }
    if (in.loaded_observer && in.observer) {
        const ObserverSolution& o = *in.loaded_observer;
        add_check(CheckResult{"loaded_observer_points", static_cast<double>(o.grid.points()),
                              static_cast<double>(grid.kernel_nx), o.grid.points() == grid.kernel_nx});
        add_check(check_at_most("loaded_observer_diagonal", observer_diagonal_error(o, s), 1e-12));
        add_check(check_at_most("loaded_observer_residual", observer_pde_residual(o, s),
                                2.0 * observer_res + 1e-12));
    }
    return report;
}

}  // namespace hypstab
