#include "hypstab/kernel_solver.hpp"

#include "hypstab/characteristics.hpp"
#include "hypstab/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hypstab {

double KernelSolution::L_at(int i, int j, const PointStencil& st, double x, double xi) const {
    if (j < i) {
        const TriFieldArray& sheet = above_jump(mu[i], mu[j], x, xi) ? L_upper : L_lower;
        return sheet(i, j).eval(st);
    }
    return L(i, j).eval(st);
}

int KernelSolution::iterations_used() const {
    std::size_t out = 0;
    for (const auto& row : increments) out = std::max(out, row.size());
    return static_cast<int>(out);
}

double KernelSolution::final_increment() const {
    double out = 0.0;
    for (const auto& row : increments)
        if (!row.empty()) out = std::max(out, row.back());
    return out;
}

KernelSolution empty_kernel_solution(const HyperbolicSystem& s, int points) {
    KernelSolution sol;
    sol.grid = TriangleGrid(points);
    sol.K = zero_fields(s.m(), s.n(), points);
    sol.L = zero_fields(s.m(), s.m(), points);
    sol.L_upper = sol.L;
    sol.L_lower = sol.L;
    sol.mu = s.mu;
    sol.omega = omega_from_L(sol.L, s);
    sol.increments.assign(static_cast<std::size_t>(s.m()), {});
    return sol;
}

namespace {

// Trapezoid sub-intervals so that consecutive samples are at most h apart in
// both coordinates.
int segments(double displacement, double h) {
    return std::max(1, static_cast<int>(std::ceil(displacement / h - 1e-9)));
}

double axis_value(const TriField& f, const TriangleGrid& grid, double x) {
    const DiagonalStencil s = make_diagonal_stencil(grid, x);
    return s.w0 * f.at(s.a0, 0) + s.w1 * f.at(s.a1, 0);
}

constexpr int ghost_band = 3;

// Continues each sheet of a jumping L entry a few nodes past the jump line by
// linear extrapolation along ξ, so that stencils straddling the line read
// values from one side only.
void extend_sheets(TriField& upper, TriField& lower, double mu_i, double mu_j,
                   const TriangleGrid& grid) {
    const double tol = 1e-12 * (mu_i + mu_j);
    auto side = [&](int a, int b) { return mu_i * grid.coord(b) - mu_j * grid.coord(a); };
    for (int a = 0; a < grid.points(); ++a) {
        int first_up = 0;
        while (first_up < a && side(a, first_up) < -tol) ++first_up;
        int last_low = a;
        while (last_low > 0 && side(a, last_low) > tol) --last_low;
        for (int b = std::max(0, first_up - ghost_band); b < first_up; ++b) {
            const double slope =
                first_up + 1 <= a ? upper.at(a, first_up + 1) - upper.at(a, first_up) : 0.0;
            upper.at(a, b) = upper.at(a, first_up) + (b - first_up) * slope;
        }
        for (int b = last_low + 1; b <= std::min(a, last_low + ghost_band); ++b) {
            const double slope = last_low >= 1 ? lower.at(a, last_low) - lower.at(a, last_low - 1) : 0.0;
            lower.at(a, b) = lower.at(a, last_low) + (b - last_low) * slope;
        }
    }
}

}  // namespace

void solve_kernel_row(const HyperbolicSystem& s, int i, const PicardOptions& options,
                      KernelSolution& sol) {
    const TriangleGrid& grid = sol.grid;
    const int points = grid.points();
    const double h = grid.h();
    const int n = s.n();
    const int m = s.m();
    const double mu_i = s.mu[i];
    const double sigma_ii = s.sigma_mm(i, i);

    std::vector<TriField> k_cur(n, TriField(points)), k_next(n, TriField(points));
    std::vector<TriField> l_cur(m, TriField(points)), l_next(m, TriField(points));
    std::vector<TriField> up_cur(i, TriField(points)), up_next(i, TriField(points));
    std::vector<TriField> lo_cur(i, TriField(points)), lo_next(i, TriField(points));
    std::vector<double> history;

    // Lines μ_p ξ = μ_j x (j < p, p >= i) across which the L entries read by
    // this row jump. Quadratures are split there and each piece reads the
    // sheet of its own side, chosen at the piece's midpoint `ref`.
    std::vector<std::pair<double, double>> jumps;
    for (int p = i; p < m; ++p)
        for (int j = 0; j < p; ++j) jumps.emplace_back(s.mu[p], s.mu[j]);

    auto own_l = [&](int q, const Point& ref, const PointStencil& st) {
        if (q < i) return (above_jump(mu_i, s.mu[q], ref.x, ref.xi) ? up_cur[q] : lo_cur[q]).eval(st);
        return l_cur[q].eval(st);
    };

    // Integrand of the K_ij characteristic integral at P, read from the
    // previous iterate (row i) and the converged rows p > i.
    auto k_integrand = [&](int j, const Point& p, const Point& ref) {
        const PointStencil st = make_stencil(grid, p.x, p.xi);
        double f = -sigma_ii * k_cur[j].eval(st);
        for (int k = 0; k < n; ++k) f += s.sigma_pp(k, j) * k_cur[k].eval(st);
        for (int q = 0; q < m; ++q) f += s.sigma_mp(q, j) * own_l(q, ref, st);
        if (i + 1 < m) {
            const DiagonalStencil dg = make_diagonal_stencil(grid, p.x);
            for (int q = i + 1; q < m; ++q) {
                const double omega = (mu_i - s.mu[q]) * l_cur[q].eval(dg) + s.sigma_mm(i, q);
                f -= sol.K(q, j).eval(st) * omega;
            }
        }
        return f;
    };

    auto l_integrand = [&](int j, const Point& p, const Point& ref) {
        const PointStencil st = make_stencil(grid, p.x, p.xi);
        double f = -sigma_ii * own_l(j, ref, st);
        for (int q = 0; q < m; ++q) f += s.sigma_mm(q, j) * own_l(q, ref, st);
        for (int k = 0; k < n; ++k) f += s.sigma_pm(k, j) * k_cur[k].eval(st);
        if (i + 1 < m) {
            const DiagonalStencil dg = make_diagonal_stencil(grid, p.x);
            for (int q = i + 1; q < m; ++q) {
                const double omega = (mu_i - s.mu[q]) * l_cur[q].eval(dg) + s.sigma_mm(i, q);
                f -= sol.L_at(q, j, st, ref.x, ref.xi) * omega;
            }
        }
        return f;
    };

    // Composite trapezoid of f along start + t (dx, dxi), t in [0, t_end].
    std::vector<double> breaks;
    auto integrate = [&](const Point& start, double dx, double dxi, double t_end, double speed,
                         const auto& f) {
        breaks.assign({0.0, t_end});
        for (const auto& [mu_p, mu_j] : jumps) {
            const double g0 = mu_p * start.xi - mu_j * start.x;
            const double g1 = mu_p * dxi - mu_j * dx;
            if (g1 == 0.0) continue;
            const double t = -g0 / g1;
            if (t > 1e-12 * t_end && t < t_end * (1.0 - 1e-12)) breaks.push_back(t);
        }
        std::sort(breaks.begin(), breaks.end());
        auto at = [&](double t) { return Point{start.x + dx * t, start.xi + dxi * t}; };
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
            const double t0 = breaks[k];
            const double t1 = breaks[k + 1];
            const Point ref = at(0.5 * (t0 + t1));
            const int nseg = segments((t1 - t0) * speed, h);
            const double dt = (t1 - t0) / nseg;
            double sum = 0.5 * (f(at(t0), ref) + f(at(t1), ref));
            for (int q = 1; q < nseg; ++q) sum += f(at(t0 + q * dt), ref);
            total += dt * sum;
        }
        return total;
    };

    bool converged = false;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        for (int j = 0; j < n; ++j) {
            const double lambda_j = s.lambda[j];
            const double k_diag = -s.sigma_mp(i, j) / (mu_i + lambda_j);
            const double speed = std::max(mu_i, lambda_j);
            auto f = [&](const Point& p, const Point& ref) { return k_integrand(j, p, ref); };
            for (int a = 0; a < points; ++a) {
                for (int b = 0; b <= a; ++b) {
                    const KCharacteristic ch = k_characteristic(mu_i, lambda_j, grid.coord(a),
                                                                grid.coord(b));
                    double value = k_diag;
                    if (b < a) value += integrate(ch.start, ch.dx, ch.dxi, ch.s_end, speed, f);
                    k_next[j].at(a, b) = value;
                }
            }
        }

        for (int j = 0; j < m; ++j) {
            const double mu_j = s.mu[j];
            const bool lower = j < i;
            const double speed = std::max(mu_i, mu_j);
            const double tol = lower ? 1e-12 * (mu_i + mu_j) : 0.0;
            auto f = [&](const Point& p, const Point& ref) { return l_integrand(j, p, ref); };
            for (int a = 0; a < points; ++a) {
                for (int b = 0; b <= a; ++b) {
                    const double x = grid.coord(a);
                    const double xi = grid.coord(b);
                    const LCharacteristic ch = l_characteristic(mu_i, mu_j, lower, x, xi);
                    double integral = 0.0;
                    if (ch.nu_end > 0.0) integral = integrate(ch.start, ch.dx, ch.dxi, ch.nu_end, speed, f);
                    // Axis data; on the jump line itself both branches are kept.
                    const double side = mu_i * xi - mu_j * x;
                    const bool takes_axis = !lower || side <= tol;
                    const bool takes_diagonal = lower && side >= -tol;
                    double axis = 0.0;
                    if (takes_axis) {
                        const double x_end = std::max(0.0, x - mu_i * xi / mu_j);
                        for (int k = 0; k < n; ++k)
                            axis += s.lambda[k] * s.q0(k, j) * axis_value(k_next[k], grid, x_end);
                        axis /= mu_j;
                    }
                    const double diagonal = -s.sigma_mm(i, j) / (mu_i - mu_j);
                    l_next[j].at(a, b) = (takes_diagonal ? diagonal : axis) + integral;
                    if (lower) {
                        up_next[j].at(a, b) = (takes_diagonal ? diagonal : axis) + integral;
                        lo_next[j].at(a, b) = (takes_axis ? axis : diagonal) + integral;
                    }
                }
            }
            if (lower) extend_sheets(up_next[j], lo_next[j], mu_i, mu_j, grid);
        }

        double increment = 0.0;
        for (int j = 0; j < n; ++j) increment = std::max(increment, k_next[j].sup_distance(k_cur[j]));
        for (int j = 0; j < m; ++j) increment = std::max(increment, l_next[j].sup_distance(l_cur[j]));
        history.push_back(increment);
        std::swap(k_cur, k_next);
        std::swap(l_cur, l_next);
        std::swap(up_cur, up_next);
        std::swap(lo_cur, lo_next);
        if (!std::isfinite(increment)) break;
        if (increment < options.tol) {
            converged = true;
            break;
        }
    }

    if (!converged) {
        std::ostringstream os;
        os << "kernel row " << i + 1 << ": successive approximations did not reach tolerance "
           << options.tol << " within " << options.max_iter << " iterations (last increment "
           << history.back() << ")";
        throw ConvergenceError(os.str(), history);
    }

    for (int j = 0; j < n; ++j) sol.K(i, j) = std::move(k_cur[j]);
    for (int j = 0; j < m; ++j) sol.L(i, j) = std::move(l_cur[j]);
    for (int j = 0; j < i; ++j) {
        sol.L_upper(i, j) = std::move(up_cur[j]);
        sol.L_lower(i, j) = std::move(lo_cur[j]);
    }
    sol.increments[static_cast<std::size_t>(i)] = std::move(history);
    sol.omega = omega_from_L(sol.L, s);
}

KernelSolution solve_control_kernels(const HyperbolicSystem& s, const GridSpec& grid) {
    const ValidationReport report = validate(s);
    if (!report.ok()) throw std::invalid_argument("invalid system: " + report.summary());
    const ValidationReport grid_report = validate(grid);
    if (!grid_report.ok()) throw std::invalid_argument("invalid grid: " + grid_report.summary());

    KernelSolution sol = empty_kernel_solution(s, grid.kernel_nx);
    for (int i = s.m() - 1; i >= 0; --i) solve_kernel_row(s, i, picard_options(grid), sol);
    return sol;
}

AxisFieldArray omega_from_L(const TriFieldArray& L, const HyperbolicSystem& s) {
    const int m = s.m();
    const int points = L(0, 0).points();
    AxisFieldArray omega = zero_axis_fields(m, m, points);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j)
            for (int a = 0; a < points; ++a)
                omega(i, j)[static_cast<std::size_t>(a)] =
                    (s.mu[i] - s.mu[j]) * L(i, j).at(a, a) + s.sigma_mm(i, j);
    return omega;
}

TargetCouplings solve_target_couplings(const KernelSolution& kernels, const HyperbolicSystem& s,
                                       const GridSpec& grid) {
    const PicardOptions options = picard_options(grid);
    VolterraResult cm =
        solve_right_volterra(multiply(s.sigma_pm, kernels.L), kernels.L, kernels.grid, options);
    TargetCouplings out;
    out.c_plus = add(multiply(s.sigma_pm, kernels.K), compose(cm.fields, kernels.K, kernels.grid));
    out.c_minus = std::move(cm.fields);
    out.iterations = static_cast<int>(cm.increments.size());
    out.final_increment = cm.increments.back();
    return out;
}

Resolvent inverse_transform_resolvent(const KernelSolution& kernels, const GridSpec& grid) {
    const int m = kernels.L.rows();
    const int n = kernels.K.cols();
    const int points = kernels.grid.points();
    TriFieldArray block = zero_fields(n + m, n + m, points);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) block(n + i, j) = kernels.K(i, j);
        for (int j = 0; j < m; ++j) block(n + i, n + j) = kernels.L(i, j);
    }
    VolterraResult r = solve_right_volterra(block, block, kernels.grid, picard_options(grid));
    Resolvent out;
    out.s = scale(r.fields, -1.0);
    out.iterations = static_cast<int>(r.increments.size());
    out.final_increment = r.increments.back();
    return out;
}

}  // namespace hypstab
