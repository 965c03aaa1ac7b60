#include "hypstab/observer.hpp"

#include "hypstab/volterra.hpp"

namespace hypstab {

ObserverSolution observer_from_reflected(const HyperbolicSystem& s, KernelSolution reflected) {
    const int n = s.n();
    const int m = s.m();
    const int points = reflected.grid.points();
    const int last = points - 1;

    ObserverSolution out;
    out.grid = reflected.grid;
    out.M = zero_fields(n, m, points);
    out.N = zero_fields(m, m, points);
    for (int a = 0; a < points; ++a) {
        for (int b = 0; b <= a; ++b) {
            // (x, ξ) = (a h, b h)  <->  (X, Y) = (1 - ξ, 1 - x)
            const int ra = last - b;
            const int rb = last - a;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) out.M(i, j).at(a, b) = reflected.K(j, i).at(ra, rb);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) out.N(i, j).at(a, b) = reflected.L(j, i).at(ra, rb);
        }
    }
    out.omega_bar = omega_bar_from_N(out.N, s);
    ObserverGains gains = gains_from_kernels(out.M, out.N, s);
    out.p_plus = std::move(gains.p_plus);
    out.p_minus = std::move(gains.p_minus);
    out.reflected = std::move(reflected);
    return out;
}

ObserverSolution solve_observer_kernels(const HyperbolicSystem& s, const GridSpec& grid) {
    return observer_from_reflected(s, solve_control_kernels(observer_dual(s), grid));
}

AxisFieldArray omega_bar_from_N(const TriFieldArray& N, const HyperbolicSystem& s) {
    const int m = s.m();
    const int points = N(0, 0).points();
    AxisFieldArray out = zero_axis_fields(m, m, points);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j)
            for (int a = 0; a < points; ++a)
                out(i, j)[static_cast<std::size_t>(a)] =
                    (s.mu[j] - s.mu[i]) * N(i, j).at(a, a) + s.sigma_mm(i, j);
    return out;
}

ObserverGains gains_from_kernels(const TriFieldArray& M, const TriFieldArray& N,
                                 const HyperbolicSystem& s) {
    const int points = M(0, 0).points();
    ObserverGains g{zero_axis_fields(s.n(), s.m(), points), zero_axis_fields(s.m(), s.m(), points)};
    for (int a = 0; a < points; ++a) {
        const auto idx = static_cast<std::size_t>(a);
        for (int i = 0; i < s.n(); ++i)
            for (int j = 0; j < s.m(); ++j) g.p_plus(i, j)[idx] = s.mu[j] * M(i, j).at(a, 0);
        for (int i = 0; i < s.m(); ++i)
            for (int j = 0; j < s.m(); ++j) g.p_minus(i, j)[idx] = s.mu[j] * N(i, j).at(a, 0);
    }
    return g;
}

ObserverTargetCouplings target_couplings_observer(const ObserverSolution& obs,
                                                  const HyperbolicSystem& s,
                                                  const GridSpec& grid) {
    VolterraResult dm =
        solve_left_volterra(multiply(obs.N, s.sigma_mp), obs.N, obs.grid, picard_options(grid));
    ObserverTargetCouplings out;
    out.d_plus = add(multiply(obs.M, s.sigma_mp), compose(obs.M, dm.fields, obs.grid));
    out.d_minus = std::move(dm.fields);
    out.iterations = static_cast<int>(dm.increments.size());
    out.final_increment = dm.increments.back();
    return out;
}

}  // namespace hypstab
