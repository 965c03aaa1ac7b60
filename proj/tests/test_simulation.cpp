#include "hypstab/simulation.hpp"
#include "hypstab/verification.hpp"

#include "random_systems.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace hypstab;
using hypstab::testing::zero_coupling;

namespace {

HyperbolicSystem scalar_transport(double lambda, double mu) {
    HyperbolicSystem s;
    s.lambda = Vector::Constant(1, lambda);
    s.mu = Vector::Constant(1, mu);
    s.sigma_pp = Matrix::Zero(1, 1);
    s.sigma_pm = Matrix::Zero(1, 1);
    s.sigma_mp = Matrix::Zero(1, 1);
    s.sigma_mm = Matrix::Zero(1, 1);
    s.q0 = Matrix::Zero(1, 1);
    s.r1 = Matrix::Zero(1, 1);
    return s;
}

GridSpec sim_grid(int nx, int kernel_nx = 65) {
    GridSpec g;
    g.nx = nx;
    g.kernel_nx = kernel_nx;
    return g;
}

double sup_gap(const SimState& a, const SimState& b) {
    return std::max((a.u - b.u).cwiseAbs().maxCoeff(), (a.v - b.v).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("trapezoid weights and L2 norm") {
    const Vector w = trapezoid_weights(4);
    CHECK(w.sum() == doctest::Approx(1.0));
    CHECK(w[0] == 0.125);
    const SimState st = sine_state(Vector::Ones(1), Vector::Zero(1), 1000);
    CHECK(l2_norm(st.u, st.v) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-5));
}

TEST_CASE("zero state is an equilibrium of one step") {
    const HyperbolicSystem s = reference_system();
    SimState st = sine_state(Vector::Zero(2), Vector::Zero(2), 50);
    step_plant(st, s, Vector::Zero(2), 0.005);
    CHECK(st.u.isZero(0.0));
    CHECK(st.v.isZero(0.0));
    CHECK(st.t == 0.005);
}

TEST_CASE("time step above the CFL bound is rejected and leaves the state alone") {
    const HyperbolicSystem s = reference_system();
    SimState st = sine_state(s, 50);
    const SimState before = st;
    CHECK_THROWS_AS(step_plant(st, s, Vector::Zero(2), 0.02), CflError);
    CHECK(st.u == before.u);
    CHECK(st.v == before.v);
    CHECK(st.t == before.t);
}

TEST_CASE("non-finite inputs are rejected") {
    const HyperbolicSystem s = reference_system();
    SimState st = sine_state(s, 50);
    Vector bad = Vector::Zero(2);
    bad[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(step_plant(st, s, bad, 0.005), NonFiniteError);

    const ObserverSolution obs = solve_observer_kernels(s, sim_grid(50, 17));
    const ObserverInjection inj(obs, 50);
    st.hat_u = Matrix::Zero(2, 51);
    st.hat_v = Matrix::Zero(2, 51);
    CHECK_THROWS_AS(step_observer(st, bad, Vector::Zero(2), s, inj, Vector::Zero(2), 0.005), NonFiniteError);
}

TEST_CASE("box profile advects at its speed") {
    const HyperbolicSystem s = scalar_transport(1.0, 1.0);
    const int nx = 400;
    SimState st = sine_state(Vector::Zero(1), Vector::Zero(1), nx);
    for (int c = 0; c <= nx; ++c) {
        const double x = static_cast<double>(c) / nx;
        st.u(0, c) = (x >= 0.2 && x <= 0.4) ? 1.0 : 0.0;
    }
    const Vector w = trapezoid_weights(nx);
    auto moments = [&](const SimState& state) {
        double mass = 0.0;
        double first = 0.0;
        for (int c = 0; c <= nx; ++c) {
            mass += w[c] * state.u(0, c);
            first += w[c] * state.u(0, c) * c / nx;
        }
        return std::pair{mass, first / mass};
    };
    const auto [m0, c0] = moments(st);
    const double dt = 0.9 / nx;
    for (int k = 0; k < 120; ++k) step_plant(st, s, Vector::Zero(1), dt);
    const auto [m1, c1] = moments(st);
    // Exact solution: the same box on [0.47, 0.67].
    CHECK(m1 == doctest::Approx(m0).epsilon(1e-12));
    CHECK(std::abs((c1 - c0) - 120 * dt) < 2.0 / nx);
    CHECK(st.u(0, static_cast<int>(0.57 * nx)) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(st.u(0, static_cast<int>(0.1 * nx))) < 1e-12);
}

TEST_CASE("pure transport with zero inflow never increases the L2 norm") {
    const HyperbolicSystem s = zero_coupling(reference_system());
    SimulationOptions opt;
    opt.t_end = 1.5;
    const Trajectory tr = simulate(s, sim_grid(200), ControllerSpec{}, sine_state(s, 200), opt);
    for (std::size_t k = 1; k < tr.l2.size(); ++k) CHECK(tr.l2[k] <= tr.l2[k - 1] * (1.0 + 1e-14));
}

TEST_CASE("zero initial condition stays zero in every mode") {
    const HyperbolicSystem s = reference_system();
    const GridSpec g = sim_grid(100, 33);
    const KernelSolution k = solve_control_kernels(s, g);
    const ObserverSolution o = solve_observer_kernels(s, g);
    SimulationOptions opt;
    opt.t_end = 1.0;
    const SimState zero = sine_state(Vector::Zero(2), Vector::Zero(2), 100);
    for (ControlMode mode : {ControlMode::open_loop, ControlMode::full_state, ControlMode::output_feedback}) {
        const Trajectory tr = simulate(s, g, ControllerSpec{mode, &k, &o}, zero, opt);
        for (double v : tr.l2) CHECK(v == 0.0);
    }
}

TEST_CASE("t_end = 0 records the initial condition only") {
    const HyperbolicSystem s = reference_system();
    SimulationOptions opt;
    opt.t_end = 0.0;
    const SimState ic = sine_state(s, 100);
    const Trajectory tr = simulate(s, sim_grid(100), ControllerSpec{}, ic, opt);
    REQUIRE(tr.times.size() == 1);
    CHECK(tr.l2[0] == l2_norm(ic.u, ic.v));
}

TEST_CASE("time step divides the horizon and respects the CFL number") {
    const HyperbolicSystem s = reference_system();
    const GridSpec g = sim_grid(400);
    const double dt = time_step(s, g, 3.0);
    CHECK(dt * 2.0 / (1.0 / 400) <= 0.9 + 1e-12);
    CHECK(std::abs(3.0 / dt - std::round(3.0 / dt)) < 1e-9);
}

TEST_CASE("simulation is linear in the initial condition") {
    const HyperbolicSystem s = reference_system();
    const GridSpec g = sim_grid(100, 33);
    const KernelSolution k = solve_control_kernels(s, g);
    SimulationOptions opt;
    opt.t_end = 2.5;
    opt.snapshot_times = {0.5, 1.7, 2.5};
    const SimState a = sine_state(Vector{{1.0, -0.5}}, Vector{{0.25, 2.0}}, 100);
    SimState b = sine_state(Vector{{0.0, 1.0}}, Vector{{-1.0, 0.5}}, 100);
    b.u = b.u.cwiseProduct(b.u);
    SimState c = a;
    c.u = 2.0 * a.u - 3.0 * b.u;
    c.v = 2.0 * a.v - 3.0 * b.v;
    const ControllerSpec spec{ControlMode::full_state, &k, nullptr};
    const Trajectory ta = simulate(s, g, spec, a, opt);
    const Trajectory tb = simulate(s, g, spec, b, opt);
    const Trajectory tc = simulate(s, g, spec, c, opt);
    REQUIRE(tc.snapshots.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        SimState combo = ta.snapshots[i];
        combo.u = 2.0 * ta.snapshots[i].u - 3.0 * tb.snapshots[i].u;
        combo.v = 2.0 * ta.snapshots[i].v - 3.0 * tb.snapshots[i].v;
        CHECK(sup_gap(combo, tc.snapshots[i]) < 1e-12);
    }
}

TEST_CASE("feedback law on simple states") {
    HyperbolicSystem s = reference_system();
    s.r1 = Matrix{{0.5, -1.0}, {2.0, 0.0}};
    const int nx = 400;
    const GridSpec g = sim_grid(nx, 129);
    const KernelSolution k = solve_control_kernels(s, g);
    const FeedbackLaw law(k, s, nx);

    SUBCASE("zero state gives zero input") {
        const SimState z = sine_state(Vector::Zero(2), Vector::Zero(2), nx);
        CHECK(full_state_control(z, law).isZero(0.0));
    }
    SUBCASE("zero kernels leave only the boundary term") {
        const FeedbackLaw bare(empty_kernel_solution(s, 129), s, nx);
        SimState st = sine_state(s, nx);
        st.u.col(nx) = Vector{{0.3, 0.7}};
        CHECK((bare.evaluate(st.u, st.v) - (-s.r1 * st.u.col(nx))).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("constant u against a direct quadrature of K(1, xi)") {
        const Matrix u = Matrix::Ones(2, nx + 1);
        const Matrix v = Matrix::Zero(2, nx + 1);
        const Vector got = law.evaluate(u, v) + s.r1 * u.col(nx);
        // Trapezoid directly on the solver lattice row x = 1.
        const int last = k.grid.points() - 1;
        for (int i = 0; i < 2; ++i) {
            double ref = 0.0;
            for (int b = 0; b <= last; ++b) {
                const double w = (b == 0 || b == last) ? 0.5 : 1.0;
                ref += w * k.grid.h() * (k.K(i, 0).at(last, b) + k.K(i, 1).at(last, b));
            }
            CHECK(got[i] == doctest::Approx(ref).epsilon(1e-4));
        }
    }
    SUBCASE("output feedback on an exact estimate equals full-state feedback") {
        SimState st = sine_state(s, nx);
        st.hat_u = st.u;
        st.hat_v = st.v;
        CHECK(output_feedback_control(st, law) == full_state_control(st, law));
        st.hat_u->setZero();
        st.hat_v->setZero();
        CHECK(output_feedback_control(st, law).isZero(0.0));
    }
}

TEST_CASE("feedback integral resolves kernel jumps on the boundary x = 1") {
    // Only Σ⁻⁺ kept: K_21(1, ξ) = -e^((1-2ξ)/4)/3 below ξ = 1/2 and -1/3 above,
    // L_21(1, ξ) equals the same exponential below and vanishes above.
    HyperbolicSystem s = reference_system();
    s.sigma_pp.setZero();
    s.sigma_pm.setZero();
    s.sigma_mm.setZero();
    const double below = -2.0 * (std::exp(0.25) - 1.0) / 3.0;
    for (int nx : {400, 401}) {
        for (int points : {33, 65}) {
            const KernelSolution k = solve_control_kernels(s, sim_grid(nx, points));
            const FeedbackLaw law(k, s, nx);
            Matrix unit = Matrix::Zero(2, nx + 1);
            unit.row(0).setOnes();
            const Matrix zero = Matrix::Zero(2, nx + 1);
            CHECK(law.evaluate(unit, zero)[1] == doctest::Approx(below - 0.5 / 3.0).epsilon(1e-5));
            CHECK(law.evaluate(zero, unit)[1] == doctest::Approx(below).epsilon(1e-5));
        }
    }
}

TEST_CASE("observer started on the plant state stays on it") {
    const HyperbolicSystem s = reference_system();
    const GridSpec g = sim_grid(200, 33);
    const KernelSolution k = solve_control_kernels(s, g);
    const ObserverSolution o = solve_observer_kernels(s, g);
    SimState ic = sine_state(s, 200);
    ic.hat_u = ic.u;
    ic.hat_v = ic.v;
    SimulationOptions opt;
    opt.t_end = 2.0;
    const Trajectory tr = simulate(s, g, ControllerSpec{ControlMode::output_feedback, &k, &o}, ic, opt);
    for (double e : tr.error_l2) CHECK(e == 0.0);
}

TEST_CASE("observer error empties by outflow when there is nothing to inject") {
    const HyperbolicSystem s = zero_coupling(reference_system());
    HyperbolicSystem t = s;
    t.q0.setZero();
    const GridSpec g = sim_grid(400, 33);
    const KernelSolution k = solve_control_kernels(t, g);
    const ObserverSolution o = solve_observer_kernels(t, g);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (double p : o.p_minus(i, j)) REQUIRE(p == 0.0);
    SimulationOptions opt;
    opt.t_end = 2.5;
    const Trajectory tr = simulate(t, g, ControllerSpec{ControlMode::output_feedback, &k, &o}, sine_state(t, 400), opt);
    CHECK(tr.error_l2_at(2.25) <= 0.05 * tr.error_l2.front());
}

TEST_CASE("blow-up truncates open-loop runs") {
    HyperbolicSystem s = scalar_transport(1.0, 1.0);
    s.sigma_pp(0, 0) = 40.0;
    s.sigma_mm(0, 0) = 40.0;
    s.q0(0, 0) = 1.0;
    SimulationOptions opt;
    opt.t_end = 2.0;
    const Trajectory tr = simulate(s, sim_grid(100), ControllerSpec{}, sine_state(s, 100), opt);
    CHECK(tr.truncated);
    CHECK(tr.times.back() < 2.0);
}

TEST_CASE("mode requirements") {
    const HyperbolicSystem s = reference_system();
    SimulationOptions opt;
    CHECK_THROWS_AS((void)simulate(s, sim_grid(50), ControllerSpec{ControlMode::full_state}, sine_state(s, 50), opt),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)simulate(s, sim_grid(50), ControllerSpec{}, sine_state(s, 60), opt),
                    std::invalid_argument);
}

TEST_CASE("target transformation basics") {
    const HyperbolicSystem s = reference_system();
    const SimState st = sine_state(s, 100);
    const TargetState id = transform_to_target(st, empty_kernel_solution(s, 17));
    CHECK(id.alpha == st.u);
    CHECK(id.beta == st.v);
    const TargetState t = transform_to_target(st, solve_control_kernels(s, sim_grid(100, 33)));
    CHECK(t.alpha == st.u);
    CHECK_FALSE(t.beta == st.v);
}

TEST_CASE("Lyapunov functional") {
    const HyperbolicSystem s = reference_system();
    const SimState st = sine_state(Vector{{1.0, 2.0}}, Vector{{-1.0, 0.5}}, 400);
    const TargetState zero{Matrix::Zero(2, 401), Matrix::Zero(2, 401)};
    CHECK(lyapunov_value(zero, s, 3.0, 2.0) == 0.0);
    // δ → 0, l = 1: speed-weighted squared norm, here (1 + 4/2 + 1 + 0.25/2) / 2.
    CHECK(lyapunov_value(TargetState{st.u, st.v}, s, 1e-12, 1.0) == doctest::Approx(2.0625).epsilon(1e-6));
    CHECK_THROWS_AS((void)lyapunov_value(zero, s, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)lyapunov_value(zero, s, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("target simulation from zero stays zero") {
    const HyperbolicSystem s = reference_system();
    const GridSpec g = sim_grid(100, 33);
    const KernelSolution k = solve_control_kernels(s, g);
    const TargetCouplings c = solve_target_couplings(k, s, g);
    SimulationOptions opt;
    opt.t_end = 1.0;
    const TargetTrajectory tr =
        simulate_target(s, k, c, g, TargetState{Matrix::Zero(2, 101), Matrix::Zero(2, 101)}, opt);
    for (double v : tr.l2) CHECK(v == 0.0);
}

TEST_CASE("refinement moves the 99% decay time towards the minimum time") {
    const HyperbolicSystem s = reference_system();
    auto decay_time = [&](int nx) {
        const GridSpec g = sim_grid(nx, 129);
        const KernelSolution k = solve_control_kernels(s, g);
        SimulationOptions opt;
        opt.t_end = 3.0;
        const Trajectory tr = simulate(s, g, ControllerSpec{ControlMode::full_state, &k, nullptr}, sine_state(s, nx), opt);
        for (std::size_t i = 0; i < tr.l2.size(); ++i)
            if (tr.l2[i] <= 0.01 * tr.l2.front()) return tr.times[i];
        return 1e9;
    };
    const double coarse = decay_time(200);
    const double fine = decay_time(400);
    MESSAGE("99% decay times " << coarse << " " << fine);
    CHECK(std::abs(fine - 2.0) < std::abs(coarse - 2.0));
}
