#include "hypstab/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hypstab {

namespace {

constexpr double blow_up_threshold = 1e12;

double max_speed(const HyperbolicSystem& s) {
    return std::max(s.lambda.maxCoeff(), s.mu.maxCoeff());
}

void check_cfl(const HyperbolicSystem& s, int nx, double dt) {
    const double dx = 1.0 / nx;
    const double courant = dt * max_speed(s) / dx;
    if (!(dt > 0.0) || courant > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "time step " << dt << " violates the CFL bound (Courant number " << courant << ")";
        throw CflError(os.str());
    }
}

Eigen::Map<const Vector> flat(const Matrix& a) { return {a.data(), a.size()}; }

// Upwind interior update of a copy of the transport operator; the inflow
// columns (u at x=0, v at x=1) are left to the caller.
void advance_transport(Matrix& u, Matrix& v, const Matrix& source_u, const Matrix& source_v,
                       const Vector& lambda, const Vector& mu, double dt) {
    const int nx = static_cast<int>(u.cols()) - 1;
    const double ratio = dt * nx;
    const Matrix du = u.rightCols(nx) - u.leftCols(nx);
    const Matrix dv = v.rightCols(nx) - v.leftCols(nx);
    u.rightCols(nx) += (-ratio * lambda).asDiagonal() * du + dt * source_u.rightCols(nx);
    v.leftCols(nx) += (mu * ratio).asDiagonal() * dv + dt * source_v.leftCols(nx);
}

bool blown_up(const Matrix& a) {
    return !a.allFinite() || (a.size() > 0 && a.cwiseAbs().maxCoeff() > blow_up_threshold);
}

// Node-wise product of a matrix-valued function of x (rows i*cols+j) with
// a constant vector: out(i, c) = Σ_j F_ij(x_c) e_j.
Matrix apply_axis(const Matrix& f, int rows, int cols, const Vector& e) {
    Matrix out = Matrix::Zero(rows, f.cols());
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) out.row(i) += e[j] * f.row(i * cols + j);
    return out;
}

// Kernel traces along x = 1 jump at ξ* = μ_j/μ_i (j < i); the lattice node
// on a jump holds the hypotenuse-side value. Cells cut by a jump are read by
// linear extrapolation from the two nodes on the same side, and a sample
// sitting on a jump takes the mean of both one-sided limits.
std::vector<double> edge_jumps(const Vector& mu) {
    std::vector<double> out;
    for (int i = 0; i < mu.size(); ++i)
        for (int j = 0; j < i; ++j) out.push_back(mu[j] / mu[i]);
    return out;
}

double edge_line(const TriField& f, int last, int a, int b, double t) {
    return f.at(last, a) + (f.at(last, b) - f.at(last, a)) * t;
}

// One-sided value at ξ: the side is chosen by `upper` when ξ is cut off from
// the nodes by the jump at `star`.
double edge_sided(const TriField& f, double h, int last, double xi, double star, bool upper) {
    const double pos = xi / h;
    if (upper) {
        const int a = static_cast<int>(std::ceil(star / h - 1e-9));
        if (a >= last) return f.at(last, last);
        return edge_line(f, last, a, a + 1, pos - a);
    }
    const int a = static_cast<int>(std::floor(star / h - 1e-9));
    if (a <= 0) return f.at(last, 0);
    return edge_line(f, last, a - 1, a, pos - (a - 1));
}

double edge_value(const TriField& f, double h, double xi, const std::vector<double>& jumps) {
    const int last = f.points() - 1;
    const int a = std::clamp(static_cast<int>(std::floor(xi / h)), 0, last - 1);
    const double lo = a * h;
    const double hi = (a + 1) * h;
    for (double star : jumps) {
        if (std::abs(xi - star) <= 1e-12)
            return 0.5 * (edge_sided(f, h, last, xi, star, false) + edge_sided(f, h, last, xi, star, true));
        const bool cut = star > lo + 1e-12 && star <= hi + 1e-12;
        if (cut) return edge_sided(f, h, last, xi, star, xi >= star);
    }
    return edge_line(f, last, a, a + 1, xi / h - a);
}

}  // namespace

std::vector<double> node_coordinates(int nx) {
    std::vector<double> x(static_cast<std::size_t>(nx) + 1);
    for (int c = 0; c <= nx; ++c) x[static_cast<std::size_t>(c)] = static_cast<double>(c) / nx;
    return x;
}

Vector trapezoid_weights(int nx) {
    Vector w = Vector::Constant(nx + 1, 1.0 / nx);
    w[0] *= 0.5;
    w[nx] *= 0.5;
    return w;
}

double l2_norm(const Matrix& u, const Matrix& v) {
    const Vector w = trapezoid_weights(static_cast<int>(u.cols()) - 1);
    const Vector density = u.colwise().squaredNorm().transpose() + v.colwise().squaredNorm().transpose();
    return std::sqrt(std::max(0.0, w.dot(density)));
}

SimState sine_state(const Vector& amp_u, const Vector& amp_v, int nx) {
    SimState s;
    Vector profile(nx + 1);
    for (int c = 0; c <= nx; ++c) profile[c] = std::sin(std::numbers::pi * c / nx);
    s.u = amp_u * profile.transpose();
    s.v = amp_v * profile.transpose();
    return s;
}

SimState sine_state(const HyperbolicSystem& system, int nx) {
    return sine_state(Vector::Ones(system.n()), Vector::Ones(system.m()), nx);
}

SampledKernel::SampledKernel(const TriFieldArray& fields, const TriangleGrid& grid, int nx, const Vector* mu)
    : rows_(fields.rows()), cols_(fields.cols()), nx_(nx) {
    data_.assign(static_cast<std::size_t>(rows_) * cols_, Matrix::Zero(nx + 1, nx + 1));
    for (int a = 0; a <= nx; ++a) {
        const double x = static_cast<double>(a) / nx;
        for (int c = 0; c <= a; ++c) {
            const PointStencil st = make_stencil(grid, x, static_cast<double>(c) / nx);
            for (int i = 0; i < rows_; ++i)
                for (int j = 0; j < cols_; ++j)
                    data_[static_cast<std::size_t>(i) * cols_ + j](c, a) = fields(i, j).eval(st);
        }
    }
    if (mu == nullptr) return;
    const std::vector<double> jumps = edge_jumps(*mu);
    for (int c = 0; c <= nx; ++c)
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j)
                data_[static_cast<std::size_t>(i) * cols_ + j](c, nx) =
                    edge_value(fields(i, j), grid.h(), static_cast<double>(c) / nx, jumps);
}

Matrix SampledKernel::apply(const Matrix& f) const {
    if (f.cols() != nx_ + 1 || f.rows() != cols_)
        throw std::invalid_argument("SampledKernel::apply: shape mismatch");
    const double dx = 1.0 / nx_;
    Matrix out = Matrix::Zero(rows_, nx_ + 1);
    for (int j = 0; j < cols_; ++j) {
        const Vector fj = f.row(j).transpose();
        for (int i = 0; i < rows_; ++i) {
            const Matrix& e = entry(i, j);
            for (int a = 1; a <= nx_; ++a) {
                const double full = e.col(a).head(a + 1).dot(fj.head(a + 1));
                const double ends = 0.5 * (e(0, a) * fj[0] + e(a, a) * fj[a]);
                out(i, a) += dx * (full - ends);
            }
        }
    }
    return out;
}

Matrix sample_axis_fields(const AxisFieldArray& f, const TriangleGrid& grid, int nx) {
    Matrix out(f.rows() * f.cols(), nx + 1);
    for (int i = 0; i < f.rows(); ++i)
        for (int j = 0; j < f.cols(); ++j)
            for (int c = 0; c <= nx; ++c)
                out(i * f.cols() + j, c) =
                    interpolate_axis(f(i, j), grid.h(), static_cast<double>(c) / nx);
    return out;
}

FeedbackLaw::FeedbackLaw(const KernelSolution& kernels, const HyperbolicSystem& s, int nx)
    : nx_(nx), r1_(s.r1) {
    const int m = s.m();
    const int n = s.n();
    const Vector w = trapezoid_weights(nx);
    k_edge_ = Matrix::Zero(m, n * (nx + 1));
    l_edge_ = Matrix::Zero(m, m * (nx + 1));
    const std::vector<double> jumps = edge_jumps(s.mu);
    const double h = kernels.grid.h();
    for (int c = 0; c <= nx; ++c) {
        const double xi = static_cast<double>(c) / nx;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) k_edge_(i, c * n + j) = w[c] * edge_value(kernels.K(i, j), h, xi, jumps);
            for (int j = 0; j < m; ++j) l_edge_(i, c * m + j) = w[c] * edge_value(kernels.L(i, j), h, xi, jumps);
        }
    }
    const Matrix last = l_edge_.rightCols(m);
    boundary_solve_ = Eigen::PartialPivLU<Matrix>(Matrix::Identity(m, m) - last);
}

Vector FeedbackLaw::evaluate(const Matrix& u, const Matrix& v) const {
    if (u.cols() != nx_ + 1 || v.cols() != nx_ + 1)
        throw std::invalid_argument("feedback law was sampled on a different grid");
    return -r1_ * u.col(nx_) + k_edge_ * flat(u) + l_edge_ * flat(v);
}

Vector FeedbackLaw::closed_loop_input(const Matrix& u, const Matrix& v) const {
    if (u.cols() != nx_ + 1 || v.cols() != nx_ + 1)
        throw std::invalid_argument("feedback law was sampled on a different grid");
    const auto m = v.rows();
    const Vector interior =
        k_edge_ * flat(u) + l_edge_ * flat(v) - l_edge_.rightCols(m) * v.col(nx_);
    const Vector v_end = boundary_solve_.solve(interior);
    return v_end - r1_ * u.col(nx_);
}

Vector full_state_control(const SimState& state, const FeedbackLaw& law) {
    return law.evaluate(state.u, state.v);
}

Vector output_feedback_control(const SimState& state, const FeedbackLaw& law) {
    if (!state.hat_u || !state.hat_v) throw std::invalid_argument("state carries no observer estimate");
    return law.evaluate(*state.hat_u, *state.hat_v);
}

void step_plant(SimState& state, const HyperbolicSystem& s, const Vector& control, double dt) {
    const int nx = state.nx();
    check_cfl(s, nx, dt);
    if (!control.allFinite()) throw NonFiniteError("non-finite control input");
    const Matrix su = s.sigma_pp * state.u + s.sigma_pm * state.v;
    const Matrix sv = s.sigma_mp * state.u + s.sigma_mm * state.v;
    Matrix u = state.u;
    Matrix v = state.v;
    advance_transport(u, v, su, sv, s.lambda, s.mu, dt);
    u.col(0) = s.q0 * v.col(0);
    v.col(nx) = s.r1 * u.col(nx) + control;
    if (!u.allFinite() || !v.allFinite()) throw NonFiniteError("plant state became non-finite");
    state.u = std::move(u);
    state.v = std::move(v);
    state.t += dt;
}

ObserverInjection::ObserverInjection(const ObserverSolution& observer, int nx)
    : p_plus(sample_axis_fields(observer.p_plus, observer.grid, nx)),
      p_minus(sample_axis_fields(observer.p_minus, observer.grid, nx)) {}

namespace {

// Observer interior update; the stored gains enter as +P(x)(v̂(t,0) - y).
void advance_observer(Matrix& hu, Matrix& hv, const Vector& y, const HyperbolicSystem& s,
                      const ObserverInjection& inj, double dt) {
    const int n = s.n();
    const int m = s.m();
    const Vector innovation = hv.col(0) - y;
    const Matrix su = s.sigma_pp * hu + s.sigma_pm * hv + apply_axis(inj.p_plus, n, m, innovation);
    const Matrix sv = s.sigma_mp * hu + s.sigma_mm * hv + apply_axis(inj.p_minus, m, m, innovation);
    advance_transport(hu, hv, su, sv, s.lambda, s.mu, dt);
}

}  // namespace

void step_observer(SimState& state, const Vector& y, const Vector& y_next,
                   const HyperbolicSystem& s, const ObserverInjection& inj, const Vector& control,
                   double dt) {
    if (!state.hat_u || !state.hat_v) throw std::invalid_argument("state carries no observer estimate");
    const int nx = static_cast<int>(state.hat_u->cols()) - 1;
    check_cfl(s, nx, dt);
    if (!y.allFinite() || !y_next.allFinite()) throw NonFiniteError("non-finite measurement");
    Matrix hu = *state.hat_u;
    Matrix hv = *state.hat_v;
    advance_observer(hu, hv, y, s, inj, dt);
    hu.col(0) = s.q0 * y_next;
    hv.col(nx) = s.r1 * hu.col(nx) + control;
    if (!hu.allFinite() || !hv.allFinite()) throw NonFiniteError("observer state became non-finite");
    state.hat_u = std::move(hu);
    state.hat_v = std::move(hv);
}

double Trajectory::l2_at(double t) const {
    if (times.empty()) throw std::out_of_range("empty trajectory");
    if (t <= times.front()) return l2.front();
    if (t >= times.back()) return l2.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(it - times.begin());
    const double f = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return (1.0 - f) * l2[k - 1] + f * l2[k];
}

double Trajectory::error_l2_at(double t) const {
    if (error_l2.empty()) throw std::out_of_range("trajectory has no observer error record");
    if (t <= times.front()) return error_l2.front();
    if (t >= times.back()) return error_l2.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(it - times.begin());
    const double f = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return (1.0 - f) * error_l2[k - 1] + f * error_l2[k];
}

double time_step(const HyperbolicSystem& s, const GridSpec& grid, double t_end) {
    if (t_end <= 0.0) return 0.0;
    const double dt_max = grid.cfl / (grid.nx * max_speed(s));
    const double steps = std::ceil(t_end / dt_max - 1e-9);
    return t_end / std::max(1.0, steps);
}

namespace {

std::vector<long> snapshot_steps(const std::vector<double>& times, double dt, long nsteps) {
    std::vector<long> out;
    for (double t : times) {
        long k = dt > 0.0 ? std::lround(t / dt) : 0;
        out.push_back(std::clamp(k, 0L, nsteps));
    }
    return out;
}

}  // namespace

Trajectory simulate(const HyperbolicSystem& s, const GridSpec& grid,
                    const ControllerSpec& controller, const SimState& initial,
                    const SimulationOptions& options) {
    if (const auto r = validate(s); !r.ok()) throw std::invalid_argument("invalid system: " + r.summary());
    if (const auto r = validate(grid); !r.ok()) throw std::invalid_argument("invalid grid: " + r.summary());
    const int nx = grid.nx;
    if (initial.u.rows() != s.n() || initial.v.rows() != s.m() || initial.u.cols() != nx + 1 ||
        initial.v.cols() != nx + 1)
        throw std::invalid_argument("initial condition does not match system and grid");
    if (controller.mode != ControlMode::open_loop && controller.kernels == nullptr)
        throw std::invalid_argument("feedback modes require control kernels");
    if (controller.mode == ControlMode::output_feedback && controller.observer == nullptr)
        throw std::invalid_argument("output feedback requires observer kernels");
    if (options.lyapunov && controller.kernels == nullptr)
        throw std::invalid_argument("Lyapunov functional requires control kernels");

    const double dt = time_step(s, grid, options.t_end);
    const long nsteps = dt > 0.0 ? std::lround(options.t_end / dt) : 0;

    std::optional<FeedbackLaw> law;
    if (controller.mode != ControlMode::open_loop) law.emplace(*controller.kernels, s, nx);
    std::optional<ObserverInjection> injection;
    if (controller.mode == ControlMode::output_feedback) injection.emplace(*controller.observer, nx);
    std::optional<TargetTransform> transform;
    if (options.lyapunov) transform.emplace(*controller.kernels, nx);

    SimState state = initial;
    state.t = 0.0;
    if (controller.mode == ControlMode::output_feedback) {
        if (!state.hat_u) state.hat_u = Matrix::Zero(s.n(), nx + 1);
        if (!state.hat_v) state.hat_v = Matrix::Zero(s.m(), nx + 1);
    }

    Trajectory traj;
    const auto snaps = snapshot_steps(options.snapshot_times, dt, nsteps);
    Vector control = Vector::Zero(s.m());
    if (controller.mode == ControlMode::full_state) control = full_state_control(state, *law);
    if (controller.mode == ControlMode::output_feedback) control = output_feedback_control(state, *law);

    auto record = [&](long step) {
        traj.times.push_back(state.t);
        traj.l2.push_back(l2_norm(state.u, state.v));
        traj.control.push_back(control);
        if (transform) {
            const TargetState target = transform->apply(state.u, state.v);
            traj.lyapunov.push_back(lyapunov_value(target, s, options.lyapunov->delta, options.lyapunov->l));
        }
        if (state.hat_u)
            traj.error_l2.push_back(l2_norm(state.u - *state.hat_u, state.v - *state.hat_v));
        for (long k : snaps)
            if (k == step) traj.snapshots.push_back(state);
    };
    record(0);

    for (long step = 1; step <= nsteps; ++step) {
        check_cfl(s, nx, dt);
        const Vector y = state.v.col(0);
        Matrix u = state.u;
        Matrix v = state.v;
        advance_transport(u, v, s.sigma_pp * state.u + s.sigma_pm * state.v,
                          s.sigma_mp * state.u + s.sigma_mm * state.v, s.lambda, s.mu, dt);
        u.col(0) = s.q0 * v.col(0);

        if (controller.mode == ControlMode::output_feedback) {
            Matrix hu = *state.hat_u;
            Matrix hv = *state.hat_v;
            advance_observer(hu, hv, y, s, *injection, dt);
            hu.col(0) = s.q0 * v.col(0);
            control = law->closed_loop_input(hu, hv);
            hv.col(nx) = s.r1 * hu.col(nx) + control;
            state.hat_u = std::move(hu);
            state.hat_v = std::move(hv);
        } else if (controller.mode == ControlMode::full_state) {
            control = law->closed_loop_input(u, v);
        }
        v.col(nx) = s.r1 * u.col(nx) + control;
        state.u = std::move(u);
        state.v = std::move(v);
        state.t = step * dt;

        if (blown_up(state.u) || blown_up(state.v) ||
            (state.hat_u && (blown_up(*state.hat_u) || blown_up(*state.hat_v)))) {
            traj.truncated = true;
            break;
        }
        record(step);
    }
    return traj;
}

TargetTransform::TargetTransform(const KernelSolution& kernels, int nx)
    : k_(kernels.K, kernels.grid, nx, &kernels.mu), l_(kernels.L, kernels.grid, nx, &kernels.mu) {}

TargetState TargetTransform::apply(const Matrix& u, const Matrix& v) const {
    return TargetState{u, v - k_.apply(u) - l_.apply(v)};
}

TargetState transform_to_target(const SimState& state, const KernelSolution& kernels) {
    return TargetTransform(kernels, state.nx()).apply(state.u, state.v);
}

double lyapunov_value(const TargetState& target, const HyperbolicSystem& s, double delta, double l) {
    if (!(delta > 0.0) || !(l > 0.0)) throw std::invalid_argument("Lyapunov parameters must be positive");
    const int nx = static_cast<int>(target.alpha.cols()) - 1;
    const Vector w = trapezoid_weights(nx);
    const Vector inv_lambda = s.lambda.cwiseInverse();
    const Vector inv_mu = s.mu.cwiseInverse();
    double out = 0.0;
    for (int c = 0; c <= nx; ++c) {
        const double x = static_cast<double>(c) / nx;
        const double a = inv_lambda.dot(target.alpha.col(c).cwiseAbs2());
        const double b = inv_mu.dot(target.beta.col(c).cwiseAbs2());
        out += w[c] * (std::exp(-delta * x) * a + l * std::exp(delta * x) * b);
    }
    return out;
}

TargetState inverse_transform(const TargetState& target, const Resolvent& resolvent,
                              const TriangleGrid& grid) {
    const int n = static_cast<int>(target.alpha.rows());
    const int m = static_cast<int>(target.beta.rows());
    const int nx = static_cast<int>(target.alpha.cols()) - 1;
    Matrix stacked(n + m, nx + 1);
    stacked << target.alpha, target.beta;
    const Matrix restored = stacked - SampledKernel(resolvent.s, grid, nx).apply(stacked);
    return TargetState{restored.topRows(n), restored.bottomRows(m)};
}

TargetTrajectory simulate_target(const HyperbolicSystem& s, const KernelSolution& kernels,
                                 const TargetCouplings& couplings, const GridSpec& grid,
                                 const TargetState& initial, const SimulationOptions& options) {
    const int nx = grid.nx;
    const int m = s.m();
    const double dt = time_step(s, grid, options.t_end);
    const long nsteps = dt > 0.0 ? std::lround(options.t_end / dt) : 0;
    const SampledKernel c_plus(couplings.c_plus, kernels.grid, nx);
    const SampledKernel c_minus(couplings.c_minus, kernels.grid, nx);
    const Matrix omega = sample_axis_fields(kernels.omega, kernels.grid, nx);
    const auto snaps = snapshot_steps(options.snapshot_times, dt, nsteps);

    TargetState state = initial;
    TargetTrajectory traj;
    auto record = [&](long step) {
        traj.times.push_back(step * dt);
        traj.l2.push_back(l2_norm(state.alpha, state.beta));
        for (long k : snaps)
            if (k == step) {
                traj.snapshots.push_back(state);
                traj.snapshot_times.push_back(step * dt);
            }
    };
    record(0);
    for (long step = 1; step <= nsteps; ++step) {
        check_cfl(s, nx, dt);
        const Matrix sa = s.sigma_pp * state.alpha + s.sigma_pm * state.beta +
                          c_plus.apply(state.alpha) + c_minus.apply(state.beta);
        Matrix sb(m, nx + 1);
        for (int c = 0; c <= nx; ++c) {
            Matrix om(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) om(i, j) = omega(i * m + j, c);
            sb.col(c) = om * state.beta.col(c);
        }
        advance_transport(state.alpha, state.beta, sa, sb, s.lambda, s.mu, dt);
        state.alpha.col(0) = s.q0 * state.beta.col(0);
        state.beta.col(nx).setZero();
        if (!state.alpha.allFinite() || !state.beta.allFinite())
            throw NonFiniteError("target state became non-finite");
        record(step);
    }
    return traj;
}

}  // namespace hypstab
