#include "hypstab/system.hpp"

#include <cmath>
#include <sstream>

namespace hypstab {

namespace {

void check_shape(ValidationReport& report, const char* name, const Matrix& a,
                 Eigen::Index rows, Eigen::Index cols) {
    if (a.rows() != rows || a.cols() != cols) {
        std::ostringstream os;
        os << name << " shape: expected " << rows << "x" << cols << ", got "
           << a.rows() << "x" << a.cols();
        report.violations.push_back(os.str());
    }
}

void check_finite(ValidationReport& report, const char* name, const Matrix& a) {
    if (!a.allFinite()) {
        report.violations.push_back(std::string(name) + " has non-finite entries");
    }
}

}  // namespace

std::string ValidationReport::summary() const {
    if (ok()) return "OK";
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v;
    }
    return out;
}

ValidationReport validate(const HyperbolicSystem& s) {
    ValidationReport report;
    const auto n = s.lambda.size();
    const auto m = s.mu.size();
    if (n < 1) report.violations.emplace_back("n must be at least 1");
    if (m < 1) report.violations.emplace_back("m must be at least 1");

    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(s.lambda[i] > 0.0) || !std::isfinite(s.lambda[i])) {
            report.violations.emplace_back("lambda entries must be positive");
            break;
        }
    }
    for (Eigen::Index i = 1; i < n; ++i) {
        if (s.lambda[i] < s.lambda[i - 1]) {
            report.violations.emplace_back("lambda must be non-decreasing");
            break;
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(s.mu[i] > 0.0) || !std::isfinite(s.mu[i])) {
            report.violations.emplace_back("mu entries must be positive");
            break;
        }
    }
    for (Eigen::Index i = 1; i < m; ++i) {
        if (!(s.mu[i] > s.mu[i - 1])) {
            report.violations.emplace_back("mu must be strictly increasing");
            break;
        }
    }

    check_shape(report, "sigma_pp", s.sigma_pp, n, n);
    check_shape(report, "sigma_pm", s.sigma_pm, n, m);
    check_shape(report, "sigma_mp", s.sigma_mp, m, n);
    check_shape(report, "sigma_mm", s.sigma_mm, m, m);
    check_shape(report, "q0", s.q0, n, m);
    check_shape(report, "r1", s.r1, m, n);

    check_finite(report, "sigma_pp", s.sigma_pp);
    check_finite(report, "sigma_pm", s.sigma_pm);
    check_finite(report, "sigma_mp", s.sigma_mp);
    check_finite(report, "sigma_mm", s.sigma_mm);
    check_finite(report, "q0", s.q0);
    check_finite(report, "r1", s.r1);
    return report;
}

ValidationReport validate(const GridSpec& g) {
    ValidationReport report;
    if (g.nx < 2) report.violations.emplace_back("nx must be at least 2");
    if (g.kernel_nx < 2) report.violations.emplace_back("kernel_nx must be at least 2");
    if (!(g.cfl > 0.0 && g.cfl <= 1.0)) report.violations.emplace_back("cfl must lie in (0, 1]");
    if (!(g.picard_tol > 0.0)) report.violations.emplace_back("picard_tol must be positive");
    if (g.picard_max_iter < 1) report.violations.emplace_back("picard_max_iter must be at least 1");
    return report;
}

double min_control_time(const HyperbolicSystem& s) {
    return 1.0 / s.mu[0] + 1.0 / s.lambda[0];
}

HyperbolicSystem reference_system() {
    HyperbolicSystem s;
    s.lambda = Vector{{1.0, 2.0}};
    s.mu = Vector{{1.0, 2.0}};
    s.sigma_pp = Matrix::Identity(2, 2);
    s.sigma_pm = Matrix::Identity(2, 2);
    s.sigma_mp.resize(2, 2);
    s.sigma_mp << 1.0, 1.0,
                  1.0, 0.0;
    s.sigma_mm.resize(2, 2);
    s.sigma_mm << 0.0, 1.0,
                  1.0, 0.0;
    s.q0.resize(2, 2);
    s.q0 << 1.0, 0.0,
            0.0, 0.0;
    s.r1 = Matrix::Zero(2, 2);
    return s;
}

HyperbolicSystem observer_dual(const HyperbolicSystem& s) {
    HyperbolicSystem d;
    d.lambda = s.lambda;
    d.mu = s.mu;
    d.sigma_pp = s.sigma_pp.transpose();
    d.sigma_pm = s.sigma_mp.transpose();
    d.sigma_mp = s.sigma_pm.transpose();
    d.sigma_mm = s.sigma_mm.transpose();
    // Λ⁺ Q0' (Λ⁻)⁻¹ = R1ᵀ so that the dual axis condition reads N(1,ξ) = R1 M(1,ξ).
    d.q0 = s.lambda.cwiseInverse().asDiagonal() * s.r1.transpose() * s.mu.asDiagonal();
    d.r1 = Matrix::Zero(s.m(), s.n());
    return d;
}

}  // namespace hypstab
