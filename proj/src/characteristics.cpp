#include "hypstab/characteristics.hpp"

#include <sstream>
#include <stdexcept>

namespace hypstab {

namespace {

void require_in_triangle(double x, double xi) {
    constexpr double slack = 1e-14;
    if (!(xi >= -slack && xi <= x + slack && x <= 1.0 + slack)) {
        std::ostringstream os;
        os << "point (" << x << ", " << xi << ") lies outside 0 <= xi <= x <= 1";
        throw std::domain_error(os.str());
    }
}

}  // namespace

KCharacteristic k_characteristic(double mu_i, double lambda_j, double x, double xi) {
    return KCharacteristic{{x, xi}, -mu_i, lambda_j, (x - xi) / (mu_i + lambda_j)};
}

LCharacteristic l_characteristic(double mu_i, double mu_j, bool lower, double x, double xi) {
    // `lower` is j < i, i.e. μ_j < μ_i: the line may reach the hypotenuse first.
    if (lower && mu_i * xi - mu_j * x >= 0.0) {
        return LCharacteristic{{x, xi}, -mu_i, -mu_j, (x - xi) / (mu_i - mu_j), true};
    }
    return LCharacteristic{{x, xi}, -mu_i, -mu_j, xi / mu_j, false};
}

KCharacteristic trace_characteristic_K(const HyperbolicSystem& s, int i, int j, double x,
                                       double xi) {
    require_in_triangle(x, xi);
    if (i < 0 || i >= s.m() || j < 0 || j >= s.n()) throw std::out_of_range("K index");
    return k_characteristic(s.mu[i], s.lambda[j], x, xi);
}

LCharacteristic trace_characteristic_L(const HyperbolicSystem& s, int i, int j, double x,
                                       double xi) {
    require_in_triangle(x, xi);
    if (i < 0 || i >= s.m() || j < 0 || j >= s.m()) throw std::out_of_range("L index");
    return l_characteristic(s.mu[i], s.mu[j], j < i, x, xi);
}

}  // namespace hypstab
