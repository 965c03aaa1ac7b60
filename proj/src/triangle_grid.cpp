#include "hypstab/triangle_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hypstab {

TriangleGrid::TriangleGrid(int points) : points_(points), h_(0.0) {
    if (points < 2) throw std::invalid_argument("TriangleGrid needs at least 2 points per axis");
    h_ = 1.0 / (points - 1);
}

namespace {

// Cell index and local coordinate, clamped so that the last cell is closed.
inline void locate(double t, int cells, int& idx, double& frac) {
    t = std::clamp(t, 0.0, static_cast<double>(cells));
    idx = std::min(static_cast<int>(t), cells - 1);
    frac = t - idx;
}

}  // namespace

PointStencil make_stencil(const TriangleGrid& grid, double x, double xi) {
    const int cells = grid.points() - 1;
    x = std::clamp(x, 0.0, 1.0);
    xi = std::clamp(xi, 0.0, x);
    int a = 0;
    int b = 0;
    double fx = 0.0;
    double fy = 0.0;
    locate(x / grid.h(), cells, a, fx);
    locate(xi / grid.h(), cells, b, fy);
    if (b > a) {
        // Only reachable through rounding at the hypotenuse.
        b = a;
        fy = fx;
    }
    if (b == a && fy > fx) fy = fx;

    PointStencil s{};
    if (fy <= fx) {
        // lower half: (a,b), (a+1,b), (a+1,b+1)
        s.a[0] = a;     s.b[0] = b;     s.w[0] = 1.0 - fx;
        s.a[1] = a + 1; s.b[1] = b;     s.w[1] = fx - fy;
        s.a[2] = a + 1; s.b[2] = b + 1; s.w[2] = fy;
    } else {
        // upper half: (a,b), (a,b+1), (a+1,b+1); only used when b < a
        s.a[0] = a;     s.b[0] = b;     s.w[0] = 1.0 - fy;
        s.a[1] = a;     s.b[1] = b + 1; s.w[1] = fy - fx;
        s.a[2] = a + 1; s.b[2] = b + 1; s.w[2] = fx;
    }
    return s;
}

DiagonalStencil make_diagonal_stencil(const TriangleGrid& grid, double x) {
    int a = 0;
    double f = 0.0;
    locate(std::clamp(x, 0.0, 1.0) / grid.h(), grid.points() - 1, a, f);
    return DiagonalStencil{a, a + 1, 1.0 - f, f};
}

double TriField::sup_norm() const {
    double out = 0.0;
    for (int a = 0; a < points_; ++a)
        for (int b = 0; b <= a; ++b) out = std::max(out, std::abs(at(a, b)));
    return out;
}

double TriField::sup_distance(const TriField& other) const {
    double out = 0.0;
    for (int a = 0; a < points_; ++a)
        for (int b = 0; b <= a; ++b) out = std::max(out, std::abs(at(a, b) - other.at(a, b)));
    return out;
}

TriFieldArray zero_fields(int rows, int cols, int points) {
    return TriFieldArray(rows, cols, TriField(points));
}

AxisFieldArray zero_axis_fields(int rows, int cols, int points) {
    return AxisFieldArray(rows, cols, std::vector<double>(static_cast<std::size_t>(points), 0.0));
}

double interpolate_axis(std::span<const double> values, double h, double x) {
    const int cells = static_cast<int>(values.size()) - 1;
    int a = 0;
    double f = 0.0;
    locate(x / h, cells, a, f);
    return (1.0 - f) * values[a] + f * values[a + 1];
}

}  // namespace hypstab
