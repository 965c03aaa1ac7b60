#include "hypstab/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hypstab {

TriFieldArray compose(const TriFieldArray& a, const TriFieldArray& b, const TriangleGrid& grid) {
    const int points = grid.points();
    const double h = grid.h();
    TriFieldArray out = zero_fields(a.rows(), b.cols(), points);
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < b.cols(); ++j) {
            TriField& dst = out(i, j);
            for (int k = 0; k < a.cols(); ++k) {
                const TriField& lhs = a(i, k);
                const TriField& rhs = b(k, j);
                for (int ia = 1; ia < points; ++ia) {
                    for (int ib = 0; ib < ia; ++ib) {
                        double sum = 0.5 * (lhs.at(ia, ib) * rhs.at(ib, ib) +
                                            lhs.at(ia, ia) * rhs.at(ia, ib));
                        for (int c = ib + 1; c < ia; ++c) sum += lhs.at(ia, c) * rhs.at(c, ib);
                        dst.at(ia, ib) += h * sum;
                    }
                }
            }
        }
    }
    return out;
}

TriFieldArray multiply(const Matrix& c, const TriFieldArray& f) {
    const int points = f(0, 0).points();
    TriFieldArray out = zero_fields(static_cast<int>(c.rows()), f.cols(), points);
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < f.cols(); ++j)
            for (int k = 0; k < f.rows(); ++k) {
                const double coef = c(i, k);
                if (coef == 0.0) continue;
                for (int a = 0; a < points; ++a)
                    for (int b = 0; b <= a; ++b) out(i, j).at(a, b) += coef * f(k, j).at(a, b);
            }
    return out;
}

TriFieldArray multiply(const TriFieldArray& f, const Matrix& c) {
    const int points = f(0, 0).points();
    TriFieldArray out = zero_fields(f.rows(), static_cast<int>(c.cols()), points);
    for (int i = 0; i < f.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j)
            for (int k = 0; k < f.cols(); ++k) {
                const double coef = c(k, j);
                if (coef == 0.0) continue;
                for (int a = 0; a < points; ++a)
                    for (int b = 0; b <= a; ++b) out(i, j).at(a, b) += coef * f(i, k).at(a, b);
            }
    return out;
}

TriFieldArray add(const TriFieldArray& x, const TriFieldArray& y) {
    TriFieldArray out = x;
    const int points = x(0, 0).points();
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j)
            for (int a = 0; a < points; ++a)
                for (int b = 0; b <= a; ++b) out(i, j).at(a, b) += y(i, j).at(a, b);
    return out;
}

TriFieldArray scale(const TriFieldArray& x, double factor) {
    TriFieldArray out = x;
    const int points = x(0, 0).points();
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j)
            for (int a = 0; a < points; ++a)
                for (int b = 0; b <= a; ++b) out(i, j).at(a, b) *= factor;
    return out;
}

double sup_distance(const TriFieldArray& x, const TriFieldArray& y) {
    double out = 0.0;
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) out = std::max(out, x(i, j).sup_distance(y(i, j)));
    return out;
}

double sup_norm(const TriFieldArray& x) {
    double out = 0.0;
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) out = std::max(out, x(i, j).sup_norm());
    return out;
}

namespace {

template <class Step>
VolterraResult iterate(const TriFieldArray& forcing, const PicardOptions& options, Step step,
                       const char* name) {
    VolterraResult result;
    TriFieldArray current = scale(forcing, 0.0);
    for (int q = 1; q <= options.max_iter; ++q) {
        TriFieldArray next = add(forcing, step(current));
        const double inc = sup_distance(next, current);
        result.increments.push_back(inc);
        current = std::move(next);
        if (!(inc >= options.tol)) {
            if (!std::isfinite(inc)) break;
            result.fields = std::move(current);
            return result;
        }
    }
    std::ostringstream os;
    os << name << ": successive approximations did not reach tolerance " << options.tol
       << " within " << options.max_iter << " iterations (last increment "
       << result.increments.back() << ")";
    throw ConvergenceError(os.str(), result.increments);
}

}  // namespace

VolterraResult solve_right_volterra(const TriFieldArray& forcing, const TriFieldArray& kernel,
                                    const TriangleGrid& grid, const PicardOptions& options) {
    return iterate(
        forcing, options, [&](const TriFieldArray& x) { return compose(x, kernel, grid); },
        "volterra (right)");
}

VolterraResult solve_left_volterra(const TriFieldArray& forcing, const TriFieldArray& kernel,
                                   const TriangleGrid& grid, const PicardOptions& options) {
    return iterate(
        forcing, options, [&](const TriFieldArray& d) { return compose(kernel, d, grid); },
        "volterra (left)");
}

}  // namespace hypstab
