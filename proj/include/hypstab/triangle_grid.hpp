#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace hypstab {

/// Uniform lattice on T = {0 <= ξ <= x <= 1}: nodes (x_a, ξ_b) = (a h, b h)
/// with 0 <= b <= a < points, h = 1/(points - 1).
class TriangleGrid {
public:
    explicit TriangleGrid(int points);

    [[nodiscard]] int points() const { return points_; }
    [[nodiscard]] double h() const { return h_; }
    [[nodiscard]] double coord(int a) const { return a * h_; }
    [[nodiscard]] std::size_t node_count() const {
        return static_cast<std::size_t>(points_) * (points_ + 1) / 2;
    }

private:
    int points_;
    double h_;
};

/// Piecewise-linear interpolation weights for one point of T. Each lattice
/// square is split along its diagonal; squares on the hypotenuse only ever
/// use their lower half, so every referenced vertex lies in T.
struct PointStencil {
    int a[3];
    int b[3];
    double w[3];
};

/// Linear interpolation weights along the hypotenuse x = ξ.
struct DiagonalStencil {
    int a0;
    int a1;
    double w0;
    double w1;
};

[[nodiscard]] PointStencil make_stencil(const TriangleGrid& grid, double x, double xi);
[[nodiscard]] DiagonalStencil make_diagonal_stencil(const TriangleGrid& grid, double x);

/// Scalar field sampled at the lattice nodes of T.
class TriField {
public:
    TriField() = default;
    explicit TriField(int points, double value = 0.0)
        : points_(points), data_(static_cast<std::size_t>(points) * points, value) {}

    [[nodiscard]] int points() const { return points_; }

    double& at(int a, int b) {
        assert(b <= a);
        return data_[static_cast<std::size_t>(a) * points_ + b];
    }
    [[nodiscard]] double at(int a, int b) const {
        assert(b <= a);
        return data_[static_cast<std::size_t>(a) * points_ + b];
    }

    [[nodiscard]] double eval(const PointStencil& s) const {
        return s.w[0] * at(s.a[0], s.b[0]) + s.w[1] * at(s.a[1], s.b[1]) +
               s.w[2] * at(s.a[2], s.b[2]);
    }
    [[nodiscard]] double eval(const DiagonalStencil& s) const {
        return s.w0 * at(s.a0, s.a0) + s.w1 * at(s.a1, s.a1);
    }
    [[nodiscard]] double operator()(const TriangleGrid& grid, double x, double xi) const {
        return eval(make_stencil(grid, x, xi));
    }

    /// max |f| over the nodes of T.
    [[nodiscard]] double sup_norm() const;
    /// max |f - g| over the nodes of T.
    [[nodiscard]] double sup_distance(const TriField& other) const;

private:
    int points_ = 0;
    std::vector<double> data_;
};

/// rows x cols array of fields, row-major.
template <class Field>
class FieldArray {
public:
    FieldArray() = default;
    FieldArray(int rows, int cols, const Field& prototype)
        : rows_(rows), cols_(cols), fields_(static_cast<std::size_t>(rows) * cols, prototype) {}

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }

    Field& operator()(int i, int j) { return fields_[static_cast<std::size_t>(i) * cols_ + j]; }
    const Field& operator()(int i, int j) const {
        return fields_[static_cast<std::size_t>(i) * cols_ + j];
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<Field> fields_;
};

using TriFieldArray = FieldArray<TriField>;
/// Functions of x sampled at the grid abscissae x_a.
using AxisFieldArray = FieldArray<std::vector<double>>;

[[nodiscard]] TriFieldArray zero_fields(int rows, int cols, int points);
[[nodiscard]] AxisFieldArray zero_axis_fields(int rows, int cols, int points);

/// Linear interpolation of a function sampled on the grid abscissae.
[[nodiscard]] double interpolate_axis(std::span<const double> values, double h, double x);

}  // namespace hypstab
