#pragma once

// Matrix-valued Volterra operators on the triangle, discretized with the
// trapezoid rule on the lattice nodes.

#include "hypstab/kernel_solver.hpp"

namespace hypstab {

/// (A ∘ B)(x,ξ) = ∫_ξ^x A(x,s) B(s,ξ) ds.
[[nodiscard]] TriFieldArray compose(const TriFieldArray& a, const TriFieldArray& b,
                                    const TriangleGrid& grid);

/// Pointwise product with a constant matrix on the left: (C F)(x,ξ).
[[nodiscard]] TriFieldArray multiply(const Matrix& c, const TriFieldArray& f);
/// Pointwise product with a constant matrix on the right: (F C)(x,ξ).
[[nodiscard]] TriFieldArray multiply(const TriFieldArray& f, const Matrix& c);

[[nodiscard]] TriFieldArray add(const TriFieldArray& a, const TriFieldArray& b);
[[nodiscard]] TriFieldArray scale(const TriFieldArray& a, double factor);
[[nodiscard]] double sup_distance(const TriFieldArray& a, const TriFieldArray& b);
[[nodiscard]] double sup_norm(const TriFieldArray& a);

struct VolterraResult {
    TriFieldArray fields;
    std::vector<double> increments;
};

/// X = F + X ∘ G, solved for each fixed x as a second-kind equation in ξ.
[[nodiscard]] VolterraResult solve_right_volterra(const TriFieldArray& forcing,
                                                  const TriFieldArray& kernel,
                                                  const TriangleGrid& grid,
                                                  const PicardOptions& options);

/// D = F + N ∘ D, solved for each fixed ξ as a second-kind equation in x.
[[nodiscard]] VolterraResult solve_left_volterra(const TriFieldArray& forcing,
                                                 const TriFieldArray& kernel,
                                                 const TriangleGrid& grid,
                                                 const PicardOptions& options);

}  // namespace hypstab
