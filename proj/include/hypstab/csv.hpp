#pragma once

// CSV artifacts.
//
// Kernel dumps: header `i,j,x,xi,value,kernel`, one record per lattice node,
// 1-based indices. Functions of x alone (Omega, Pplus, Pminus) are written at
// xi = x for hypotenuse quantities and xi = 0 for gains.
// Trajectory: `t,l2,V,U_1..U_m`. Snapshots: `t,x,u_1..u_n,v_1..v_m`.

#include "hypstab/simulation.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hypstab {

/// Shortest decimal form that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

class CsvError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_kernel_header(std::ostream& out);
void write_kernel_records(std::ostream& out, const std::string& name, const TriFieldArray& fields,
                          const TriangleGrid& grid);

enum class AxisPlacement { diagonal, axis };
void write_axis_records(std::ostream& out, const std::string& name, const AxisFieldArray& fields,
                        const TriangleGrid& grid, AxisPlacement placement);

/// Reads every record of kernel `name` back into a field array. The lattice
/// size is inferred from the distinct x values. Throws CsvError on malformed
/// input or when `name` is absent.
[[nodiscard]] TriFieldArray read_kernel_records(std::istream& in, const std::string& name);

void write_trajectory(std::ostream& out, const Trajectory& trajectory, int m);

/// Snapshot rows for each state, in order, one row per node.
void write_snapshots(std::ostream& out, const std::vector<SimState>& states);

/// `t,value` pairs with a named value column.
void write_series(std::ostream& out, const std::string& column, const std::vector<double>& times,
                  const std::vector<double>& values);

}  // namespace hypstab
