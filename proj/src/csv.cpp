#include "hypstab/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace hypstab {

std::string format_double(double value) {
    if (value == 0.0) return "0";  // no "-0" in output files
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

void write_kernel_header(std::ostream& out) { out << "i,j,x,xi,value,kernel\n"; }

void write_kernel_records(std::ostream& out, const std::string& name, const TriFieldArray& fields,
                          const TriangleGrid& grid) {
    for (int i = 0; i < fields.rows(); ++i)
        for (int j = 0; j < fields.cols(); ++j)
            for (int a = 0; a < grid.points(); ++a)
                for (int b = 0; b <= a; ++b)
                    out << i + 1 << ',' << j + 1 << ',' << format_double(grid.coord(a)) << ','
                        << format_double(grid.coord(b)) << ','
                        << format_double(fields(i, j).at(a, b)) << ',' << name << '\n';
}

void write_axis_records(std::ostream& out, const std::string& name, const AxisFieldArray& fields,
                        const TriangleGrid& grid, AxisPlacement placement) {
    for (int i = 0; i < fields.rows(); ++i)
        for (int j = 0; j < fields.cols(); ++j)
            for (int a = 0; a < grid.points(); ++a) {
                const double x = grid.coord(a);
                const double xi = placement == AxisPlacement::diagonal ? x : 0.0;
                out << i + 1 << ',' << j + 1 << ',' << format_double(x) << ',' << format_double(xi)
                    << ',' << format_double(fields(i, j)[static_cast<std::size_t>(a)]) << ',' << name
                    << '\n';
            }
}

namespace {

double parse_number(const std::string& field, int line) {
    double v = 0.0;
    const char* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw CsvError("line " + std::to_string(line) + ": not a number: '" + field + "'");
    return v;
}

struct Record {
    int i;
    int j;
    double x;
    double xi;
    double value;
};

}  // namespace

TriFieldArray read_kernel_records(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line) || line != "i,j,x,xi,value,kernel")
        throw CsvError("missing kernel dump header");
    std::vector<Record> records;
    std::set<double> xs;
    int rows = 0;
    int cols = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) throw CsvError("line " + std::to_string(lineno) + ": expected 6 fields");
        if (f[5] != name) continue;
        Record r{static_cast<int>(parse_number(f[0], lineno)), static_cast<int>(parse_number(f[1], lineno)),
                 parse_number(f[2], lineno), parse_number(f[3], lineno), parse_number(f[4], lineno)};
        if (r.i < 1 || r.j < 1) throw CsvError("line " + std::to_string(lineno) + ": bad index");
        rows = std::max(rows, r.i);
        cols = std::max(cols, r.j);
        xs.insert(r.x);
        records.push_back(r);
    }
    if (records.empty()) throw CsvError("no records for kernel '" + name + "'");
    const int points = static_cast<int>(xs.size());
    if (points < 2) throw CsvError("kernel '" + name + "' has fewer than two abscissae");
    const double scale = points - 1;
    TriFieldArray out = zero_fields(rows, cols, points);
    std::vector<char> seen(static_cast<std::size_t>(rows) * cols * points * points, 0);
    for (const Record& r : records) {
        const int a = static_cast<int>(std::lround(r.x * scale));
        const int b = static_cast<int>(std::lround(r.xi * scale));
        if (b < 0 || b > a || a >= points)
            throw CsvError("kernel '" + name + "': node outside the triangle");
        out(r.i - 1, r.j - 1).at(a, b) = r.value;
        seen[((static_cast<std::size_t>(r.i - 1) * cols + (r.j - 1)) * points + a) * points + b] = 1;
    }
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            for (int a = 0; a < points; ++a)
                for (int b = 0; b <= a; ++b)
                    if (!seen[((static_cast<std::size_t>(i) * cols + j) * points + a) * points + b])
                        throw CsvError("kernel '" + name + "': missing lattice nodes");
    return out;
}

void write_trajectory(std::ostream& out, const Trajectory& tr, int m) {
    out << "t,l2,V";
    for (int k = 1; k <= m; ++k) out << ",U_" << k;
    out << '\n';
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
        out << format_double(tr.times[s]) << ',' << format_double(tr.l2[s]) << ',';
        if (s < tr.lyapunov.size()) out << format_double(tr.lyapunov[s]);
        for (int k = 0; k < m; ++k) out << ',' << format_double(tr.control[s][k]);
        out << '\n';
    }
}

void write_snapshots(std::ostream& out, const std::vector<SimState>& states) {
    if (states.empty()) return;
    const auto n = states.front().u.rows();
    const auto m = states.front().v.rows();
    out << "t,x";
    for (Eigen::Index k = 1; k <= n; ++k) out << ",u_" << k;
    for (Eigen::Index k = 1; k <= m; ++k) out << ",v_" << k;
    out << '\n';
    for (const SimState& st : states) {
        const int nx = st.nx();
        for (int c = 0; c <= nx; ++c) {
            out << format_double(st.t) << ',' << format_double(static_cast<double>(c) / nx);
            for (Eigen::Index k = 0; k < n; ++k) out << ',' << format_double(st.u(k, c));
            for (Eigen::Index k = 0; k < m; ++k) out << ',' << format_double(st.v(k, c));
            out << '\n';
        }
    }
}

void write_series(std::ostream& out, const std::string& column, const std::vector<double>& times,
                  const std::vector<double>& values) {
    out << "t," << column << '\n';
    for (std::size_t s = 0; s < times.size() && s < values.size(); ++s)
        out << format_double(times[s]) << ',' << format_double(values[s]) << '\n';
}

}  // namespace hypstab
