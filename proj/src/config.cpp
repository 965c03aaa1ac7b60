#include "hypstab/config.hpp"

#include "hypstab/csv.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace hypstab {

namespace {

std::string located(const std::string& source, int line, int column, const std::string& message) {
    std::ostringstream os;
    os << source << ':' << line << ':' << column << ": " << message;
    return os.str();
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, int column, const std::string& message)
    : std::runtime_error(located(source, line, column, message)),
      line_(line),
      column_(column),
      message_(message) {}

std::string to_string(ControlMode mode) {
    switch (mode) {
        case ControlMode::open_loop: return "open_loop";
        case ControlMode::full_state: return "full_state";
        case ControlMode::output_feedback: return "output_feedback";
    }
    return "unknown";
}

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
        const YAML::Mark mark = node.Mark();
        // yaml-cpp marks are 0-based; an invalid mark falls back to line 1.
        const int line = mark.line >= 0 ? mark.line + 1 : 1;
        const int column = mark.column >= 0 ? mark.column + 1 : 1;
        throw ConfigError(source_, line, column, message);
    }

    void require_map(const YAML::Node& node, const std::string& what) const {
        if (!node.IsMap()) fail(node, what + " must be a mapping");
    }

    void allow_keys(const YAML::Node& map, const std::string& section,
                    const std::set<std::string>& keys) const {
        for (const auto& kv : map) {
            const std::string key = kv.first.as<std::string>();
            if (!keys.count(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
        }
    }

    double number(const YAML::Node& node, const std::string& what) const {
        if (!node.IsScalar()) fail(node, what + " must be a number");
        try {
            return node.as<double>();
        } catch (const YAML::Exception&) {
            fail(node, what + " must be a number, got '" + node.Scalar() + "'");
        }
    }

    int integer(const YAML::Node& node, const std::string& what) const {
        if (!node.IsScalar()) fail(node, what + " must be an integer");
        try {
            return node.as<int>();
        } catch (const YAML::Exception&) {
            fail(node, what + " must be an integer, got '" + node.Scalar() + "'");
        }
    }

    bool boolean(const YAML::Node& node, const std::string& what) const {
        if (!node.IsScalar()) fail(node, what + " must be true or false");
        try {
            return node.as<bool>();
        } catch (const YAML::Exception&) {
            fail(node, what + " must be true or false, got '" + node.Scalar() + "'");
        }
    }

    std::string text(const YAML::Node& node, const std::string& what) const {
        if (!node.IsScalar()) fail(node, what + " must be a string");
        return node.Scalar();
    }

    Vector vector(const YAML::Node& node, const std::string& what) const {
        if (!node.IsSequence()) fail(node, what + " must be a list of numbers");
        Vector out(static_cast<Eigen::Index>(node.size()));
        for (std::size_t k = 0; k < node.size(); ++k)
            out[static_cast<Eigen::Index>(k)] = number(node[k], what);
        return out;
    }

    std::vector<double> list(const YAML::Node& node, const std::string& what) const {
        const Vector v = vector(node, what);
        return {v.data(), v.data() + v.size()};
    }

    // A matrix is a list of rows; an empty list is a matrix with no rows.
    Matrix matrix(const YAML::Node& node, const std::string& what) const {
        if (!node.IsSequence()) fail(node, what + " must be a list of rows");
        const auto rows = static_cast<Eigen::Index>(node.size());
        if (rows == 0) return Matrix(0, 0);
        if (!node[0].IsSequence()) fail(node[0], what + " rows must be lists");
        const auto cols = static_cast<Eigen::Index>(node[0].size());
        Matrix out(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const YAML::Node row = node[static_cast<std::size_t>(r)];
            if (!row.IsSequence() || static_cast<Eigen::Index>(row.size()) != cols)
                fail(row, what + " rows must all have " + std::to_string(cols) + " entries");
            for (Eigen::Index c = 0; c < cols; ++c)
                out(r, c) = number(row[static_cast<std::size_t>(c)], what);
        }
        return out;
    }

private:
    std::string source_;
};

const std::set<std::string> system_keys{"lambda", "mu", "sigma_pp", "sigma_pm", "sigma_mp",
                                        "sigma_mm", "q0", "r1"};

// Validation messages start with the field they concern.
std::string field_of(const std::string& message) {
    const std::string head = message.substr(0, message.find(' '));
    if (head == "n") return "lambda";
    if (head == "m") return "mu";
    return head;
}

HyperbolicSystem read_system(const Reader& rd, const YAML::Node& node) {
    rd.require_map(node, "system");
    rd.allow_keys(node, "system", system_keys);
    for (const std::string& key : system_keys)
        if (!node[key]) rd.fail(node, "system is missing '" + key + "'");
    HyperbolicSystem s;
    s.lambda = rd.vector(node["lambda"], "lambda");
    s.mu = rd.vector(node["mu"], "mu");
    s.sigma_pp = rd.matrix(node["sigma_pp"], "sigma_pp");
    s.sigma_pm = rd.matrix(node["sigma_pm"], "sigma_pm");
    s.sigma_mp = rd.matrix(node["sigma_mp"], "sigma_mp");
    s.sigma_mm = rd.matrix(node["sigma_mm"], "sigma_mm");
    s.q0 = rd.matrix(node["q0"], "q0");
    s.r1 = rd.matrix(node["r1"], "r1");
    const ValidationReport report = validate(s);
    if (!report.ok()) {
        const std::string& first = report.violations.front();
        const std::string field = field_of(first);
        rd.fail(system_keys.count(field) ? node[field] : node, first);
    }
    return s;
}

GridSpec read_grid(const Reader& rd, const YAML::Node& node) {
    GridSpec g;
    if (!node) return g;
    rd.require_map(node, "grid");
    rd.allow_keys(node, "grid", {"nx", "cfl", "kernel_nx", "picard_tol", "picard_max_iter"});
    if (node["nx"]) g.nx = rd.integer(node["nx"], "nx");
    if (node["cfl"]) g.cfl = rd.number(node["cfl"], "cfl");
    if (node["kernel_nx"]) g.kernel_nx = rd.integer(node["kernel_nx"], "kernel_nx");
    if (node["picard_tol"]) g.picard_tol = rd.number(node["picard_tol"], "picard_tol");
    if (node["picard_max_iter"]) g.picard_max_iter = rd.integer(node["picard_max_iter"], "picard_max_iter");
    const ValidationReport report = validate(g);
    if (!report.ok()) {
        const std::string& first = report.violations.front();
        const std::string field = field_of(first);
        rd.fail(node[field] ? node[field] : node, first);
    }
    return g;
}

ControlMode read_mode(const Reader& rd, const YAML::Node& node) {
    const std::string mode = rd.text(node, "mode");
    if (mode == "open_loop") return ControlMode::open_loop;
    if (mode == "full_state") return ControlMode::full_state;
    if (mode == "output_feedback") return ControlMode::output_feedback;
    rd.fail(node, "mode must be one of open_loop, full_state, output_feedback");
}

InitialCondition read_initial(const Reader& rd, const YAML::Node& node, const HyperbolicSystem& s) {
    InitialCondition ic;
    if (node.IsScalar()) {
        ic.preset = node.Scalar();
        if (ic.preset != "sine" && ic.preset != "zero")
            rd.fail(node, "initial_condition preset must be 'sine' or 'zero'");
        return ic;
    }
    rd.require_map(node, "initial_condition");
    rd.allow_keys(node, "initial_condition", {"u", "v"});
    if (!node["u"] || !node["v"]) rd.fail(node, "initial_condition needs both 'u' and 'v' amplitudes");
    ic.preset = "amplitudes";
    ic.amplitudes_u = rd.vector(node["u"], "initial_condition.u");
    ic.amplitudes_v = rd.vector(node["v"], "initial_condition.v");
    if (ic.amplitudes_u->size() != s.n())
        rd.fail(node["u"], "initial_condition.u needs " + std::to_string(s.n()) + " amplitudes");
    if (ic.amplitudes_v->size() != s.m())
        rd.fail(node["v"], "initial_condition.v needs " + std::to_string(s.m()) + " amplitudes");
    return ic;
}

ControllerConfig read_controller(const Reader& rd, const YAML::Node& node, const HyperbolicSystem& s) {
    ControllerConfig c;
    if (!node) return c;
    rd.require_map(node, "controller");
    rd.allow_keys(node, "controller", {"mode", "delta", "l", "lyapunov", "initial_condition"});
    if (node["mode"]) c.mode = read_mode(rd, node["mode"]);
    if (node["delta"]) {
        c.delta = rd.number(node["delta"], "delta");
        if (!(*c.delta > 0.0)) rd.fail(node["delta"], "delta must be positive");
    }
    if (node["l"]) {
        c.l = rd.number(node["l"], "l");
        if (!(*c.l > 0.0)) rd.fail(node["l"], "l must be positive");
    }
    if (node["lyapunov"]) c.lyapunov = rd.boolean(node["lyapunov"], "lyapunov");
    if (node["initial_condition"]) c.initial = read_initial(rd, node["initial_condition"], s);
    return c;
}

RunSettings read_run(const Reader& rd, const YAML::Node& node) {
    RunSettings r;
    if (!node) return r;
    rd.require_map(node, "run");
    rd.allow_keys(node, "run", {"t_end", "snapshot_times", "output_dir", "observer"});
    if (node["t_end"]) {
        r.t_end = rd.number(node["t_end"], "t_end");
        if (!(r.t_end >= 0.0)) rd.fail(node["t_end"], "t_end must be non-negative");
    }
    if (node["snapshot_times"]) {
        r.snapshot_times = rd.list(node["snapshot_times"], "snapshot_times");
        for (std::size_t k = 0; k < r.snapshot_times.size(); ++k)
            if (r.snapshot_times[k] < 0.0 || r.snapshot_times[k] > r.t_end)
                rd.fail(node["snapshot_times"][k], "snapshot time outside [0, t_end]");
    }
    if (node["output_dir"]) r.output_dir = rd.text(node["output_dir"], "output_dir");
    if (node["observer"]) r.observer = rd.boolean(node["observer"], "observer");
    return r;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source, e.mark.line + 1, e.mark.column + 1, e.msg);
    }
    const Reader rd(source);
    if (!root.IsMap()) rd.fail(root, "configuration must be a mapping with a 'system' section");
    rd.allow_keys(root, "configuration", {"system", "grid", "controller", "run"});
    if (!root["system"]) rd.fail(root, "configuration is missing the 'system' section");

    RunConfig cfg;
    cfg.system = read_system(rd, root["system"]);
    cfg.grid = read_grid(rd, root["grid"]);
    cfg.controller = read_controller(rd, root["controller"], cfg.system);
    cfg.run = read_run(rd, root["run"]);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

namespace {

std::string quoted(const std::string& text) {
    std::string out = "\"";
    for (char c : text) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + '"';
}

std::string flow(const Vector& v) {
    std::string out = "[";
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (k) out += ", ";
        out += format_double(v[k]);
    }
    return out + "]";
}

std::string flow(const Matrix& a) {
    std::string out = "[";
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        if (r) out += ", ";
        out += flow(Vector(a.row(r).transpose()));
    }
    return out + "]";
}

}  // namespace

std::string emit_config(const RunConfig& c) {
    std::ostringstream os;
    const HyperbolicSystem& s = c.system;
    os << "system:\n"
       << "  lambda: " << flow(s.lambda) << '\n'
       << "  mu: " << flow(s.mu) << '\n'
       << "  sigma_pp: " << flow(s.sigma_pp) << '\n'
       << "  sigma_pm: " << flow(s.sigma_pm) << '\n'
       << "  sigma_mp: " << flow(s.sigma_mp) << '\n'
       << "  sigma_mm: " << flow(s.sigma_mm) << '\n'
       << "  q0: " << flow(s.q0) << '\n'
       << "  r1: " << flow(s.r1) << '\n';
    os << "grid:\n"
       << "  nx: " << c.grid.nx << '\n'
       << "  cfl: " << format_double(c.grid.cfl) << '\n'
       << "  kernel_nx: " << c.grid.kernel_nx << '\n'
       << "  picard_tol: " << format_double(c.grid.picard_tol) << '\n'
       << "  picard_max_iter: " << c.grid.picard_max_iter << '\n';
    os << "controller:\n"
       << "  mode: " << to_string(c.controller.mode) << '\n';
    if (c.controller.delta) os << "  delta: " << format_double(*c.controller.delta) << '\n';
    if (c.controller.l) os << "  l: " << format_double(*c.controller.l) << '\n';
    os << "  lyapunov: " << (c.controller.lyapunov ? "true" : "false") << '\n';
    const InitialCondition& ic = c.controller.initial;
    if (ic.amplitudes_u && ic.amplitudes_v)
        os << "  initial_condition:\n"
           << "    u: " << flow(*ic.amplitudes_u) << '\n'
           << "    v: " << flow(*ic.amplitudes_v) << '\n';
    else
        os << "  initial_condition: " << ic.preset << '\n';
    os << "run:\n"
       << "  t_end: " << format_double(c.run.t_end) << '\n'
       << "  snapshot_times: "
       << flow(Vector(Eigen::Map<const Vector>(c.run.snapshot_times.data(),
                                               static_cast<Eigen::Index>(c.run.snapshot_times.size()))))
       << '\n'
       << "  output_dir: " << quoted(c.run.output_dir) << '\n'
       << "  observer: " << (c.run.observer ? "true" : "false") << '\n';
    return os.str();
}

SimState initial_state(const RunConfig& c) {
    const InitialCondition& ic = c.controller.initial;
    const int nx = c.grid.nx;
    if (ic.amplitudes_u && ic.amplitudes_v) return sine_state(*ic.amplitudes_u, *ic.amplitudes_v, nx);
    if (ic.preset == "zero")
        return sine_state(Vector::Zero(c.system.n()), Vector::Zero(c.system.m()), nx);
    return sine_state(c.system, nx);
}

RunConfig reference_config() {
    RunConfig c;
    c.system = reference_system();
    return c;
}

}  // namespace hypstab
