#include "hypstab/config.hpp"
#include "hypstab/csv.hpp"
#include "hypstab/dump.hpp"

#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace hypstab;

namespace {

const char* reference_yaml = R"(system:
  lambda: [1, 2]
  mu: [1, 2]
  sigma_pp: [[1, 0], [0, 1]]
  sigma_pm: [[1, 0], [0, 1]]
  sigma_mp: [[1, 1], [1, 0]]
  sigma_mm: [[0, 1], [1, 0]]
  q0: [[1, 0], [0, 0]]
  r1: [[0, 0], [0, 0]]
grid:
  nx: 400
  kernel_nx: 129
controller:
  mode: output_feedback
  delta: 4.5
  initial_condition:
    u: [1, 0.5]
    v: [0, -2]
run:
  t_end: 4.5
  snapshot_times: [0, 2.25]
  output_dir: out/of
)";

ConfigError parse_error(const std::string& text) {
    try {
        (void)parse_config(text, "test.yaml");
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError("", 0, 0, "");
}

bool same(const HyperbolicSystem& a, const HyperbolicSystem& b) {
    return a.lambda == b.lambda && a.mu == b.mu && a.sigma_pp == b.sigma_pp && a.sigma_pm == b.sigma_pm &&
           a.sigma_mp == b.sigma_mp && a.sigma_mm == b.sigma_mm && a.q0 == b.q0 && a.r1 == b.r1;
}

bool same(const RunConfig& a, const RunConfig& b) {
    return same(a.system, b.system) && a.grid.nx == b.grid.nx && a.grid.cfl == b.grid.cfl &&
           a.grid.kernel_nx == b.grid.kernel_nx && a.grid.picard_tol == b.grid.picard_tol &&
           a.grid.picard_max_iter == b.grid.picard_max_iter && a.controller.mode == b.controller.mode &&
           a.controller.delta == b.controller.delta && a.controller.l == b.controller.l &&
           a.controller.lyapunov == b.controller.lyapunov && a.controller.initial == b.controller.initial &&
           a.run.t_end == b.run.t_end && a.run.snapshot_times == b.run.snapshot_times &&
           a.run.output_dir == b.run.output_dir && a.run.observer == b.run.observer;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("hypstab_test_io_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("shortest round-trip formatting") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int k = 0; k < 1000; ++k) {
        const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        const std::string s = format_double(x);
        double y = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), y);
        CHECK(y == x);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(3.0) == "3");
}

TEST_CASE("kernel records round trip bit-exactly") {
    const TriangleGrid g(9);
    TriFieldArray f = zero_fields(2, 3, 9);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            for (int a = 0; a < 9; ++a)
                for (int b = 0; b <= a; ++b) f(i, j).at(a, b) = n(rng);
    std::stringstream ss;
    write_kernel_header(ss);
    write_kernel_records(ss, "K", f, g);
    write_kernel_records(ss, "Other", zero_fields(1, 1, 9), g);
    const TriFieldArray back = read_kernel_records(ss, "K");
    REQUIRE(back.rows() == 2);
    REQUIRE(back.cols() == 3);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) CHECK(back(i, j).sup_distance(f(i, j)) == 0.0);
}

TEST_CASE("malformed kernel dumps are rejected") {
    std::istringstream no_header("1,1,0,0,0,K\n");
    CHECK_THROWS_AS((void)read_kernel_records(no_header, "K"), CsvError);
    std::istringstream bad_number("i,j,x,xi,value,kernel\n1,1,0,0,abc,K\n");
    CHECK_THROWS_AS((void)read_kernel_records(bad_number, "K"), CsvError);
    std::istringstream missing("i,j,x,xi,value,kernel\n1,1,0,0,1,K\n1,1,1,0,1,K\n");
    CHECK_THROWS_AS((void)read_kernel_records(missing, "K"), CsvError);
    std::istringstream absent("i,j,x,xi,value,kernel\n1,1,0,0,1,L\n");
    CHECK_THROWS_AS((void)read_kernel_records(absent, "K"), CsvError);
}

TEST_CASE("trajectory and snapshot schemas") {
    Trajectory tr;
    tr.times = {0.0, 0.5};
    tr.l2 = {1.0, 0.25};
    tr.control = {Vector{{1.0, 2.0}}, Vector{{0.0, -1.0}}};
    std::ostringstream a;
    write_trajectory(a, tr, 2);
    CHECK(a.str() == "t,l2,V,U_1,U_2\n0,1,,1,2\n0.5,0.25,,0,-1\n");
    tr.lyapunov = {3.0, 2.0};
    std::ostringstream b;
    write_trajectory(b, tr, 2);
    CHECK(b.str() == "t,l2,V,U_1,U_2\n0,1,3,1,2\n0.5,0.25,2,0,-1\n");

    SimState st = sine_state(Vector::Zero(1), Vector::Ones(2), 2);
    st.t = 1.5;
    std::ostringstream c;
    write_snapshots(c, {st});
    CHECK(c.str().rfind("t,x,u_1,v_1,v_2\n1.5,0,0,0,0\n1.5,0.5,0,1,1\n", 0) == 0);
}

TEST_CASE("config parses and fills defaults") {
    const RunConfig c = parse_config(reference_yaml);
    CHECK(same(c.system, reference_system()));
    CHECK(c.grid.cfl == 0.9);
    CHECK(c.grid.picard_tol == 1e-10);
    CHECK(c.controller.mode == ControlMode::output_feedback);
    CHECK(c.controller.delta == 4.5);
    CHECK_FALSE(c.controller.l.has_value());
    CHECK(c.controller.initial.preset == "amplitudes");
    CHECK(c.run.t_end == 4.5);
    CHECK(c.run.output_dir == "out/of");
    CHECK(c.run.observer);
    const SimState ic = initial_state(c);
    CHECK(ic.u.cols() == 401);
    CHECK(ic.v(1, 200) == doctest::Approx(-2.0));
}

TEST_CASE("printed config re-parses to the same objects") {
    const RunConfig a = parse_config(reference_yaml);
    const RunConfig b = parse_config(emit_config(a));
    CHECK(same(a, b));
    CHECK(emit_config(a) == emit_config(b));
    RunConfig odd = reference_config();
    odd.system.sigma_pp(0, 1) = 0.1 + 0.2;
    odd.grid.picard_tol = 3.3e-11;
    odd.controller.l = 1.0 / 3.0;
    odd.controller.initial.preset = "zero";
    odd.run.output_dir = "a dir/with: colon \"and\" \\ slash";
    odd.run.observer = false;
    CHECK(same(odd, parse_config(emit_config(odd))));
}

TEST_CASE("config errors carry line and column") {
    SUBCASE("unknown key") {
        const ConfigError e = parse_error("system:\n  lambda: [1]\n  speed: 3\n");
        CHECK(e.line() == 3);
        CHECK(e.column() == 3);
        CHECK(std::string(e.what()).find("test.yaml:3:3") == 0);
    }
    SUBCASE("mu ties") {
        std::string text = reference_yaml;
        text.replace(text.find("mu: [1, 2]"), 10, "mu: [2, 2]");
        const ConfigError e = parse_error(text);
        CHECK(e.message() == "mu must be strictly increasing");
        CHECK(e.line() == 3);
    }
    SUBCASE("shape mismatch points at the block") {
        std::string text = reference_yaml;
        text.replace(text.find("q0: [[1, 0], [0, 0]]"), 20, "q0: [[1, 0]]");
        const ConfigError e = parse_error(text);
        CHECK(e.message().find("q0 shape") == 0);
        CHECK(e.line() == 8);
    }
    SUBCASE("not a number") {
        std::string text = reference_yaml;
        text.replace(text.find("nx: 400"), 7, "nx: many");
        CHECK(parse_error(text).line() == 11);
    }
    SUBCASE("ragged matrix") {
        std::string text = reference_yaml;
        text.replace(text.find("[[1, 1], [1, 0]]"), 16, "[[1, 1], [1]]");
        CHECK(parse_error(text).line() == 6);
    }
    SUBCASE("bad mode") {
        std::string text = reference_yaml;
        text.replace(text.find("output_feedback"), 15, "telepathy");
        CHECK(parse_error(text).message().find("mode must be one of") == 0);
    }
    SUBCASE("amplitude count") {
        std::string text = reference_yaml;
        text.replace(text.find("u: [1, 0.5]"), 11, "u: [1]");
        CHECK(parse_error(text).message() == "initial_condition.u needs 2 amplitudes");
    }
    SUBCASE("grid invariant") {
        std::string text = reference_yaml;
        text.replace(text.find("kernel_nx: 129"), 14, "kernel_nx: 1");
        const ConfigError e = parse_error(text);
        CHECK(e.message() == "kernel_nx must be at least 2");
        CHECK(e.line() == 12);
    }
    SUBCASE("missing system") {
        CHECK(parse_error("grid:\n  nx: 10\n").message().find("missing the 'system'") != std::string::npos);
    }
    SUBCASE("yaml syntax") {
        CHECK(parse_error("system: [1, 2\n").line() >= 1);
    }
}

TEST_CASE("initial condition presets") {
    RunConfig c = reference_config();
    c.grid.nx = 10;
    CHECK(initial_state(c).u(0, 5) == doctest::Approx(1.0));
    c.controller.initial.preset = "zero";
    CHECK(initial_state(c).u.isZero(0.0));
}

TEST_CASE("kernel dumps write and load back") {
    const HyperbolicSystem s = reference_system();
    GridSpec g;
    g.kernel_nx = 17;
    const KernelSolution k = solve_control_kernels(s, g);
    const TargetCouplings c = solve_target_couplings(k, s, g);
    const ObserverSolution o = solve_observer_kernels(s, g);
    const auto dir = scratch_dir("dump");
    const ObserverTargetCouplings d = target_couplings_observer(o, s, g);
    const auto files = write_kernel_dumps(dir, k, c, &o, &d);
    CHECK(files.size() == 11);
    for (const char* name : {"K.csv", "L.csv", "Omega.csv", "Cplus.csv", "Cminus.csv", "M.csv", "N.csv",
                             "observer_gains.csv", "Dplus.csv", "Dminus.csv", "convergence.csv"})
        CHECK(std::filesystem::exists(dir / name));
    {
        std::ifstream in(dir / "Dminus.csv");
        const TriFieldArray back = read_kernel_records(in, "Dminus");
        CHECK(back(1, 0).sup_distance(d.d_minus(1, 0)) == 0.0);
    }

    const KernelSolution kl = load_control_kernels(dir, s);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(kl.K(i, j).sup_distance(k.K(i, j)) == 0.0);
            CHECK(kl.L(i, j).sup_distance(k.L(i, j)) == 0.0);
            CHECK(kl.omega(i, j) == k.omega(i, j));
        }
    const auto ol = load_observer_kernels(dir, s);
    REQUIRE(ol.has_value());
    CHECK(ol->p_plus(1, 0) == o.p_plus(1, 0));
    CHECK(ol->p_minus(0, 1) == o.p_minus(0, 1));

    HyperbolicSystem bigger = s;
    bigger.lambda = Vector{{1.0, 2.0, 3.0}};
    CHECK_THROWS_AS((void)load_control_kernels(dir, bigger), CsvError);

    const auto control_only = scratch_dir("control_only");
    CHECK(write_kernel_dumps(control_only, k, c, nullptr).size() == 6);
    CHECK_FALSE(load_observer_kernels(control_only, s).has_value());
    CHECK_THROWS_AS((void)load_control_kernels(scratch_dir("absent"), s), std::ios_base::failure);
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(control_only);
}
