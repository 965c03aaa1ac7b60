#pragma once

// Run configuration: a YAML document with sections `system`, `grid`,
// `controller` and `run`. Unknown keys, malformed values and invalid systems
// are rejected with the offending line and column.

#include "hypstab/simulation.hpp"
#include "hypstab/system.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypstab {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, int column, const std::string& message);

    [[nodiscard]] int line() const { return line_; }
    [[nodiscard]] int column() const { return column_; }
    /// Message without the location prefix.
    [[nodiscard]] const std::string& message() const { return message_; }

private:
    int line_;
    int column_;
    std::string message_;
};

/// Initial plant state: `sine` (all amplitudes 1), `zero`, or explicit
/// per-component amplitudes of sin(πx).
struct InitialCondition {
    std::string preset = "sine";
    std::optional<Vector> amplitudes_u;
    std::optional<Vector> amplitudes_v;

    friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

struct ControllerConfig {
    ControlMode mode = ControlMode::full_state;
    std::optional<double> delta;  // Lyapunov decay; chosen automatically when unset
    std::optional<double> l;      // Lyapunov weight; 2 m max|q| when unset
    bool lyapunov = false;        // record V along the trajectory
    InitialCondition initial;
};

struct RunSettings {
    double t_end = 3.0;
    std::vector<double> snapshot_times;
    std::string output_dir = "out";
    bool observer = true;  // also synthesize M, N, P± in `kernels`
};

struct RunConfig {
    HyperbolicSystem system;
    GridSpec grid;
    ControllerConfig controller;
    RunSettings run;
};

[[nodiscard]] RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

/// YAML text that parses back to the same RunConfig (floats written in
/// shortest round-trip form).
[[nodiscard]] std::string emit_config(const RunConfig& config);

[[nodiscard]] SimState initial_state(const RunConfig& config);

[[nodiscard]] std::string to_string(ControlMode mode);

/// Reference configuration: the two-by-two example with the defaults above.
[[nodiscard]] RunConfig reference_config();

}  // namespace hypstab
