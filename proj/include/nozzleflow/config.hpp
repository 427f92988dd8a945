#pragma once

// key = value run configuration. '#' starts a comment, blank lines are
// ignored, duplicate keys are rejected naming both lines, and every problem
// in the file is reported at once with its line number.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nozzleflow::config {

struct ConfigError : std::runtime_error {
    std::vector<std::string> messages;
    explicit ConfigError(std::vector<std::string> msgs);
};

struct NozzleSpec {
    enum class Kind { constant, laval, wind_tunnel, tabulated };
    Kind kind = Kind::constant;
    double h = 0.0, X = 0.0;
    std::string path;
};

struct InitSpec {
    enum class Kind { riemann, tabulated };
    Kind kind = Kind::riemann;
    double rho_l = 0.0, v_l = 0.0, rho_r = 0.0, v_r = 0.0, x0 = 0.0;
    std::string path;
};

struct RunConfig {
    double gamma = 0.0;
    double T = 0.0;
    double dx = 0.0;
    double x_min = -10.0;
    double x_max = 10.0;
    NozzleSpec nozzle;
    InitSpec init;
    std::string b_override_path;  // empty: derive b from the profile
    std::optional<double> alpha, beta, delta, M;
    double epsilon = 0.0;
    std::vector<double> snapshot_times;
    std::string out_dir = "out";
    bool force = false;
};

// Parses config text; throws ConfigError carrying every diagnostic.
RunConfig parse_config(const std::string& text);

// Reads the file and parses it.
RunConfig load_config(const std::string& path);

}  // namespace nozzleflow::config
