#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "nozzleflow/runner.hpp"

namespace {

// "rho,v" -> pair; CLI11 validator-style parse.
bool parse_pair(const std::string& s, double& rho, double& v) {
    auto comma = s.find(',');
    if (comma == std::string::npos) return false;
    try {
        std::size_t n1 = 0, n2 = 0;
        const std::string a = s.substr(0, comma), b = s.substr(comma + 1);
        rho = std::stod(a, &n1);
        v = std::stod(b, &n2);
        return n1 == a.size() && n2 == b.size();
    } catch (...) {
        return false;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nozzleflow: 1-D isentropic nozzle flow via a modified Godunov scheme"};
    app.require_subcommand(1);

    nozzleflow::runner::CliOptions run_opt;
    auto* run = app.add_subcommand("run", "march a configured problem and write CSVs");
    run->add_option("--config", run_opt.config_path, "config file (key = value)")
        ->required();
    run->add_option("--out", run_opt.out_override, "output directory (overrides config)");
    run->add_flag("--force", run_opt.force,
                  "overwrite a non-empty output directory and run past a failed "
                  "condition-M check");
    run->add_option("--levels", run_opt.levels,
                    "mesh-refinement study with this many dx halvings (no file output)")
        ->check(CLI::Range(1, 12));

    std::string val_config;
    auto* val = app.add_subcommand("validate",
                                   "check condition-M and scheme parameters, print margins");
    val->add_option("--config", val_config, "config file (key = value)")->required();

    nozzleflow::runner::RiemannOptions ropt;
    std::string left_s, right_s;
    auto* rie = app.add_subcommand("riemann", "sample an exact Riemann solution to stdout");
    rie->add_option("--gamma", ropt.gamma, "adiabatic exponent")->required();
    rie->add_option("--left", left_s, "left state as rho,v")->required();
    rie->add_option("--right", right_s, "right state as rho,v")->required();
    rie->add_option("--samples", ropt.samples, "number of xi samples (default 201)");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return nozzleflow::runner::cmd_run(run_opt);
    if (val->parsed()) return nozzleflow::runner::cmd_validate(val_config);
    if (rie->parsed()) {
        if (!parse_pair(left_s, ropt.rho_l, ropt.v_l)) {
            std::fprintf(stderr, "error: --left expects rho,v (got '%s')\n",
                         left_s.c_str());
            return 2;
        }
        if (!parse_pair(right_s, ropt.rho_r, ropt.v_r)) {
            std::fprintf(stderr, "error: --right expects rho,v (got '%s')\n",
                         right_s.c_str());
            return 2;
        }
        return nozzleflow::runner::cmd_riemann(ropt);
    }
    return 2;
}
