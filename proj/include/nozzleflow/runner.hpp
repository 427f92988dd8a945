#pragma once

// Command implementations behind the CLI: full runs with CSV output,
// admissibility validation, and a standalone Riemann sampler.
// Exit codes: 0 success, 2 configuration/validation failure,
// 3 runtime failure (construction, solver, non-convergent refinement).

#include <string>

#include "nozzleflow/config.hpp"
#include "nozzleflow/scheme.hpp"

namespace nozzleflow::runner {

// In-memory pipeline behind cmd_run, for bindings and tests: build the
// profile, b, initial data and parameters from cfg, then march. Throws on
// validation or construction failure (condition-M failures throw unless
// cfg.force).
scheme::RunResult run_from_config(const config::RunConfig& cfg);

struct CliOptions {
    std::string config_path;
    std::string out_override;  // empty: take out_dir from the config
    bool force = false;        // OR-ed with the config's force
    int levels = 1;            // > 1: mesh-refinement study, no file output
};

int cmd_run(const CliOptions& opt);
int cmd_validate(const std::string& config_path);

struct RiemannOptions {
    double gamma = 0.0;
    double rho_l = 0.0, v_l = 0.0;
    double rho_r = 0.0, v_r = 0.0;
    int samples = 201;
};
// Writes xi,rho,m,v,z,w CSV to stdout; wave summary goes to stderr.
int cmd_riemann(const RiemannOptions& opt);

}  // namespace nozzleflow::runner
