#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#ifndef NOZZLEFLOW_CLI_BIN
#error "NOZZLEFLOW_CLI_BIN must point at the CLI binary"
#endif

namespace {

struct CmdResult {
    int status = -1;
    std::string out;
};

// Runs the CLI with the given arguments; stderr is folded into the capture
// unless the caller needs clean stdout (CSV parsing).
CmdResult run_cli(const std::string& args, bool merge_stderr = true) {
    std::string cmd = std::string(NOZZLEFLOW_CLI_BIN) + " " + args;
    cmd += merge_stderr ? " 2>&1" : " 2>/dev/null";
    CmdResult r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int rc = pclose(p);
    if (WIFEXITED(rc)) r.status = WEXITSTATUS(rc);
    return r;
}

std::string make_temp_dir() {
    char tmpl[] = "/tmp/nozzleflow_cli_XXXXXX";
    char* d = mkdtemp(tmpl);
    REQUIRE(d != nullptr);
    return std::string(d);
}

std::string write_file(const std::string& dir, const std::string& name,
                       const std::string& body) {
    const std::string path = dir + "/" + name;
    std::ofstream f(path);
    f << body;
    REQUIRE(f.good());
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

bool file_exists(const std::string& path) {
    std::ifstream f(path);
    return f.good();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> ls;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) ls.push_back(line);
    return ls;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

const std::string base_cfg =
    "gamma = 1.6666666666666667\n"
    "dx = 0.05\n"
    "x_min = -1\n"
    "x_max = 1\n"
    "nozzle = constant\n"
    "init = riemann:rho_l=1,v_l=0,rho_r=0.5,v_r=0\n";

}  // namespace

TEST_CASE("riemann subcommand prints a sampled fan") {
    const CmdResult r = run_cli(
        "riemann --gamma 1.6666666666666667 --left 1,0.5 --right 1,-0.5 "
        "--samples 41",
        false);
    CHECK(r.status == 0);
    const auto ls = lines_of(r.out);
    REQUIRE(ls.size() == 42);
    CHECK(ls[0] == "xi,rho,m,v,z,w");
    // two shocks: the middle is denser than either side
    bool denser = false;
    for (size_t i = 1; i < ls.size(); ++i)
        if (ls[i].find(",1.") != std::string::npos) denser = true;
    CHECK(denser);

    const CmdResult eq = run_cli(
        "riemann --gamma 1.6666666666666667 --left 1,0 --right 1,0 "
        "--samples 5",
        false);
    CHECK(eq.status == 0);
    CHECK(lines_of(eq.out).size() == 6);
}

TEST_CASE("validate accepts a sound config") {
    const std::string dir = make_temp_dir();
    const std::string cfg = write_file(dir, "run.cfg", base_cfg + "T = 0.1\n");
    const CmdResult r = run_cli("validate --config " + cfg);
    CHECK(r.status == 0);
    CHECK(contains(r.out, "condition-M: pass"));
    CHECK(contains(r.out, "exponents:"));
}

TEST_CASE("validate rejects out-of-range exponents") {
    const std::string dir = make_temp_dir();
    const std::string cfg =
        write_file(dir, "run.cfg", base_cfg + "T = 0.1\nalpha = 0.95\n");
    const CmdResult r = run_cli("validate --config " + cfg);
    CHECK(r.status == 2);
    CHECK(contains(r.out, "parameter:"));
    CHECK(contains(r.out, "alpha"));
}

TEST_CASE("config errors are reported with line context") {
    const std::string dir = make_temp_dir();
    SUBCASE("unknown key") {
        const std::string cfg =
            write_file(dir, "run.cfg", base_cfg + "T = 0.1\nbogus = 3\n");
        const CmdResult r = run_cli("run --config " + cfg);
        CHECK(r.status == 2);
        CHECK(contains(r.out, "unknown key 'bogus'"));
    }
    SUBCASE("duplicate key") {
        const std::string cfg =
            write_file(dir, "run.cfg", base_cfg + "T = 0.1\ndx = 0.01\n");
        const CmdResult r = run_cli("run --config " + cfg);
        CHECK(r.status == 2);
        CHECK(contains(r.out, "duplicate key 'dx'"));
        CHECK(contains(r.out, "first set at line"));
    }
    SUBCASE("missing required key") {
        const std::string cfg = write_file(dir, "run.cfg", base_cfg);  // no T
        const CmdResult r = run_cli("run --config " + cfg);
        CHECK(r.status == 2);
        CHECK(contains(r.out, "T"));
    }
    SUBCASE("dx does not divide the domain") {
        const std::string cfg = write_file(
            dir, "run.cfg",
            "gamma = 1.6666666666666667\nT = 0.1\ndx = 0.3\nx_min = -1\n"
            "x_max = 1\nnozzle = constant\n"
            "init = riemann:rho_l=1,v_l=0,rho_r=0.5,v_r=0\n");
        const CmdResult r = run_cli("run --config " + cfg);
        CHECK(r.status == 2);
        CHECK(contains(r.out, "divide"));
    }
}

TEST_CASE("run writes snapshots, diagnostics and a plot script") {
    const std::string dir = make_temp_dir();
    const std::string cfg = write_file(
        dir, "run.cfg",
        "gamma = 1.6666666666666667\nT = 0\ndx = 0.01\nx_min = -1\nx_max = 1\n"
        "nozzle = constant\ninit = riemann:rho_l=1,v_l=0,rho_r=0.5,v_r=0\n");
    const std::string out = dir + "/out";
    const CmdResult r = run_cli("run --config " + cfg + " --out " + out);
    CHECK(r.status == 0);
    CHECK(contains(r.out, "run:"));

    REQUIRE(file_exists(out + "/snap_0.csv"));
    const auto snap = lines_of(slurp(out + "/snap_0.csv"));
    REQUIRE(snap.size() == 202);  // header + 201 nodes
    CHECK(snap[0] == "x,rho,m,v,z,w,A,zbound,wbound");

    REQUIRE(file_exists(out + "/diagnostics.csv"));
    const auto diag = lines_of(slurp(out + "/diagnostics.csv"));
    REQUIRE(diag.size() == 1);  // no steps at T = 0
    CHECK(contains(diag[0], "mass_defect"));
    CHECK(contains(diag[0], "max_rh_residual"));

    CHECK(file_exists(out + "/plot.gp"));

    SUBCASE("a non-empty output directory is refused without --force") {
        const CmdResult again = run_cli("run --config " + cfg + " --out " + out);
        CHECK(again.status == 2);
        CHECK(contains(again.out, "use --force"));
        const CmdResult forced =
            run_cli("run --config " + cfg + " --out " + out + " --force");
        CHECK(forced.status == 0);
    }
}

TEST_CASE("refinement study converges on a constant nozzle") {
    const std::string dir = make_temp_dir();
    const std::string cfg = write_file(dir, "run.cfg", base_cfg + "T = 0.05\n");
    const CmdResult r = run_cli("run --config " + cfg + " --levels 2", false);
    CHECK(r.status == 0);
    CHECK(contains(r.out, "level,dx,l1_error,ratio"));
    CHECK(contains(r.out, "refinement: monotone decrease confirmed over 2 levels"));
}
