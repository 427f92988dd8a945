#include "nozzleflow/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <vector>

#include "nozzleflow/csv.hpp"
#include "nozzleflow/diagnostics.hpp"
#include "nozzleflow/riemann.hpp"
#include "nozzleflow/scheme.hpp"

namespace nozzleflow::runner {

namespace fs = std::filesystem;
using config::ConfigError;
using config::InitSpec;
using config::NozzleSpec;
using config::RunConfig;
using csvio::format_double;

namespace {

void report_config_error(const ConfigError& e) {
    for (const auto& m : e.messages) std::fprintf(stderr, "config: %s\n", m.c_str());
}

NozzleProfile build_profile(const RunConfig& cfg) {
    switch (cfg.nozzle.kind) {
        case NozzleSpec::Kind::constant:
            return NozzleProfile::constant_area();
        case NozzleSpec::Kind::laval:
            return NozzleProfile::laval(cfg.nozzle.h, cfg.nozzle.X);
        case NozzleSpec::Kind::wind_tunnel:
            return NozzleProfile::wind_tunnel(cfg.nozzle.h, cfg.nozzle.X);
        case NozzleSpec::Kind::tabulated: {
            auto t = csvio::read_table(cfg.nozzle.path);
            int cx = t.column("x"), ca = t.column("A");
            if (cx < 0 || ca < 0)
                throw std::runtime_error(cfg.nozzle.path +
                                         ": nozzle table needs columns x and A");
            std::vector<double> xs, as;
            for (const auto& r : t.rows) {
                xs.push_back(r[cx]);
                as.push_back(r[ca]);
            }
            return NozzleProfile::tabulated(std::move(xs), std::move(as));
        }
    }
    throw std::logic_error("unreachable nozzle kind");
}

void apply_b(NozzleProfile& prof, const RunConfig& cfg, double mu) {
    if (!cfg.b_override_path.empty()) {
        auto t = csvio::read_table(cfg.b_override_path);
        int cx = t.column("x"), cb = t.column("b");
        if (cx < 0 || cb < 0)
            throw std::runtime_error(cfg.b_override_path +
                                     ": b table needs columns x and b");
        std::vector<double> xs, bs;
        for (const auto& r : t.rows) {
            xs.push_back(r[cx]);
            bs.push_back(r[cb]);
        }
        prof.override_b(xs, bs);
    } else {
        prof.derive_b(mu, cfg.dx);
    }
}

struct InitialData {
    std::function<GasState(double)> u0;
    std::vector<double> breakpoints;
};

InitialData build_init(const RunConfig& cfg) {
    InitialData init;
    if (cfg.init.kind == InitSpec::Kind::riemann) {
        if (cfg.init.rho_l < 0.0 || cfg.init.rho_r < 0.0)
            throw std::runtime_error("init: densities must be non-negative");
        const GasState ul{cfg.init.rho_l, cfg.init.rho_l * cfg.init.v_l};
        const GasState ur{cfg.init.rho_r, cfg.init.rho_r * cfg.init.v_r};
        const double x0 = cfg.init.x0;
        init.u0 = [ul, ur, x0](double x) { return x < x0 ? ul : ur; };
        init.breakpoints = {x0};
        return init;
    }
    auto t = csvio::read_table(cfg.init.path);
    int cx = t.column("x"), cr = t.column("rho"), cv = t.column("v");
    if (cx < 0 || cr < 0 || cv < 0)
        throw std::runtime_error(cfg.init.path +
                                 ": init table needs columns x, rho and v");
    if (t.rows.size() < 2)
        throw std::runtime_error(cfg.init.path + ": init table needs >= 2 rows");
    std::vector<double> xs, rhos, vs;
    for (const auto& r : t.rows) {
        if (!xs.empty() && !(r[cx] > xs.back()))
            throw std::runtime_error(cfg.init.path +
                                     ": init x column must be strictly increasing");
        if (r[cr] < 0.0)
            throw std::runtime_error(cfg.init.path + ": negative density");
        xs.push_back(r[cx]);
        rhos.push_back(r[cr]);
        vs.push_back(r[cv]);
    }
    // Piecewise-linear in (rho, v), constant beyond the table.
    init.u0 = [xs, rhos, vs](double x) {
        if (x <= xs.front()) return GasState{rhos.front(), rhos.front() * vs.front()};
        if (x >= xs.back()) return GasState{rhos.back(), rhos.back() * vs.back()};
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
        const double s = (x - xs[i]) / (xs[i + 1] - xs[i]);
        const double rho = rhos[i] + s * (rhos[i + 1] - rhos[i]);
        const double v = vs[i] + s * (vs[i + 1] - vs[i]);
        return GasState{rho, rho * v};
    };
    init.breakpoints = xs;
    return init;
}

struct Prepared {
    GasConstants c;
    NozzleProfile prof;
    AdmissibilityConstants ac;
    NozzleProfile::ConditionMReport report;
    InitialData init;
    scheme::SchemeParams par;
};

// Everything up to (not including) the march; throws on hard errors,
// records the condition-M verdict for the caller to act on.
Prepared prepare(const RunConfig& cfg) {
    GasConstants c(cfg.gamma);
    NozzleProfile prof = build_profile(cfg);
    AdmissibilityConstants ac = mu_sigma(c);
    ac.epsilon = cfg.epsilon;
    apply_b(prof, cfg, ac.mu);
    auto report = prof.validate_condition_M(ac, cfg.epsilon > 0.0);

    InitialData init = build_init(cfg);

    scheme::SchemeParams par(c);
    if (cfg.alpha) par.alpha = *cfg.alpha;
    if (cfg.beta) par.beta = *cfg.beta;
    if (cfg.delta) par.delta = *cfg.delta;
    par.dx = cfg.dx;
    par.T = cfg.T;
    par.M = cfg.M ? *cfg.M
                  : scheme::auto_M(init.u0, c, prof, cfg.x_min, cfg.x_max, cfg.dx,
                                   init.breakpoints);
    if (!(par.M > 0.0))
        throw std::runtime_error(
            "auto M is zero (initial data identically vacuum); set M in the config");
    par.dt = scheme::mesh_ratio_dt(cfg.dx, par.M, prof);
    par.validate();

    // catch domain/dx mismatches here, where they exit as config errors
    const double span = cfg.x_max - cfg.x_min;
    const long n = std::llround(span / cfg.dx);
    if (n < 4 || std::fabs(static_cast<double>(n) * cfg.dx - span) > 1e-6 * cfg.dx)
        throw std::runtime_error(
            "dx must divide [x_min, x_max] into at least 4 cells");

    return Prepared{c, std::move(prof), ac, std::move(report), std::move(init), par};
}

void write_snapshot_csv(const std::string& path, const scheme::Snapshot& snap,
                        const GasConstants& c, const NozzleProfile& prof) {
    std::vector<std::vector<double>> rows;
    rows.reserve(snap.x.size());
    for (std::size_t i = 0; i < snap.x.size(); ++i) {
        const GasState& u = snap.u[i];
        const Invariants iv = to_invariants(u, c);
        rows.push_back({snap.x[i], u.rho, u.m, velocity(u), iv.z, iv.w,
                        prof.area(snap.x[i]), snap.zbound[i], snap.wbound[i]});
    }
    csvio::write_table(path, {"x", "rho", "m", "v", "z", "w", "A", "zbound", "wbound"},
                       rows);
}

void write_diagnostics_csv(const std::string& path,
                           const std::vector<scheme::StepStats>& steps) {
    std::vector<std::vector<double>> rows;
    rows.reserve(steps.size());
    for (const auto& s : steps)
        rows.push_back({static_cast<double>(s.step), s.max_z_violation,
                        s.max_w_violation, s.mass_defect, s.clip_budget,
                        static_cast<double>(s.regular), static_cast<double>(s.a11),
                        static_cast<double>(s.a12i), static_cast<double>(s.a12ii),
                        static_cast<double>(s.a3), static_cast<double>(s.a4),
                        static_cast<double>(s.clamp_events), s.max_rh_residual});
    csvio::write_table(path,
                       {"step", "max_z_violation", "max_w_violation", "mass_defect",
                        "clip_budget", "regular", "a11", "a12i", "a12ii", "a3", "a4",
                        "clamp_events", "max_rh_residual"},
                       rows);
}

void write_plot_script(const std::string& path,
                       const std::vector<scheme::Snapshot>& snaps) {
    std::string s;
    s += "# gnuplot script: density profiles plus the final invariant picture\n";
    s += "set datafile separator comma\n";
    s += "set key outside\n";
    s += "set xlabel 'x'\n\n";
    s += "set terminal pngcairo size 1000,700\n";
    s += "set output 'rho.png'\n";
    s += "set ylabel 'rho'\n";
    s += "plot \\\n";
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        s += "  'snap_" + format_double(snaps[i].time) + ".csv' using 1:2 with lines title 't=" +
             format_double(snaps[i].time) + "'";
        s += (i + 1 < snaps.size()) ? ", \\\n" : "\n";
    }
    const std::string last = "snap_" + format_double(snaps.back().time) + ".csv";
    s += "\nset output 'invariants.png'\n";
    s += "set ylabel 'z, w'\n";
    s += "plot \\\n";
    s += "  '" + last + "' using 1:5 with lines title 'z', \\\n";
    s += "  '" + last + "' using 1:6 with lines title 'w', \\\n";
    s += "  '" + last + "' using 1:8 with lines dt 2 title '-M e^{-B}', \\\n";
    s += "  '" + last + "' using 1:9 with lines dt 2 title 'M e^{B}'\n";
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    std::fwrite(s.data(), 1, s.size(), f);
    std::fclose(f);
}

int run_single(const RunConfig& cfg, const Prepared& pre, const std::string& out_dir,
               bool force) {
    fs::path out(out_dir);
    std::error_code ec;
    if (fs::exists(out, ec) && !fs::is_directory(out, ec)) {
        std::fprintf(stderr, "error: output path '%s' exists and is not a directory\n",
                     out_dir.c_str());
        return 2;
    }
    if (fs::exists(out, ec) && !fs::is_empty(out, ec) && !force) {
        std::fprintf(stderr,
                     "error: output directory '%s' is not empty (use --force)\n",
                     out_dir.c_str());
        return 2;
    }
    fs::create_directories(out, ec);
    if (ec) {
        std::fprintf(stderr, "error: cannot create '%s': %s\n", out_dir.c_str(),
                     ec.message().c_str());
        return 2;
    }

    scheme::RunResult res;
    try {
        res = scheme::run(pre.init.u0, cfg.x_min, cfg.x_max, pre.par, pre.prof,
                          cfg.snapshot_times, pre.init.breakpoints);
    } catch (const scheme::construction_error& e) {
        std::fprintf(stderr, "construction failure at cell %ld, step %ld: %s\n",
                     e.cell, e.step, e.what());
        return 3;
    } catch (const riemann::SolverError& e) {
        std::fprintf(stderr, "riemann solver failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return 3;
    }

    for (const auto& snap : res.snapshots)
        write_snapshot_csv((out / ("snap_" + format_double(snap.time) + ".csv")).string(),
                           snap, pre.par.c, pre.prof);
    write_diagnostics_csv((out / "diagnostics.csv").string(), res.steps);
    write_plot_script((out / "plot.gp").string(), res.snapshots);

    std::printf("run: %zu nodes, %zu steps, dx=%s, dt=%s, M=%s\n",
                res.snapshots.front().x.size(), res.steps.size(),
                format_double(pre.par.dx).c_str(), format_double(pre.par.dt).c_str(),
                format_double(pre.par.M).c_str());
    std::printf("condition-M: %s (margin %s)\n", pre.report.pass ? "pass" : "FAIL",
                format_double(pre.report.margin).c_str());
    std::printf("mass: initial %s, final %s, clip budget %s\n",
                format_double(res.mass_initial).c_str(),
                format_double(res.mass_final).c_str(),
                format_double(res.total_clip_budget).c_str());
    std::printf("invariant-region violation max: %s\n",
                format_double(res.max_violation).c_str());
    std::printf("max RH residual: %s\n", format_double(res.max_rh_residual).c_str());
    std::printf("cells: regular %ld, a11 %ld, a12i %ld, a12ii %ld, a3 %ld, a4 %ld, "
                "clamps %ld\n",
                res.regular, res.a11, res.a12i, res.a12ii, res.a3, res.a4,
                res.total_clamp_events);
    std::printf("wrote %zu snapshots, diagnostics.csv and plot.gp under %s\n",
                res.snapshots.size(), out_dir.c_str());
    return 0;
}

int run_levels(const RunConfig& cfg, const Prepared& base, int levels) {
    // Refinement study: halve dx per level, keep M fixed for comparable
    // invariant envelopes. Constant-nozzle Riemann data converge to the
    // exact fan in L1; otherwise the invariant-region excursion must shrink.
    const bool exact_ref = cfg.nozzle.kind == NozzleSpec::Kind::constant &&
                           cfg.init.kind == InitSpec::Kind::riemann && cfg.T > 0.0;
    std::optional<riemann::WaveFan> fan0;
    if (exact_ref) {
        const GasState ul{cfg.init.rho_l, cfg.init.rho_l * cfg.init.v_l};
        const GasState ur{cfg.init.rho_r, cfg.init.rho_r * cfg.init.v_r};
        fan0 = riemann::solve(ul, ur, base.par.c);
    }

    std::vector<diagnostics::ConvergenceRow> rows;
    std::printf("level,dx,%s,ratio\n", exact_ref ? "l1_error" : "max_violation");
    for (int k = 0; k < levels; ++k) {
        scheme::SchemeParams par = base.par;
        par.dx = cfg.dx / std::pow(2.0, k);
        par.dt = scheme::mesh_ratio_dt(par.dx, par.M, base.prof);
        par.validate();
        scheme::RunResult res;
        try {
            res = scheme::run(base.init.u0, cfg.x_min, cfg.x_max, par, base.prof, {},
                              base.init.breakpoints);
        } catch (const scheme::construction_error& e) {
            std::fprintf(stderr, "construction failure at cell %ld, step %ld: %s\n",
                         e.cell, e.step, e.what());
            return 3;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "runtime failure: %s\n", e.what());
            return 3;
        }
        double value;
        if (exact_ref) {
            const double x0 = cfg.init.x0, T = cfg.T;
            const GasConstants c = par.c;
            const riemann::WaveFan& f = *fan0;
            value = diagnostics::l1_distance(
                res.snapshots.back(),
                [&](double x) { return riemann::sample(f, (x - x0) / T, c); }, par.dx);
        } else {
            value = res.max_violation;
        }
        rows.push_back({par.dx, value});
        const double ratio =
            rows.size() > 1 && rows[rows.size() - 2].value != 0.0
                ? value / rows[rows.size() - 2].value
                : 0.0;
        std::printf("%d,%s,%s,%s\n", k, format_double(par.dx).c_str(),
                    format_double(value).c_str(), format_double(ratio).c_str());
    }

    const double tiny = 1e-13;
    bool all_tiny = std::all_of(rows.begin(), rows.end(),
                                [&](const auto& r) { return r.value <= tiny; });
    if (diagnostics::strictly_decreasing(rows) || all_tiny) {
        std::printf("refinement: monotone decrease confirmed over %d levels\n", levels);
        return 0;
    }
    std::fprintf(stderr, "refinement: metric failed to decrease monotonically\n");
    return 3;
}

}  // namespace

scheme::RunResult run_from_config(const config::RunConfig& cfg) {
    Prepared pre = prepare(cfg);
    if (!pre.report.pass && !cfg.force)
        throw std::runtime_error("condition-M check failed: " + pre.report.message);
    return scheme::run(pre.init.u0, cfg.x_min, cfg.x_max, pre.par, pre.prof,
                       cfg.snapshot_times, pre.init.breakpoints);
}

int cmd_run(const CliOptions& opt) {
    RunConfig cfg;
    try {
        cfg = config::load_config(opt.config_path);
    } catch (const ConfigError& e) {
        report_config_error(e);
        return 2;
    }
    const bool force = cfg.force || opt.force;

    std::optional<Prepared> prep;
    try {
        prep = prepare(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    const Prepared& pre = *prep;

    if (!pre.report.pass) {
        std::fprintf(stderr, "condition-M check failed: %s\n",
                     pre.report.message.c_str());
        if (!force) {
            std::fprintf(stderr, "refusing to run (use --force to override)\n");
            return 2;
        }
        std::fprintf(stderr, "proceeding anyway (--force)\n");
    }

    if (opt.levels > 1) return run_levels(cfg, pre, opt.levels);
    return run_single(cfg, pre,
                      opt.out_override.empty() ? cfg.out_dir : opt.out_override, force);
}

int cmd_validate(const std::string& config_path) {
    RunConfig cfg;
    try {
        cfg = config::load_config(config_path);
    } catch (const ConfigError& e) {
        report_config_error(e);
        return 2;
    }

    try {
        GasConstants c(cfg.gamma);
        NozzleProfile prof = build_profile(cfg);
        AdmissibilityConstants ac = mu_sigma(c);
        ac.epsilon = cfg.epsilon;
        apply_b(prof, cfg, ac.mu);
        auto report = prof.validate_condition_M(ac, cfg.epsilon > 0.0);

        scheme::SchemeParams par(c);
        if (cfg.alpha) par.alpha = *cfg.alpha;
        if (cfg.beta) par.beta = *cfg.beta;
        if (cfg.delta) par.delta = *cfg.delta;
        par.dx = cfg.dx;
        par.T = cfg.T;
        par.M = cfg.M ? *cfg.M : 1.0;  // amplitude does not enter the constraints
        par.dt = scheme::mesh_ratio_dt(par.dx, par.M, prof);
        auto errs = par.constraint_errors();

        std::printf("gamma=%s theta=%s\n", format_double(c.gamma).c_str(),
                    format_double(c.theta).c_str());
        std::printf("mu=%s sigma=%s epsilon=%s\n", format_double(ac.mu).c_str(),
                    format_double(ac.sigma).c_str(), format_double(ac.epsilon).c_str());
        std::printf("b: max one-sided integral %s, bound %s, margin %s\n",
                    format_double(report.max_onesided).c_str(),
                    format_double(report.bound).c_str(),
                    format_double(report.margin).c_str());
        std::printf("pointwise |a| <= mu b: %s (max excess %s)\n",
                    report.pointwise_ok ? "ok" : "FAIL",
                    format_double(report.max_excess).c_str());
        std::printf("condition-M: %s\n", report.pass ? "pass" : "FAIL");
        if (!report.pass) std::printf("  %s\n", report.message.c_str());
        for (const auto& e : errs) std::printf("parameter: %s\n", e.c_str());
        std::printf("exponents: alpha=%s beta=%s delta=%s\n",
                    format_double(par.alpha).c_str(), format_double(par.beta).c_str(),
                    format_double(par.delta).c_str());
        return (report.pass && errs.empty()) ? 0 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

int cmd_riemann(const RiemannOptions& opt) {
    try {
        GasConstants c(opt.gamma);
        if (opt.rho_l < 0.0 || opt.rho_r < 0.0)
            throw std::domain_error("densities must be non-negative");
        if (opt.samples < 2) throw std::domain_error("samples must be >= 2");
        const GasState ul{opt.rho_l, opt.rho_l * opt.v_l};
        const GasState ur{opt.rho_r, opt.rho_r * opt.v_r};
        const riemann::WaveFan fan = riemann::solve(ul, ur, c);

        auto edges = [&](const riemann::WaveDesc& w, double& lo, double& hi) {
            if (w.kind == riemann::WaveKind::shock) {
                lo = std::min(lo, w.sigma);
                hi = std::max(hi, w.sigma);
            } else if (w.kind == riemann::WaveKind::rarefaction) {
                lo = std::min(lo, w.head);
                hi = std::max(hi, w.tail);
            }
        };
        double lo = 0.0, hi = 0.0;
        edges(fan.wave1, lo, hi);
        edges(fan.wave2, lo, hi);
        if (fan.vacuum_middle) {
            lo = std::min(lo, fan.vac_lo);
            hi = std::max(hi, fan.vac_hi);
        }
        const double pad = 0.25 * (hi - lo) + 0.5;
        lo -= pad;
        hi += pad;

        auto wave_str = [](const riemann::WaveDesc& w) {
            switch (w.kind) {
                case riemann::WaveKind::shock: return std::string("shock");
                case riemann::WaveKind::rarefaction: return std::string("rarefaction");
                default: return std::string("none");
            }
        };
        std::fprintf(stderr, "wave1: %s  wave2: %s  vacuum: %s\n",
                     wave_str(fan.wave1).c_str(), wave_str(fan.wave2).c_str(),
                     fan.vacuum_middle ? "yes" : "no");
        std::fprintf(stderr, "middle: rho=%s v=%s\n",
                     format_double(fan.middle.rho).c_str(),
                     format_double(velocity(fan.middle)).c_str());

        std::printf("xi,rho,m,v,z,w\n");
        for (int i = 0; i < opt.samples; ++i) {
            const double xi = lo + (hi - lo) * i / (opt.samples - 1);
            const GasState u = riemann::sample(fan, xi, c);
            const Invariants iv = to_invariants(u, c);
            std::printf("%s,%s,%s,%s,%s,%s\n", format_double(xi).c_str(),
                        format_double(u.rho).c_str(), format_double(u.m).c_str(),
                        format_double(velocity(u)).c_str(), format_double(iv.z).c_str(),
                        format_double(iv.w).c_str());
        }
        return 0;
    } catch (const riemann::SolverError& e) {
        std::fprintf(stderr, "riemann solver failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace nozzleflow::runner
