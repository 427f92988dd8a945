#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nozzleflow/config.hpp"
#include "nozzleflow/gas.hpp"
#include "nozzleflow/nozzle.hpp"
#include "nozzleflow/riemann.hpp"
#include "nozzleflow/runner.hpp"

namespace py = pybind11;
using namespace nozzleflow;

namespace {

py::dict wave_dict(const riemann::WaveDesc& w) {
    py::dict d;
    switch (w.kind) {
        case riemann::WaveKind::shock:
            d["kind"] = "shock";
            d["sigma"] = w.sigma;
            break;
        case riemann::WaveKind::rarefaction:
            d["kind"] = "rarefaction";
            d["head"] = w.head;
            d["tail"] = w.tail;
            break;
        default:
            d["kind"] = "none";
    }
    return d;
}

py::dict solve_riemann(double gamma, double rho_l, double v_l, double rho_r,
                       double v_r) {
    GasConstants c(gamma);
    const GasState ul{rho_l, rho_l * v_l}, ur{rho_r, rho_r * v_r};
    const auto fan = riemann::solve(ul, ur, c);
    py::dict d;
    d["middle_rho"] = fan.middle.rho;
    d["middle_v"] = velocity(fan.middle);
    d["vacuum"] = fan.vacuum_middle;
    d["wave1"] = wave_dict(fan.wave1);
    d["wave2"] = wave_dict(fan.wave2);
    return d;
}

std::vector<std::pair<double, double>> sample_riemann(double gamma, double rho_l,
                                                      double v_l, double rho_r,
                                                      double v_r,
                                                      const std::vector<double>& xis) {
    GasConstants c(gamma);
    const GasState ul{rho_l, rho_l * v_l}, ur{rho_r, rho_r * v_r};
    const auto fan = riemann::solve(ul, ur, c);
    std::vector<std::pair<double, double>> out;
    out.reserve(xis.size());
    for (double xi : xis) {
        const GasState u = riemann::sample(fan, xi, c);
        out.emplace_back(u.rho, u.m);
    }
    return out;
}

py::dict run_config_text(const std::string& text) {
    const config::RunConfig cfg = config::parse_config(text);
    const auto res = runner::run_from_config(cfg);
    py::dict d;
    d["steps"] = res.steps.size();
    d["mass_initial"] = res.mass_initial;
    d["mass_final"] = res.mass_final;
    d["total_clip_budget"] = res.total_clip_budget;
    d["max_violation"] = res.max_violation;
    d["max_rh_residual"] = res.max_rh_residual;
    d["clamp_events"] = res.total_clamp_events;
    py::dict cases;
    cases["regular"] = res.regular;
    cases["a11"] = res.a11;
    cases["a12i"] = res.a12i;
    cases["a12ii"] = res.a12ii;
    cases["a3"] = res.a3;
    cases["a4"] = res.a4;
    d["cases"] = cases;
    py::list snaps;
    for (const auto& s : res.snapshots) {
        py::dict sd;
        sd["time"] = s.time;
        sd["x"] = s.x;
        std::vector<double> rho, m;
        rho.reserve(s.u.size());
        m.reserve(s.u.size());
        for (const auto& u : s.u) {
            rho.push_back(u.rho);
            m.push_back(u.m);
        }
        sd["rho"] = rho;
        sd["m"] = m;
        sd["zbound"] = s.zbound;
        sd["wbound"] = s.wbound;
        snaps.append(sd);
    }
    d["snapshots"] = snaps;
    return d;
}

}  // namespace

PYBIND11_MODULE(_nozzleflow, mod) {
    mod.doc() = "1-D isentropic nozzle flow: exact Riemann solver and the "
                "modified Godunov scheme";

    mod.def(
        "mu_sigma",
        [](double gamma) {
            const auto ac = mu_sigma(GasConstants(gamma));
            return std::make_pair(ac.mu, ac.sigma);
        },
        py::arg("gamma"), "Admissibility constants (mu, sigma).");
    mod.def(
        "f_of_k",
        [](double k, double gamma) { return f_of_k(k, GasConstants(gamma)); },
        py::arg("k"), py::arg("gamma"));
    mod.def(
        "invariants",
        [](double rho, double m, double gamma) {
            const auto iv = to_invariants(GasState{rho, m}, GasConstants(gamma));
            return std::make_pair(iv.z, iv.w);
        },
        py::arg("rho"), py::arg("m"), py::arg("gamma"),
        "Riemann invariants (z, w) of a state.");
    mod.def(
        "state_from_invariants",
        [](double z, double w, double gamma) {
            const auto u = from_invariants(Invariants{z, w}, GasConstants(gamma));
            return std::make_pair(u.rho, u.m);
        },
        py::arg("z"), py::arg("w"), py::arg("gamma"));
    mod.def(
        "char_speeds",
        [](double rho, double m, double gamma) {
            const auto l = char_speeds(GasState{rho, m}, GasConstants(gamma));
            return std::make_pair(l[0], l[1]);
        },
        py::arg("rho"), py::arg("m"), py::arg("gamma"));
    mod.def("solve_riemann", &solve_riemann, py::arg("gamma"), py::arg("rho_l"),
            py::arg("v_l"), py::arg("rho_r"), py::arg("v_r"),
            "Exact Riemann solution summary (middle state and wave kinds).");
    mod.def("sample_riemann", &sample_riemann, py::arg("gamma"), py::arg("rho_l"),
            py::arg("v_l"), py::arg("rho_r"), py::arg("v_r"), py::arg("xis"),
            "Sample the exact solution at self-similar rays; returns (rho, m) pairs.");
    mod.def("run", &run_config_text, py::arg("config_text"),
            "Parse a key = value config and march the scheme; returns a summary "
            "dict with snapshots.");
}
