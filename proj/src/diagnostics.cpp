#include "nozzleflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nozzleflow::diagnostics {

using scheme::CellFan;
using scheme::Piece;

ViolationReport invariant_region_scan(const std::vector<CellFan>& fans,
                                      const scheme::SchemeParams& par,
                                      const NozzleProfile& prof) {
    ViolationReport rep;
    const GasConstants& c = par.c;
    const double dx = par.dx;
    for (const auto& fan : fans) {
        const double xa = fan.x_c - 0.5 * dx;
        const double xb = fan.x_c + 0.5 * dx;
        const double t_eval = fan.t0 + fan.dt;
        std::vector<double> xs;
        for (int i = 0; i <= 32; ++i)
            xs.push_back(xa + dx * (static_cast<double>(i) / 32.0));
        auto add_near = [&](double pos) {
            for (double x : {pos - 1e-4 * dx, pos, pos + 1e-4 * dx})
                if (x >= xa && x <= xb) xs.push_back(x);
        };
        for (const auto& w : fan.wedges) {
            if (std::isfinite(w.sl)) add_near(fan.x_c + w.sl * fan.dt);
            const double lo =
                std::isfinite(w.sl) ? fan.x_c + w.sl * fan.dt : xa;
            const double hi =
                std::isfinite(w.sr) ? fan.x_c + w.sr * fan.dt : xb;
            const double wl = std::max(lo, xa), wr = std::min(hi, xb);
            if (wr > wl) xs.push_back(0.5 * (wl + wr));
            if (w.piece.kind == Piece::Kind::patch) {
                const auto& pf = w.piece.fan;
                for (const auto* wd : {&pf.wave1, &pf.wave2}) {
                    if (wd->kind == riemann::WaveKind::shock)
                        add_near(fan.x_c + wd->sigma * fan.dt);
                    if (wd->kind == riemann::WaveKind::rarefaction) {
                        add_near(fan.x_c + wd->head * fan.dt);
                        add_near(fan.x_c + wd->tail * fan.dt);
                    }
                }
            }
        }
        for (double x : xs) {
            const GasState u =
                scheme::fractional_step(fan, x, t_eval, par, prof, nullptr);
            const Invariants iv = to_invariants(u, c);
            const double B = prof.B(x);
            const double vz = (-par.M * std::exp(-B)) - iv.z;
            const double vw = iv.w - par.M * std::exp(B);
            ++rep.samples;
            if (vz > rep.max_z_violation) {
                rep.max_z_violation = vz;
                rep.argmax_x = x;
                rep.argmax_cell = fan.j;
            }
            if (vw > rep.max_w_violation) {
                rep.max_w_violation = vw;
                rep.argmax_x = x;
                rep.argmax_cell = fan.j;
            }
        }
    }
    return rep;
}

SourceSignReport source_sign_check(
    const std::vector<std::pair<double, GasState>>& samples,
    const GasConstants& c, const NozzleProfile& prof, double tol) {
    const AdmissibilityConstants ac = mu_sigma(c);
    SourceSignReport rep;
    for (const auto& [x, u] : samples) {
        ++rep.checked;
        if (is_vacuum(u)) continue;
        const Invariants iv = to_invariants(u, c);
        const double v = u.m / u.rho;
        const double rt = pow_theta(u.rho, c);
        const double a = prof.a(x);
        const double b = prof.b(x);
        const double core = a * v * rt;
        if (ac.sigma * iv.w + iv.z <= 0.0) {
            ++rep.z_side_applicable;
            const double g1 = -core + b * (v - rt) * iv.z;
            if (g1 < -tol) {
                ++rep.violations;
                rep.worst_margin = std::min(rep.worst_margin, g1);
            }
        }
        if (ac.sigma * iv.z + iv.w >= 0.0) {
            ++rep.w_side_applicable;
            const double g2 = core - b * (v + rt) * iv.w;
            if (g2 > tol) {
                ++rep.violations;
                rep.worst_margin = std::min(rep.worst_margin, -g2);
            }
        }
    }
    return rep;
}

EntropyReport entropy_scan(const std::vector<scheme::JumpRecord>& records,
                           const scheme::SchemeParams& par, double tol) {
    EntropyReport rep;
    // Fan discretization slack: ladder rungs step dz by dx^alpha and the
    // mid-time solve drifts dw by O(strength^3) << dx^{2 alpha}.
    const double rung = std::pow(par.dx, par.alpha);
    const double slack = std::pow(par.dx, 2.0 * par.alpha) + 1e-9;
    for (const auto& r : records) {
        using K = scheme::JumpRecord::Kind;
        if (r.kind == K::ladder) {
            // Rarefaction-shock rungs: exempt from the entropy check, but
            // each must individually respect the fan step size.
            ++rep.exempt;
            if (r.strength > rung + slack) ++rep.violations;
            continue;
        }
        const bool closure = (r.kind == K::diamond_left || r.kind == K::diamond_right) &&
                             r.strength <= 2.0 * rung + slack;
        if (closure) {
            // Diamond jumps at fan-rung scale close a discretized
            // rarefaction (or are vanishing shocks whose O(s^3) mid-time
            // drift dominates the true production); not genuine shocks.
            ++rep.exempt;
            continue;
        }
        ++rep.checked;
        const double prod = entropy_production(r.sigma, r.ua, r.ub, par.c);
        if (prod < rep.worst) rep.worst = prod;
        if (prod < -tol) ++rep.violations;
    }
    return rep;
}

std::vector<ConvergenceRow> convergence_study(
    const std::function<double(double)>& metric,
    const std::vector<double>& dxs) {
    std::vector<ConvergenceRow> rows;
    for (double dx : dxs) rows.push_back({dx, metric(dx)});
    return rows;
}

bool strictly_decreasing(const std::vector<ConvergenceRow>& rows) {
    for (size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].value < rows[i - 1].value)) return false;
    return true;
}

double l1_distance(const scheme::Snapshot& snap,
                   const std::function<GasState(double)>& ref, double dx) {
    double acc = 0.0;
    for (size_t j = 0; j < snap.x.size(); ++j) {
        const GasState r = ref(snap.x[j]);
        acc += (std::fabs(snap.u[j].rho - r.rho) +
                std::fabs(snap.u[j].m - r.m)) *
               dx;
    }
    return acc;
}

double weak_residual_max(const scheme::CellFan& fan,
                         const scheme::SchemeParams& par,
                         const NozzleProfile& prof, double frac) {
    const GasConstants& c = par.c;
    const double t = fan.t0 + frac * fan.dt;
    const double ht = 1e-3 * fan.dt;
    double worst = 0.0;
    const double xa = fan.x_c - 0.5 * par.dx;
    const double xb = fan.x_c + 0.5 * par.dx;
    for (const auto& w : fan.wedges) {
        if (w.piece.kind == Piece::Kind::patch) continue;
        // wedge span at both probe times, shrunk to stay inside
        auto span = [&](double tt) {
            const double tau = tt - fan.t0;
            const double lo = std::isfinite(w.sl)
                                  ? fan.x_c + w.sl * tau
                                  : -std::numeric_limits<double>::infinity();
            const double hi = std::isfinite(w.sr)
                                  ? fan.x_c + w.sr * tau
                                  : std::numeric_limits<double>::infinity();
            return std::pair<double, double>{std::max(lo, xa),
                                             std::min(hi, xb)};
        };
        const auto s1 = span(t - ht);
        const auto s2 = span(t + ht);
        const double lo = std::max(s1.first, s2.first);
        const double hi = std::min(s1.second, s2.second);
        const double width = hi - lo;
        if (!(width > 1e-6 * par.dx)) continue;
        const double margin = 0.2 * width;
        const double hx = std::min(0.01 * width, 0.01 * par.dx);
        for (int i = 0; i <= 4; ++i) {
            const double x =
                lo + margin + (width - 2.0 * margin) * (i / 4.0);
            if (x - hx <= lo || x + hx >= hi) continue;
            const GasState up =
                scheme::fractional_step(fan, x, t + ht, par, prof, nullptr);
            const GasState um =
                scheme::fractional_step(fan, x, t - ht, par, prof, nullptr);
            const GasState ur =
                scheme::fractional_step(fan, x + hx, t, par, prof, nullptr);
            const GasState ul =
                scheme::fractional_step(fan, x - hx, t, par, prof, nullptr);
            const GasState u0 =
                scheme::fractional_step(fan, x, t, par, prof, nullptr);
            const auto fr = flux(ur, c);
            const auto fl = flux(ul, c);
            const double a = prof.a(x);
            const double g0 = a * u0.m;
            const double g1 =
                is_vacuum(u0) ? 0.0 : a * u0.m * u0.m / u0.rho;
            const double r0 =
                (up.rho - um.rho) / (2.0 * ht) + (fr[0] - fl[0]) / (2.0 * hx) -
                g0;
            const double r1 =
                (up.m - um.m) / (2.0 * ht) + (fr[1] - fl[1]) / (2.0 * hx) - g1;
            worst = std::max({worst, std::fabs(r0), std::fabs(r1)});
        }
    }
    return worst;
}

}  // namespace nozzleflow::diagnostics
