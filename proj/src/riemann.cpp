#include "nozzleflow/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nozzleflow::riemann {

namespace {

// (p(rho) - p(rho0)) (rho - rho0) / (rho rho0); nonnegative for rho,rho0 > 0.
double shock_q(double rho, double rho0, const GasConstants& c) {
    return (pressure(rho, c) - pressure(rho0, c)) * (rho - rho0) / (rho * rho0);
}

bool degenerate(double rho_a, double v_a, double rho_b, double v_b) {
    return std::abs(rho_a - rho_b) < 1e-12 * std::max(1.0, std::max(rho_a, rho_b)) &&
           std::abs(v_a - v_b) < 1e-12 * (1.0 + std::max(std::abs(v_a), std::abs(v_b)));
}

}  // namespace

double v_from_1(double rho, const GasState& uL, const GasConstants& c) {
    const double vL = velocity(uL);
    if (rho <= uL.rho)
        return vL + (pow_theta(uL.rho, c) - pow_theta(rho, c)) / c.theta;
    return vL - std::sqrt(std::max(shock_q(rho, uL.rho, c), 0.0));
}

double v_from_2(double rho, const GasState& uR, const GasConstants& c) {
    const double vR = velocity(uR);
    if (rho <= uR.rho)
        return vR - (pow_theta(uR.rho, c) - pow_theta(rho, c)) / c.theta;
    return vR + std::sqrt(std::max(shock_q(rho, uR.rho, c), 0.0));
}

GasState fan1_state(double xi, double wL, const GasConstants& c) {
    const double s = c.theta * (wL - xi) / (1.0 + c.theta);  // rho^theta
    if (!(s > 0.0)) return {};
    const double rho = std::exp(std::log(s) / c.theta);
    if (rho < vacuum_rho) return {};
    return {rho, rho * (xi + c.theta * wL) / (1.0 + c.theta)};
}

GasState fan2_state(double xi, double zR, const GasConstants& c) {
    const double s = c.theta * (xi - zR) / (1.0 + c.theta);
    if (!(s > 0.0)) return {};
    const double rho = std::exp(std::log(s) / c.theta);
    if (rho < vacuum_rho) return {};
    return {rho, rho * (xi + c.theta * zR) / (1.0 + c.theta)};
}

Region classify(const GasState& uL, const GasState& uR, const GasConstants& c) {
    if (is_vacuum(uL) || is_vacuum(uR)) return Region::vacuum;
    const auto ivL = to_invariants(uL, c);
    const auto ivR = to_invariants(uR, c);
    if (ivL.w <= ivR.z) return Region::vacuum;
    const bool s1 = velocity(uL) > v_from_2(uL.rho, uR, c);   // rhoM > rhoL
    const bool s2 = v_from_1(uR.rho, uL, c) > velocity(uR);   // rhoM > rhoR
    if (s1) return s2 ? Region::III : Region::II;
    return s2 ? Region::IV : Region::I;
}

WaveFan solve(const GasState& uL, const GasState& uR, const GasConstants& c) {
    if (!(uL.rho >= 0.0) || !(uR.rho >= 0.0) || !std::isfinite(uL.m) ||
        !std::isfinite(uR.m))
        throw std::domain_error("riemann::solve: invalid states");

    WaveFan fan;
    fan.left = uL;
    fan.right = uR;
    fan.iv_left = to_invariants(uL, c);
    fan.iv_right = to_invariants(uR, c);
    const double wL = fan.iv_left.w, zR = fan.iv_right.z;

    const bool vacL = is_vacuum(uL), vacR = is_vacuum(uR);
    if (vacL || vacR || wL <= zR) {
        fan.vacuum_middle = true;
        fan.middle = {};
        fan.iv_middle = {0.0, 0.0};
        if (!vacL) {
            const auto lam = char_speeds(uL, c);
            fan.wave1 = {WaveKind::rarefaction, 0.0, lam[0], wL};
        }
        if (!vacR) {
            const auto lam = char_speeds(uR, c);
            fan.wave2 = {WaveKind::rarefaction, 0.0, zR, lam[1]};
        }
        fan.vac_lo = vacL ? -std::numeric_limits<double>::infinity() : wL;
        fan.vac_hi = vacR ? std::numeric_limits<double>::infinity() : zR;
        return fan;
    }

    // Positive middle density: root of phi(rho) = v_from_1 - v_from_2,
    // strictly decreasing with phi(0+) = wL - zR > 0.
    auto phi = [&](double rho) {
        return v_from_1(rho, uL, c) - v_from_2(rho, uR, c);
    };
    double lo = 1e-14;
    double hi = std::max(uL.rho, uR.rho) *
                    std::pow(1.0 + std::abs(velocity(uL) - velocity(uR)),
                             1.0 / c.theta) +
                1.0;
    double fhi = phi(hi);
    for (int i = 0; i < 60 && fhi > 0.0; ++i) {
        hi *= 4.0;
        fhi = phi(hi);
    }
    double flo = phi(lo);
    if (flo <= 0.0) {
        // Middle density below the bracket floor: effectively a vacuum-thin
        // strip; represent it as two rarefactions meeting at one ray.
        const double xi0 = 0.5 * (wL + zR);
        const auto lamL = char_speeds(uL, c);
        const auto lamR = char_speeds(uR, c);
        fan.vacuum_middle = true;
        fan.middle = {};
        fan.iv_middle = {0.0, 0.0};
        fan.wave1 = {WaveKind::rarefaction, 0.0, lamL[0], xi0};
        fan.wave2 = {WaveKind::rarefaction, 0.0, xi0, lamR[1]};
        fan.vac_lo = fan.vac_hi = xi0;
        return fan;
    }

    double a = lo, b = hi, fa = flo, fb = fhi;
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
        double x;
        if (fb != fa) {
            x = b - fb * (b - a) / (fb - fa);
            if (!(x > a && x < b)) x = 0.5 * (a + b);
        } else {
            x = 0.5 * (a + b);
        }
        // Force genuine bracket shrinkage every few iterations.
        if ((it & 3) == 3) x = 0.5 * (a + b);
        const double fx = phi(x);
        if (fx > 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (b - a <= 1e-13 * (1.0 + b)) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw SolverError("riemann::solve: no convergence in 200 iterations", a, b);

    const double rhoM = 0.5 * (a + b);
    const double vM = 0.5 * (v_from_1(rhoM, uL, c) + v_from_2(rhoM, uR, c));
    fan.middle = {rhoM, rhoM * vM};
    const double crM = pow_theta(rhoM, c) / c.theta;
    fan.iv_middle = {vM - crM, vM + crM};

    const double vL = velocity(uL), vR = velocity(uR);
    if (degenerate(rhoM, vM, uL.rho, vL)) {
        fan.wave1 = {};
    } else if (rhoM > uL.rho) {
        fan.wave1 = {WaveKind::shock, vL - shock_speed_S(rhoM, uL.rho, c), 0.0, 0.0};
    } else {
        const auto lamL = char_speeds(uL, c);
        const double tail = vM - pow_theta(rhoM, c);
        fan.wave1 = {WaveKind::rarefaction, 0.0, lamL[0], tail};
    }
    if (degenerate(rhoM, vM, uR.rho, vR)) {
        fan.wave2 = {};
    } else if (rhoM > uR.rho) {
        fan.wave2 = {WaveKind::shock, vR + shock_speed_S(rhoM, uR.rho, c), 0.0, 0.0};
    } else {
        const auto lamR = char_speeds(uR, c);
        const double head = vM + pow_theta(rhoM, c);
        fan.wave2 = {WaveKind::rarefaction, 0.0, head, lamR[1]};
    }
    return fan;
}

GasState sample(const WaveFan& fan, double xi, const GasConstants& c) {
    // 1-family region
    if (fan.wave1.kind == WaveKind::shock) {
        if (xi < fan.wave1.sigma) return fan.left;
    } else if (fan.wave1.kind == WaveKind::rarefaction) {
        if (xi < fan.wave1.head) return fan.left;
        if (xi < fan.wave1.tail) return fan1_state(xi, fan.iv_left.w, c);
    }
    // middle region
    if (fan.vacuum_middle) {
        if (fan.wave1.kind == WaveKind::none && xi < fan.vac_lo) return fan.left;
        if (xi < fan.vac_hi) return {};
    } else {
        const bool none2 = fan.wave2.kind == WaveKind::none;
        if (fan.wave2.kind == WaveKind::shock && xi < fan.wave2.sigma)
            return fan.middle;
        if (fan.wave2.kind == WaveKind::rarefaction) {
            if (xi < fan.wave2.head) return fan.middle;
            if (xi < fan.wave2.tail) return fan2_state(xi, fan.iv_right.z, c);
        }
        if (none2 && fan.wave1.kind != WaveKind::none) {
            // degenerate 2-wave: middle and right coincide
            return fan.right;
        }
    }
    // 2-family region (and the all-degenerate case)
    if (fan.vacuum_middle && fan.wave2.kind == WaveKind::rarefaction) {
        if (xi < fan.wave2.tail) return fan2_state(xi, fan.iv_right.z, c);
    }
    return fan.right;
}

std::optional<GasState> oracle_middle_state(const GasState& uL,
                                            const GasState& uR,
                                            const GasConstants& c) {
    if (is_vacuum(uL) || is_vacuum(uR)) return std::nullopt;
    const double vL = uL.m / uL.rho, vR = uR.m / uR.rho;
    const double th = 0.5 * (c.gamma - 1.0);
    auto pr = [&](double r) { return std::pow(r, c.gamma) / c.gamma; };
    auto v1 = [&](double r) {
        if (r <= uL.rho)
            return vL + (std::pow(uL.rho, th) - std::pow(r, th)) / th;
        return vL - std::sqrt((pr(r) - pr(uL.rho)) * (r - uL.rho) / (r * uL.rho));
    };
    auto v2 = [&](double r) {
        if (r <= uR.rho)
            return vR - (std::pow(uR.rho, th) - std::pow(r, th)) / th;
        return vR + std::sqrt((pr(r) - pr(uR.rho)) * (r - uR.rho) / (r * uR.rho));
    };
    const double rmax =
        (std::max(uL.rho, uR.rho) + 1.0) *
        std::pow(2.0 + std::abs(vL - vR), 1.0 / th);
    const int n = 4000;
    double a = 1e-12;
    double ga = v1(a) - v2(a);
    if (ga <= 0.0) return std::nullopt;  // no positive-density intersection
    double b = -1.0;
    const double lr0 = std::log(1e-12), lr1 = std::log(rmax);
    for (int i = 1; i <= n; ++i) {
        const double r = std::exp(lr0 + (lr1 - lr0) * i / n);
        const double g = v1(r) - v2(r);
        if (g <= 0.0) {
            b = r;
            break;
        }
        a = r;
    }
    if (b < 0.0) return std::nullopt;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if ((v1(mid) - v2(mid)) > 0.0)
            a = mid;
        else
            b = mid;
    }
    const double rho = 0.5 * (a + b);
    const double v = 0.5 * (v1(rho) + v2(rho));
    return GasState{rho, rho * v};
}

WaveFan mirror(const WaveFan& fan) {
    auto flip_state = [](const GasState& u) { return GasState{u.rho, -u.m}; };
    auto flip_iv = [](const Invariants& iv) { return Invariants{-iv.w, -iv.z}; };
    auto flip_wave = [](const WaveDesc& w) {
        WaveDesc r = w;
        if (w.kind == WaveKind::shock) {
            r.sigma = -w.sigma;
        } else if (w.kind == WaveKind::rarefaction) {
            r.head = -w.tail;
            r.tail = -w.head;
        }
        return r;
    };
    WaveFan out;
    out.left = flip_state(fan.right);
    out.right = flip_state(fan.left);
    out.middle = flip_state(fan.middle);
    out.iv_left = flip_iv(fan.iv_right);
    out.iv_right = flip_iv(fan.iv_left);
    out.iv_middle = flip_iv(fan.iv_middle);
    out.wave1 = flip_wave(fan.wave2);
    out.wave2 = flip_wave(fan.wave1);
    out.vacuum_middle = fan.vacuum_middle;
    out.vac_lo = -fan.vac_hi;
    out.vac_hi = -fan.vac_lo;
    return out;
}

}  // namespace nozzleflow::riemann
