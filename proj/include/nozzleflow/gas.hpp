#pragma once

// Isentropic gas dynamics in Lagrangian-free (Eulerian) form:
//   p(rho) = rho^gamma / gamma,   theta = (gamma - 1) / 2.
// Riemann invariants z = v - rho^theta/theta, w = v + rho^theta/theta.
// Vacuum is rho = 0 and carries the convention (z, w) = (0, 0), v = 0.

#include <array>
#include <cmath>
#include <stdexcept>

namespace nozzleflow {

inline constexpr double vacuum_rho = 1e-300;

struct GasConstants {
    double gamma;
    double theta;

    explicit GasConstants(double g) : gamma(g), theta(0.5 * (g - 1.0)) {
        if (!(g > 1.0))
            throw std::domain_error("GasConstants: gamma must exceed 1");
    }
};

struct GasState {
    double rho = 0.0;
    double m = 0.0;
};

struct Invariants {
    double z = 0.0;
    double w = 0.0;
};

struct EntropyPair {
    double eta = 0.0;
    double q = 0.0;
};

inline bool is_vacuum(const GasState& u) { return u.rho < vacuum_rho; }

inline double velocity(const GasState& u) {
    return is_vacuum(u) ? 0.0 : u.m / u.rho;
}

// rho^theta evaluated as exp(theta log rho); exactly 0 below the vacuum floor.
inline double pow_theta(double rho, const GasConstants& c) {
    if (rho < vacuum_rho) return 0.0;
    return std::exp(c.theta * std::log(rho));
}

inline double pressure(double rho, const GasConstants& c) {
    if (rho < vacuum_rho) return 0.0;
    return std::pow(rho, c.gamma) / c.gamma;
}

inline Invariants to_invariants(const GasState& u, const GasConstants& c) {
    if (u.rho < 0.0 || !std::isfinite(u.rho))
        throw std::domain_error("to_invariants: negative or non-finite rho");
    if (is_vacuum(u)) return {0.0, 0.0};
    const double v = u.m / u.rho;
    const double r = pow_theta(u.rho, c) / c.theta;
    return {v - r, v + r};
}

inline GasState from_invariants(const Invariants& iv, const GasConstants& c) {
    const double d = iv.w - iv.z;
    if (d < 0.0)
        throw std::domain_error("from_invariants: w < z");
    const double s = 0.5 * c.theta * d;  // equals rho^theta
    if (!(s > 0.0)) return {};
    const double rho = std::exp(std::log(s) / c.theta);
    if (rho < vacuum_rho) return {};
    return {rho, rho * 0.5 * (iv.w + iv.z)};
}

// (lambda1, lambda2) = (v - rho^theta, v + rho^theta); (0, 0) at vacuum.
inline std::array<double, 2> char_speeds(const GasState& u, const GasConstants& c) {
    if (is_vacuum(u)) return {0.0, 0.0};
    const double v = u.m / u.rho;
    const double cs = pow_theta(u.rho, c);
    return {v - cs, v + cs};
}

inline std::array<double, 2> flux(const GasState& u, const GasConstants& c) {
    if (is_vacuum(u)) return {0.0, 0.0};
    return {u.m, u.m * u.m / u.rho + pressure(u.rho, c)};
}

// Mechanical entropy pair: eta = m^2/(2 rho) + rho^gamma/(gamma(gamma-1)),
// q = m (m^2/(2 rho^2) + rho^(gamma-1)/(gamma-1)).
EntropyPair mech_entropy(const GasState& u, const GasConstants& c);

// S(rho, rho0) = sqrt(rho (p(rho) - p(rho0)) / (rho0 (rho - rho0))),
// continuously extended by S(rho0, rho0) = rho0^theta.
double shock_speed_S(double rho, double rho0, const GasConstants& c);

enum class Family { f1 = 1, f2 = 2 };
enum class CurveKind { shock, rarefaction, inverse_shock };

// State at density `rho` on the wave curve of the given family through u0.
// For `shock` and `rarefaction`, u0 is the left state and the result the
// right state; `inverse_shock` treats u0 as the right state and returns the
// left one. Admissible sides (domain_error otherwise):
//   (1, rarefaction)   rho <= rho0      (2, rarefaction)   rho >= rho0
//   (1, shock)         rho >= rho0      (2, shock)         rho <= rho0
//   (1, inverse_shock) rho <= rho0      (2, inverse_shock) rho >= rho0
GasState wave_curve(Family f, CurveKind k, const GasState& u0, double rho,
                    const GasConstants& c);

// f(uR) - f(uL) - sigma (uR - uL); identically zero across exact jumps.
std::array<double, 2> rh_residual(double sigma, const GasState& uL,
                                  const GasState& uR, const GasConstants& c);

// sigma (eta(uR) - eta(uL)) - (q(uR) - q(uL)); >= 0 across admissible shocks.
double entropy_production(double sigma, const GasState& uL, const GasState& uR,
                          const GasConstants& c);

}  // namespace nozzleflow
