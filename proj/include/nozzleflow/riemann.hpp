#pragma once

// Exact solution of the homogeneous Riemann problem, vacuum included.
//
// The middle state is the intersection of the forward 1-wave curve from uL
// with the backward 2-wave curve from uR, located by a safeguarded root
// solve in rho. A vacuum wedge appears iff wL <= zR.

#include <optional>
#include <stdexcept>

#include "nozzleflow/gas.hpp"

namespace nozzleflow::riemann {

enum class WaveKind { none, shock, rarefaction };

struct WaveDesc {
    WaveKind kind = WaveKind::none;
    double sigma = 0.0;  // shock speed (kind == shock)
    double head = 0.0;   // left edge of a rarefaction fan
    double tail = 0.0;   // right edge of a rarefaction fan
};

struct WaveFan {
    GasState left, middle, right;
    Invariants iv_left, iv_middle, iv_right;
    WaveDesc wave1, wave2;
    bool vacuum_middle = false;
    double vac_lo = 0.0;  // vacuum wedge [vac_lo, vac_hi] when vacuum_middle
    double vac_hi = 0.0;
};

enum class Region { I, II, III, IV, vacuum };

struct SolverError : std::runtime_error {
    double bracket_lo, bracket_hi;
    SolverError(const std::string& msg, double lo, double hi)
        : std::runtime_error(msg), bracket_lo(lo), bracket_hi(hi) {}
};

// Wave pattern of the Riemann solution (uL, uR): I two rarefactions,
// II 1-shock + 2-rarefaction, III two shocks, IV 1-rarefaction + 2-shock.
Region classify(const GasState& uL, const GasState& uR, const GasConstants& c);

WaveFan solve(const GasState& uL, const GasState& uR, const GasConstants& c);

// Self-similar state at ray xi = x/t. States exactly on a wave boundary
// resolve to the right-hand side.
GasState sample(const WaveFan& fan, double xi, const GasConstants& c);

// Independent reference solve: dense scan plus plain bisection of
// v_from_1(rho) - v_from_2(rho). Deliberately shares no internals with
// solve(); used by tests as an oracle. Empty optional means vacuum.
std::optional<GasState> oracle_middle_state(const GasState& uL,
                                            const GasState& uR,
                                            const GasConstants& c);

// Velocity reachable from the left state along the forward 1-curve
// (rarefaction for rho <= rhoL, shock for rho > rhoL), and from the right
// state along the backward 2-curve. Exposed for reuse by the scheme.
double v_from_1(double rho, const GasState& uL, const GasConstants& c);
double v_from_2(double rho, const GasState& uR, const GasConstants& c);

// Fan interior states (z or w held constant, lambda = xi).
GasState fan1_state(double xi, double wL, const GasConstants& c);
GasState fan2_state(double xi, double zR, const GasConstants& c);

// Mirror image of a fan: x -> -x, m -> -m (swaps the roles of the families).
WaveFan mirror(const WaveFan& fan);

}  // namespace nozzleflow::riemann
