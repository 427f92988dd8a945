#pragma once

// Run-time verification helpers: invariant-region sampling, source sign
// structure, entropy production across constructed jumps, convergence
// tables, and a finite-difference weak-residual probe.

#include <functional>
#include <utility>
#include <vector>

#include "nozzleflow/scheme.hpp"

namespace nozzleflow::diagnostics {

struct ViolationReport {
    double max_z_violation = 0.0;  // max positive excursion below -M e^{-B}
    double max_w_violation = 0.0;  // max positive excursion above M e^{B}
    double argmax_x = 0.0;
    long argmax_cell = 0;
    long samples = 0;
};

// Samples each cell's fractional-stepped field at t0 + dt - 0: at least 33
// uniform points per cell plus wedge-aligned points (wedge midpoints and
// just-inside points at every ray foot), compared against the pointwise
// envelopes -M e^{-B(x)} and M e^{B(x)}.
ViolationReport invariant_region_scan(const std::vector<scheme::CellFan>& fans,
                                      const scheme::SchemeParams& par,
                                      const NozzleProfile& prof);

struct SourceSignReport {
    long checked = 0;
    long z_side_applicable = 0;
    long w_side_applicable = 0;
    long violations = 0;
    double worst_margin = 0.0;  // most negative coefficient seen (0 if clean)
};

// Damping structure of the standard source on in-box states: whenever
// sigma w + z <= 0, the z-coefficient -a v rho^theta + b lambda1 z must be
// >= -tol, and mirrored (sigma z + w >= 0 forces the w-coefficient
// a v rho^theta - b lambda2 w <= tol).
SourceSignReport source_sign_check(
    const std::vector<std::pair<double, GasState>>& samples,
    const GasConstants& c, const NozzleProfile& prof, double tol = 1e-12);

struct EntropyReport {
    long checked = 0;
    long exempt = 0;       // ladder rungs within the fan discretization width
    long violations = 0;
    double worst = 0.0;    // most negative production among checked jumps
};

// sigma [eta] - [q] >= -tol across recorded jumps. Ladder rungs approximate
// rarefaction pieces: exempt from the production check, but each must keep
// strength <= dx^alpha (plus drift slack) — oversize rungs are violations.
// Diamond closure jumps at fan-rung scale are likewise exempt.
EntropyReport entropy_scan(const std::vector<scheme::JumpRecord>& records,
                           const scheme::SchemeParams& par,
                           double tol = 1e-11);

struct ConvergenceRow {
    double dx = 0.0;
    double value = 0.0;
};

std::vector<ConvergenceRow> convergence_study(
    const std::function<double(double)>& metric, const std::vector<double>& dxs);

bool strictly_decreasing(const std::vector<ConvergenceRow>& rows);

// Node-sampled L1 distance sum_j (|drho| + |dm|) dx against a reference.
double l1_distance(const scheme::Snapshot& snap,
                   const std::function<GasState(double)>& ref, double dx);

// Max |u_t + f(u)_x - g(x, u)| over interior points of block wedges at
// t = t0 + frac dt, by centered differences. Patch wedges are exact
// homogeneous solutions and carry no source, so they are skipped.
double weak_residual_max(const scheme::CellFan& fan,
                         const scheme::SchemeParams& par,
                         const NozzleProfile& prof, double frac = 0.5);

}  // namespace nozzleflow::diagnostics
