#pragma once

// The modified Godunov scheme: mesh setup, in-cell wave constructions built
// from steady blocks and exact Riemann patches, mid-time Rankine-Hugoniot
// solves, the fractional-step source update, cell averaging with cut-off,
// and the step/run drivers.
//
// Geometry: node j sits at x_min + j*dx and carries the averaged state u_j^n.
// Construction cell j spans [node j, node j+1) with the Riemann jump at its
// center; averaging cells are centered at nodes. Boundary handling is by copy
// ghosts (one ghost node and one ghost construction cell per side).

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nozzleflow/gas.hpp"
#include "nozzleflow/nozzle.hpp"
#include "nozzleflow/riemann.hpp"

namespace nozzleflow::scheme {

struct SchemeParams {
    GasConstants c;
    double alpha = 0.7;   // fan rung exponent
    double beta = 0.1;    // vacuum threshold exponent
    double delta = 0.0;   // averaging cut-off exponent; 0 -> default
    double M = 0.0;       // invariant-region amplitude
    double dx = 0.0;
    double dt = 0.0;
    double T = 0.0;
    double newton_tol = 1e-12;
    int newton_max_iter = 60;

    explicit SchemeParams(const GasConstants& gc) : c(gc) {
        delta = 0.5 * (1.0 + 1.0 / (2.0 * gc.theta));
    }
    // All constraint violations, empty when valid.
    std::vector<std::string> constraint_errors() const;
    void validate() const;  // throws domain_error listing all violations
};

// dt from dx, M and the profile's one-sided integral of b.
double mesh_ratio_dt(double dx, double M, const NozzleProfile& prof);

// Amplitude from sampled initial data: max(-z e^{B}, w e^{-B}, 0) over
// samples, times (1 + 1e-12). u0 is sampled at nodes, 8 interior points per
// cell and the supplied breakpoints.
double auto_M(const std::function<GasState(double)>& u0, const GasConstants& c,
              const NozzleProfile& prof, double x_min, double x_max, double dx,
              const std::vector<double>& breakpoints = {});

struct construction_error : std::runtime_error {
    long cell = 0;
    long step = 0;
    construction_error(const std::string& what, long cell_, long step_)
        : std::runtime_error(what), cell(cell_), step(step_) {}
};

// How the fractional-step source treats a piece.
enum class SourceMode { standard, flip_w, flip_z, none };

// One wedge payload: a constant state, a steady-type block (sign pair
// (sz, sw) scales z, w by e^{sz dB}, e^{sw dB}; steady = (-1,+1), the
// doubly-damped dilute-side block = (-1,-1), its mirror = (+1,+1)), or an exact
// Riemann patch sampled self-similarly from the cell center.
struct Piece {
    enum class Kind { constant, block, patch };
    Kind kind = Kind::constant;
    double x_d = 0.0;  // block anchor
    GasState u_d{};
    Invariants iv_d{};
    int sz = -1, sw = +1;
    SourceMode mode = SourceMode::standard;
    riemann::WaveFan fan{};  // patch payload
};

struct Wedge {
    double sl = 0.0, sr = 0.0;  // bounding ray speeds (from the cell center)
    Piece piece;
};

struct JumpRecord {
    enum class Kind { ladder, diamond_left, diamond_right, patch_shock };
    Kind kind = Kind::ladder;
    double sigma = 0.0;
    double residual = 0.0;  // RH residual inf-norm at the cell's middle time
    bool rh_enforced = true;  // Newton-solved (vs exact patch wave or a
                              // frozen zero-strength jump)
    GasState ua{}, ub{};      // states the jump connects (mid-time values)
    double strength = 0.0;    // |dz| + |dw| across the jump
};

struct CellFan {
    long j = 0;       // construction cell index (cell j = [node j, node j+1))
    double x_c = 0.0; // cell center, ray origin, diamond anchor
    double t0 = 0.0;
    double dt = 0.0;  // this step's duration
    std::vector<Wedge> wedges;          // ordered, first sl=-inf, last sr=+inf
    std::vector<JumpRecord> jumps;
    const char* case_tag = "regular";   // regular | A-1.1 | A-1.2i | A-1.2ii | A-3 | A-4
    bool a11 = false, a12i = false, a12ii = false, a3 = false, a4 = false;
};

// Geometric frame for one construction cell. The mirrored frame implements
// the system's x -> -x, v -> -v, (z,w) -> (-w,-z) symmetry: a flips sign, B
// differences flip sign, and the sign pair / source mode transform
// accordingly, so Cases 2 and the right-hand vacuum decorations reuse the
// Case-1 code verbatim.
struct Frame {
    const NozzleProfile* prof = nullptr;
    double x_c = 0.0;
    bool mirrored = false;
    double a(double x) const {
        const double y = mirrored ? 2.0 * x_c - x : x;
        return mirrored ? -prof->a(y) : prof->a(y);
    }
    double b(double x) const {
        return prof->b(mirrored ? 2.0 * x_c - x : x);
    }
    double B(double x) const {
        return mirrored ? -prof->B(2.0 * x_c - x) : prof->B(x);
    }
};

// Steady-type block value at x: z = z_d e^{sz (B(x)-B(x_d))}, w likewise
// with sw. dB == 0 returns the anchor data bitwise.
struct BlockSample {
    Invariants iv;
    GasState u;
};
BlockSample block_eval(const Piece& p, double x, const Frame& fr,
                       const GasConstants& c);

// Public op: plain steady block (datum anchored at x_d), primary frame.
GasState steady_block(double x, double x_d, const GasState& u_d,
                      const NozzleProfile& prof, const GasConstants& c);

// Fan ladder targets for a 1-rarefaction from z_L up to z_M at fixed w_L.
struct FanLadder {
    int p = 0;
    std::vector<double> z;       // p rung targets, z[0] = z_L, z[p-1] = z_M
    std::vector<double> sigma;   // p-1 homogeneous ray speeds between rungs
};
FanLadder build_fan_ladder(const Invariants& ivL, double z_M,
                           const SchemeParams& par);

// Mid-time RH solve for one ladder jump: finds (sigma, u) with z(u) fixed to
// z_target and RH between the left block and u at x_c + sigma dt/2, time
// t0 + dt/2. Initial guess from the homogeneous ladder.
struct MidtimeJump {
    double sigma = 0.0;
    GasState u{};
    Invariants iv{};
    double residual = 0.0;
    bool solved = true;  // false: zero-strength jump kept at its guess
    GasState uL_mid{};   // left block sampled at the jump foot
};
MidtimeJump solve_midtime_jump(const Piece& left_block, double z_target,
                               double sigma_guess, double w_guess,
                               const Frame& fr, const SchemeParams& par,
                               double dt, long cell, long step);

// Mid-time RH solve for the diamond: 4 unknowns (sigma_p, sigma_s, z_M, w_M),
// RH between the left block and the diamond block (anchored at x_c) at
// sigma_p, and between the diamond block and the right block at sigma_s.
struct Diamond {
    double sigma_p = 0.0, sigma_s = 0.0;
    GasState u{};
    Invariants iv{};
    double residual_p = 0.0, residual_s = 0.0;
    bool solved_p = true, solved_s = true;  // false: degenerate side frozen
    GasState uL_mid{}, uM_at_p{}, uM_at_s{}, uR_mid{};
};
Diamond solve_diamond(const Piece& left_block, const Piece& right_block,
                      const GasState& u_guess, double sigma_p_guess,
                      double sigma_s_guess, const Frame& fr,
                      const SchemeParams& par, double dt, double sigma_prev,
                      long cell, long step);

// In-cell constructions. uL/uR are the node states of construction cell j.
CellFan construct_cell_regular(const GasState& uL, const GasState& uR,
                               const riemann::WaveFan& fan0, long j, double x_c,
                               double t0, double dt, const SchemeParams& par,
                               const NozzleProfile& prof, long step);
CellFan construct_cell_vacuum(const GasState& uL, const GasState& uR,
                              const riemann::WaveFan& fan0, long j, double x_c,
                              double t0, double dt, const SchemeParams& par,
                              const NozzleProfile& prof, long step);
// Dispatch: degenerate fill, regular cases 1-4, or the vacuum pathway.
CellFan construct_cell(const GasState& uL, const GasState& uR, long j,
                       double x_c, double t0, double dt,
                       const SchemeParams& par, const NozzleProfile& prof,
                       long step);

// Bar field (no source) at (x, t).
BlockSample eval_bar(const CellFan& fan, double x, double t,
                     const GasConstants& c, const NozzleProfile& prof);
// Fractional-step field: source applied per the piece's mode over t - t0.
// Returns the bar sample bitwise when the source increments vanish; clamps
// to vacuum (and counts) when the update crosses w < z.
GasState fractional_step(const CellFan& fan, double x, double t,
                         const SchemeParams& par, const NozzleProfile& prof,
                         long* clamp_events = nullptr);

// Averaged state over the averaging cell of node j at t0 + dt - 0, built
// from the right half of fan j-1 and the left half of fan j. "uniform" is
// set when both halves are one bitwise-constant value (then E is that value
// exactly).
struct CellAverage {
    GasState E{};
    bool uniform = false;
};
CellAverage cell_average(const CellFan& left_fan, const CellFan& right_fan,
                         double x_j, const SchemeParams& par,
                         const NozzleProfile& prof, long* clamp_events);

// delta-cut-off and invariant-bound clipping at node j. Returns the state
// unchanged (bitwise) when nothing clips.
struct CutoffResult {
    GasState u{};
    double clipped_mass = 0.0;  // |rho change| * dx, >= 0
    bool vacuum_cut = false;
    bool z_clipped = false, w_clipped = false;
};
CutoffResult cutoff_state(const GasState& E, double x_j,
                          const SchemeParams& par, const NozzleProfile& prof);

struct StepStats {
    long step = 0;
    double max_z_violation = 0.0;
    double max_w_violation = 0.0;
    double mass_defect = 0.0;   // |sum rho^{n+1} - sum rho^n| * dx
    double clip_budget = 0.0;   // this step's clipped mass
    long regular = 0, a11 = 0, a12i = 0, a12ii = 0, a3 = 0, a4 = 0;
    long clamp_events = 0;
    double max_rh_residual = 0.0;  // over rh_enforced jump records
};

struct Snapshot {
    double time = 0.0;
    std::vector<double> x;
    std::vector<GasState> u;
    std::vector<double> zbound, wbound;  // node bounds +-M e^{+-B}
};

struct RunResult {
    std::vector<Snapshot> snapshots;
    std::vector<StepStats> steps;
    double mass_initial = 0.0;
    double mass_final = 0.0;
    double total_clip_budget = 0.0;
    double max_violation = 0.0;     // max over steps of max(z,w) violation
    double max_rh_residual = 0.0;
    long total_clamp_events = 0;
    long a11 = 0, a12i = 0, a12ii = 0, a3 = 0, a4 = 0, regular = 0;
};

struct GridState {
    double x_min = 0.0;
    long n_nodes = 0;  // nodes 0..n_nodes-1
    double dx_cache = 0.0;
    std::vector<GasState> u;
    double node_x(long j) const;
};

// rho with rho^theta = theta (w - z) / 2; 0 below the vacuum floor.
double rho_from_width(double wz, const GasConstants& c);

// One full step: construct all cells (with ghosts), fractional-step,
// average, cut off. Fills stats; optionally exposes the constructed fans.
GridState advance_step(const GridState& g, double t0, double dt,
                       const SchemeParams& par, const NozzleProfile& prof,
                       long step, StepStats* stats,
                       std::vector<CellFan>* fans_out = nullptr);

// March to T, landing exactly on snapshot times and on T.
RunResult run(const std::function<GasState(double)>& u0, double x_min,
              double x_max, const SchemeParams& par, const NozzleProfile& prof,
              std::vector<double> snapshot_times,
              const std::vector<double>& u0_breakpoints = {});

}  // namespace nozzleflow::scheme
