#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "nozzleflow/diagnostics.hpp"

using namespace nozzleflow;
namespace sch = nozzleflow::scheme;
namespace dg = nozzleflow::diagnostics;

namespace {

const GasConstants g53(5.0 / 3.0);

sch::SchemeParams params(double dx, double M, const NozzleProfile& prof) {
    sch::SchemeParams par(g53);
    par.dx = dx;
    par.M = M;
    par.dt = sch::mesh_ratio_dt(dx, M, prof);
    par.T = 1.0;
    return par;
}

NozzleProfile damped_laval(double dx) {
    NozzleProfile p = NozzleProfile::laval(0.5, 1.0);
    p.derive_b(mu_sigma(g53).mu, dx);
    return p;
}

sch::JumpRecord record(sch::JumpRecord::Kind k, double sigma,
                       const GasState& ua, const GasState& ub,
                       double strength) {
    sch::JumpRecord r;
    r.kind = k;
    r.sigma = sigma;
    r.ua = ua;
    r.ub = ub;
    r.strength = strength;
    return r;
}

}  // namespace

TEST_CASE("invariant region scan") {
    const NozzleProfile flat = NozzleProfile::constant_area();
    sch::SchemeParams par = params(0.02, 3.001, flat);
    const GasState u{1.0, 0.0};  // z = -3, w = 3
    std::vector<sch::CellFan> fans;
    for (long j = 0; j < 3; ++j)
        fans.push_back(sch::construct_cell(
            u, u, j, -0.01 + 0.02 * static_cast<double>(j), 0.0, par.dt, par,
            flat, 0));

    SUBCASE("states inside the box report nothing") {
        const dg::ViolationReport rep =
            dg::invariant_region_scan(fans, par, flat);
        CHECK(rep.max_z_violation == 0.0);
        CHECK(rep.max_w_violation == 0.0);
        CHECK(rep.samples > 100);
    }
    SUBCASE("a too-small box is flagged on both sides") {
        sch::SchemeParams tight = par;
        tight.M = 2.9;
        const dg::ViolationReport rep =
            dg::invariant_region_scan(fans, tight, flat);
        CHECK(rep.max_w_violation == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(rep.max_z_violation == doctest::Approx(0.1).epsilon(1e-12));
    }
}

TEST_CASE("source sign structure") {
    SUBCASE("no nozzle, no source: everything is neutral") {
        const NozzleProfile flat = NozzleProfile::constant_area();
        std::vector<std::pair<double, GasState>> s{
            {0.0, {1.0, 0.5}}, {0.3, {2.0, -0.7}}, {-0.2, {}}};
        const dg::SourceSignReport rep = dg::source_sign_check(s, g53, flat);
        CHECK(rep.checked == 3);  // vacuum is counted but skipped
        CHECK(rep.z_side_applicable == 1);
        CHECK(rep.w_side_applicable == 1);
        CHECK(rep.violations == 0);
        CHECK(rep.worst_margin == 0.0);
    }
    SUBCASE("an undamped contracting nozzle violates the sign structure") {
        const NozzleProfile bare = NozzleProfile::laval(0.5, 1.0);
        std::vector<std::pair<double, GasState>> s{
            {-0.5, {27.0, 27.0 * 0.5}}};
        const dg::SourceSignReport rep = dg::source_sign_check(s, g53, bare);
        CHECK(rep.z_side_applicable == 1);
        CHECK(rep.w_side_applicable == 1);
        CHECK(rep.violations == 2);
        CHECK(rep.worst_margin < -0.9);
    }
    SUBCASE("with the derived damping, envelope states are clean") {
        const NozzleProfile laval = damped_laval(0.01);
        const double M = 3.0;
        std::vector<std::pair<double, GasState>> s;
        for (double x : {-0.9, -0.5, -0.1, 0.1, 0.5, 0.9}) {
            const double zb = -M * std::exp(-laval.B(x));
            const double wb = M * std::exp(laval.B(x));
            for (double f : {0.3, 0.8, 1.19}) {
                s.push_back({x, from_invariants({zb, f * (-zb)}, g53)});
                s.push_back({x, from_invariants({-f * wb, wb}, g53)});
            }
        }
        const dg::SourceSignReport rep = dg::source_sign_check(s, g53, laval);
        CHECK(rep.checked == 36);
        CHECK(rep.z_side_applicable >= 20);
        CHECK(rep.w_side_applicable >= 20);
        CHECK(rep.violations == 0);
        CHECK(rep.worst_margin == 0.0);
    }
    SUBCASE("states produced by a run are clean") {
        const NozzleProfile laval = damped_laval(0.03);
        auto u0 = [](double x) {
            return x < 0.0 ? GasState{1.6, 1.6 * 0.2}
                           : GasState{0.7, 0.7 * 0.2};
        };
        const double M = sch::auto_M(u0, g53, laval, -1.2, 1.2, 0.03, {0.0});
        sch::SchemeParams par = params(0.03, M, laval);
        par.T = 0.015;
        const sch::RunResult res =
            sch::run(u0, -1.2, 1.2, par, laval, {}, {0.0});
        std::vector<std::pair<double, GasState>> s;
        for (const auto& sn : res.snapshots)
            for (size_t j = 0; j < sn.x.size(); ++j)
                s.push_back({sn.x[j], sn.u[j]});
        const dg::SourceSignReport rep = dg::source_sign_check(s, g53, laval);
        CHECK(rep.checked >= 100);
        CHECK(rep.violations == 0);
    }
}

TEST_CASE("entropy production scan") {
    const NozzleProfile flat = NozzleProfile::constant_area();
    sch::SchemeParams par = params(0.02, 4.0, flat);
    const double rung = std::pow(par.dx, par.alpha);

    const GasState uL{1.0, 0.0};
    const GasState uR = wave_curve(Family::f1, CurveKind::shock, uL, 1.3, g53);
    const double sig = (uR.m - uL.m) / (uR.rho - uL.rho);
    const Invariants ia = to_invariants(uL, g53), ib = to_invariants(uR, g53);
    const double str = std::fabs(ib.z - ia.z) + std::fabs(ib.w - ia.w);

    SUBCASE("a genuine shock passes") {
        std::vector<sch::JumpRecord> recs{
            record(sch::JumpRecord::Kind::patch_shock, sig, uL, uR, str)};
        const dg::EntropyReport rep = dg::entropy_scan(recs, par);
        CHECK(rep.checked == 1);
        CHECK(rep.exempt == 0);
        CHECK(rep.violations == 0);
        CHECK(rep.worst == 0.0);
    }
    SUBCASE("the reversed jump is an expansion shock and fails") {
        std::vector<sch::JumpRecord> recs{
            record(sch::JumpRecord::Kind::patch_shock, sig, uR, uL, str)};
        const dg::EntropyReport rep = dg::entropy_scan(recs, par);
        CHECK(rep.checked == 1);
        CHECK(rep.violations == 1);
        CHECK(rep.worst < 0.0);
    }
    SUBCASE("fan rungs are exempt but must respect the step size") {
        std::vector<sch::JumpRecord> recs{
            record(sch::JumpRecord::Kind::ladder, 0.1, uL, uL, 0.5 * rung),
            record(sch::JumpRecord::Kind::ladder, 0.1, uL, uL, 1.5 * rung)};
        const dg::EntropyReport rep = dg::entropy_scan(recs, par);
        CHECK(rep.checked == 0);
        CHECK(rep.exempt == 2);
        CHECK(rep.violations == 1);  // only the oversize rung
    }
    SUBCASE("rung-scale diamond jumps are closure, larger ones are checked") {
        std::vector<sch::JumpRecord> recs{
            record(sch::JumpRecord::Kind::diamond_left, 0.1, uL, uL, rung),
            record(sch::JumpRecord::Kind::diamond_right, sig, uL, uR, str)};
        REQUIRE(str > 2.0 * rung + 0.01);
        const dg::EntropyReport rep = dg::entropy_scan(recs, par);
        CHECK(rep.exempt == 1);
        CHECK(rep.checked == 1);
        CHECK(rep.violations == 0);
    }
    SUBCASE("records from a real construction are admissible") {
        const sch::CellFan f = sch::construct_cell(
            {1.44, 1.44 * -0.39}, {0.7, 0.7 * -0.34}, 0, 0.0, 0.0, par.dt,
            par, flat, 0);
        const dg::EntropyReport rep = dg::entropy_scan(f.jumps, par);
        CHECK(rep.checked >= 1);
        CHECK(rep.exempt >= 3);
        CHECK(rep.violations == 0);
    }
}

TEST_CASE("l1 distance") {
    const NozzleProfile flat = NozzleProfile::constant_area();
    sch::SchemeParams par = params(0.05, 3.001, flat);
    par.T = 0.0;
    auto u0 = [](double) { return GasState{1.0, 0.0}; };
    const sch::RunResult res = sch::run(u0, -1.0, 1.0, par, flat, {});
    REQUIRE(res.snapshots.size() == 1);
    CHECK(dg::l1_distance(res.snapshots[0], u0, par.dx) == 0.0);
    auto shifted = [](double) { return GasState{1.1, 0.0}; };
    const double d = dg::l1_distance(res.snapshots[0], shifted, par.dx);
    CHECK(d == doctest::Approx(0.1 * 41 * par.dx).epsilon(1e-12));
}

TEST_CASE("weak residual of block wedges shrinks with the mesh") {
    const NozzleProfile laval = damped_laval(0.01);
    auto metric = [&](double dx) {
        sch::SchemeParams par = params(dx, 4.0, laval);
        const GasState u{1.0, 0.4};
        const sch::CellFan f =
            sch::construct_cell(u, u, 0, 0.4, 0.0, par.dt, par, laval, 0);
        return dg::weak_residual_max(f, par, laval, 0.5);
    };
    const std::vector<dg::ConvergenceRow> rows =
        dg::convergence_study(metric, {0.08, 0.04, 0.02, 0.01});
    REQUIRE(rows.size() == 4);
    CHECK(dg::strictly_decreasing(rows));
    CHECK(rows.back().value < 3e-4);
    // roughly first order in dx (the source split is an Euler increment)
    const double ratio = rows[2].value / rows[3].value;
    CHECK(ratio > 1.5);
    CHECK(ratio < 3.0);
}
