#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "nozzleflow/gas.hpp"

using namespace nozzleflow;

namespace {
const GasConstants g53(5.0 / 3.0);

// Least-squares slope of log|y| vs log|x|.
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(xs.size());
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace

TEST_CASE("invariants of reference states") {
    const auto iv = to_invariants({1.0, 0.0}, g53);
    CHECK(iv.z == doctest::Approx(-3.0).epsilon(1e-14));
    CHECK(iv.w == doctest::Approx(3.0).epsilon(1e-14));

    // rho = 0.512: rho^theta = 0.8, so (z, w) = (v -/+ 2.4) at v = 0.3
    const auto iv2 = to_invariants({0.512, 0.512 * 0.3}, g53);
    CHECK(iv2.z == doctest::Approx(-2.1).epsilon(1e-13));
    CHECK(iv2.w == doctest::Approx(2.7).epsilon(1e-13));

    const auto ivv = to_invariants({0.0, 0.0}, g53);
    CHECK(ivv.z == 0.0);
    CHECK(ivv.w == 0.0);
}

TEST_CASE("from_invariants inverts and handles vacuum") {
    const auto u = from_invariants({-3.0, 3.0}, g53);
    CHECK(u.rho == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(u.m == doctest::Approx(0.0).epsilon(1e-13));

    const auto u2 = from_invariants({-2.1, 2.7}, g53);
    CHECK(u2.rho == doctest::Approx(0.512).epsilon(1e-13));
    CHECK(u2.m / u2.rho == doctest::Approx(0.3).epsilon(1e-13));

    const auto uv = from_invariants({0.7, 0.7}, g53);
    CHECK(uv.rho == 0.0);
    CHECK(uv.m == 0.0);

    CHECK_THROWS_AS(from_invariants({1.0, 0.5}, g53), std::domain_error);
}

TEST_CASE("invariant round-trip on random states") {
    std::mt19937_64 rng(20240817);
    std::uniform_real_distribution<double> width(1e-6, 10.0), center(-5.0, 5.0);
    for (int i = 0; i < 10000; ++i) {
        const double d = width(rng), mid = center(rng);
        const Invariants iv{mid - 0.5 * d, mid + 0.5 * d};
        const GasState u = from_invariants(iv, g53);
        if (u.rho < 1e-10) continue;  // below the round-trip guarantee
        const Invariants back = to_invariants(u, g53);
        CHECK(back.z == doctest::Approx(iv.z).epsilon(1e-12));
        CHECK(back.w == doctest::Approx(iv.w).epsilon(1e-12));
    }
}

TEST_CASE("sign structure of invariants") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> rho(1e-6, 10.0), vel(0.0, 8.0);
    for (int i = 0; i < 10000; ++i) {
        const double r = rho(rng), v = vel(rng);
        const auto iv = to_invariants({r, r * v}, g53);
        CHECK(iv.w >= 0.0);
        CHECK(std::abs(iv.w) >= std::abs(iv.z));
        const auto ivm = to_invariants({r, -r * v}, g53);
        CHECK(ivm.z <= 0.0);
        CHECK(std::abs(ivm.z) >= std::abs(ivm.w));
    }
}

TEST_CASE("characteristic speeds") {
    const auto l = char_speeds({1.0, 0.0}, g53);
    CHECK(l[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(l[1] == doctest::Approx(1.0).epsilon(1e-14));

    const auto lv = char_speeds({0.0, 0.0}, g53);
    CHECK(lv[0] == 0.0);
    CHECK(lv[1] == 0.0);

    const auto l2 = char_speeds({0.512, 0.512 * 0.3}, g53);
    CHECK(l2[0] == doctest::Approx(-0.5).epsilon(1e-13));
    CHECK(l2[1] == doctest::Approx(1.1).epsilon(1e-13));

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> rho(1e-8, 10.0), vel(-5.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        const double r = rho(rng);
        const auto ll = char_speeds({r, r * vel(rng)}, g53);
        CHECK(ll[0] < ll[1]);
    }
}

TEST_CASE("mechanical entropy pair") {
    const auto e = mech_entropy({1.0, 0.0}, g53);
    CHECK(e.eta == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(e.q == 0.0);

    const auto ev = mech_entropy({0.0, 0.0}, g53);
    CHECK(ev.eta == 0.0);
    CHECK(ev.q == 0.0);

    const auto e2 = mech_entropy({1.0, 1.0}, g53);
    CHECK(e2.eta == doctest::Approx(1.4).epsilon(1e-14));
}

TEST_CASE("shock speed factor S") {
    CHECK(shock_speed_S(1.0, 1.0, g53) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(shock_speed_S(0.512, 0.512, g53) == doctest::Approx(0.8).epsilon(1e-13));

    // continuity at the diagonal: the 0/0-prone formula stays stable; the
    // symmetric second difference kills the O(eps) term, leaving O(eps^2)
    // plus cancellation noise, which must sit below 1e-8
    const double above = shock_speed_S(1.0 + 1e-6, 1.0, g53);
    const double below = shock_speed_S(1.0 - 1e-6, 1.0, g53);
    CHECK(std::abs(above - 1.0) <= 1e-5);
    CHECK(std::abs(below - 1.0) <= 1e-5);
    CHECK(std::abs(above + below - 2.0) <= 1e-8);

    // gamma = 2 branch: p = rho^2/2, S(2,1) = sqrt(3). Outside the physical
    // range; pure algebra check.
    const GasConstants g2(2.0);
    CHECK(shock_speed_S(2.0, 1.0, g2) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));

    // monotone in rho at fixed rho0
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double r = 0.05 + i * 0.05;
        const double s = shock_speed_S(r, 1.0, g53);
        if (i) CHECK(s > prev);
        prev = s;
    }

    CHECK_THROWS_AS(shock_speed_S(0.0, 0.0, g53), std::domain_error);
}

TEST_CASE("wave curves: identity, inverse round-trip, admissibility") {
    const GasState u0{1.0, 0.4};
    const GasState id = wave_curve(Family::f1, CurveKind::rarefaction, u0, 1.0, g53);
    CHECK(id.rho == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(id.m == doctest::Approx(0.4).epsilon(1e-14));

    // S1 from u0 up to rho, then the inverse shock back down, lands on u0.
    const GasState hi = wave_curve(Family::f1, CurveKind::shock, u0, 1.7, g53);
    const GasState back = wave_curve(Family::f1, CurveKind::inverse_shock, hi, 1.0, g53);
    CHECK(back.rho == doctest::Approx(u0.rho).epsilon(1e-12));
    CHECK(back.m == doctest::Approx(u0.m).epsilon(1e-12));

    CHECK_THROWS_AS(wave_curve(Family::f1, CurveKind::rarefaction, u0, 1.5, g53),
                    std::domain_error);
    CHECK_THROWS_AS(wave_curve(Family::f1, CurveKind::shock, u0, 0.5, g53),
                    std::domain_error);
}

TEST_CASE("shock/rarefaction tangency is third order in density") {
    const GasState u0{1.0, 0.0};
    const double w0 = to_invariants(u0, g53).w;
    std::vector<double> offs, devs;
    for (double d = 1e-3; d <= 1e-1 * (1 + 1e-12); d *= std::pow(100.0, 1.0 / 12.0)) {
        const GasState s = wave_curve(Family::f1, CurveKind::shock, u0, 1.0 + d, g53);
        offs.push_back(d);
        devs.push_back(std::abs(to_invariants(s, g53).w - w0));
    }
    const double slope = loglog_slope(offs, devs);
    CHECK(slope >= 2.7);
    CHECK(slope <= 3.3);
}

TEST_CASE("Rankine-Hugoniot residual") {
    const GasState u{1.3, -0.2};
    const auto r0 = rh_residual(0.77, u, u, g53);
    CHECK(r0[0] == 0.0);
    CHECK(r0[1] == 0.0);

    // sigma from mass conservation must also close the momentum equation
    // when the states lie on a shock curve.
    const GasState uR = wave_curve(Family::f2, CurveKind::shock, GasState{2.0, 0.5},
                                   1.1, g53);
    const GasState uL{2.0, 0.5};
    const double sigma = (uR.m - uL.m) / (uR.rho - uL.rho);
    const auto r = rh_residual(sigma, uL, uR, g53);
    CHECK(std::abs(r[0]) <= 1e-12);
    CHECK(std::abs(r[1]) <= 1e-10);

    const auto rp = rh_residual(sigma + 1e-3, uL, uR, g53);
    CHECK((std::abs(rp[0]) > 1e-6 || std::abs(rp[1]) > 1e-6));
}

TEST_CASE("entropy production signs") {
    CHECK(entropy_production(0.3, {1.0, 0.1}, {1.0, 0.1}, g53) == 0.0);

    // compressive 1-shock: production >= 0
    const GasState uL{1.0, 0.0};
    const GasState uR = wave_curve(Family::f1, CurveKind::shock, uL, 1.8, g53);
    const double sigma = (uR.m - uL.m) / (uR.rho - uL.rho);
    CHECK(entropy_production(sigma, uL, uR, g53) >= -1e-12);

    // the reversed jump (an expansion shock) violates the condition
    const double sigma_rev = (uL.m - uR.m) / (uL.rho - uR.rho);
    CHECK(entropy_production(sigma_rev, uR, uL, g53) <= 1e-12);
}
