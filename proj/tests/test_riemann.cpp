#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "nozzleflow/gas.hpp"
#include "nozzleflow/quadrature.hpp"
#include "nozzleflow/riemann.hpp"

using namespace nozzleflow;
namespace rs = nozzleflow::riemann;

namespace {
const GasConstants g53(5.0 / 3.0);

GasState make(double rho, double v) { return {rho, rho * v}; }

// All finite wave edge speeds of a fan, left to right.
std::vector<double> edge_speeds(const rs::WaveFan& f) {
    std::vector<double> s;
    auto push = [&](const rs::WaveDesc& w) {
        if (w.kind == rs::WaveKind::shock) s.push_back(w.sigma);
        if (w.kind == rs::WaveKind::rarefaction) {
            s.push_back(w.head);
            s.push_back(w.tail);
        }
    };
    push(f.wave1);
    if (f.vacuum_middle) {
        s.push_back(f.vac_lo);
        s.push_back(f.vac_hi);
    }
    push(f.wave2);
    return s;
}
}  // namespace

TEST_CASE("classify: degenerate, vacuum appearance, double shock") {
    CHECK(rs::classify(make(1, 0.3), make(1, 0.3), g53) == rs::Region::I);

    // two rarefactions separate; vacuum iff wL <= zR, i.e. |v| >= 1/theta = 3
    CHECK(rs::classify(make(1, -3.0), make(1, 3.0), g53) == rs::Region::vacuum);
    CHECK(rs::classify(make(1, -3.5), make(1, 3.5), g53) == rs::Region::vacuum);
    CHECK(rs::classify(make(1, -2.9), make(1, 2.9), g53) == rs::Region::I);

    CHECK(rs::classify(make(1, 1.0), make(1, -1.0), g53) == rs::Region::III);
}

TEST_CASE("solve: equal states give no waves") {
    const auto fan = rs::solve(make(1, 0), make(1, 0), g53);
    CHECK(fan.wave1.kind == rs::WaveKind::none);
    CHECK(fan.wave2.kind == rs::WaveKind::none);
    CHECK(fan.middle.rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fan.middle.m == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("solve: symmetric double rarefaction has closed-form middle") {
    const auto fan = rs::solve(make(1, -0.5), make(1, 0.5), g53);
    CHECK(fan.wave1.kind == rs::WaveKind::rarefaction);
    CHECK(fan.wave2.kind == rs::WaveKind::rarefaction);
    CHECK(velocity(fan.middle) == doctest::Approx(0.0).epsilon(1e-12));
    // w conserved through the 1-fan: rho_M^{1/3} = 1 - 0.5/3
    const double rho_ref = std::pow(5.0 / 6.0, 3);
    CHECK(fan.middle.rho == doctest::Approx(rho_ref).epsilon(1e-10));
}

TEST_CASE("solve: symmetric double shock agrees with the oracle") {
    const auto fan = rs::solve(make(1, 0.5), make(1, -0.5), g53);
    CHECK(fan.wave1.kind == rs::WaveKind::shock);
    CHECK(fan.wave2.kind == rs::WaveKind::shock);
    CHECK(velocity(fan.middle) == doctest::Approx(0.0).epsilon(1e-11));
    const auto om = rs::oracle_middle_state(make(1, 0.5), make(1, -0.5), g53);
    REQUIRE(om.has_value());
    CHECK(fan.middle.rho == doctest::Approx(om->rho).epsilon(1e-10));
}

TEST_CASE("sample: outside all waves returns the data") {
    const auto fan = rs::solve(make(1, 0), make(0.125, 0), g53);
    const GasState l = rs::sample(fan, -100.0, g53);
    CHECK(l.rho == 1.0);
    CHECK(l.m == 0.0);
    const GasState r = rs::sample(fan, 100.0, g53);
    CHECK(r.rho == 0.125);
    CHECK(r.m == 0.0);
}

TEST_CASE("sample: fan interior satisfies lambda1 = xi") {
    const auto fan = rs::solve(make(1, 0), make(0.125, 0), g53);
    REQUIRE(fan.wave1.kind == rs::WaveKind::rarefaction);
    for (int i = 1; i < 20; ++i) {
        const double xi = fan.wave1.head +
                          (fan.wave1.tail - fan.wave1.head) * i / 20.0;
        const GasState u = rs::sample(fan, xi, g53);
        CHECK(char_speeds(u, g53)[0] == doctest::Approx(xi).epsilon(1e-10));
    }
}

TEST_CASE("vacuum fan: wedge between the two fans, sampled as vacuum") {
    const auto fan = rs::solve(make(1, -4), make(1, 4), g53);
    CHECK(fan.vacuum_middle);
    CHECK(fan.vac_lo == doctest::Approx(-1.0).epsilon(1e-12));  // wL = -4+3
    CHECK(fan.vac_hi == doctest::Approx(1.0).epsilon(1e-12));   // zR = 4-3
    const GasState mid = rs::sample(fan, 0.0, g53);
    CHECK(mid.rho == 0.0);
    const auto om = rs::oracle_middle_state(make(1, -4), make(1, 4), g53);
    CHECK(!om.has_value());
}

TEST_CASE("random pairs: oracle agreement, containment, entropy, Lax") {
    std::mt19937_64 rng(123456);
    std::uniform_real_distribution<double> rho(1e-3, 10.0), vel(-5.0, 5.0);
    for (int it = 0; it < 300; ++it) {
        const GasState uL = make(rho(rng), vel(rng));
        const GasState uR = make(rho(rng), vel(rng));
        const auto fan = rs::solve(uL, uR, g53);
        const auto om = rs::oracle_middle_state(uL, uR, g53);
        if (fan.vacuum_middle) {
            CHECK(!om.has_value());
        } else {
            REQUIRE(om.has_value());
            CHECK(fan.middle.rho == doctest::Approx(om->rho).epsilon(2e-8));
            CHECK(velocity(fan.middle) ==
                  doctest::Approx(velocity(*om)).epsilon(2e-8));
        }

        // wave edges nondecreasing
        const auto sp = edge_speeds(fan);
        for (size_t i = 1; i < sp.size(); ++i) CHECK(sp[i] >= sp[i - 1] - 1e-12);

        // invariant-region containment of sampled states
        const auto ivL = to_invariants(uL, g53), ivR = to_invariants(uR, g53);
        const double zmin = std::min(ivL.z, ivR.z), wmax = std::max(ivL.w, ivR.w);
        const double lo = sp.empty() ? -1.0 : sp.front() - 1.0;
        const double hi = sp.empty() ? 1.0 : sp.back() + 1.0;
        for (int k = 0; k <= 64; ++k) {
            const double xi = lo + (hi - lo) * k / 64.0;
            const auto iv = to_invariants(rs::sample(fan, xi, g53), g53);
            if (rs::sample(fan, xi, g53).rho < vacuum_rho) continue;
            CHECK(iv.z >= zmin - 1e-10);
            CHECK(iv.w <= wmax + 1e-10);
            CHECK(iv.w >= iv.z - 1e-14);
        }

        // shocks: RH residual, entropy production, Lax inequalities
        auto check_shock = [&](int family, const rs::WaveDesc& w, const GasState& a,
                               const GasState& b) {
            if (w.kind != rs::WaveKind::shock) return;
            const auto r = rh_residual(w.sigma, a, b, g53);
            CHECK(std::abs(r[0]) <= 1e-10);
            CHECK(std::abs(r[1]) <= 1e-10);
            CHECK(entropy_production(w.sigma, a, b, g53) >= -1e-12);
            const auto la = char_speeds(a, g53), lb = char_speeds(b, g53);
            if (family == 1) {
                CHECK(w.sigma <= la[0] + 1e-9);
                CHECK(w.sigma >= lb[0] - 1e-9);
            } else {
                CHECK(w.sigma <= la[1] + 1e-9);
                CHECK(w.sigma >= lb[1] - 1e-9);
            }
        };
        check_shock(1, fan.wave1, fan.left, fan.middle);
        check_shock(2, fan.wave2, fan.middle, fan.right);
    }
}

TEST_CASE("exact x-averages of a fan stay in the invariant rectangle") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> rho(0.05, 5.0), vel(-2.0, 2.0),
        span(0.2, 3.0);
    for (int it = 0; it < 40; ++it) {
        const GasState uL = make(rho(rng), vel(rng));
        const GasState uR = make(rho(rng), vel(rng));
        const auto fan = rs::solve(uL, uR, g53);
        if (fan.vacuum_middle) continue;

        // integrate rho and m over [xa, xb] at t = 1, splitting at wave edges
        double xa = -span(rng), xb = span(rng);
        std::vector<double> cuts{xa, xb};
        for (double s : edge_speeds(fan))
            if (s > xa && s < xb) cuts.push_back(s);
        std::sort(cuts.begin(), cuts.end());
        double mr = 0.0, mm = 0.0;
        for (size_t i = 1; i < cuts.size(); ++i) {
            mr += gauss_integrate(
                [&](double x) { return rs::sample(fan, x, g53).rho; }, cuts[i - 1],
                cuts[i], 32);
            mm += gauss_integrate(
                [&](double x) { return rs::sample(fan, x, g53).m; }, cuts[i - 1],
                cuts[i], 32);
        }
        const GasState avg{mr / (xb - xa), mm / (xb - xa)};
        const auto iv = to_invariants(avg, g53);
        const auto ivL = to_invariants(uL, g53), ivR = to_invariants(uR, g53);
        CHECK(iv.z >= std::min(ivL.z, ivR.z) - 1e-8);
        CHECK(iv.w <= std::max(ivL.w, ivR.w) + 1e-8);
    }
}

TEST_CASE("mirror symmetry of fans") {
    const GasState uL = make(1.4, 0.7), uR = make(0.3, -0.2);
    const auto fan = rs::solve(uL, uR, g53);
    const auto mir = rs::mirror(fan);
    for (double xi : {-1.5, -0.4, 0.0, 0.3, 1.2}) {
        const GasState a = rs::sample(fan, xi, g53);
        const GasState b = rs::sample(mir, -xi, g53);
        CHECK(b.rho == doctest::Approx(a.rho).epsilon(1e-13));
        CHECK(b.m == doctest::Approx(-a.m).epsilon(1e-13));
    }
}
