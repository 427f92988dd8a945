#include "nozzleflow/gas.hpp"

namespace nozzleflow {

EntropyPair mech_entropy(const GasState& u, const GasConstants& c) {
    if (is_vacuum(u)) return {0.0, 0.0};
    const double g = c.gamma;
    const double eta = 0.5 * u.m * u.m / u.rho + std::pow(u.rho, g) / (g * (g - 1.0));
    const double v = u.m / u.rho;
    const double q = u.m * (0.5 * v * v + std::pow(u.rho, g - 1.0) / (g - 1.0));
    return {eta, q};
}

double shock_speed_S(double rho, double rho0, const GasConstants& c) {
    if (!(rho >= 0.0) || !(rho0 >= vacuum_rho))
        throw std::domain_error("shock_speed_S: need rho >= 0 and rho0 > 0");
    if (rho == rho0) return pow_theta(rho0, c);
    const double d = rho - rho0;
    if (std::abs(d) <= 1e-8 * std::max(rho, rho0)) {
        // p' at the midpoint; avoids catastrophic cancellation in p - p0.
        const double rm = 0.5 * (rho + rho0);
        return std::sqrt(rho / rho0 * std::pow(rm, c.gamma - 1.0));
    }
    const double num = rho * (pressure(rho, c) - pressure(rho0, c));
    return std::sqrt(num / (rho0 * d));
}

GasState wave_curve(Family f, CurveKind k, const GasState& u0, double rho,
                    const GasConstants& c) {
    if (is_vacuum(u0))
        throw std::domain_error("wave_curve: anchor state is vacuum");
    if (!(rho >= 0.0))
        throw std::domain_error("wave_curve: negative rho");
    const double v0 = velocity(u0);

    if (k == CurveKind::rarefaction) {
        const bool ok = (f == Family::f1) ? rho <= u0.rho : rho >= u0.rho;
        if (!ok) throw std::domain_error("wave_curve: rho on inadmissible side");
        const double dr = (pow_theta(rho, c) - pow_theta(u0.rho, c)) / c.theta;
        // family 1 keeps w, family 2 keeps z
        const double v = (f == Family::f1) ? v0 - dr : v0 + dr;
        if (rho < vacuum_rho) return {};
        return {rho, rho * v};
    }

    // Shock branches share Q = (p - p0)(rho - rho0)/(rho rho0) >= 0.
    if (rho < vacuum_rho)
        throw std::domain_error("wave_curve: shock adjacent to vacuum");
    const bool denser = rho >= u0.rho;
    const bool ok = (k == CurveKind::shock) ? (f == Family::f1 ? denser : !denser)
                                            : (f == Family::f1 ? !denser : denser);
    if (!ok) throw std::domain_error("wave_curve: rho on inadmissible side");
    const double q = (pressure(rho, c) - pressure(u0.rho, c)) * (rho - u0.rho) /
                     (rho * u0.rho);
    const double root = std::sqrt(std::max(q, 0.0));
    const double v = (k == CurveKind::shock) ? v0 - root : v0 + root;
    return {rho, rho * v};
}

std::array<double, 2> rh_residual(double sigma, const GasState& uL,
                                  const GasState& uR, const GasConstants& c) {
    const auto fL = flux(uL, c);
    const auto fR = flux(uR, c);
    return {fR[0] - fL[0] - sigma * (uR.rho - uL.rho),
            fR[1] - fL[1] - sigma * (uR.m - uL.m)};
}

double entropy_production(double sigma, const GasState& uL, const GasState& uR,
                          const GasConstants& c) {
    const auto eL = mech_entropy(uL, c);
    const auto eR = mech_entropy(uR, c);
    return sigma * (eR.eta - eL.eta) - (eR.q - eL.q);
}

}  // namespace nozzleflow
