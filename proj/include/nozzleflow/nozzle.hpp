#pragma once

// Nozzle geometry A(x), the source coefficient a(x) = -A'(x)/A(x), a C^1
// majorant b(x) with |a| <= mu b, and its weight B(x) = int_0^x b.
//
// b is stored as a cubic-Hermite table on a uniform grid; B is the exact
// panel-wise antiderivative of that interpolant, so B' == b identically and
// B(x2) - B(x1) is additive to rounding error. Everything is deterministic.

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "nozzleflow/gas.hpp"

namespace nozzleflow {

struct AdmissibilityConstants {
    double mu = 0.0;
    double sigma = 0.0;
    double epsilon = 0.0;
};

// mu = (1-theta)^2 / (theta (1 + theta - 2 sqrt(theta))),
// sigma = (1-theta) / ((1-sqrt(theta)) (2 sqrt(theta+1) + sqrt(theta) - 1));
// requires theta in (0, 1/3].
AdmissibilityConstants mu_sigma(const GasConstants& c);

// f(k) = 2((1-theta)k + 1 + theta) / (theta |k^2 - 1|); +infinity at k = +-1.
double f_of_k(double k, const GasConstants& c);

class BTable {
  public:
    static BTable zero() { return {}; }
    // Uniform samples values[i] at x0 + i*h; slopes by centered differences.
    static BTable from_samples(double x0, double h, std::vector<double> values);

    bool is_zero() const { return zero_; }
    double b(double x) const;
    double B(double x) const;  // anchored so B(0) = 0
    double total_pos() const { return zero_ ? 0.0 : cum_.back() - raw0_; }
    double total_neg() const { return zero_ ? 0.0 : raw0_; }

  private:
    bool zero_ = true;
    double x0_ = 0.0, h_ = 1.0;
    std::vector<double> v_, d_, cum_;  // values, slopes, cumulative raw integral
    double raw0_ = 0.0;                // raw antiderivative at x = 0
    double raw(double x) const;
};

// Majorant construction: r = |a|/mu sampled at spacing dx/8 over the support
// padded by 2dx, dilated by a sliding max of half-width dx, then mollified by
// a normalized C^2 bump of half-width dx, with 0.1% headroom so the bound
// b >= |a|/mu survives sub-sample peaks of |a| and interpolation undershoot.
BTable derive_b_table(const std::function<double(double)>& a, double mu,
                      double xlo, double xhi, double dx);

class NozzleProfile {
  public:
    enum class Kind { constant, laval, wind_tunnel, tabulated };

    static NozzleProfile constant_area();
    // A(x) = 1 + h (1 - (1 - (x/X)^2)^3) for |x| <= X, 1 + h beyond:
    // C^2, throat A(0) = 1, constant for |x| > X.
    static NozzleProfile laval(double h, double X);
    // Two laval-style throats at x = +-X/2, A = 1 + h between and beyond.
    static NozzleProfile wind_tunnel(double h, double X);
    // Clamped cubic spline through (x, A) rows; constant extrapolation.
    static NozzleProfile tabulated(std::vector<double> xs, std::vector<double> As);

    Kind kind() const { return kind_; }
    double X() const { return X_; }
    double area(double x) const;
    double area_prime(double x) const;
    double a(double x) const { return -area_prime(x) / area(x); }

    // Build b from |a|/mu (see derive_b_table); dx sets the mollifier width.
    void derive_b(double mu, double dx);
    // User override: rows linearly interpolated onto a fine grid, then
    // Hermite-smoothed; zero outside the table range.
    void override_b(const std::vector<double>& xs, const std::vector<double>& bs);
    bool has_b() const { return has_b_; }
    bool b_zero() const { return bt_.is_zero(); }

    double b(double x) const { return bt_.b(x); }
    double B(double x) const { return bt_.B(x); }
    double B_total_pos() const { return bt_.total_pos(); }
    double B_total_neg() const { return bt_.total_neg(); }
    double B_onesided_max() const {
        return std::max(bt_.total_pos(), bt_.total_neg());
    }

    struct ConditionMReport {
        bool pass = false;
        bool pointwise_ok = false;  // |a| <= mu b on the grid
        bool integral_ok = false;   // one-sided integrals within the bound
        double max_excess = 0.0;    // max(|a| - mu b)
        double max_onesided = 0.0;
        double bound = 0.0;
        double margin = 0.0;
        std::string message;
    };
    ConditionMReport validate_condition_M(const AdmissibilityConstants& ac,
                                          bool strengthened,
                                          int grid = 10000) const;

  private:
    Kind kind_ = Kind::constant;
    double h_ = 0.0, X_ = 1.0;
    // tabulated spline data
    std::vector<double> txs_, tas_, tm_;  // knots, values, second derivatives
    BTable bt_;
    bool has_b_ = false;
};

}  // namespace nozzleflow
