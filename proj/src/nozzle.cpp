#include "nozzleflow/nozzle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nozzleflow {

AdmissibilityConstants mu_sigma(const GasConstants& c) {
    const double th = c.theta;
    if (!(th > 0.0 && th <= 1.0 / 3.0 + 1e-12))
        throw std::domain_error("mu_sigma: theta must lie in (0, 1/3]");
    const double rt = std::sqrt(th);
    const double mu = (1.0 - th) * (1.0 - th) / (th * (1.0 + th - 2.0 * rt));
    const double sigma =
        (1.0 - th) / ((1.0 - rt) * (2.0 * std::sqrt(th + 1.0) + rt - 1.0));
    if (!(sigma > 0.0 && sigma < 1.0))
        throw std::domain_error("mu_sigma: sigma escaped (0,1)");
    return {mu, sigma, 0.0};
}

double f_of_k(double k, const GasConstants& c) {
    const double th = c.theta;
    const double den = th * std::abs(k * k - 1.0);
    if (den < 1e-300) return std::numeric_limits<double>::infinity();
    return 2.0 * ((1.0 - th) * k + 1.0 + th) / den;
}

// ---------------------------------------------------------------- BTable ---

BTable BTable::from_samples(double x0, double h, std::vector<double> values) {
    BTable t;
    if (values.size() < 2 ||
        std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; }))
        return t;
    t.zero_ = false;
    t.x0_ = x0;
    t.h_ = h;
    t.v_ = std::move(values);
    const size_t n = t.v_.size();
    t.d_.assign(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i)
        t.d_[i] = (t.v_[i + 1] - t.v_[i - 1]) / (2.0 * h);
    t.cum_.assign(n, 0.0);
    for (size_t i = 0; i + 1 < n; ++i) {
        const double panel = h * (0.5 * (t.v_[i] + t.v_[i + 1]) +
                                  h * (t.d_[i] - t.d_[i + 1]) / 12.0);
        t.cum_[i + 1] = t.cum_[i] + panel;
    }
    t.raw0_ = 0.0;
    t.raw0_ = t.raw(0.0);
    return t;
}

double BTable::b(double x) const {
    if (zero_) return 0.0;
    const double s = (x - x0_) / h_;
    if (s <= 0.0 || s >= double(v_.size() - 1)) return 0.0;
    const size_t i = size_t(s);
    const double u = s - double(i);
    const double u2 = u * u, u3 = u2 * u;
    const double val = v_[i] * (2.0 * u3 - 3.0 * u2 + 1.0) +
                       v_[i + 1] * (-2.0 * u3 + 3.0 * u2) +
                       h_ * d_[i] * (u3 - 2.0 * u2 + u) +
                       h_ * d_[i + 1] * (u3 - u2);
    return std::max(val, 0.0);
}

double BTable::raw(double x) const {
    const double s = (x - x0_) / h_;
    if (s <= 0.0) return 0.0;
    if (s >= double(v_.size() - 1)) return cum_.back();
    const size_t i = size_t(s);
    const double u = s - double(i);
    const double u2 = u * u, u3 = u2 * u, u4 = u2 * u2;
    const double part = v_[i] * (0.5 * u4 - u3 + u) +
                        v_[i + 1] * (u3 - 0.5 * u4) +
                        h_ * d_[i] * (0.25 * u4 - 2.0 * u3 / 3.0 + 0.5 * u2) +
                        h_ * d_[i + 1] * (0.25 * u4 - u3 / 3.0);
    return cum_[i] + h_ * part;
}

double BTable::B(double x) const { return zero_ ? 0.0 : raw(x) - raw0_; }

BTable derive_b_table(const std::function<double(double)>& a, double mu,
                      double xlo, double xhi, double dx) {
    if (!(dx > 0.0) || !(mu > 0.0))
        throw std::domain_error("derive_b_table: need dx > 0 and mu > 0");
    const double pad = 2.0 * dx;
    const double h = dx / 8.0;
    const double lo = xlo - pad, hi = xhi + pad;
    const size_t n = size_t(std::ceil((hi - lo) / h)) + 2;
    std::vector<double> r(n);
    double mx = 0.0;
    for (size_t i = 0; i < n; ++i) {
        r[i] = std::abs(a(lo + double(i) * h)) / mu;
        mx = std::max(mx, r[i]);
    }
    if (mx == 0.0) return BTable::zero();

    const int w = 8;  // window dx on the h = dx/8 grid
    std::vector<double> dil(n);
    for (size_t i = 0; i < n; ++i) {
        double m = 0.0;
        const size_t j0 = i >= size_t(w) ? i - w : 0;
        const size_t j1 = std::min(i + w, n - 1);
        for (size_t j = j0; j <= j1; ++j) m = std::max(m, r[j]);
        dil[i] = m;
    }
    // normalized C^2 bump kernel on the same window
    double kern[2 * w + 1], ksum = 0.0;
    for (int k = -w; k <= w; ++k) {
        const double y = double(k) / w;
        kern[k + w] = k == -w || k == w ? 0.0 : std::pow(1.0 - y * y, 3);
        ksum += kern[k + w];
    }
    for (int k = 0; k <= 2 * w; ++k) kern[k] /= ksum;
    std::vector<double> bv(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = -w; k <= w; ++k) {
            const long j = long(i) + k;
            if (j >= 0 && j < long(n)) acc += kern[k + w] * dil[j];
        }
        // 0.1% headroom: the sliding max only sees sampled values of |a|, so a
        // peak of |a| falling between samples can exceed it by ~ |a''| h^2 / 8,
        // and the Hermite interpolant of bv can undershoot the nodes by a
        // similar amount.  Both are relative effects far below 1e-3.
        bv[i] = 1.001 * acc;
    }
    bv.front() = bv.back() = 0.0;
    return BTable::from_samples(lo, h, std::move(bv));
}

// --------------------------------------------------------- NozzleProfile ---

NozzleProfile NozzleProfile::constant_area() {
    NozzleProfile p;
    p.kind_ = Kind::constant;
    p.X_ = 1.0;
    p.has_b_ = true;  // b == 0 trivially valid
    return p;
}

NozzleProfile NozzleProfile::laval(double h, double X) {
    if (!(X > 0.0) || !(h > -1.0))
        throw std::domain_error("laval: need X > 0 and h > -1 (A positive)");
    NozzleProfile p;
    p.kind_ = Kind::laval;
    p.h_ = h;
    p.X_ = X;
    return p;
}

NozzleProfile NozzleProfile::wind_tunnel(double h, double X) {
    if (!(X > 0.0) || !(h > -1.0) || !(h < 1.0))
        throw std::domain_error("wind_tunnel: need X > 0 and |h| < 1");
    NozzleProfile p;
    p.kind_ = Kind::wind_tunnel;
    p.h_ = h;
    p.X_ = X;
    return p;
}

namespace {
double bump(double xi) {  // (1 - xi^2)^3 inside |xi| < 1
    if (std::abs(xi) >= 1.0) return 0.0;
    const double s = 1.0 - xi * xi;
    return s * s * s;
}
double bump_prime(double xi) {
    if (std::abs(xi) >= 1.0) return 0.0;
    const double s = 1.0 - xi * xi;
    return -6.0 * xi * s * s;
}
}  // namespace

NozzleProfile NozzleProfile::tabulated(std::vector<double> xs,
                                       std::vector<double> As) {
    if (xs.size() != As.size() || xs.size() < 4)
        throw std::domain_error("tabulated profile: need >= 4 (x, A) rows");
    for (size_t i = 0; i + 1 < xs.size(); ++i)
        if (!(xs[i] < xs[i + 1]))
            throw std::domain_error("tabulated profile: x not strictly increasing");
    for (double v : As)
        if (!(v > 0.0))
            throw std::domain_error("tabulated profile: A must be positive");

    // clamped cubic spline (A' = 0 at both ends): tridiagonal for A''
    const size_t n = xs.size();
    std::vector<double> hgap(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) hgap[i] = xs[i + 1] - xs[i];
    std::vector<double> diag(n), off(n - 1), rhs(n);
    diag[0] = 2.0 * hgap[0];
    off[0] = hgap[0];
    rhs[0] = 6.0 * ((As[1] - As[0]) / hgap[0] - 0.0);
    for (size_t i = 1; i + 1 < n; ++i) {
        diag[i] = 2.0 * (hgap[i - 1] + hgap[i]);
        off[i] = hgap[i];
        rhs[i] = 6.0 * ((As[i + 1] - As[i]) / hgap[i] -
                        (As[i] - As[i - 1]) / hgap[i - 1]);
    }
    diag[n - 1] = 2.0 * hgap[n - 2];
    rhs[n - 1] = 6.0 * (0.0 - (As[n - 1] - As[n - 2]) / hgap[n - 2]);
    // forward elimination (sub-diagonal equals off by symmetry)
    for (size_t i = 1; i < n; ++i) {
        const double w = hgap[i - 1] / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> m(n);
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for (size_t i = n - 1; i-- > 0;) m[i] = (rhs[i] - off[i] * m[i + 1]) / diag[i];

    NozzleProfile p;
    p.kind_ = Kind::tabulated;
    p.txs_ = std::move(xs);
    p.tas_ = std::move(As);
    p.tm_ = std::move(m);
    p.X_ = std::max(std::abs(p.txs_.front()), std::abs(p.txs_.back()));
    for (int i = 0; i <= 2000; ++i) {
        const double x =
            p.txs_.front() + (p.txs_.back() - p.txs_.front()) * i / 2000.0;
        if (!(p.area(x) > 0.0))
            throw std::domain_error("tabulated profile: interpolated A <= 0");
    }
    return p;
}

double NozzleProfile::area(double x) const {
    switch (kind_) {
        case Kind::constant:
            return 1.0;
        case Kind::laval:
            return 1.0 + h_ * (1.0 - bump(x / X_));
        case Kind::wind_tunnel:
            return 1.0 + h_ - h_ * bump((x - 0.5 * X_) / (0.5 * X_)) -
                   h_ * bump((x + 0.5 * X_) / (0.5 * X_));
        case Kind::tabulated: {
            if (x <= txs_.front()) return tas_.front();
            if (x >= txs_.back()) return tas_.back();
            const size_t i =
                size_t(std::upper_bound(txs_.begin(), txs_.end(), x) -
                       txs_.begin()) -
                1;
            const double hg = txs_[i + 1] - txs_[i];
            const double t1 = txs_[i + 1] - x, t0 = x - txs_[i];
            return (tm_[i] * t1 * t1 * t1 + tm_[i + 1] * t0 * t0 * t0) / (6.0 * hg) +
                   (tas_[i] / hg - tm_[i] * hg / 6.0) * t1 +
                   (tas_[i + 1] / hg - tm_[i + 1] * hg / 6.0) * t0;
        }
    }
    return 1.0;
}

double NozzleProfile::area_prime(double x) const {
    switch (kind_) {
        case Kind::constant:
            return 0.0;
        case Kind::laval:
            return -h_ * bump_prime(x / X_) / X_;
        case Kind::wind_tunnel:
            return -h_ * bump_prime((x - 0.5 * X_) / (0.5 * X_)) / (0.5 * X_) -
                   h_ * bump_prime((x + 0.5 * X_) / (0.5 * X_)) / (0.5 * X_);
        case Kind::tabulated: {
            if (x <= txs_.front() || x >= txs_.back()) return 0.0;
            const size_t i =
                size_t(std::upper_bound(txs_.begin(), txs_.end(), x) -
                       txs_.begin()) -
                1;
            const double hg = txs_[i + 1] - txs_[i];
            const double t1 = txs_[i + 1] - x, t0 = x - txs_[i];
            return (-tm_[i] * t1 * t1 + tm_[i + 1] * t0 * t0) / (2.0 * hg) +
                   (tas_[i + 1] - tas_[i]) / hg -
                   (tm_[i + 1] - tm_[i]) * hg / 6.0;
        }
    }
    return 0.0;
}

void NozzleProfile::derive_b(double mu, double dx) {
    if (kind_ == Kind::constant) {
        bt_ = BTable::zero();
        has_b_ = true;
        return;
    }
    bt_ = derive_b_table([this](double x) { return a(x); }, mu, -X_, X_, dx);
    has_b_ = true;
}

void NozzleProfile::override_b(const std::vector<double>& xs,
                               const std::vector<double>& bs) {
    if (xs.size() != bs.size() || xs.size() < 2)
        throw std::domain_error("override_b: need >= 2 (x, b) rows");
    for (size_t i = 0; i + 1 < xs.size(); ++i)
        if (!(xs[i] < xs[i + 1]))
            throw std::domain_error("override_b: x not strictly increasing");
    for (double v : bs)
        if (!(v >= 0.0)) throw std::domain_error("override_b: b must be >= 0");
    double hmin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < xs.size(); ++i) hmin = std::min(hmin, xs[i + 1] - xs[i]);
    // resample onto a uniform grid whose last node lands exactly on xs.back(),
    // so the table's support (and hence the B integrals) is not padded
    const double span = xs.back() - xs.front();
    const size_t m = std::max<size_t>(size_t(std::ceil(span / (hmin / 4.0))), 1);
    const double h = span / double(m);
    const size_t n = m + 1;
    std::vector<double> v(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const double x = xs.front() + double(i) * h;
        if (x <= xs.front()) {
            v[i] = bs.front();
        } else if (x >= xs.back()) {
            v[i] = bs.back();
        } else {
            const size_t k =
                size_t(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
            const double t = (x - xs[k]) / (xs[k + 1] - xs[k]);
            v[i] = (1.0 - t) * bs[k] + t * bs[k + 1];
        }
    }
    bt_ = BTable::from_samples(xs.front(), h, std::move(v));
    has_b_ = true;
}

NozzleProfile::ConditionMReport NozzleProfile::validate_condition_M(
    const AdmissibilityConstants& ac, bool strengthened, int grid) const {
    ConditionMReport r;
    if (!has_b_) {
        r.message = "b has not been derived or supplied";
        return r;
    }
    const double sig = strengthened ? ac.sigma + 2.0 * ac.epsilon : ac.sigma;
    if (!(sig > 0.0 && sig < 1.0)) {
        r.message = "sigma + 2 epsilon escaped (0,1)";
        return r;
    }
    r.bound = 0.5 * std::log(1.0 / sig);
    double excess = -std::numeric_limits<double>::infinity();
    double scale = 0.0;
    for (int i = 0; i <= grid; ++i) {
        const double x = -X_ + 2.0 * X_ * double(i) / double(grid);
        const double ax = std::abs(a(x));
        excess = std::max(excess, ax - ac.mu * b(x));
        scale = std::max(scale, ax);
    }
    r.max_excess = excess;
    r.pointwise_ok = excess <= 1e-13 * std::max(1.0, scale);
    r.max_onesided = B_onesided_max();
    r.margin = r.bound - r.max_onesided;
    r.integral_ok = r.max_onesided <= r.bound + 1e-15;
    r.pass = r.pointwise_ok && r.integral_ok;
    std::ostringstream os;
    if (!r.pointwise_ok)
        os << "pointwise |a| <= mu b violated by " << excess << "; ";
    if (!r.integral_ok)
        os << "one-sided integral " << r.max_onesided << " exceeds bound "
           << r.bound << "; ";
    if (r.pass) os << "condition-M satisfied, margin " << r.margin;
    r.message = os.str();
    return r;
}

}  // namespace nozzleflow
