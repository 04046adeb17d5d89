#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bessel.hpp"
#include "grid.hpp"
#include "kernel.hpp"

namespace chemotw {

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::vector<std::pair<std::string, double>> values;  // extra measurements and fitted constants
    std::string note;
};

struct DiagnosticsReport {
    std::vector<CheckResult> checks;

    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }
    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline std::vector<double> central_derivative(const Field& f) {
    const std::size_t n = f.size();
    const double h = f.grid().dx();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    d[0] = (f[1] - f[0]) / h;
    d[n - 1] = (f[n - 1] - f[n - 2]) / h;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2 * h);
    return d;
}

inline double trapz(const std::vector<double>& f, double h) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

/// Gauss-Legendre nodes and weights on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre01(int m) {
    std::vector<double> x(m), w(m);
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Weights W_m = int phi_nu(r) hat(m h - r) dr for a piecewise-linear signal, m >= 0.
/// The log singularity at r = 0 is absorbed by r = h s^4.
inline std::vector<double> phi_weights(double nu, double h, std::size_t mmax) {
    const auto [gx, gw] = gauss_legendre01(24);
    const double a = std::sqrt(nu);
    auto phi = [&](double r) { return bessel_k0(r / a) / (std::numbers::pi * a); };
    // int_{r0}^{r0+h} phi(r) lin(r) dr where lin is the hat restricted to the cell
    auto cell = [&](double r0, auto&& lin) {
        double s = 0.0;
        for (std::size_t k = 0; k < gx.size(); ++k) {
            if (r0 == 0.0) {
                const double t = gx[k], r = h * t * t * t * t;
                s += gw[k] * phi(r) * lin(r) * 4.0 * h * t * t * t;
            } else {
                const double r = r0 + h * gx[k];
                s += gw[k] * phi(r) * lin(r) * h;
            }
        }
        return s;
    };
    std::vector<double> W(mmax + 1, 0.0);
    for (std::size_t m = 0; m <= mmax; ++m) {
        const double c = static_cast<double>(m) * h;
        // hat centred at c: rising on [c-h, c], falling on [c, c+h]; phi is even so |r| is used
        double s = cell(c, [&](double r) { return 1.0 - (r - c) / h; });
        if (m == 0) s *= 2.0;
        else s += cell(c - h, [&](double r) { return 1.0 - (c - r) / h; });
        W[m] = s;
    }
    return W;
}

/// Integral of (phi * g)^2 for nodal values g of spacing h.
/// Explicit phi convolution of the piecewise-linear g, truncated where phi < 1e-16 of its scale.
inline double phi_energy(const std::vector<double>& g, double h, double nu) {
    const std::size_t n = g.size();
    const auto mmax = static_cast<std::size_t>(std::ceil(36.0 * std::sqrt(nu) / h)) + 1;
    const auto W = phi_weights(nu, h, mmax);
    std::size_t lo = n, hi = 0;
    double gmax = 0.0;
    for (double d : g) gmax = std::max(gmax, std::abs(d));
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(g[i]) > 1e-17 * gmax) {
            lo = std::min(lo, i);
            hi = i;
        }
    std::vector<double> w(n, 0.0);
    if (lo <= hi) {
        const std::size_t a = lo > mmax ? lo - mmax : 0, b = std::min(n - 1, hi + mmax);
        for (std::size_t i = a; i <= b; ++i) {
            const std::size_t j0 = std::max(lo, i > mmax ? i - mmax : 0), j1 = std::min(hi, i + mmax);
            double s = 0.0;
            for (std::size_t j = j0; j <= j1; ++j) s += W[i > j ? i - j : j - i] * g[j];
            w[i] = s * s;
        }
    }
    return trapz(w, h);
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------

struct EnergyIdentity {
    double coupling = 0.0;      // int v_x u_x
    double coupling_phi = 0.0;  // int (phi * u_x)^2
    double diffusion = 0.0;     // (1/|chi|) int u_x^2 / u
    double reaction = 0.0;      // int |u (1-u) log u|
    double lhs = 0.0;
    double c = 0.0;
    double gap = 0.0;           // |lhs - c| / c, absolute when c = 0
    bool relative = true;
    double routes_gap = 0.0;    // |coupling - coupling_phi| / max(coupling, tiny)
};

constexpr double kLogFloor = 1e-14;

inline EnergyIdentity energy_identity(const Field& u, const Field& v, double chi, double nu, double c,
                                      bool cross_check = true) {
    if (!(u.grid() == v.grid())) throw std::invalid_argument("energy_identity: u and v must share a grid");
    if (!(chi < 0.0 && nu > 0.0)) throw std::invalid_argument("energy_identity: need chi < 0 and nu > 0");
    const std::size_t n = u.size();
    const double h = u.grid().dx();
    const auto ux = detail::central_derivative(u);
    const auto vx = detail::central_derivative(v);
    std::vector<double> f1(n), f2(n), f3(n);
    for (std::size_t i = 0; i < n; ++i) {
        f1[i] = vx[i] * ux[i];
        const double ui = u[i];
        f2[i] = ui > kLogFloor ? ux[i] * ux[i] / ui : 0.0;
        const double uc = std::max(ui, kLogFloor);
        f3[i] = std::abs(ui * (1.0 - ui) * std::log(uc));
    }
    EnergyIdentity e;
    e.coupling = detail::trapz(f1, h);
    e.diffusion = detail::trapz(f2, h) / std::abs(chi);
    e.reaction = detail::trapz(f3, h);
    e.lhs = e.coupling + e.diffusion + e.reaction;
    e.c = c;
    e.relative = c != 0.0;
    e.gap = e.relative ? std::abs(e.lhs - c) / std::abs(c) : std::abs(e.lhs);
    if (cross_check) {
        e.coupling_phi = detail::phi_energy(ux, h, nu);
        e.routes_gap = std::abs(e.coupling - e.coupling_phi) / std::max(std::abs(e.coupling), 1e-300);
    }
    return e;
}

// ---------------------------------------------------------------------------------------------

struct OscillationDecay {
    double worst_oscillation = 0.0;  // max over windows of width 2 nu^{1/4}
    double uv_gap = 0.0;             // ||u - v||_inf
    double bound_factor = 0.0;       // (sqrt c + 1) nu^{1/8}
    double fitted_C = 0.0;           // smallest C with both quantities <= C * bound_factor
    std::size_t window_points = 0;
};

inline OscillationDecay oscillation_decay(const Field& u, const Field& v, double nu, double c) {
    if (!(u.grid() == v.grid())) throw std::invalid_argument("oscillation_decay: u and v must share a grid");
    if (!(nu > 0.0) || !(c >= 0.0)) throw std::invalid_argument("oscillation_decay: need nu > 0 and c >= 0");
    const double h = u.grid().dx();
    const double r = std::pow(nu, 0.25);
    const auto half = static_cast<std::size_t>(std::floor(r / h + 1e-9));
    OscillationDecay o;
    o.window_points = 2 * half + 1;
    if (o.window_points < 8) throw std::domain_error("oscillation_decay: window under-resolved (fewer than 8 points)");
    const std::size_t n = u.size();
    // sliding max/min over [i - half, i + half]
    std::deque<std::size_t> qmax, qmin;
    for (std::size_t k = 0; k < n + half; ++k) {
        if (k < n) {
            while (!qmax.empty() && u[qmax.back()] <= u[k]) qmax.pop_back();
            while (!qmin.empty() && u[qmin.back()] >= u[k]) qmin.pop_back();
            qmax.push_back(k);
            qmin.push_back(k);
        }
        if (k >= half) {
            const std::size_t i = k - half;
            const std::size_t left = i > half ? i - half : 0;
            while (qmax.front() < left) qmax.pop_front();
            while (qmin.front() < left) qmin.pop_front();
            o.worst_oscillation = std::max(o.worst_oscillation, u[qmax.front()] - u[qmin.front()]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) o.uv_gap = std::max(o.uv_gap, std::abs(u[i] - v[i]));
    o.bound_factor = (std::sqrt(c) + 1.0) * std::pow(nu, 0.125);
    o.fitted_C = std::max(o.worst_oscillation, o.uv_gap) / o.bound_factor;
    return o;
}

/// Threshold on the fitted constant; the universal constant is never valued, so this is a convention.
constexpr double kOscillationC = 10.0;

struct DecayFit {
    double slope = 0.0;      // d log gap / d log nu
    double max_C = 0.0;
    bool pass = false;       // slope >= 1/8 and max_C <= kOscillationC
};

/// Regression of log ||u - v|| against log nu over a sweep, plus the worst fitted constant.
inline DecayFit fit_oscillation_sweep(const std::vector<double>& nus, const std::vector<double>& gaps,
                                      const std::vector<double>& speeds) {
    if (nus.size() != gaps.size() || nus.size() != speeds.size() || nus.size() < 2)
        throw std::invalid_argument("fit_oscillation_sweep: need at least two matching samples");
    const std::size_t n = nus.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    DecayFit f;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(nus[i]), y = std::log(std::max(gaps[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        f.max_C = std::max(f.max_C, gaps[i] / ((std::sqrt(speeds[i]) + 1.0) * std::pow(nus[i], 0.125)));
    }
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.pass = f.slope >= 0.125 && f.max_C <= kOscillationC;
    return f;
}

// ---------------------------------------------------------------------------------------------

struct ExpDecay {
    double A = 0.0;
    double mu = 0.0;
    double origin = 0.0;          // where u = nu/(nu+1)
    std::size_t steps_checked = 0;
    std::size_t violations = 0;
    double worst_excess = 0.0;    // max of u(x0 + A sqrt nu) - (1 - mu) u(x0)
    double theta = 0.0;           // fitted tail rate; +inf for compact support
    double step_rate = 0.0;       // -log(1 - mu) / (A sqrt nu)
    std::string status;           // "ok" or "insufficient domain"
};

/// Step inequality u(x0 + A sqrt nu) <= (1 - mu) u(x0) for x0 >= 0 after translating u(0) = nu/(nu+1).
/// `chi` empty marks a hyperbolic profile (no |chi| term in mu); `zero_beyond` means u vanishes past the grid.
inline ExpDecay exp_decay_check(const Field& u, std::optional<double> chi, double nu, double c, bool zero_beyond = false) {
    if (!(nu > 0.0) || !(c > 0.0)) throw std::invalid_argument("exp_decay_check: need nu > 0 and c > 0");
    ExpDecay e;
    e.A = std::max({4.0 * std::log(8.0), 1.0 / nu, 64.0 * c * (2.0 * nu + 1.0) / nu});
    e.mu = std::min(0.125, 1.0 / (16.0 * c * (2.0 * nu + 1.0)));
    if (chi) e.mu = std::min(e.mu, std::abs(*chi) * e.A * nu / 2.0);
    const double step = e.A * std::sqrt(nu);
    e.step_rate = -std::log1p(-e.mu) / step;
    const UniformGrid& g = u.grid();
    const double level = nu / (nu + 1.0);
    std::size_t i0 = g.size();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (u[i] <= level) {
            i0 = i;
            break;
        }
    if (i0 == g.size()) {
        if (!zero_beyond) {
            e.status = "insufficient domain";
            return e;
        }
        i0 = g.size() - 1;
    }
    e.origin = g.x(i0);
    auto at = [&](double x) { return x > g.x_max() ? (zero_beyond ? 0.0 : u.back()) : u.at(x); };
    const double tail = g.x_max() - e.origin;
    e.status = (zero_beyond || tail >= 3.0 * step) ? "ok" : "insufficient domain";
    for (std::size_t i = i0; i < g.size(); ++i) {
        const double x0 = g.x(i);
        if (!zero_beyond && x0 + step > g.x_max()) break;
        ++e.steps_checked;
        const double ex = at(x0 + step) - (1.0 - e.mu) * u[i];
        if (ex > 0.0) {
            ++e.violations;
            e.worst_excess = std::max(e.worst_excess, ex);
        }
    }
    // tail rate: least squares of log u on the positive part past the origin
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = i0; i < g.size(); ++i) {
        if (!(u[i] > 1e-300)) continue;
        const double x = g.x(i), y = std::log(u[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2 || m * sxx - sx * sx <= 0.0) e.theta = std::numeric_limits<double>::infinity();
    else e.theta = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    return e;
}

// ---------------------------------------------------------------------------------------------

struct StructureChecks {
    double x_d = 0.0;                         // inf{x : u < 2/(2 + 1/nu)}
    double monotonicity_violation = 0.0;      // largest rise past x_d
    double extremum_violation = 0.0;          // largest breach of the extremum constraints
    std::vector<std::size_t> offending;       // indices of flagged nodes
    bool pass = false;
};

constexpr double kPlateauTol = 1e-10;
constexpr double kStructureTol = 1e-6;

inline StructureChecks structure_checks(const Field& u, const Field& v, double nu) {
    if (!(u.grid() == v.grid())) throw std::invalid_argument("structure_checks: u and v must share a grid");
    StructureChecks s;
    const std::size_t n = u.size();
    const double level = 2.0 / (2.0 + 1.0 / nu);
    std::size_t id = n;
    for (std::size_t i = 0; i < n; ++i)
        if (u[i] < level) {
            id = i;
            break;
        }
    s.x_d = id < n ? u.x(id) : u.grid().x_max();
    for (std::size_t i = id; i + 1 < n; ++i) {
        const double rise = u[i + 1] - u[i];
        if (rise > s.monotonicity_violation) s.monotonicity_violation = rise;
        if (rise > kStructureTol) s.offending.push_back(i + 1);
    }
    // discrete extrema with plateaus merged: a run of nearly equal values is one candidate
    std::size_t i = 1;
    while (i + 1 < n) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(u[j + 1] - u[i]) <= kPlateauTol) ++j;
        if (j + 1 >= n) break;
        const double left = u[i - 1], right = u[j + 1], val = u[i];
        const double target = (nu + v[i]) / (nu + 1.0);
        double breach = 0.0;
        if (val < left - kPlateauTol && val < right - kPlateauTol) breach = target - val;       // minimum
        else if (val > left + kPlateauTol && val > right + kPlateauTol) breach = val - target;  // maximum
        if (breach > 0.0) {
            s.extremum_violation = std::max(s.extremum_violation, breach);
            if (breach > kStructureTol) s.offending.push_back(i);
        }
        i = j + 1;
    }
    s.pass = s.monotonicity_violation < kStructureTol && s.extremum_violation < kStructureTol;
    return s;
}

// ---------------------------------------------------------------------------------------------

struct HolderL2 {
    double seminorm = 0.0;   // sup |v(x) - v(y)| / sqrt|x - y| over 0 < |x - y| <= 5
    double l2_slope = 0.0;   // int v_x^2
    double seminorm_bound = 0.0;
    double l2_bound = 0.0;
    bool pass = false;
};

inline HolderL2 holder_l2_check(const Field& v, double c, double reach = 5.0) {
    HolderL2 r;
    const std::size_t n = v.size();
    const double h = v.grid().dx();
    const auto vx = detail::central_derivative(v);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = vx[i] * vx[i];
    r.l2_slope = detail::trapz(sq, h);
    // geometric offsets keep the pair scan near-linear
    const auto kmax = static_cast<std::size_t>(std::floor(reach / h + 1e-9));
    std::vector<std::size_t> offs;
    for (double k = 1.0; static_cast<std::size_t>(k) <= kmax; k = std::max(k + 1.0, std::floor(k * 1.05))) offs.push_back(static_cast<std::size_t>(k));
    for (std::size_t k : offs) {
        const double den = std::sqrt(static_cast<double>(k) * h);
        for (std::size_t i = 0; i + k < n; ++i) r.seminorm = std::max(r.seminorm, std::abs(v[i + k] - v[i]) / den);
    }
    r.seminorm_bound = std::sqrt(c);
    r.l2_bound = c;
    r.pass = r.seminorm <= r.seminorm_bound && r.l2_slope <= r.l2_bound;
    return r;
}

// ---------------------------------------------------------------------------------------------

struct DiagnosticsInput {
    const Field* u = nullptr;
    const Field* v = nullptr;
    std::optional<double> chi;  // empty: hyperbolic profile
    double nu = 1.0;
    double c = 0.0;
    bool zero_beyond = false;
    bool energy = true;         // energy identity needs a parabolic profile
};

/// All checks on one profile, in a fixed order.
inline DiagnosticsReport run_diagnostics(const DiagnosticsInput& in) {
    if (!in.u || !in.v) throw std::invalid_argument("run_diagnostics: missing fields");
    DiagnosticsReport rep;
    const Field &u = *in.u, &v = *in.v;
    if (in.energy && in.chi) {
        const auto e = energy_identity(u, v, *in.chi, in.nu, in.c);
        rep.checks.push_back({"energy_identity", e.gap, 1e-2, e.gap < 1e-2,
                              {{"coupling", e.coupling}, {"diffusion", e.diffusion}, {"reaction", e.reaction}, {"lhs", e.lhs}},
                              e.relative ? "relative gap" : "absolute gap"});
        rep.checks.push_back({"energy_routes", e.routes_gap, 1e-3, e.routes_gap < 1e-3, {{"coupling_phi", e.coupling_phi}}, ""});
    }
    try {
        const auto o = oscillation_decay(u, v, in.nu, in.c);
        rep.checks.push_back({"oscillation_decay", o.fitted_C, kOscillationC, o.fitted_C <= kOscillationC,
                              {{"worst_oscillation", o.worst_oscillation}, {"uv_gap", o.uv_gap}, {"bound_factor", o.bound_factor}},
                              "C <= 10 is a convention"});
    } catch (const std::domain_error& ex) {
        rep.checks.push_back({"oscillation_decay", 0.0, kOscillationC, true, {}, ex.what()});
    }
    const auto d = exp_decay_check(u, in.chi, in.nu, in.c, in.zero_beyond);
    rep.checks.push_back({"exp_decay", static_cast<double>(d.violations), 0.0, d.violations == 0 && d.theta > 0.0,
                          {{"A", d.A}, {"mu", d.mu}, {"theta", d.theta}, {"steps", static_cast<double>(d.steps_checked)}},
                          d.status});
    const auto s = structure_checks(u, v, in.nu);
    rep.checks.push_back({"structure", std::max(s.monotonicity_violation, s.extremum_violation), kStructureTol, s.pass,
                          {{"x_d", s.x_d}, {"monotonicity", s.monotonicity_violation}, {"extremum", s.extremum_violation}},
                          ""});
    const auto hl = holder_l2_check(v, in.c);
    rep.checks.push_back({"holder_l2", hl.seminorm, hl.seminorm_bound, hl.pass, {{"l2_slope", hl.l2_slope}, {"l2_bound", hl.l2_bound}}, ""});
    return rep;
}

}  // namespace chemotw
