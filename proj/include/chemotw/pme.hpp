#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "banded.hpp"
#include "grid.hpp"
#include "newton.hpp"
#include "ode.hpp"

namespace chemotw {

/// Minimal speed of -c u' - (u u')' = eps u'' + u(1-u).
inline double pm_min_speed(double eps) {
    if (!(eps >= 0.0)) throw std::domain_error("pm_min_speed: eps must be nonnegative");
    return 2.0 * eps < 1.0 ? 1.0 / std::numbers::sqrt2 + std::numbers::sqrt2 * eps : 2.0 * std::sqrt(eps);
}

/// Minimal wave at eps = 0, support (-inf, 0).
inline double sharp_wave(double x) { return x >= 0.0 ? 0.0 : -std::expm1(x / std::numbers::sqrt2); }

// ---------------------------------------------------------------------------------------------

/// Smooth bump exp(-1/(1-r^2)), r = (x - centre)/half_width, with derivatives.
struct BumpTest {
    double centre = 0.0;
    double half_width = 0.5;

    double lo() const { return centre - half_width; }
    double hi() const { return centre + half_width; }

    // returns {psi, psi', psi''}
    std::array<double, 3> eval(double x) const {
        const double r = (x - centre) / half_width;
        if (std::abs(r) >= 1.0) return {0.0, 0.0, 0.0};
        const double s = 1.0 - r * r;
        const double p = std::exp(-1.0 / s);
        const double dp = -2.0 * r * p / (s * s);
        const double ddp = -2.0 * p / (s * s) - 2.0 * r * dp / (s * s) - 8.0 * r * r * p / (s * s * s);
        const double k = 1.0 / half_width;
        return {p, dp * k, ddp * k * k};
    }
};

/// Twelve bumps: four of each support width 1, 2 and 4, spread evenly over the grid.
inline std::vector<BumpTest> standard_test_set(const UniformGrid& g) {
    std::vector<BumpTest> out;
    for (double w : {1.0, 2.0, 4.0}) {
        const double a = g.x_min() + w / 2, b = g.x_max() - w / 2;
        if (b < a) throw std::invalid_argument("standard_test_set: grid shorter than the widest bump");
        for (int k = 0; k < 4; ++k) out.push_back({a + (b - a) * (k + 0.5) / 4.0, w / 2});
    }
    return out;
}

/// Twelve bumps as above but centred on a window [lo, hi] (e.g. around a front).
inline std::vector<BumpTest> window_test_set(double lo, double hi) {
    std::vector<BumpTest> out;
    for (double w : {1.0, 2.0, 4.0})
        for (int k = 0; k < 4; ++k) out.push_back({lo + (hi - lo) * (k + 0.5) / 4.0, w / 2});
    return out;
}

namespace detail {

// Trapezoid over the nodes; for integrands vanishing with all derivatives at both ends of
// the support this converges faster than any power of h.
inline double trapezoid_nodes(const std::vector<double>& f, double h) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

}  // namespace detail

/// Largest distributional defect
///   | c<u, psi'> + <u u_x, psi'> - eps <u, psi''> - <u(1-u), psi> |
/// over the supplied tests.
inline double pme_residual(const Field& u, double c, double eps, const std::vector<BumpTest>& tests) {
    const UniformGrid& g = u.grid();
    const std::size_t n = u.size();
    const double h = g.dx();
    // u_x: central, one-sided where the stencil would straddle the edge of {u > 0}
    std::vector<double> ux(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            ux[i] = (u[1] - u[0]) / h;
        } else if (i == n - 1) {
            ux[i] = (u[i] - u[i - 1]) / h;
        } else if (u[i] > 0 && u[i + 1] <= 0 && i >= 2) {
            ux[i] = (3 * u[i] - 4 * u[i - 1] + u[i - 2]) / (2 * h);
        } else if (u[i] > 0 && u[i - 1] <= 0 && i + 2 < n) {
            ux[i] = (-3 * u[i] + 4 * u[i + 1] - u[i + 2]) / (2 * h);
        } else {
            ux[i] = (u[i + 1] - u[i - 1]) / (2 * h);
        }
    }
    double worst = 0.0;
    std::vector<double> f(n);
    for (const auto& t : tests) {
        if (t.lo() < g.x_min() - 1e-12 || t.hi() > g.x_max() + 1e-12)
            throw std::invalid_argument("pme_residual: test function support exceeds the grid");
        for (std::size_t i = 0; i < n; ++i) {
            const auto [p, dp, ddp] = t.eval(g.x(i));
            f[i] = c * u[i] * dp + u[i] * ux[i] * dp - eps * u[i] * ddp - u[i] * (1 - u[i]) * p;
        }
        worst = std::max(worst, std::abs(detail::trapezoid_nodes(f, h)));
    }
    return worst;
}

// ---------------------------------------------------------------------------------------------

struct PmeWave {
    double eps = 0.0;
    double c = 0.0;
    Field u;
    std::optional<double> support_edge;  // empty: positive everywhere
    double residual = 0.0;
    bool converged = false;
    std::string status;
};

struct PmeOptions {
    double half_length = 40.0;
    double dx = 2e-3;
    double pin = 0.5;  // u(0) = pin fixes the translation
    bool attempt_below_min_speed = false;  // otherwise c < pm_min_speed(eps) returns "no wave" directly
};

/// Smooth (eps > 0) wave at a given speed. The problem is posed with u = 1 at the left end and
/// u(0) = pin; no condition is imposed on the right, where the profile follows the ODE.
inline PmeWave pme_wave_solve(double eps, double c, const PmeOptions& opt = {}) {
    if (!(eps > 0.0)) throw std::domain_error("pme_wave_solve: eps must be positive");
    if (!(c > 0.0)) throw std::domain_error("pme_wave_solve: c must be positive");
    PmeWave w;
    w.eps = eps;
    w.c = c;
    const UniformGrid g = UniformGrid::symmetric(opt.half_length, opt.dx);
    w.u = Field(g, 0.0);
    if (!opt.attempt_below_min_speed && c < pm_min_speed(eps) * (1.0 - 1e-12)) {
        w.status = "no wave at this speed";
        return w;
    }
    const std::size_t n = g.size(), i0 = g.nearest(0.0);
    const double h = g.dx(), ih2 = 1.0 / (h * h);

    // Row layout: 0 -> left data; i (1 <= i < i0) -> equation at node i; i0 -> pin;
    // i + 1 (i0 <= i <= n-2) -> equation at node i. Bandwidth kl = 2, ku = 1.
    auto eq_row = [&](std::size_t i) { return i < i0 ? i : i + 1; };
    auto assemble = [&](const std::vector<double>& z, std::vector<double>& F, BandMatrix* J) {
        F[0] = z[0] - 1.0;
        if (J) J->add(0, 0, 1.0);
        F[i0] = z[i0] - opt.pin;
        if (J) J->add(i0, i0, 1.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const std::size_t r = eq_row(i);
            const double um = z[i - 1], u0 = z[i], up = z[i + 1];
            const double dp = eps + 0.5 * (u0 + up), dm = eps + 0.5 * (um + u0);
            const double flux = (dp * (up - u0) - dm * (u0 - um)) * ih2;
            F[r] = flux + c * (up - um) / (2 * h) + u0 * (1 - u0);
            if (J) {
                J->add(r, i - 1, (-0.5 * (u0 - um) + dm) * ih2 - c / (2 * h));
                J->add(r, i, (0.5 * (up - u0) - dp - 0.5 * (u0 - um) - dm) * ih2 + 1 - 2 * u0);
                J->add(r, i + 1, (0.5 * (up - u0) + dp) * ih2 + c / (2 * h));
            }
        }
    };
    // start from the eps = 0 sharp wave shifted to meet the pin, with an exponential tail
    std::vector<double> z(n);
    const double shift = std::numbers::sqrt2 * std::log(1.0 - opt.pin);
    const double lam = (c + std::sqrt(std::max(0.0, c * c - 4 * eps))) / (2 * eps);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = g.x(i);
        z[i] = x < -shift ? -std::expm1((x + shift) / std::numbers::sqrt2) : 0.0;
        if (x > 0) z[i] = std::max(z[i], opt.pin * std::exp(-std::min(lam, 1.0) * x));
    }
    z[0] = 1.0;
    BandMatrix J(n, 2, 1);
    std::vector<char> transient(n, 0);
    NewtonOptions no;
    no.max_iter = 200;
    auto admissible = [](const std::vector<double>& t) {
        return std::all_of(t.begin(), t.end(), [](double x) { return std::isfinite(x) && std::abs(x) < 10.0; });
    };
    const auto rep = newton_solve(z, J, transient, assemble, admissible, [](int) { return false; }, no);
    w.residual = rep.residual;
    const bool positive = std::all_of(z.begin(), z.end(), [](double x) { return x > -1e-10; });
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < n; ++i) decreasing = decreasing && z[i + 1] < z[i] + 1e-12;
    w.converged = rep.converged && positive && decreasing;
    w.status = w.converged ? "ok" : (rep.converged ? "no wave at this speed" : "not converged");
    if (std::all_of(z.begin(), z.end(), [](double x) { return std::isfinite(x); })) w.u = Field(g, std::move(z));
    return w;
}

/// eps = 0: the closed-form sharp wave at the minimal speed, sampled on the symmetric grid.
inline PmeWave sharp_pme_wave(const PmeOptions& opt = {}) {
    PmeWave w;
    w.eps = 0.0;
    w.c = pm_min_speed(0.0);
    const UniformGrid g = UniformGrid::symmetric(opt.half_length, opt.dx);
    w.u = Field::sample(g, sharp_wave);
    w.support_edge = 0.0;
    w.residual = pme_residual(w.u, w.c, 0.0, standard_test_set(g));
    w.converged = true;
    w.status = "ok (closed form)";
    return w;
}

// ---------------------------------------------------------------------------------------------

/// Phase-plane shooting reference for the eps > 0 wave: with q = (eps + u) u',
///   dq/du = -c - u(1-u)(eps+u)/q,   dx/du = (eps+u)/q,
/// started on the unstable manifold of u = 1 and normalised by x(pin) = 0.
class PmeShootingOracle {
public:
    PmeShootingOracle(double eps, double c, double pin = 0.5, double u_min = 1e-7) : eps_(eps), c_(c) {
        const double mu = (-c + std::sqrt(c * c + 4 * (1 + eps))) / (2 * (1 + eps));
        const double eta = 1e-7;
        std::array<double, 2> y{-(1 + eps) * mu * eta, 0.0};  // (q, x)
        auto rhs = [&](double u, const std::array<double, 2>& s) {
            return std::array<double, 2>{-c_ - u * (1 - u) * (eps_ + u) / s[0], (eps_ + u) / s[0]};
        };
        OdeOptions o;
        o.rtol = 1e-12;
        o.atol = 1e-14;
        o.h_init = 1e-9;
        us_.push_back(1 - eta);
        qs_.push_back(y[0]);
        xs_.push_back(0.0);
        auto rec = [&](double u, const std::array<double, 2>& s) {
            us_.push_back(u);
            qs_.push_back(s[0]);
            xs_.push_back(s[1]);
            return s[0] >= 0.0;
        };
        dopri5<2>(rhs, 1 - eta, y, u_min, o, rec);
        // normalise so that x(pin) = 0
        const double xp = x_of_u(pin);
        for (double& x : xs_) x -= xp;
    }

    /// Position where the wave takes the value u (u within the integrated range).
    double x_of_u(double u) const {
        // us_ is decreasing; cubic Hermite on x(u) with slope (eps+u)/q
        std::size_t k = 0;
        while (k + 2 < us_.size() && us_[k + 1] > u) ++k;
        const double u0 = us_[k], u1 = us_[k + 1];
        const double t = (u - u0) / (u1 - u0), d = u1 - u0;
        const double m0 = (eps_ + u0) / qs_[k] * d, m1 = (eps_ + u1) / qs_[k + 1] * d;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * xs_[k] + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * xs_[k + 1] +
               (t3 - t2) * m1;
    }

    /// Wave value at x, by inverting x(u) (bisection); 1 / ~0 beyond the integrated range.
    double u_at(double x) const {
        if (x <= xs_.front()) return us_.front();
        if (x >= xs_.back()) return us_.back();
        double lo = us_.back(), hi = us_.front();
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (x_of_u(mid) > x) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    }

    double x_min() const { return xs_.front(); }
    double x_max() const { return xs_.back(); }

private:
    double eps_, c_;
    std::vector<double> us_, qs_, xs_;
};

}  // namespace chemotw
