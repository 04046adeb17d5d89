#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "kernel.hpp"
#include "ode.hpp"
#include "pme.hpp"

namespace chemotw {

struct HypWave {
    double nu = 1.0;
    double c = 0.0;
    Field u_left;  // on [-X, 0]; the last node holds u(0-)
    Field v;       // on [-X, X], recomputed from u_left
    double jump_value = 0.0;
    double fixed_point_gap = 0.0;
    int iterations = 0;
    std::vector<double> gap_history;
    std::string seed;

    double X() const { return -u_left.grid().x_min(); }
    double v0() const { return v.at(0.0); }
};

struct HypOptions {
    double tol = 1e-7;
    double omega = 0.3;        // damping of the profile update
    int max_iter = 400;
    double eta = 1e-8;         // start below the jump value
    double s0 = 1e-7;          // distance from the jump where the backward integration starts
    double dx = 0.0;           // 0: min(sqrt(nu), 1)/40
    double X = 0.0;            // 0: 40 sqrt(nu) + 40
    int anderson_depth = 5;    // 0 disables Anderson mixing
};

class SingularInteriorPoint : public std::runtime_error {
public:
    SingularInteriorPoint(double x, double value)
        : std::runtime_error("singular interior point: c + v_x = " + std::to_string(value) + " at x = " + std::to_string(x)),
          x_(x) {}
    double x() const { return x_; }

private:
    double x_;
};

class FixedPointFailure : public std::runtime_error {
public:
    explicit FixedPointFailure(std::vector<double> history)
        : std::runtime_error("hyperbolic wave: fixed point not reached"), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

/// Right-hand side of the first-order profile equation
///   u' = -u ((nu + v)/nu - ((nu+1)/nu) u) / (c + v_x).
inline double hyp_rhs(double nu, double c, double u, double v, double vx) {
    return -u * ((nu + v) / nu - (nu + 1.0) / nu * u) / (c + vx);
}

/// Integrates the profile equation from just left of the jump down to the grid start.
/// Returns values at the nodes of `g` (last node = jump value).
inline std::vector<double> integrate_backward(const KernelConvolution& conv, const UniformGrid& g, double nu, double c,
                                              double jump, double eta = 1e-8, double s0 = 1e-7) {
    const std::size_t n = g.size();
    std::vector<double> u(n);
    u[n - 1] = jump;
    auto f = [&](double x, const std::array<double, 1>& y) {
        const double d = c + conv.slope_at(x);
        if (!(d > 0.0)) throw SingularInteriorPoint(x, d);
        return std::array<double, 1>{hyp_rhs(nu, c, y[0], conv.value_at(x), conv.slope_at(x))};
    };
    OdeOptions o;
    o.rtol = 1e-11;
    o.atol = 1e-13;
    o.h_init = s0 * 0.1;
    std::array<double, 1> y{jump - eta};
    double x = -s0;
    for (std::size_t i = n - 1; i-- > 0;) {
        const double xt = g.x(i);
        y = dopri5<1>(f, x, y, xt, o);
        x = xt;
        o.h_init = 0.0;
        u[i] = y[0];
        const double d = c + conv.slope(i);
        if (!(d > 0.0) && i > 0) throw SingularInteriorPoint(xt, d);
    }
    return u;
}

inline UniformGrid hyp_grid(double nu, const HypOptions& opt) {
    const double X = opt.X > 0 ? opt.X : 40.0 * std::sqrt(nu) + 40.0;
    const double dx = opt.dx > 0 ? opt.dx : std::min(std::sqrt(nu), 1.0) / 40.0;
    const auto cells = static_cast<std::size_t>(std::ceil(X / dx));
    return UniformGrid(-X, X / static_cast<double>(cells), cells + 1);
}

/// Discontinuous wave: u jumps to 0 at x = 0 and c = v(0)/sqrt(nu).
inline HypWave construct_discontinuous_wave(double nu, double tol = 1e-7, HypOptions opt = {}) {
    if (!(nu > 0.0)) throw std::domain_error("construct_discontinuous_wave: nu must be positive");
    opt.tol = tol;
    const UniformGrid g = hyp_grid(nu, opt);
    const std::size_t n = g.size();
    const double a = std::sqrt(nu);

    // seed: sharp wave with its edge value lifted to the lower bound on the jump
    const double lb = 2.0 * nu / (2.0 * nu + 1.0);
    const double J0 = lb + 0.25 * (1.0 - lb);
    const double ell = std::numbers::sqrt2 * std::max(1.0, a);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = 1.0 - (1.0 - J0) * std::exp(g.x(i) / ell);

    HypWave w;
    w.nu = nu;
    w.seed = "rescaled sharp wave";
    // Anderson mixing on the map u -> G(u); plain damping when depth = 0 or on safeguard.
    std::vector<std::vector<double>> dG, dF;
    std::vector<double> prevG, prevF;
    double c = 0.0;
    std::vector<double> last_integrated;
    // last iterate whose image was computed, for retreating after a failed step
    std::vector<double> base_u;
    int retreats = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        KernelConvolution conv(Field(g, u), nu, 1.0, 0.0);
        const double v0 = conv.value(n - 1);
        c = v0 / a;
        const double J = (nu + v0) / (nu + 1.0);
        std::vector<double> G;
        try {
            G = integrate_backward(conv, g, nu, c, J, opt.eta, opt.s0);
        } catch (const SingularInteriorPoint&) {
            if (base_u.empty() || ++retreats > 20) throw;
            // pull the iterate halfway back and drop the mixing history
            for (std::size_t i = 0; i < n; ++i) u[i] = 0.5 * (u[i] + base_u[i]);
            dF.clear();
            dG.clear();
            prevF.clear();
            prevG.clear();
            w.gap_history.push_back(std::numeric_limits<double>::infinity());
            w.iterations = it + 1;
            continue;
        }
        retreats = 0;
        base_u = u;
        std::vector<double> Fr(n);
        double gap = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Fr[i] = G[i] - u[i];
            gap = std::max(gap, std::abs(Fr[i]));
        }
        w.gap_history.push_back(gap);
        last_integrated = G;
        w.iterations = it + 1;
        if (gap < tol) {
            w.fixed_point_gap = gap;
            break;
        }
        std::vector<double> next(n);
        bool used_anderson = false;
        if (opt.anderson_depth > 0 && !prevF.empty()) {
            std::vector<double> df(n), dg(n);
            for (std::size_t i = 0; i < n; ++i) {
                df[i] = Fr[i] - prevF[i];
                dg[i] = G[i] - prevG[i];
            }
            dF.push_back(std::move(df));
            dG.push_back(std::move(dg));
            if (static_cast<int>(dF.size()) > opt.anderson_depth) {
                dF.erase(dF.begin());
                dG.erase(dG.begin());
            }
            // least squares min |F - dF gamma| by normal equations with a small ridge
            const std::size_t m = dF.size();
            std::vector<double> A(m * m, 0.0), b(m, 0.0);
            for (std::size_t p = 0; p < m; ++p) {
                for (std::size_t q = 0; q < m; ++q) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < n; ++i) s += dF[p][i] * dF[q][i];
                    A[p * m + q] = s;
                }
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += dF[p][i] * Fr[i];
                b[p] = s;
            }
            double tr = 0.0;
            for (std::size_t p = 0; p < m; ++p) tr += A[p * m + p];
            for (std::size_t p = 0; p < m; ++p) A[p * m + p] += 1e-10 * tr + 1e-300;
            // Gaussian elimination (m is tiny)
            std::vector<double> gam = b;
            bool ok = true;
            for (std::size_t k = 0; k < m && ok; ++k) {
                std::size_t piv = k;
                for (std::size_t r = k + 1; r < m; ++r)
                    if (std::abs(A[r * m + k]) > std::abs(A[piv * m + k])) piv = r;
                if (A[piv * m + k] == 0.0) {
                    ok = false;
                    break;
                }
                if (piv != k) {
                    for (std::size_t q = 0; q < m; ++q) std::swap(A[k * m + q], A[piv * m + q]);
                    std::swap(gam[k], gam[piv]);
                }
                for (std::size_t r = k + 1; r < m; ++r) {
                    const double l = A[r * m + k] / A[k * m + k];
                    for (std::size_t q = k; q < m; ++q) A[r * m + q] -= l * A[k * m + q];
                    gam[r] -= l * gam[k];
                }
            }
            if (ok) {
                for (std::size_t k = m; k-- > 0;) {
                    double s = gam[k];
                    for (std::size_t q = k + 1; q < m; ++q) s -= A[k * m + q] * gam[q];
                    gam[k] = s / A[k * m + k];
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double xg = G[i], xf = Fr[i];
                    for (std::size_t p = 0; p < m; ++p) {
                        xg -= gam[p] * dG[p][i];
                        xf -= gam[p] * dF[p][i];
                    }
                    // damped Anderson step: x+ = (x_g) - (1 - omega)(x_f)
                    next[i] = xg - (1.0 - opt.omega) * xf;
                }
                used_anderson = std::all_of(next.begin(), next.end(), [](double x) { return std::isfinite(x) && x > 0.0 && x <= 1.0 + 1e-9; });
            }
        }
        if (!used_anderson) {
            for (std::size_t i = 0; i < n; ++i) next[i] = (1.0 - opt.omega) * u[i] + opt.omega * G[i];
            dF.clear();
            dG.clear();
        }
        prevF = std::move(Fr);
        prevG = std::move(G);
        u = std::move(next);
        if (it + 1 == opt.max_iter) throw FixedPointFailure(w.gap_history);
    }
    if (w.gap_history.empty() || w.gap_history.back() >= tol) throw FixedPointFailure(w.gap_history);

    w.u_left = Field(g, last_integrated);
    w.jump_value = last_integrated.back();
    w.c = c;
    // v on [-X, X] from the final profile
    KernelConvolution conv(w.u_left, nu, 1.0, 0.0);
    const UniformGrid gv(g.x_min(), g.dx(), 2 * (n - 1) + 1);
    w.v = Field::sample(gv, [&](double x) { return conv.value_at(x); });
    return w;
}

struct JumpCheck {
    double jump_error = 0.0;   // |u(0-) - (nu + v(0))/(nu+1)|
    double speed_error = 0.0;  // |c sqrt(nu) - v(0)|
    double slope_error = 0.0;  // |v_x(0-) + c|
};

inline JumpCheck jump_check(const HypWave& w) {
    KernelConvolution conv(w.u_left, w.nu, 1.0, 0.0);
    const double v0 = conv.value_at(0.0);
    JumpCheck j;
    j.jump_error = std::abs(w.jump_value - (w.nu + v0) / (w.nu + 1.0));
    j.speed_error = std::abs(w.c * std::sqrt(w.nu) - v0);
    j.slope_error = std::abs(conv.slope_at(0.0) + w.c);
    return j;
}

struct BracketVerdict {
    bool inside = false;
    double lower = 0.0;
    double upper = 0.0;
    double margin_low = 0.0;   // c - lower
    double margin_high = 0.0;  // upper - c
};

/// Open interval (sqrt(nu)/(2nu+1), 1/(2 sqrt(nu))).
inline BracketVerdict check_speed_bracket(double nu, double c) {
    if (!(nu > 0.0)) throw std::domain_error("check_speed_bracket: nu must be positive");
    BracketVerdict b;
    b.lower = std::sqrt(nu) / (2.0 * nu + 1.0);
    b.upper = 1.0 / (2.0 * std::sqrt(nu));
    b.margin_low = c - b.lower;
    b.margin_high = b.upper - c;
    b.inside = b.margin_low > 0.0 && b.margin_high > 0.0;
    return b;
}

// ---------------------------------------------------------------------------------------------

struct OracleTrace {
    Field u;                // oracle values on the covered nodes (other nodes hold NaN-free zeros)
    std::size_t first = 0;  // covered node range [first, last]
    std::size_t last = 0;
    double t_reached = 0.0;
    bool truncated = false;  // left the sampled v domain before t_span
};

/// Profile along the characteristic tau' = -c - v'(tau), tau(0) = x_m, from the closed formula
///   u(tau(t)) = u_m E(t) / (1 + u_m ((nu+1)/nu) int_0^t E),   E(t) = exp(int_0^t (nu + v(tau))/nu).
/// t_span > 0 follows the characteristic leftwards (c + v_x > 0), t_span < 0 rightwards.
/// `prof` must provide value_at(x) and slope_at(x).
template <class Profile>
OracleTrace explicit_solution_oracle(const Profile& prof, const UniformGrid& g, double nu, double c, double x_m,
                                     double u_m, double t_span) {
    if (!(x_m > g.x_min() && x_m < g.x_max())) throw std::invalid_argument("explicit_solution_oracle: x_m outside grid");
    if (u_m < 0.0) throw std::invalid_argument("explicit_solution_oracle: u_m must be nonnegative");
    OracleTrace tr;
    std::vector<double> out(g.size(), 0.0);
    const std::size_t im = g.nearest(x_m);
    tr.first = tr.last = im;
    out[im] = u_m;
    if (u_m == 0.0 || t_span == 0.0) {
        tr.u = Field(g, std::move(out));
        return tr;
    }
    // Integrate in tau with state (t, I, R), R = e^{-I} int_0^t E:
    //   dt/dtau = -1/(c + v'),  dI/dtau = ((nu+v)/nu) dt/dtau,  dR/dtau = (1 - R (nu+v)/nu) dt/dtau.
    auto f = [&](double x, const std::array<double, 3>& y) {
        const double d = c + prof.slope_at(x);
        if (d == 0.0) throw SingularInteriorPoint(x, d);
        const double dt = -1.0 / d;
        const double a = (nu + prof.value_at(x)) / nu;
        return std::array<double, 3>{dt, a * dt, (1.0 - y[2] * a) * dt};
    };
    OdeOptions o;
    o.rtol = 1e-12;
    o.atol = 1e-14;
    const int dir = t_span > 0 ? -1 : 1;  // direction in x
    std::array<double, 3> y{0.0, 0.0, 0.0};
    double x = g.x(im);
    const double k = (nu + 1.0) / nu;
    for (std::size_t i = im;;) {
        if (dir < 0 && i == 0) break;
        if (dir > 0 && i + 1 >= g.size()) break;
        const std::size_t j = dir < 0 ? i - 1 : i + 1;
        const auto yn = dopri5<3>(f, x, y, g.x(j), o);
        if (std::abs(yn[0]) > std::abs(t_span)) break;
        y = yn;
        x = g.x(j);
        i = j;
        out[i] = u_m / (std::exp(-y[1]) + u_m * k * y[2]);
        tr.first = std::min(tr.first, i);
        tr.last = std::max(tr.last, i);
        tr.t_reached = y[0];
    }
    tr.truncated = (dir < 0 ? tr.first == 0 : tr.last + 1 == g.size()) && std::abs(tr.t_reached) < std::abs(t_span);
    tr.u = Field(g, std::move(out));
    return tr;
}

/// Cubic Hermite view of a sampled field, with slopes by central differences.
class SampledProfile {
public:
    explicit SampledProfile(const Field& v) : v_(v) {}

    double value_at(double x) const {
        const auto [i, t] = locate(x);
        const double h = v_.grid().dx();
        const double m0 = slope(i) * h, m1 = slope(i + 1) * h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * v_[i] + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * v_[i + 1] + (t3 - t2) * m1;
    }

    double slope_at(double x) const {
        const auto [i, t] = locate(x);
        const double h = v_.grid().dx();
        const double m0 = slope(i) * h, m1 = slope(i + 1) * h;
        const double t2 = t * t;
        return ((6 * t2 - 6 * t) * v_[i] + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * v_[i + 1] + (3 * t2 - 2 * t) * m1) / h;
    }

private:
    std::pair<std::size_t, double> locate(double x) const {
        const auto& g = v_.grid();
        double s = (x - g.x_min()) / g.dx();
        s = std::clamp(s, 0.0, static_cast<double>(g.size() - 1));
        auto i = static_cast<std::size_t>(s);
        if (i >= g.size() - 1) i = g.size() - 2;
        return {i, s - static_cast<double>(i)};
    }
    double slope(std::size_t i) const {
        const double h = v_.grid().dx();
        if (i == 0) return (v_[1] - v_[0]) / h;
        if (i + 1 == v_.size()) return (v_[i] - v_[i - 1]) / h;
        return (v_[i + 1] - v_[i - 1]) / (2 * h);
    }
    Field v_;
};

/// Field-based form: v is interpolated by cubic Hermite splines.
inline OracleTrace explicit_solution_oracle(const Field& v, double nu, double c, double x_m, double u_m, double t_span) {
    return explicit_solution_oracle(SampledProfile(v), v.grid(), nu, c, x_m, u_m, t_span);
}

/// Sup gap between u_left and the closed formula started one node left of the jump and followed to -X.
/// v comes from the exact convolution of u_left, or from cubic Hermite interpolation of w.v.
inline double explicit_oracle_gap(const HypWave& w, bool exact_v = true) {
    const UniformGrid& g = w.u_left.grid();
    const std::size_t m = g.size() - 2;
    const double t_span = 1e300;
    OracleTrace tr;
    if (exact_v) {
        const KernelConvolution conv(w.u_left, w.nu, 1.0, 0.0);
        tr = explicit_solution_oracle(conv, g, w.nu, w.c, g.x(m), w.u_left[m], t_span);
    } else {
        tr = explicit_solution_oracle(SampledProfile(w.v), g, w.nu, w.c, g.x(m), w.u_left[m], t_span);
    }
    double gap = 0.0;
    for (std::size_t i = tr.first; i <= tr.last; ++i) gap = std::max(gap, std::abs(tr.u[i] - w.u_left[i]));
    return gap;
}

// ---------------------------------------------------------------------------------------------

struct HypPmeEntry {
    double nu = 0.0;
    double c = 0.0;
    double distance = 0.0;       // sup |u - sharp wave(. - shift)| over the line, u = 0 right of the jump
    double shift = 0.0;
    bool c_le_2 = false;
    bool above_floor = false;    // c > sqrt(nu)/(2nu+1)
    double v_at_minus_half_c = 0.0;
    bool v_lower_bound = false;  // v(-c/2) >= c^2/4
    HypWave wave;
};

struct AlignedDistance {
    double distance = 0.0;
    double shift = 0.0;
};

/// Translate the sharp wave to minimise the sup distance to a profile that vanishes right of 0.
/// Scan at a quarter of the grid step on [-2, 2], then golden-section refinement around the best scan point.
inline AlignedDistance aligned_sharp_distance(const Field& u_left) {
    auto dist = [&](double s) {
        double d = s > 0.0 ? sharp_wave(-s) : 0.0;
        for (std::size_t i = 0; i < u_left.size(); ++i) d = std::max(d, std::abs(u_left[i] - sharp_wave(u_left.x(i) - s)));
        return d;
    };
    const double step = u_left.grid().dx() / 4.0;
    AlignedDistance best{dist(0.0), 0.0};
    for (double s = -2.0; s <= 2.0; s += step) {
        const double d = dist(s);
        if (d < best.distance) best = {d, s};
    }
    double a = best.shift - step, b = best.shift + step;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int k = 0; k < 40; ++k) {
        const double m1 = b - r * (b - a), m2 = a + r * (b - a);
        if (dist(m1) < dist(m2)) b = m2;
        else a = m1;
    }
    const double s = 0.5 * (a + b), d = dist(s);
    if (d < best.distance) best = {d, s};
    return best;
}

struct HypPmeReport {
    std::vector<HypPmeEntry> entries;
    double target = 1.0 / std::numbers::sqrt2;
    bool speeds_approach = false;  // |c - 1/sqrt 2| strictly decreasing along the sequence
    bool verdict = false;
    std::string summary;
};

inline HypPmeReport hyp_to_pme_limit(const std::vector<double>& nus, double tol = 1e-7, double final_speed_tol = 0.05,
                                     double final_distance_tol = 0.05) {
    for (std::size_t i = 0; i < nus.size(); ++i) {
        if (!(nus[i] > 0.0 && nus[i] <= 1.0)) throw std::invalid_argument("hyp_to_pme_limit: nu must lie in (0, 1]");
        if (i > 0 && !(nus[i] < nus[i - 1])) throw std::invalid_argument("hyp_to_pme_limit: sequence must decrease");
    }
    HypPmeReport rep;
    for (double nu : nus) {
        HypPmeEntry e;
        e.nu = nu;
        e.wave = construct_discontinuous_wave(nu, tol);
        e.c = e.wave.c;
        const AlignedDistance ad = aligned_sharp_distance(e.wave.u_left);
        e.distance = ad.distance;
        e.shift = ad.shift;
        e.c_le_2 = e.c <= 2.0;
        e.above_floor = e.c > std::sqrt(nu) / (2 * nu + 1);
        KernelConvolution conv(e.wave.u_left, nu, 1.0, 0.0);
        e.v_at_minus_half_c = conv.value_at(-e.c / 2);
        e.v_lower_bound = e.v_at_minus_half_c >= e.c * e.c / 4;
        rep.entries.push_back(std::move(e));
    }
    rep.speeds_approach = true;
    for (std::size_t i = 1; i < rep.entries.size(); ++i)
        rep.speeds_approach = rep.speeds_approach && std::abs(rep.entries[i].c - rep.target) < std::abs(rep.entries[i - 1].c - rep.target);
    bool checks = true;
    for (const auto& e : rep.entries) checks = checks && e.c_le_2 && e.above_floor && e.v_lower_bound;
    const auto& fin = rep.entries.back();
    rep.verdict = checks && rep.speeds_approach && std::abs(fin.c - rep.target) < final_speed_tol &&
                  fin.distance < final_distance_tol;
    rep.summary = rep.verdict ? "converging to (1/sqrt2, sharp wave)" : "no convergence verdict";
    return rep;
}

}  // namespace chemotw
