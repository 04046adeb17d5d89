#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "grid.hpp"
#include "hyperbolic.hpp"
#include "kernel.hpp"
#include "pme.hpp"
#include "slab.hpp"

namespace chemotw {

/// Runs f(0..n-1) on up to `jobs` threads. Results are written by index, so ordering is fixed.
/// The first exception (lowest index) is rethrown after all workers finish.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& f) {
    std::vector<std::exception_ptr> errs(n);
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                f(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex m;
        const unsigned t = std::min<unsigned>(jobs, static_cast<unsigned>(n));
        for (unsigned k = 0; k < t; ++k) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i;
                    {
                        std::lock_guard<std::mutex> lk(m);
                        if (next >= n) return;
                        i = next++;
                    }
                    try {
                        f(i);
                    } catch (...) {
                        errs[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

/// c_lower = sqrt(nu/(nu+1)) / sqrt|chi|,  c_upper = 1/sqrt(nu) + 2 sqrt((nu+1)/nu) / sqrt|chi|.
struct SpeedBracket {
    double lower = 0.0;
    double upper = 0.0;
};

inline SpeedBracket speed_bracket(double chi, double nu) {
    const double s = std::sqrt(std::abs(chi));
    return {std::sqrt(nu / (nu + 1.0)) / s, 1.0 / std::sqrt(nu) + 2.0 * std::sqrt((nu + 1.0) / nu) / s};
}

inline double speed_floor(double chi) { return 2.0 / std::sqrt(std::abs(chi)); }

/// Line floor lowered by the Dirichlet cutoff of the leading edge on [0, L]:
/// 2 sqrt(D) sqrt(1 - D pi^2 / L^2) with D = 1/|chi|.
inline double slab_speed_floor(double chi, double L) {
    const double D = 1.0 / std::abs(chi);
    return 2.0 * std::sqrt(D) * std::sqrt(std::max(0.0, 1.0 - D * std::numbers::pi * std::numbers::pi / (L * L)));
}

class SlabTooShort : public std::runtime_error {
public:
    SlabTooShort(double at_lower, double at_upper, double delta)
        : std::runtime_error("slab too short: bracket values " + std::to_string(at_lower) + " (at c_lower) and " +
                             std::to_string(at_upper) + " (at c_upper) do not straddle delta = " + std::to_string(delta)),
          at_lower_(at_lower),
          at_upper_(at_upper) {}
    double at_lower() const { return at_lower_; }
    double at_upper() const { return at_upper_; }

private:
    double at_lower_, at_upper_;
};

class SpeedSelectionFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SpeedMethod { pinned, bisection };

struct SpeedOptions {
    SpeedMethod method = SpeedMethod::pinned;
    double dx = 0.0;           // slab grid spacing, 0: default_dx
    bool check_bracket = true;
    bool prescan = false;      // sample Phi at 8 points across the bracket first
    int prescan_points = 8;
    int max_bisection = 60;
    int max_halvings = 12;     // continuation step refinements before giving up
    std::optional<SlabSolution> warm;  // start from this solution instead of continuation
};

struct ScanPoint {
    double c = 0.0;
    double phi = 0.0;  // u_c(0) - delta
    bool converged = false;
};

struct SpeedSelection {
    double c = 0.0;
    SlabSolution solution;
    SpeedBracket bracket;
    double value_at_lower = 0.0;  // certified lower bound on u at c_lower, origin
    double value_at_upper = 0.0;  // certified upper bound on u at c_upper, origin
    bool inside_bracket = false;  // c in [c_lower - tol, c_upper + tol]
    bool above_floor = false;     // c >= slab_speed_floor - tol
    int solves = 0;
    std::vector<ScanPoint> scan;
    std::vector<double> sign_changes;  // midpoints of scan intervals where Phi changes sign
    std::string method;
};

namespace detail {

inline double value_at_origin(const Field& u) { return u.at(0.0); }

/// Accepts a pinned solve only when it converged and stayed in [0, 1].
inline bool acceptable(const SlabSolution& s) { return s.converged && !s.bounds_violation; }

/// Pinned solve with fallbacks: Newton, then pseudo-transient with shrinking initial steps.
inline std::optional<SlabSolution> robust_pinned(const WaveParams& p, const Field& u0, const std::optional<Field>& v0,
                                                 const SpeedOptions& so, bool cold, int& solves) {
    SlabOptions o;
    o.dx = so.dx;
    std::vector<double> dts = cold ? std::vector<double>{0.1, 1.0, 0.01} : std::vector<double>{0.0, 1.0, 0.1, 0.01};
    for (double dt : dts) {
        o.newton.dt0 = dt;
        o.newton.max_iter = dt > 0 ? 3000 : 200;
        ++solves;
        SlabSolution s = solve_slab_pinned(p, u0, v0, o, cold ? "logistic+continuation" : "continuation");
        if (acceptable(s)) return s;
    }
    return std::nullopt;
}

/// delta kept at a fixed fraction of nu/(nu+1) along the path
inline double path_delta(double nu, double ratio) { return ratio * nu / (nu + 1.0); }

inline SlabSolution pinned_continuation(double chi, double nu, double delta, double L, const SpeedOptions& so, int& solves) {
    const double ratio = delta / (nu / (nu + 1.0));
    const double chi0 = std::max(chi, -4.0);
    const double nu0 = std::max(nu, 1.0);
    WaveParams p{chi0, nu0, 0.0, path_delta(nu0, ratio), L};
    const UniformGrid g = slab_grid(p, so.dx);
    // logistic start through u(0) = delta, speed guess near the classical front value
    const Field u0 = Field::sample(g, [&](double x) { return 1.0 / (1.0 + std::exp(x) * (1.0 / p.delta - 1.0)); });
    p.c = std::max(speed_floor(chi0), 1.0);
    auto s = robust_pinned(p, u0, std::nullopt, so, true, solves);
    if (!s) throw SpeedSelectionFailure("select_speed: no admissible solution at the continuation start");

    // path: chi doubled toward the target, then nu halved
    auto next_point = [&](const WaveParams& q) {
        WaveParams r = q;
        if (r.chi > chi) r.chi = std::max(chi, r.chi * 2.0);
        else r.nu = std::max(nu, r.nu / 2.0);
        return r;
    };
    WaveParams cur = s->params;
    while (!(cur.chi == chi && cur.nu == nu)) {
        WaveParams target = next_point(cur);
        int halvings = 0;
        for (;;) {
            WaveParams q = target;
            q.delta = path_delta(q.nu, ratio);
            q.c = cur.c;
            if (auto t = robust_pinned(q, s->u, s->v, so, false, solves)) {
                s = std::move(t);
                cur = s->params;
                break;
            }
            if (++halvings > so.max_halvings)
                throw SpeedSelectionFailure("select_speed: continuation stalled at chi = " + std::to_string(cur.chi) +
                                            ", nu = " + std::to_string(cur.nu));
            // geometric midpoint of the failed step
            target.chi = -std::sqrt(cur.chi * target.chi);
            target.nu = std::sqrt(cur.nu * target.nu);
        }
    }
    // final delta (equal to the path value up to rounding)
    if (s->params.delta != delta) {
        WaveParams q = s->params;
        q.delta = delta;
        if (auto t = robust_pinned(q, s->u, s->v, so, false, solves)) s = std::move(t);
        else throw SpeedSelectionFailure("select_speed: final normalization solve failed");
    }
    return *s;
}

}  // namespace detail

/// Speed fixed by u(0) = delta on the slab [-L, L].
inline SpeedSelection select_speed(double chi, double nu, double delta, double L, double tol = 1e-8,
                                   const SpeedOptions& so = {}) {
    WaveParams base{chi, nu, 0.0, delta, L};
    base.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("select_speed: tol must be positive");
    SpeedSelection out;
    out.bracket = speed_bracket(chi, nu);

    // bracket certificate: the FKPP sub-solution at c_lower and the explicit super bound at c_upper
    {
        WaveParams lo = base;
        lo.c = out.bracket.lower;
        const FkppResult sub = fkpp_slab(FkppKind::sub, lo, so.dx);
        out.value_at_lower = sub.converged ? sub.phi.at(0.0) : 0.0;
        WaveParams hi = base;
        hi.c = out.bracket.upper;
        out.value_at_upper = super_solution_ceiling(hi).value_or(1.0);
        if (so.check_bracket && !(out.value_at_lower > delta && out.value_at_upper < delta))
            throw SlabTooShort(out.value_at_lower, out.value_at_upper, delta);
    }

    SlabOptions fixed;
    fixed.dx = so.dx;
    auto phi_at = [&](double c, const std::optional<Field>& init) {
        WaveParams p = base;
        p.c = c;
        ++out.solves;
        SlabSolution s = solve_slab(p, init, fixed);
        if (!detail::acceptable(s) && init) {
            // pseudo-transient from the same start, then from the ramp
            SlabOptions o = fixed;
            o.newton.dt0 = 0.1;
            o.newton.max_iter = 3000;
            ++out.solves;
            s = solve_slab(p, init, o);
        }
        if (!detail::acceptable(s) && init) {
            ++out.solves;
            s = solve_slab(p, std::nullopt, fixed);
        }
        return s;
    };

    if (so.prescan) {
        const int m = std::max(2, so.prescan_points);
        std::optional<Field> prev;
        for (int k = 0; k < m; ++k) {
            const double c = out.bracket.lower + (out.bracket.upper - out.bracket.lower) * k / (m - 1);
            SlabSolution s = phi_at(c, prev);
            ScanPoint sp{c, detail::value_at_origin(s.u) - delta, s.converged};
            if (s.converged) prev = s.u;
            out.scan.push_back(sp);
        }
        for (std::size_t k = 1; k < out.scan.size(); ++k) {
            const auto &a = out.scan[k - 1], &b = out.scan[k];
            if (a.converged && b.converged && (a.phi > 0) != (b.phi > 0)) out.sign_changes.push_back(0.5 * (a.c + b.c));
        }
    }

    if (so.method == SpeedMethod::pinned) {
        out.method = "pinned";
        if (so.warm) {
            WaveParams p = base;
            p.c = so.warm->params.c;
            int n = 0;
            auto s = detail::robust_pinned(p, so.warm->u, so.warm->v, so, false, n);
            out.solves += n;
            if (s) out.solution = std::move(*s);
            else out.solution = detail::pinned_continuation(chi, nu, delta, L, so, out.solves);
        } else {
            out.solution = detail::pinned_continuation(chi, nu, delta, L, so, out.solves);
        }
        out.c = out.solution.params.c;
    } else {
        out.method = "bisection";
        double a = out.bracket.lower, b = out.bracket.upper;
        std::optional<Field> warm;
        SlabSolution best;
        bool have = false;
        for (int it = 0; it < so.max_bisection; ++it) {
            const double c = 0.5 * (a + b);
            SlabSolution s = phi_at(c, warm);
            if (!detail::acceptable(s)) throw SpeedSelectionFailure("select_speed: slab solve failed at c = " + std::to_string(c));
            const double phi = detail::value_at_origin(s.u) - delta;
            warm = s.u;
            best = std::move(s);
            have = true;
            if (std::abs(phi) < tol || b - a < tol) break;
            (phi > 0 ? a : b) = c;  // u_c(0) above delta: the front is too slow
        }
        if (!have) throw SpeedSelectionFailure("select_speed: no bisection steps");
        out.solution = std::move(best);
        out.c = out.solution.params.c;
    }
    const double stol = std::max(tol, 1e-6);
    out.inside_bracket = out.c >= out.bracket.lower - stol && out.c <= out.bracket.upper + stol;
    out.above_floor = out.c >= slab_speed_floor(chi, L) - stol;
    return out;
}

// ---------------------------------------------------------------------------------------------

struct LineRecord {
    double L = 0.0;
    double c = 0.0;
    double window_distance = std::numeric_limits<double>::infinity();  // sup |u_L - u_{L/2}| on [-10, 10]
};

struct TravelingWave {
    WaveParams params;
    Field u;
    Field v;
    double L_final = 0.0;
    std::vector<LineRecord> history;
    SlabSolution solution;
};

class LineExtensionFailure : public std::runtime_error {
public:
    LineExtensionFailure(std::vector<LineRecord> h)
        : std::runtime_error("extend_to_line: no stabilization within the allowed doublings"), history_(std::move(h)) {}
    const std::vector<LineRecord>& history() const { return history_; }

private:
    std::vector<LineRecord> history_;
};

struct LineOptions {
    double L0 = 20.0;
    int max_doublings = 4;
    double window = 10.0;
    SpeedOptions speed{};
};

/// L-doubling until the speed and the profile on [-window, window] stop moving.
inline TravelingWave extend_to_line(double chi, double nu, double delta, double tol, const LineOptions& lo = {}) {
    if (!(lo.L0 > lo.window)) throw std::invalid_argument("extend_to_line: L0 must exceed the comparison window");
    TravelingWave tw;
    SpeedOptions so = lo.speed;
    SpeedSelection sel = select_speed(chi, nu, delta, lo.L0, std::min(tol, 1e-8), so);
    tw.history.push_back({lo.L0, sel.c});
    double L = lo.L0;
    for (int k = 0; k < lo.max_doublings; ++k) {
        L *= 2.0;
        so.warm = sel.solution;
        SpeedSelection nxt = select_speed(chi, nu, delta, L, std::min(tol, 1e-8), so);
        LineRecord r{L, nxt.c, sup_distance(nxt.solution.u, sel.solution.u, -lo.window, lo.window)};
        tw.history.push_back(r);
        sel = std::move(nxt);
        if (std::abs(r.c - tw.history[tw.history.size() - 2].c) < tol && r.window_distance < tol) {
            tw.params = sel.solution.params;
            tw.u = sel.solution.u;
            tw.v = sel.solution.v;
            tw.L_final = L;
            tw.solution = std::move(sel.solution);
            return tw;
        }
    }
    throw LineExtensionFailure(tw.history);
}

// ---------------------------------------------------------------------------------------------

struct ConvergenceReport {
    std::vector<double> parameters;
    std::vector<double> speeds;
    double target = 0.0;
    std::vector<double> distances;
    std::vector<double> uv_sup;  // ||u - v||_inf per point
    std::vector<double> gaps;    // quasi-singular gaps (hyperbolic study)
    std::vector<std::string> status;
    bool speeds_approach = false;     // |c - target| strictly decreasing
    bool distances_decrease = false;
    bool final_within = false;
    bool verdict = false;
    std::string summary;
};

struct StudyOptions {
    double L = 40.0;
    unsigned jobs = 1;
    double tol = 1e-8;
    double final_rel_tol = 0.10;  // verdict: final speed within this fraction of the target
    double window = 10.0;         // profile distances measured on [-window, window]
    SpeedOptions speed{};
};

inline double study_chi(double eps) {
    if (!(eps >= 0.0)) throw std::invalid_argument("study_chi: eps must be nonnegative");
    return eps == 0.0 ? -1e4 : -1.0 / eps;
}

/// Shift s with profile(s) = level for a decreasing profile (linear interpolation).
inline std::optional<double> level_crossing(const Field& u, double level) {
    for (std::size_t i = 1; i < u.size(); ++i) {
        if (u[i - 1] >= level && u[i] < level) {
            const double t = (u[i - 1] - level) / (u[i - 1] - u[i]);
            return u.x(i - 1) + t * u.grid().dx();
        }
    }
    return std::nullopt;
}

inline double sup_uv(const SlabSolution& s) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) m = std::max(m, std::abs(s.u[i] - s.v[i]));
    return m;
}

namespace detail {
inline bool strictly_decreasing(const std::vector<double>& a) {
    for (std::size_t i = 1; i < a.size(); ++i)
        if (!(a[i] < a[i - 1])) return false;
    return !a.empty();
}
}  // namespace detail

/// Porous-medium limit at fixed eps: eps = 0 is run at |chi| = 1e4, otherwise |chi| = 1/eps.
inline ConvergenceReport pm_limit_study(double eps, const std::vector<double>& nus, const StudyOptions& so = {},
                                        std::vector<SlabSolution>* solutions = nullptr) {
    const double chi = study_chi(eps);
    ConvergenceReport rep;
    rep.parameters = nus;
    rep.target = pm_min_speed(eps);
    const std::size_t n = nus.size();
    rep.speeds.assign(n, 0.0);
    rep.distances.assign(n, 0.0);
    rep.uv_sup.assign(n, 0.0);
    rep.status.assign(n, "ok");
    std::vector<SlabSolution> sols(n);

    // limit profile aligned at u = delta later per point
    std::optional<PmeWave> pm;
    if (eps > 0.0) {
        pm = pme_wave_solve(eps, rep.target);
        if (!pm->converged) throw std::runtime_error("pm_limit_study: limit profile failed: " + pm->status);
    }

    parallel_for(n, so.jobs, [&](std::size_t k) {
        const double nu = nus[k];
        const double delta = WaveParams::default_delta(nu);
        SpeedSelection sel = select_speed(chi, nu, delta, so.L, so.tol, so.speed);
        rep.speeds[k] = sel.c;
        rep.uv_sup[k] = sup_uv(sel.solution);
        const Field& u = sel.solution.u;
        double shift = 0.0;  // limit profile translated so that it also passes through delta at 0
        std::function<double(double)> lim;
        if (!pm) {
            shift = -std::numbers::sqrt2 * std::log1p(-delta);
            lim = [shift](double x) { return sharp_wave(x - shift); };
        } else {
            const auto s = level_crossing(pm->u, delta);
            shift = s.value_or(0.0);
            const Field& w = pm->u;
            lim = [&w, shift](double x) { return w.at(x + shift); };
        }
        double d = 0.0;
        const UniformGrid& g = u.grid();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.x(i);
            if (x < -so.window || x > so.window) continue;
            d = std::max(d, std::abs(u[i] - lim(x)));
        }
        rep.distances[k] = d;
        sols[k] = std::move(sel.solution);
    });
    std::vector<double> err(n);
    for (std::size_t k = 0; k < n; ++k) err[k] = std::abs(rep.speeds[k] - rep.target);
    rep.speeds_approach = n < 2 || detail::strictly_decreasing(err);
    rep.distances_decrease = n < 2 || detail::strictly_decreasing(rep.distances);
    rep.final_within = n > 0 && err.back() <= so.final_rel_tol * rep.target;
    rep.verdict = rep.speeds_approach && rep.final_within;
    rep.summary = rep.verdict ? "speeds approach the porous-medium value" : "no convergence verdict";
    if (solutions) *solutions = std::move(sols);
    return rep;
}

/// Hyperbolic limit at fixed nu along chi -> -infinity.
inline ConvergenceReport hyp_limit_study(double nu, const std::vector<double>& chis, const StudyOptions& so = {},
                                         std::vector<SlabSolution>* solutions = nullptr,
                                         const std::optional<HypWave>& hyp = std::nullopt) {
    for (std::size_t i = 0; i < chis.size(); ++i) {
        if (!(chis[i] < 0.0)) throw std::invalid_argument("hyp_limit_study: chi must be negative");
        if (i > 0 && !(chis[i] < chis[i - 1])) throw std::invalid_argument("hyp_limit_study: |chi| must increase");
    }
    ConvergenceReport rep;
    rep.parameters = chis;
    const HypWave w = hyp ? *hyp : construct_discontinuous_wave(nu);
    rep.target = w.c;
    const std::size_t n = chis.size();
    rep.speeds.assign(n, 0.0);
    rep.distances.assign(n, 0.0);
    rep.uv_sup.assign(n, 0.0);
    rep.gaps.assign(n, 0.0);
    rep.status.assign(n, "ok");
    std::vector<SlabSolution> sols(n);
    const double delta = WaveParams::default_delta(nu);

    parallel_for(n, so.jobs, [&](std::size_t k) {
        SpeedSelection sel = select_speed(chis[k], nu, delta, so.L, so.tol, so.speed);
        rep.speeds[k] = sel.c;
        rep.uv_sup[k] = sup_uv(sel.solution);
        const QuasiSingularPoint q = quasi_singular_point(sel.solution);
        rep.gaps[k] = q.gap;
        rep.status[k] = q.status;
        // align the detected jump with the hyperbolic jump at 0, skip a neighbourhood shrinking like |chi|^{-1/2}
        const double r = 10.0 / std::sqrt(std::abs(chis[k]));
        const Field& u = sel.solution.u;
        double d = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double y = u.x(i) - q.location;
            if (std::abs(y) < r || y < -so.window || y > so.window || y < w.u_left.grid().x_min()) continue;
            const double ref = y < 0.0 ? w.u_left.at(y) : 0.0;
            d = std::max(d, std::abs(u[i] - ref));
        }
        rep.distances[k] = d;
        sols[k] = std::move(sel.solution);
    });
    rep.speeds_approach = n < 2 || detail::strictly_decreasing([&] {
                              std::vector<double> e(n);
                              for (std::size_t k = 0; k < n; ++k) e[k] = std::abs(rep.speeds[k] - rep.target);
                              return e;
                          }());
    rep.distances_decrease = n < 2 || detail::strictly_decreasing(rep.distances);
    rep.final_within = n > 0 && std::abs(rep.speeds.back() - rep.target) <= so.final_rel_tol * rep.target;
    bool gaps_ok = true;
    for (std::size_t k = 0; k < n; ++k)
        if (!(rep.gaps[k] <= 4.0 * (nu + 1.0) / (nu * std::abs(chis[k])))) gaps_ok = false;
    rep.verdict = rep.distances_decrease && gaps_ok;
    rep.summary = rep.verdict ? "profiles approach the discontinuous wave" : "no convergence verdict";
    if (solutions) *solutions = std::move(sols);
    return rep;
}

}  // namespace chemotw
