#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "banded.hpp"
#include "grid.hpp"
#include "kernel.hpp"
#include "newton.hpp"

namespace chemotw {

struct WaveParams {
    double chi = -1.0;
    double nu = 1.0;
    double c = 0.0;
    double delta = 0.25;
    double L = 20.0;

    void validate() const {
        if (!(chi < 0.0) || !std::isfinite(chi)) throw std::invalid_argument("WaveParams: chi must be negative");
        if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("WaveParams: nu must be positive");
        if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("WaveParams: c must be nonnegative");
        if (!(delta > 0.0 && delta < nu / (nu + 1.0)))
            throw std::invalid_argument("WaveParams: delta must lie in (0, nu/(nu+1))");
        if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("WaveParams: L must be positive");
    }

    double diffusion() const { return 1.0 / std::abs(chi); }
    static double default_delta(double nu) { return nu / (2.0 * (nu + 1.0)); }
};

struct SlabOptions {
    double dx = 0.0;     // 0: default_dx(chi, nu)
    double tau = 1.0;    // scales the chemotaxis term; 0 gives the classical FKPP slab
    int freeze_after = 6;  // upwind switches are frozen after this many Newton iterations
    int mask_rounds = 4;
    NewtonOptions newton{};
};

struct SlabSolution {
    WaveParams params;
    Field u;
    Field v;
    double residual = 0.0;
    int outer_iters = 0;
    bool converged = false;
    // metadata
    std::string initialization;
    double tau = 1.0;
    bool bounds_violation = false;  // interior u left [0,1] by more than 1e-6
    double max_escape = 0.0;
    std::size_t upwind_nodes = 0;
    bool coarse_grid = false;

    std::size_t centre_index() const { return u.grid().nearest(0.0); }
};

namespace detail {

/// Discrete slab system on a symmetric grid. Unknowns interleaved per node as (u, v, c).
/// With `pinned`, c is a grid-constant unknown fixed by u(0) = delta; otherwise c is given.
class SlabSystem {
public:
    SlabSystem(const UniformGrid& g, double chi, double nu, double tau, double c, double delta, bool pinned)
        : g_(g), D_(1.0 / std::abs(chi)), chi_abs_(std::abs(chi)), nu_(nu), a_(std::sqrt(nu)), tau_(tau), c_(c),
          delta_(delta), pinned_(pinned), n_(g.size()), i0_(g.nearest(0.0)), dir_(g.size(), 0) {}

    std::size_t unknowns() const { return 3 * n_; }
    static constexpr std::size_t kl = 3, ku = 4;

    std::vector<double> pack(const Field& u, const Field& v, double c) const {
        std::vector<double> z(3 * n_);
        for (std::size_t i = 0; i < n_; ++i) {
            z[3 * i] = u[i];
            z[3 * i + 1] = v[i];
            z[3 * i + 2] = c;
        }
        return z;
    }

    std::vector<char> transient_rows() const {
        std::vector<char> t(3 * n_, 0);
        for (std::size_t i = 1; i + 1 < n_; ++i) t[3 * i] = 1;
        return t;
    }

    /// Recomputes the upwind switches; returns true if any changed.
    bool update_mask(const std::vector<double>& z) {
        bool changed = false;
        const double h = g_.dx();
        for (std::size_t i = 1; i + 1 < n_; ++i) {
            const double vx = (z[3 * (i + 1) + 1] - z[3 * (i - 1) + 1]) / (2 * h);
            const double b = z[3 * i + 2] + tau_ * vx;
            const std::int8_t d = chi_abs_ * std::abs(b) * h > 2.0 ? (b > 0 ? 1 : -1) : 0;
            if (d != dir_[i]) {
                dir_[i] = d;
                changed = true;
            }
        }
        return changed;
    }

    std::size_t upwind_count() const {
        return static_cast<std::size_t>(std::count_if(dir_.begin(), dir_.end(), [](auto d) { return d != 0; }));
    }

    void assemble(const std::vector<double>& z, std::vector<double>& F, BandMatrix* J) const {
        const double h = g_.dx(), ih = 1.0 / h, ih2 = ih * ih;
        auto U = [&](std::size_t i) { return z[3 * i]; };
        auto V = [&](std::size_t i) { return z[3 * i + 1]; };
        auto C = [&](std::size_t i) { return z[3 * i + 2]; };
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t ru = 3 * i, rv = ru + 1, rc = ru + 2;
            // u rows
            if (i == 0 || i == n_ - 1) {
                F[ru] = U(i) - (i == 0 ? 1.0 : 0.0);
                if (J) J->add(ru, ru, 1.0);
            } else {
                const double um = U(i - 1), u0 = U(i), up = U(i + 1);
                const double vx = (V(i + 1) - V(i - 1)) * 0.5 * ih;
                const double b = C(i) + tau_ * vx;
                double ux, dm, d0, dp;
                switch (dir_[i]) {
                    case 1: ux = (up - u0) * ih; dm = 0.0; d0 = -ih; dp = ih; break;
                    case -1: ux = (u0 - um) * ih; dm = -ih; d0 = ih; dp = 0.0; break;
                    default: ux = (up - um) * 0.5 * ih; dm = -0.5 * ih; d0 = 0.0; dp = 0.5 * ih; break;
                }
                const double uxx = (up - 2 * u0 + um) * ih2;
                F[ru] = D_ * uxx + b * ux + u0 * (1 - u0) + tau_ * u0 * (V(i) - u0) / nu_;
                if (J) {
                    J->add(ru, 3 * (i - 1), D_ * ih2 + b * dm);
                    J->add(ru, ru, -2 * D_ * ih2 + b * d0 + 1 - 2 * u0 + tau_ * (V(i) - 2 * u0) / nu_);
                    J->add(ru, 3 * (i + 1), D_ * ih2 + b * dp);
                    J->add(ru, 3 * (i - 1) + 1, -tau_ * ux * 0.5 * ih);
                    J->add(ru, 3 * (i + 1) + 1, tau_ * ux * 0.5 * ih);
                    J->add(ru, rv, tau_ * u0 / nu_);
                    J->add(ru, rc, ux);
                }
            }
            // v rows: nu v'' - v + u = 0, exact far-field Robin data through ghost nodes
            {
                const double k = nu_ * ih2;
                double vm, vp, dvm = k, dvp = k, dv0 = -2 * k - 1.0;
                if (i == 0) {
                    // ghost v_{-1} = v_1 - 2h (v_0 - 1)/a
                    vp = V(1);
                    vm = V(1) - 2 * h * (V(0) - 1.0) / a_;
                    dvp = 2 * k;
                    dv0 += -k * 2 * h / a_;
                    dvm = 0.0;
                } else if (i == n_ - 1) {
                    // ghost v_{n} = v_{n-2} - 2h v_{n-1}/a
                    vm = V(i - 1);
                    vp = V(i - 1) - 2 * h * V(i) / a_;
                    dvm = 2 * k;
                    dv0 += -k * 2 * h / a_;
                    dvp = 0.0;
                } else {
                    vm = V(i - 1);
                    vp = V(i + 1);
                }
                F[rv] = k * (vp - 2 * V(i) + vm) - V(i) + U(i);
                if (J) {
                    if (i > 0) J->add(rv, 3 * (i - 1) + 1, dvm);
                    if (i + 1 < n_) J->add(rv, 3 * (i + 1) + 1, dvp);
                    J->add(rv, rv, dv0);
                    J->add(rv, ru, 1.0);
                }
            }
            // c rows
            if (!pinned_) {
                F[rc] = C(i) - c_;
                if (J) J->add(rc, rc, 1.0);
            } else if (i == i0_) {
                F[rc] = U(i) - delta_;
                if (J) J->add(rc, ru, 1.0);
            } else if (i < i0_) {
                F[rc] = C(i + 1) - C(i);
                if (J) {
                    J->add(rc, rc, -1.0);
                    J->add(rc, rc + 3, 1.0);
                }
            } else {
                F[rc] = C(i) - C(i - 1);
                if (J) {
                    J->add(rc, rc, 1.0);
                    J->add(rc, rc - 3, -1.0);
                }
            }
        }
    }

    double u_residual(const std::vector<double>& F) const {
        double r = 0.0;
        for (std::size_t i = 0; i < n_; ++i) r = std::max({r, std::abs(F[3 * i]), std::abs(F[3 * i + 1])});
        return r;
    }

private:
    UniformGrid g_;
    double D_, chi_abs_, nu_, a_, tau_, c_, delta_;
    bool pinned_;
    std::size_t n_, i0_;
    std::vector<std::int8_t> dir_;
};

inline UniformGrid slab_grid(const WaveParams& p, double dx) {
    return UniformGrid::symmetric(p.L, dx > 0 ? dx : default_dx(p.chi, p.nu));
}

}  // namespace detail

/// Core solve shared by the fixed-speed and the pinned-speed problems.
inline SlabSolution solve_coupled(const WaveParams& params, const Field& u_init, const std::optional<Field>& v_init,
                                  bool pin_speed, const SlabOptions& opt, std::string init_label) {
    params.validate();
    const UniformGrid g = detail::slab_grid(params, opt.dx);
    Field u0 = u_init.grid() == g ? u_init : u_init.resampled(g, 1.0, 0.0);
    u0[0] = 1.0;
    u0[g.size() - 1] = 0.0;
    Field v0 = v_init ? (v_init->grid() == g ? *v_init : v_init->resampled(g, v_init->front(), v_init->back()))
                      : convolve_K(u0, params.nu, 1.0, 0.0).v;

    detail::SlabSystem sys(g, params.chi, params.nu, opt.tau, params.c, params.delta, pin_speed);
    std::vector<double> z = sys.pack(u0, v0, params.c);
    BandMatrix J(sys.unknowns(), detail::SlabSystem::kl, detail::SlabSystem::ku);
    const auto transient = sys.transient_rows();
    auto admissible = [&](const std::vector<double>& t) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double u = t[3 * i];
            if (!std::isfinite(u) || u < -0.5 || u > 2.0 || !std::isfinite(t[3 * i + 1])) return false;
        }
        return !pin_speed || (std::isfinite(t[2]) && t[2] > -1e3);
    };

    NewtonReport rep;
    int total = 0;
    sys.update_mask(z);
    for (int round = 0; round < opt.mask_rounds; ++round) {
        rep = newton_solve(
            z, J, transient, [&](const std::vector<double>& zz, std::vector<double>& F, BandMatrix* Jp) { sys.assemble(zz, F, Jp); },
            admissible, [&](int it) { return it < opt.freeze_after && it > 0 ? sys.update_mask(z) : false; }, opt.newton);
        total += rep.iterations;
        if (!rep.converged) break;
        if (!sys.update_mask(z)) break;
        rep.converged = false;  // switches moved: polish again with the new pattern
    }

    SlabSolution sol;
    sol.params = params;
    std::vector<double> uu(g.size()), vv(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        uu[i] = z[3 * i];
        vv[i] = z[3 * i + 1];
    }
    if (pin_speed) sol.params.c = z[2];
    bool finite = std::all_of(z.begin(), z.end(), [](double x) { return std::isfinite(x); });
    if (!finite) {
        std::fill(uu.begin(), uu.end(), 0.0);
        std::fill(vv.begin(), vv.end(), 0.0);
    }
    // boundary rows converge to round-off; store the imposed data
    uu.front() = 1.0;
    uu.back() = 0.0;
    sol.u = Field(g, std::move(uu));
    sol.v = Field(g, std::move(vv));
    std::vector<double> F(sys.unknowns());
    sys.assemble(z, F, nullptr);
    sol.residual = finite ? sys.u_residual(F) : std::numeric_limits<double>::infinity();
    sol.outer_iters = total;
    sol.converged = rep.converged && finite;
    sol.initialization = std::move(init_label);
    sol.tau = opt.tau;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        sol.max_escape = std::max({sol.max_escape, -sol.u[i], sol.u[i] - 1.0});
    }
    sol.bounds_violation = sol.max_escape > 1e-6;
    sol.upwind_nodes = sys.upwind_count();
    sol.coarse_grid = g.dx() > std::sqrt(params.nu);
    return sol;
}

/// Fixed-speed slab problem. Without `init` the iteration starts from the linear ramp.
inline SlabSolution solve_slab(const WaveParams& params, const std::optional<Field>& init = std::nullopt,
                               const SlabOptions& opt = {}) {
    params.validate();
    const UniformGrid g = detail::slab_grid(params, opt.dx);
    if (init) return solve_coupled(params, *init, std::nullopt, false, opt, "user");
    const Field ramp = Field::sample(g, [&](double x) { return 0.5 * (1.0 - x / params.L); });
    SlabSolution s = solve_coupled(params, ramp, std::nullopt, false, opt, "ramp");
    for (double dt0 : {0.1, 0.01}) {
        if (s.converged || opt.newton.dt0 > 0) break;
        SlabOptions o2 = opt;
        o2.newton.dt0 = dt0;
        o2.newton.max_iter = std::max(o2.newton.max_iter, 3000);
        s = solve_coupled(params, ramp, std::nullopt, false, o2, "ramp+pseudo-transient");
    }
    return s;
}

/// Speed as unknown, fixed by u(0) = delta. params.c is the initial guess.
inline SlabSolution solve_slab_pinned(const WaveParams& params, const Field& u_init, const std::optional<Field>& v_init,
                                      const SlabOptions& opt = {}, std::string label = "warm") {
    return solve_coupled(params, u_init, v_init, true, opt, std::move(label));
}

// ---------------------------------------------------------------------------------------------
// Scalar FKPP slab problems  -b phi' - D phi'' = r phi (1 - k phi),  phi(-L) = left, phi(L) = 0.

struct FkppProblem {
    double b = 0.0;
    double D = 1.0;
    double r = 1.0;
    double k = 1.0;
    double left = 1.0;
};

struct FkppResult {
    Field phi;
    double residual = 0.0;
    bool converged = false;
};

inline FkppResult solve_fkpp(const FkppProblem& pb, const UniformGrid& g, const NewtonOptions& nopt_in = {}) {
    const std::size_t n = g.size();
    const double h = g.dx(), ih = 1.0 / h, ih2 = ih * ih;
    std::int8_t dir = 0;
    if (std::abs(pb.b) * h / pb.D > 2.0) dir = pb.b > 0 ? 1 : -1;
    auto assemble = [&](const std::vector<double>& z, std::vector<double>& F, BandMatrix* J) {
        F[0] = z[0] - pb.left;
        F[n - 1] = z[n - 1];
        if (J) {
            J->add(0, 0, 1.0);
            J->add(n - 1, n - 1, 1.0);
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double um = z[i - 1], u0 = z[i], up = z[i + 1];
            double ux, dm, d0, dp;
            switch (dir) {
                case 1: ux = (up - u0) * ih; dm = 0; d0 = -ih; dp = ih; break;
                case -1: ux = (u0 - um) * ih; dm = -ih; d0 = ih; dp = 0; break;
                default: ux = (up - um) * 0.5 * ih; dm = -0.5 * ih; d0 = 0; dp = 0.5 * ih; break;
            }
            F[i] = pb.D * (up - 2 * u0 + um) * ih2 + pb.b * ux + pb.r * u0 * (1 - pb.k * u0);
            if (J) {
                J->add(i, i - 1, pb.D * ih2 + pb.b * dm);
                J->add(i, i, -2 * pb.D * ih2 + pb.b * d0 + pb.r * (1 - 2 * pb.k * u0));
                J->add(i, i + 1, pb.D * ih2 + pb.b * dp);
            }
        }
    };
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = pb.left * (1.0 - static_cast<double>(i) / static_cast<double>(n - 1));
    std::vector<char> transient(n, 1);
    transient[0] = transient[n - 1] = 0;
    BandMatrix J(n, 1, 1);
    NewtonOptions nopt = nopt_in;
    if (nopt.dt0 <= 0) nopt.dt0 = 1e-2;
    nopt.max_iter = std::max(nopt.max_iter, 2000);
    auto admissible = [](const std::vector<double>& t) {
        return std::all_of(t.begin(), t.end(), [](double x) { return std::isfinite(x) && x > -1.0 && x < 3.0; });
    };
    const auto rep = newton_solve(z, J, transient, assemble, admissible, [](int) { return false; }, nopt);
    return {Field(g, std::move(z)), rep.residual, rep.converged};
}

enum class FkppKind { sub, super };

/// Bracketing FKPP slab problems: the sub problem has data (nu/(nu+1), 0) and logistic cap (nu+1)/nu;
/// the super problem is advected at c - 1/sqrt(nu) with rate (nu+1)/nu and data (1, 0).
inline FkppResult fkpp_slab(FkppKind kind, const WaveParams& p, double dx = 0.0) {
    p.validate();
    FkppProblem pb;
    pb.D = p.diffusion();
    if (kind == FkppKind::sub) {
        pb.b = p.c;
        pb.r = 1.0;
        pb.k = (p.nu + 1.0) / p.nu;
        pb.left = p.nu / (p.nu + 1.0);
    } else {
        pb.b = p.c - 1.0 / std::sqrt(p.nu);
        pb.r = (p.nu + 1.0) / p.nu;
        pb.k = 1.0;
        pb.left = 1.0;
    }
    return solve_fkpp(pb, detail::slab_grid(p, dx));
}

/// Sub-solution lower bound at the origin, valid when c < (2/sqrt|chi|) sqrt(nu/(nu+1)).
inline std::optional<double> sub_solution_floor(const WaveParams& p, double eps) {
    if (p.c < 2.0 / std::sqrt(std::abs(p.chi)) * std::sqrt(p.nu / (p.nu + 1.0))) return (1 - eps) * p.nu / (1 + p.nu);
    return std::nullopt;
}

/// Super-solution exponential upper bound on u(0), valid for c - 1/sqrt(nu) >= (2/sqrt|chi|) sqrt((nu+1)/nu).
inline std::optional<double> super_solution_ceiling(const WaveParams& p) {
    const double chi = std::abs(p.chi);
    const double ce = p.c - 1.0 / std::sqrt(p.nu);
    const double q = (p.nu + 1.0) / p.nu;
    if (ce < 2.0 / std::sqrt(chi) * std::sqrt(q) * (1.0 - 1e-12)) return std::nullopt;
    const double disc = ce * ce - 4.0 / chi * q;
    return std::exp(-(p.L * chi / 2.0) * (ce + std::sqrt(std::max(0.0, disc))));
}

// ---------------------------------------------------------------------------------------------

struct QuasiSingularPoint {
    bool interior = false;  // false: the maximum of the transformed profile sits at a slab end
    std::size_t index = 0;
    double location = 0.0;
    double gap = 0.0;        // (v_x + c)^2 at the maximum
    double bound = 0.0;      // 4 (nu+1) / (nu |chi|)
    std::string status;
};

/// Maximum of u e^{|chi|(c x + v)/2}, located in log space.
/// Nodes with u below `floor` hold Newton round-off and are skipped; the weight would amplify it.
inline QuasiSingularPoint quasi_singular_point(const SlabSolution& sol, double floor = 1e-13) {
    if (!sol.converged) throw std::invalid_argument("quasi_singular_point: solution not converged");
    const auto& u = sol.u;
    const auto& v = sol.v;
    const double chi = std::abs(sol.params.chi), c = sol.params.c, h = u.grid().dx();
    QuasiSingularPoint q;
    q.bound = 4.0 * (sol.params.nu + 1.0) / (sol.params.nu * chi);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    std::size_t last_pos = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] <= floor) continue;
        last_pos = i;
        const double lt = std::log(u[i]) + chi * (c * u.x(i) + v[i]) / 2.0;
        if (lt > best) {
            best = lt;
            arg = i;
        }
    }
    q.index = arg;
    q.location = u.x(arg);
    if (arg == 0 || arg + 1 >= u.size() || arg >= last_pos) {
        q.status = "no interior maximum";
        return q;
    }
    const double vx = (v[arg + 1] - v[arg - 1]) / (2 * h);
    q.gap = (vx + c) * (vx + c);
    q.interior = true;
    q.status = "ok";
    return q;
}

/// Pointwise values of the central-difference u-operator
///   (1/|chi|) u'' + (c + tau v') u' + u(1-u) + tau u (v-u)/nu
/// at interior nodes (zeros at the ends). Used for consistency checks.
inline Field slab_operator(const Field& u, const Field& v, double chi, double nu, double c, double tau = 1.0) {
    const std::size_t n = u.size();
    const double h = u.grid().dx();
    std::vector<double> r(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double ux = (u[i + 1] - u[i - 1]) / (2 * h);
        const double vx = (v[i + 1] - v[i - 1]) / (2 * h);
        const double uxx = (u[i + 1] - 2 * u[i] + u[i - 1]) / (h * h);
        r[i] = uxx / std::abs(chi) + (c + tau * vx) * ux + u[i] * (1 - u[i]) + tau * u[i] * (v[i] - u[i]) / nu;
    }
    return Field(u.grid(), std::move(r));
}

}  // namespace chemotw
