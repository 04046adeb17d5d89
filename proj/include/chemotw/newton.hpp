#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "banded.hpp"

namespace chemotw {

struct NewtonOptions {
    double res_tol = 1e-8;
    double step_tol = 1e-8;
    int max_iter = 200;
    // Pseudo-transient continuation: the rows flagged as "transient" get -1/dt on the diagonal.
    // dt0 <= 0 starts with plain Newton.
    double dt0 = 0.0;
    double dt_max = 1e14;
};

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    double last_step = std::numeric_limits<double>::infinity();
    bool singular = false;
};

inline double sup_norm(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
}

/// Damped Newton on F(z) = 0 with a banded Jacobian.
///   assemble(z, F, J): fills F, and J when J != nullptr.
///   admissible(z): rejects iterates outside the physical domain (e.g. NaNs).
///   between(it): hook run before each assembly; returning true means the discretization
///   changed and convergence must be re-established.
template <class Assemble, class Admissible, class Between>
NewtonReport newton_solve(std::vector<double>& z, BandMatrix& J, const std::vector<char>& transient, Assemble&& assemble,
                          Admissible&& admissible, Between&& between, const NewtonOptions& opt) {
    NewtonReport rep;
    std::vector<double> F(z.size()), dz(z.size()), trial(z.size()), Ft(z.size());
    double dt = opt.dt0 > 0 ? opt.dt0 : std::numeric_limits<double>::infinity();
    double prev_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_iter; ++it) {
        rep.iterations = it + 1;
        const bool changed = between(it);
        J.clear();
        assemble(z, F, &J);
        const double res = sup_norm(F);
        rep.residual = res;
        if (!changed && res < opt.res_tol && rep.last_step < opt.step_tol) {
            rep.converged = true;
            return rep;
        }
        if (std::isfinite(dt)) {
            if (std::isfinite(prev_res) && res > 0) dt = std::min(opt.dt_max, dt * std::clamp(prev_res / res, 0.5, 4.0));
            if (dt >= opt.dt_max) dt = std::numeric_limits<double>::infinity();
        }
        if (std::isfinite(dt)) {
            for (std::size_t i = 0; i < z.size(); ++i)
                if (transient[i]) J.add(i, i, -1.0 / dt);
        }
        for (std::size_t i = 0; i < z.size(); ++i) dz[i] = -F[i];
        try {
            J.factorize();
        } catch (const std::runtime_error&) {
            rep.singular = true;
            return rep;
        }
        J.solve(dz);
        if (!std::all_of(dz.begin(), dz.end(), [](double x) { return std::isfinite(x); })) {
            rep.singular = true;
            return rep;
        }
        // Backtracking on the sup-norm of F. Pseudo-transient steps only need admissibility.
        double lam = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            for (std::size_t i = 0; i < z.size(); ++i) trial[i] = z[i] + lam * dz[i];
            if (admissible(trial)) {
                assemble(trial, Ft, nullptr);
                const double rt = sup_norm(Ft);
                if (std::isfinite(rt) && (std::isfinite(dt) ? rt < 10.0 * res + 1e-12 : rt < (1.0 - 1e-4 * lam) * res || rt < opt.res_tol)) {
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if (!accepted) {
            if (std::isfinite(dt)) {
                dt *= 0.1;
                if (dt < 1e-12) return rep;
                continue;
            }
            // Plain Newton stalled: fall back to pseudo-time stepping from here.
            dt = opt.dt0 > 0 ? opt.dt0 : 1e-2;
            prev_res = std::numeric_limits<double>::infinity();
            continue;
        }
        rep.last_step = lam * sup_norm(dz);
        z.swap(trial);
        prev_res = res;
    }
    J.clear();
    assemble(z, F, nullptr);
    rep.residual = sup_norm(F);
    rep.converged = rep.residual < opt.res_tol && rep.last_step < opt.step_tol;
    return rep;
}

}  // namespace chemotw
