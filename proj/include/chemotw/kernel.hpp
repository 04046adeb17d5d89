#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "bessel.hpp"
#include "grid.hpp"

namespace chemotw {

struct KernelParams {
    double nu = 1.0;

    explicit KernelParams(double nu_) : nu(nu_) {
        if (!(nu_ > 0.0) || !std::isfinite(nu_)) throw std::domain_error("KernelParams: nu must be positive");
    }
    double length() const { return std::sqrt(nu); }
};

/// K_nu(x) = exp(-|x|/sqrt(nu)) / (2 sqrt(nu)).
inline double eval_K(double nu, double x) {
    if (!(nu > 0.0)) throw std::domain_error("eval_K: nu must be positive");
    const double a = std::sqrt(nu);
    return std::exp(-std::abs(x) / a) / (2.0 * a);
}

/// phi_nu(x) = K0(|x|/sqrt(nu)) / (pi sqrt(nu)); phi_nu * phi_nu = K_nu.
inline double eval_phi(double nu, double x) {
    if (!(nu > 0.0)) throw std::domain_error("eval_phi: nu must be positive");
    if (x == 0.0) throw std::domain_error("eval_phi: logarithmic singularity at x = 0");
    const double a = std::sqrt(nu);
    return bessel_k0(std::abs(x) / a) / (std::numbers::pi * a);
}

namespace detail {

// g1(r) = 1 - e^{-r},  g2(r) = 1 - e^{-r}(1 + r), accurate for small r.
inline double g1(double r) { return -std::expm1(-r); }

inline double g2(double r) {
    if (r < 0.05) {
        // sum_{k>=2} (-1)^k (k-1) r^k / k!
        double term = r * r / 2.0, s = 0.0;
        for (int k = 2; k < 12; ++k) {
            s += (k % 2 == 0 ? 1.0 : -1.0) * (k - 1) * term;
            term *= r / (k + 1);
        }
        return s;
    }
    return -std::expm1(-r) - r * std::exp(-r);
}

// int_0^l e^{-s/a} p(s) ds with p linear, p(0) = near, p(l) = far.
inline double seg(double a, double l, double near, double far) {
    if (l <= 0.0) return 0.0;
    const double r = l / a;
    return a * (near * g1(r) + (far - near) * g2(r) / r);
}

}  // namespace detail

/// Exact convolution of K_nu with the piecewise-linear interpolant of u, extended by the
/// constants far_left / far_right outside the grid. Keeps the one-sided exponential moments
///   Lm(x) = int_{-inf}^x e^{-(x-y)/a} u(y) dy,   Rm(x) = int_x^inf e^{-(y-x)/a} u(y) dy
/// so that v = (Lm + Rm)/(2a) and v_x = (Rm - Lm)/(2 nu), with a = sqrt(nu).
class KernelConvolution {
public:
    KernelConvolution(const Field& u, double nu, double far_left, double far_right)
        : u_(u), nu_(nu), a_(0.0), far_left_(far_left), far_right_(far_right) {
        if (!(nu > 0.0)) throw std::domain_error("convolve_K: nu must be positive");
        if (!std::isfinite(far_left) || !std::isfinite(far_right)) {
            throw std::invalid_argument("convolve_K: far-field values must be finite");
        }
        a_ = std::sqrt(nu);
        const std::size_t n = u.size();
        const double h = u.grid().dx();
        coarse_ = h > a_;
        const double E = std::exp(-h / a_);
        lm_.assign(n, 0.0);
        rm_.assign(n, 0.0);
        lm_[0] = far_left * a_;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            lm_[i + 1] = E * lm_[i] + detail::seg(a_, h, u[i + 1], u[i]);
        }
        rm_[n - 1] = far_right * a_;
        for (std::size_t i = n - 1; i-- > 0;) {
            rm_[i] = E * rm_[i + 1] + detail::seg(a_, h, u[i], u[i + 1]);
        }
    }

    bool coarse_grid() const { return coarse_; }
    double nu() const { return nu_; }
    const UniformGrid& grid() const { return u_.grid(); }

    double value(std::size_t i) const { return (lm_[i] + rm_[i]) / (2.0 * a_); }
    double slope(std::size_t i) const { return (rm_[i] - lm_[i]) / (2.0 * nu_); }

    Field values() const {
        std::vector<double> v(lm_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = value(i);
        return Field(u_.grid(), std::move(v));
    }

    Field slopes() const {
        std::vector<double> v(lm_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = slope(i);
        return Field(u_.grid(), std::move(v));
    }

    /// v at an arbitrary position.
    double value_at(double x) const {
        const auto [l, r] = moments(x);
        return (l + r) / (2.0 * a_);
    }

    /// v_x at an arbitrary position.
    double slope_at(double x) const {
        const auto [l, r] = moments(x);
        return (r - l) / (2.0 * nu_);
    }

private:
    std::pair<double, double> moments(double x) const {
        const UniformGrid& g = u_.grid();
        const double x0 = g.x_min(), x1 = g.x_max();
        if (x <= x0) {
            const double d = x0 - x;
            const double r = std::exp(-d / a_) * rm_.front() + far_left_ * a_ * detail::g1(d / a_);
            return {far_left_ * a_, r};
        }
        if (x >= x1) {
            const double d = x - x1;
            const double l = std::exp(-d / a_) * lm_.back() + far_right_ * a_ * detail::g1(d / a_);
            return {l, far_right_ * a_};
        }
        const double h = g.dx();
        auto i = static_cast<std::size_t>((x - x0) / h);
        if (i >= u_.size() - 1) i = u_.size() - 2;
        const double t = x - g.x(i);
        const double ux = u_[i] + (u_[i + 1] - u_[i]) * (t / h);
        const double l = std::exp(-t / a_) * lm_[i] + detail::seg(a_, t, ux, u_[i]);
        const double r = std::exp(-(h - t) / a_) * rm_[i + 1] + detail::seg(a_, h - t, ux, u_[i + 1]);
        return {l, r};
    }

    Field u_;
    double nu_;
    double a_;
    double far_left_, far_right_;
    bool coarse_ = false;
    std::vector<double> lm_, rm_;
};

struct ConvolveResult {
    Field v;
    bool coarse_grid = false;  // dx > sqrt(nu): kernel under-resolved
};

/// v = K_nu * u-bar on the grid of u.
inline ConvolveResult convolve_K(const Field& u, double nu, double far_left, double far_right) {
    KernelConvolution k(u, nu, far_left, far_right);
    return {k.values(), k.coarse_grid()};
}

/// v_x(x) = (1/(2 nu)) int_0^inf e^{-y/sqrt(nu)} (u(x+y) - u(x-y)) dy.
inline double v_slope(const Field& u, double nu, double far_left, double far_right, double x) {
    return KernelConvolution(u, nu, far_left, far_right).slope_at(x);
}

/// Solves -nu v'' + v = u by second-order differences, with end values from convolve_K.
inline Field screened_poisson(const Field& u, double nu, double far_left, double far_right) {
    if (!(nu > 0.0)) throw std::domain_error("screened_poisson: nu must be positive");
    const std::size_t n = u.size();
    KernelConvolution k(u, nu, far_left, far_right);
    std::vector<double> v(n);
    v.front() = k.value(0);
    v.back() = k.value(n - 1);
    if (n == 2) return Field(u.grid(), std::move(v));

    // Thomas algorithm on the interior unknowns.
    const double h = u.grid().dx();
    const double off = -nu / (h * h);
    const double diag = 1.0 + 2.0 * nu / (h * h);
    const std::size_t m = n - 2;
    std::vector<double> c(m), d(m);
    for (std::size_t j = 0; j < m; ++j) {
        double rhs = u[j + 1];
        if (j == 0) rhs -= off * v.front();
        if (j == m - 1) rhs -= off * v.back();
        const double denom = diag - (j > 0 ? off * c[j - 1] : 0.0);
        if (denom == 0.0 || !std::isfinite(denom)) throw std::runtime_error("screened_poisson: singular system");
        c[j] = off / denom;
        d[j] = (rhs - (j > 0 ? off * d[j - 1] : 0.0)) / denom;
    }
    v[m] = d[m - 1];
    for (std::size_t j = m - 1; j-- > 0;) v[j + 1] = d[j] - c[j] * v[j + 2];
    return Field(u.grid(), std::move(v));
}

/// Default spacing: resolves the kernel length sqrt(nu) and the diffusive scale 1/sqrt|chi|.
inline double default_dx(double chi, double nu) {
    return std::min(std::sqrt(nu), 1.0 / std::sqrt(std::abs(chi))) / 20.0;
}

}  // namespace chemotw
