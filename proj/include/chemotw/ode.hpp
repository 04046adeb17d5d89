#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace chemotw {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 0.0;  // 0: pick from the span
    std::size_t max_steps = 1000000;
};

struct OdeStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

/// Dormand-Prince 5(4) from t0 to t1 (either direction). f(t, y) returns dy/dt.
/// `stop(t, y)` is checked after each accepted step; returning true ends the integration early.
template <std::size_t N, class F, class Stop>
std::array<double, N> dopri5(F&& f, double t0, std::array<double, N> y, double t1, const OdeOptions& opt,
                             Stop&& stop, OdeStats* stats = nullptr, double* t_end = nullptr) {
    using S = std::array<double, N>;
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double span = t1 - t0;
    if (span == 0.0) {
        if (t_end) *t_end = t0;
        return y;
    }
    const double dir = span > 0 ? 1.0 : -1.0;
    double h = opt.h_init > 0 ? opt.h_init : std::abs(span) * 1e-3;
    double t = t0;
    S k1 = f(t, y), k2, k3, k4, k5, k6, k7, yn;
    OdeStats st;
    auto comb = [&](std::initializer_list<std::pair<double, const S*>> terms, double hh) {
        S r = y;
        for (const auto& [c, k] : terms)
            for (std::size_t i = 0; i < N; ++i) r[i] += hh * c * (*k)[i];
        return r;
    };
    while (dir * (t1 - t) > 0) {
        if (st.accepted + st.rejected > opt.max_steps) throw std::runtime_error("dopri5: too many steps");
        bool last = false;
        if (h >= std::abs(t1 - t)) {
            h = std::abs(t1 - t);
            last = true;
        }
        const double hs = dir * h;
        k2 = f(t + c2 * hs, comb({{a21, &k1}}, hs));
        k3 = f(t + c3 * hs, comb({{a31, &k1}, {a32, &k2}}, hs));
        k4 = f(t + c4 * hs, comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}, hs));
        k5 = f(t + c5 * hs, comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, hs));
        k6 = f(t + hs, comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, hs));
        yn = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, hs);
        k7 = f(t + hs, yn);
        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(yn[i]));
            err = std::max(err, std::abs(e) / sc);
        }
        if (!std::isfinite(err)) {
            h *= 0.2;
            ++st.rejected;
            if (h < 1e-300) throw std::runtime_error("dopri5: step size underflow");
            continue;
        }
        if (err <= 1.0) {
            t = last ? t1 : t + hs;
            y = yn;
            k1 = k7;
            ++st.accepted;
            if (stop(t, y)) break;
            h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            ++st.rejected;
            if (h < 1e-300) throw std::runtime_error("dopri5: step size underflow");
        }
    }
    if (stats) *stats = st;
    if (t_end) *t_end = t;
    return y;
}

template <std::size_t N, class F>
std::array<double, N> dopri5(F&& f, double t0, std::array<double, N> y, double t1, const OdeOptions& opt = {}) {
    return dopri5<N>(std::forward<F>(f), t0, y, t1, opt, [](double, const std::array<double, N>&) { return false; });
}

}  // namespace chemotw
