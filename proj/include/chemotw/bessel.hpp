#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace chemotw {

namespace detail {

template <std::size_t N>
constexpr double poly(const std::array<double, N>& c, double x) {
    double r = c[N - 1];
    for (std::size_t k = N - 1; k-- > 0;) r = r * x + c[k];
    return r;
}

}  // namespace detail

inline constexpr double euler_gamma = 0.57721566490153286061;

/// Modified Bessel function of the second kind, order zero, for x > 0.
/// Rational minimax fits (Russon & Blair); relative error well below 1e-12.
inline double bessel_k0(double x) {
    if (!(x > 0.0)) throw std::domain_error("bessel_k0: argument must be positive");
    if (x <= 1.0) {
        static constexpr std::array<double, 6> P1 = {
            2.4708152720399552679e+03, 5.9169059852270512312e+03, 4.6850901201934832188e+02,
            1.1999463724910714109e+01, 1.3166052564989571850e-01, 5.8599221412826100000e-04};
        static constexpr std::array<double, 3> Q1 = {
            2.1312714303849120380e+04, -2.4994418972832303646e+02, 1.0};
        static constexpr std::array<double, 5> P2 = {
            -1.6128136304458193998e+06, -3.7333769444840079748e+05, -1.7984434409411765813e+04,
            -2.9501657892958843865e+02, -1.6414452837299064100e+00};
        static constexpr std::array<double, 4> Q2 = {
            -1.6128136304458193998e+06, 2.9865713163054025489e+04, -2.5064972445877992730e+02, 1.0};
        const double y = x * x;
        return detail::poly(P1, y) / detail::poly(Q1, y) - std::log(x) * detail::poly(P2, y) / detail::poly(Q2, y);
    }
    static constexpr std::array<double, 10> P3 = {
        1.1600249425076035558e+02, 2.3444738764199315021e+03, 1.8321525870183537725e+04,
        7.1557062783764037541e+04, 1.5097646353289914539e+05, 1.7398867902565686251e+05,
        1.0577068948034021957e+05, 3.1075408980684392399e+04, 3.6832589957340267940e+03,
        1.1394980557384778174e+02};
    static constexpr std::array<double, 11> Q3 = {
        9.2556599177304839811e+01, 1.8821890840982713696e+03, 1.4847228371802360957e+04,
        5.8824616785857027752e+04, 1.2689839587977598727e+05, 1.5144644673520157801e+05,
        9.7418829762268075784e+04, 3.1474655750295278825e+04, 4.4329628889746408858e+03,
        2.0013443064949242491e+02, 1.0};
    if (x > 705.0) return 0.0;
    const double t = 1.0 / x;
    return std::exp(-x) / std::sqrt(x) * detail::poly(P3, t) / detail::poly(Q3, t);
}

}  // namespace chemotw
