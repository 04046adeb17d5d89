#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "chemotw/kernel.hpp"

using namespace chemotw;

namespace {

// Composite Simpson on [a, b] with an even number of panels.
template <class F>
double simpson(F&& f, double a, double b, int panels) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

// int phi_nu(y) g(y) dy over |y| <= Y, with y = s^2 to absorb the log singularity.
template <class G>
double phi_quad(double nu, G&& g, double Y, int panels) {
    auto half = [&](double sign) {
        return simpson([&](double s) { return s == 0.0 ? 0.0 : 2.0 * s * eval_phi(nu, s * s) * g(sign * s * s); },
                       0.0, std::sqrt(Y), panels);
    };
    return half(1.0) + half(-1.0);
}

double step_exact(double nu, double x) {
    const double a = std::sqrt(nu);
    return x < 0 ? 1.0 - 0.5 * std::exp(x / a) : 0.5 * std::exp(-x / a);
}

// Step with the jump node carrying the midpoint value.
Field step_field(const UniformGrid& g) {
    return Field::sample(g, [](double x) { return x < 0 ? 1.0 : (x == 0.0 ? 0.5 : 0.0); });
}

}  // namespace

TEST(Grid, RejectsBadGeometry) {
    EXPECT_THROW(UniformGrid(0.0, 0.0, 10), std::invalid_argument);
    EXPECT_THROW(UniformGrid(0.0, -1.0, 10), std::invalid_argument);
    EXPECT_THROW(UniformGrid(0.0, 1.0, 1), std::invalid_argument);
    EXPECT_THROW(Field(UniformGrid(0.0, 1.0, 3), std::vector<double>{1, 2}), std::invalid_argument);
    EXPECT_THROW(Field(UniformGrid(0.0, 1.0, 2), std::vector<double>{1, NAN}), std::invalid_argument);
}

TEST(Grid, SymmetricHasNodeAtZero) {
    const auto g = UniformGrid::symmetric(7.3, 0.11);
    const auto i0 = g.nearest(0.0);
    EXPECT_EQ(g.x(i0), 0.0);
    EXPECT_LE(g.dx(), 0.11);
    EXPECT_NEAR(g.x_max(), 7.3, 1e-12);
}

TEST(Bessel, MatchesStdLibraryTo1e7) {
    double worst = 0.0;
    for (double x = 1e-8; x < 60.0; x *= 1.003) {
        const double ref = std::cyl_bessel_k(0.0, x);
        worst = std::max(worst, std::abs(bessel_k0(x) - ref) / ref);
    }
    EXPECT_LT(worst, 1e-7);
}

TEST(Kernel, EvalKValues) {
    EXPECT_DOUBLE_EQ(eval_K(1.0, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(eval_K(4.0, 0.0), 0.25);
    EXPECT_DOUBLE_EQ(eval_K(2.0, 1.3), eval_K(2.0, -1.3));
    EXPECT_THROW(eval_K(0.0, 1.0), std::domain_error);
    EXPECT_THROW(eval_K(-1.0, 1.0), std::domain_error);
}

TEST(Kernel, MassOfKAndPhi) {
    for (double nu : {1e-3, 0.1, 1.0, 4.0}) {
        const double a = std::sqrt(nu);
        const double mk = simpson([&](double x) { return eval_K(nu, x); }, -40 * a, 0.0, 20000) +
                          simpson([&](double x) { return eval_K(nu, x); }, 0.0, 40 * a, 20000);
        EXPECT_NEAR(mk, 1.0, 1e-4) << "nu=" << nu;
        const double mp = phi_quad(nu, [](double) { return 1.0; }, 40 * a, 20000);
        EXPECT_NEAR(mp, 1.0, 1e-4) << "nu=" << nu;
    }
}

TEST(Kernel, PhiEvenAndSingular) {
    EXPECT_THROW(eval_phi(1.0, 0.0), std::domain_error);
    EXPECT_THROW(eval_phi(0.0, 1.0), std::domain_error);
    for (double x : {1e-5, 0.3, 2.0, 17.0}) EXPECT_DOUBLE_EQ(eval_phi(0.7, x), eval_phi(0.7, -x));
}

TEST(Kernel, PhiSmallArgumentAsymptotics) {
    for (double nu : {1e-4, 1.0, 9.0}) {
        const double a = std::sqrt(nu);
        for (double r : {1e-3, 1e-5, 1e-8}) {
            const double x = r * a;
            const double lhs = std::numbers::pi * a * eval_phi(nu, x);
            const double rhs = std::log(2.0 * a / x) - euler_gamma;
            EXPECT_LT(std::abs(lhs - rhs) / rhs, 1e-2);
        }
    }
}

TEST(Kernel, PhiLargeArgumentAsymptotics) {
    // K0(z) ~ sqrt(pi/(2z)) e^{-z} (1 - 1/(8z))
    for (double z : {30.0, 60.0}) {
        const double approx = std::sqrt(std::numbers::pi / (2 * z)) * std::exp(-z) * (1 - 1 / (8 * z));
        EXPECT_NEAR(std::numbers::pi * eval_phi(1.0, z) / approx, 1.0, 1e-3);
    }
}

TEST(Convolve, ConstantIsPreserved) {
    const auto g = UniformGrid::symmetric(5.0, 0.01);
    for (double c : {0.0, 1.0, 0.37}) {
        const auto r = convolve_K(Field(g, c), 0.5, c, c);
        for (double v : r.v.values()) EXPECT_NEAR(v, c, 1e-13);
        EXPECT_FALSE(r.coarse_grid);
    }
}

TEST(Convolve, CoarseGridIsFlagged) {
    const auto g = UniformGrid::symmetric(5.0, 0.5);
    EXPECT_TRUE(convolve_K(Field(g, 0.0), 0.01, 0.0, 0.0).coarse_grid);
}

TEST(Convolve, StepClosedForm) {
    for (double nu : {0.01, 1.0}) {
        const double a = std::sqrt(nu);
        const auto g = UniformGrid::symmetric(10 * a, a / 100);
        const auto r = convolve_K(step_field(g), nu, 1.0, 0.0);
        double gap = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) gap = std::max(gap, std::abs(r.v[i] - step_exact(nu, g.x(i))));
        EXPECT_LT(gap, 1e-4) << "nu=" << nu;
    }
}

TEST(Convolve, PiecewiseLinearIsExact) {
    // Independent fine Simpson quadrature of K against a ramp; the convolution is exact for
    // piecewise-linear data, so only the oracle's own error remains.
    const double nu = 0.3, w = 1.7;
    auto ramp = [&](double y) { return y < -w ? 1.0 : (y > w ? 0.0 : 0.5 * (1 - y / w)); };
    const auto g = UniformGrid(-w, w / 17, 35);
    const auto u = Field::sample(g, ramp);
    KernelConvolution k(u, nu, 1.0, 0.0);
    const double a = std::sqrt(nu);
    for (double x : {-3.0, -w, -0.4, 0.0, 0.77, w, 2.5}) {
        auto f = [&](double y) { return eval_K(nu, x - y) * ramp(y); };
        double ref = 0.0;
        // left tail exactly, the rest by Simpson with breaks at every kink
        const double lo = -w;
        ref += x <= lo ? 1.0 - 0.5 * std::exp(-(lo - x) / a) : 0.5 * std::exp(-(x - lo) / a);
        std::vector<double> br{lo, w, x};
        std::sort(br.begin(), br.end());
        double hi_end = std::max(w, x) + 40 * a;
        br.push_back(hi_end);
        for (std::size_t j = 0; j + 1 < br.size(); ++j) {
            const double s = std::max(br[j], lo), e = br[j + 1];
            if (e > s) ref += simpson(f, s, e, 4000);
        }
        EXPECT_NEAR(k.value_at(x), ref, 1e-10) << "x=" << x;
    }
}

TEST(Convolve, MatchesDoublePhiConvolution) {
    const double nu = 1.0;
    auto u = [](double x) { return std::exp(-x * x); };
    const auto g = UniformGrid::symmetric(12.0, 0.005);
    const auto v = convolve_K(Field::sample(g, u), nu, 0.0, 0.0).v;
    auto phi_u = [&](double x) { return phi_quad(nu, [&](double y) { return u(x - y); }, 30.0, 600); };
    double gap = 0.0;
    for (double x : {-3.0, -1.5, -0.5, 0.0, 0.25, 1.0, 2.0, 3.5}) {
        const double dbl = phi_quad(nu, [&](double y) { return phi_u(x - y); }, 30.0, 600);
        gap = std::max(gap, std::abs(v.at(x) - dbl));
    }
    EXPECT_LT(gap, 1e-3);
}

TEST(Convolve, ComparisonPrinciple) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const auto g = UniformGrid::symmetric(4.0, 0.02);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> vals(g.size());
        for (auto& x : vals) x = U(rng);
        const double fl = U(rng), fr = U(rng);
        const Field u(g, vals);
        const auto v = convolve_K(u, 0.05 + U(rng), fl, fr).v;
        const double lo = std::min({u.min(), fl, fr}), hi = std::max({u.max(), fl, fr});
        EXPECT_GE(v.min(), lo - 1e-14);
        EXPECT_LE(v.max(), hi + 1e-14);
        EXPECT_GE(v.min(), 0.0);
        EXPECT_LE(v.max(), 1.0);
    }
}

TEST(Convolve, Symmetry) {
    const auto g = UniformGrid::symmetric(15.0, 0.01);
    const auto f = Field::sample(g, [](double x) { return std::exp(-(x - 1) * (x - 1)) * std::cos(3 * x); });
    const auto h = Field::sample(g, [](double x) { return std::exp(-2 * (x + 0.5) * (x + 0.5)); });
    for (double nu : {0.1, 1.0}) {
        const auto kf = convolve_K(f, nu, 0, 0).v;
        const auto kh = convolve_K(h, nu, 0, 0).v;
        std::vector<double> a(g.size()), b(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            a[i] = f[i] * kh[i];
            b[i] = kf[i] * h[i];
        }
        EXPECT_LT(std::abs(trapezoid(g, a) - trapezoid(g, b)), 1e-6);
    }
}

TEST(Slope, EvenProfileHasZeroSlopeAtCentre) {
    const auto g = UniformGrid::symmetric(8.0, 0.01);
    const auto u = Field::sample(g, [](double x) { return 1.0 / (1.0 + x * x); });
    EXPECT_NEAR(v_slope(u, 0.6, 0.0, 0.0, 0.0), 0.0, 1e-13);
    // shifted even profile, evaluated off-node
    const auto w = Field::sample(g, [](double x) { return std::exp(-(x - 0.123) * (x - 0.123)); });
    EXPECT_NEAR(v_slope(w, 0.6, 0.0, 0.0, 0.123), 0.0, 1e-5);
}

TEST(Slope, StepValue) {
    for (double nu : {0.01, 1.0, 4.0}) {
        const double a = std::sqrt(nu), h = a / 1000;
        const auto g = UniformGrid::symmetric(20 * a, h);
        const double s = v_slope(step_field(g), nu, 1.0, 0.0, 0.0);
        // the interpolant smears the jump over [-h, h]: relative error h/(2a)
        EXPECT_NEAR(s, -1.0 / (2 * a), 1.0 / (2 * a) * (h / a)) << "nu=" << nu;
    }
}

TEST(Slope, AntisymmetricInProfile) {
    const auto g = UniformGrid::symmetric(6.0, 0.01);
    const auto u = Field::sample(g, [](double x) { return 0.5 * (1 - std::tanh(2 * x + 0.3)); });
    const auto ur = Field::sample(g, [](double x) { return 0.5 * (1 - std::tanh(-2 * x + 0.3)); });
    for (double x : {-2.0, -0.3, 0.0, 0.41, 1.9}) {
        EXPECT_NEAR(v_slope(u, 0.8, 1.0, 0.0, x), -v_slope(ur, 0.8, 0.0, 1.0, -x), 1e-12);
    }
}

TEST(Slope, NonincreasingProfileGivesNonpositiveSlope) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const auto g = UniformGrid::symmetric(3.0, 0.05);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> vals(g.size());
        double cur = 1.0;
        for (auto& x : vals) {
            cur -= U(rng) * U(rng) * 0.1;
            cur = std::max(cur, 0.0);
            x = cur;
        }
        const Field u(g, vals);
        KernelConvolution k(u, 0.01 + U(rng), 1.0, 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE(k.slope(i), 1e-15);
        for (double x = -4.0; x < 4.0; x += 0.0731) EXPECT_LE(k.slope_at(x), 1e-15);
    }
}

TEST(Slope, AgreesWithCentredDifferencesSecondOrder) {
    const double nu = 0.5;
    auto prof = [](double x) { return 0.5 * (1 - std::tanh(x)); };
    double err[2];
    for (int r = 0; r < 2; ++r) {
        const double h = 0.02 / (1 << r);
        const auto g = UniformGrid::symmetric(10.0, h);
        KernelConvolution k(Field::sample(g, prof), nu, 1.0, 0.0);
        double e = 0.0;
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            const double fd = (k.value(i + 1) - k.value(i - 1)) / (2 * g.dx());
            e = std::max(e, std::abs(fd - k.slope(i)));
        }
        err[r] = e;
    }
    EXPECT_LT(err[0], 1e-4);
    EXPECT_GT(err[0] / err[1], 3.5);
}

TEST(ScreenedPoisson, TrivialCases) {
    const auto g = UniformGrid::symmetric(5.0, 0.01);
    for (double v : screened_poisson(Field(g, 0.0), 1.0, 0, 0).values()) EXPECT_EQ(v, 0.0);
    for (double v : screened_poisson(Field(g, 1.0), 1.0, 1, 1).values()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(ScreenedPoisson, StepMatchesClosedForm) {
    for (double nu : {0.04, 1.0}) {
        const double a = std::sqrt(nu);
        const auto g = UniformGrid::symmetric(15 * a, a / 100);
        const auto v = screened_poisson(step_field(g), nu, 1.0, 0.0);
        double gap = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) gap = std::max(gap, std::abs(v[i] - step_exact(nu, g.x(i))));
        EXPECT_LT(gap, 1e-4) << "nu=" << nu;
    }
}

TEST(ScreenedPoisson, AgreesWithConvolutionSecondOrder) {
    const double nu = 0.3;
    auto prof = [](double x) { return 0.5 * (1 - std::tanh(1.5 * x)) + 0.1 * std::exp(-x * x); };
    double err[2];
    for (int r = 0; r < 2; ++r) {
        const auto g = UniformGrid::symmetric(8.0, 0.04 / (1 << r));
        const auto u = Field::sample(g, prof);
        const auto a = screened_poisson(u, nu, 1.0, 0.0);
        const auto b = convolve_K(u, nu, 1.0, 0.0).v;
        double e = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
        err[r] = e;
        // discrete residual of -nu v'' + v - u
        double res = 0.0;
        const double h = g.dx();
        for (std::size_t i = 1; i + 1 < g.size(); ++i)
            res = std::max(res, std::abs(-nu * (a[i + 1] - 2 * a[i] + a[i - 1]) / (h * h) + a[i] - u[i]));
        EXPECT_LT(res, 1e-9);
    }
    EXPECT_LT(err[0], 1e-3);
    EXPECT_GT(err[0] / err[1], 3.5);
}
