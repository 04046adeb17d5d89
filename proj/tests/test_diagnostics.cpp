#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "chemotw/diagnostics.hpp"
#include "chemotw/speed.hpp"

using namespace chemotw;

namespace {

// int (phi * g)^2 for a Gaussian g = exp(-x^2 / (2 s^2)) via Plancherel:
// phi-hat(k)^2 = 1/(1 + nu k^2), so the integral is s^2 int exp(-s^2 k^2) / (1 + nu k^2) dk.
double gaussian_phi_energy(double s, double nu) {
    const double K = 40.0 / s, dk = K / 200000;
    double sum = 0.0;
    for (int j = -200000; j <= 200000; ++j) {
        const double k = j * dk, w = (j == -200000 || j == 200000) ? 0.5 : 1.0;
        sum += w * std::exp(-s * s * k * k) / (1.0 + nu * k * k);
    }
    return s * s * sum * dk;
}

const SpeedSelection& wave_chi4() {
    static const SpeedSelection s = select_speed(-4, 1, 0.25, 40);
    return s;
}

}  // namespace

TEST(Quadrature, GaussLegendreIntegratesPolynomials) {
    const auto [x, w] = detail::gauss_legendre01(24);
    double s0 = 0, s9 = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        s0 += w[k];
        s9 += w[k] * std::pow(x[k], 9);
    }
    EXPECT_NEAR(s0, 1.0, 1e-14);
    EXPECT_NEAR(s9, 0.1, 1e-14);
}

TEST(PhiWeights, TotalMassIsOne) {
    for (double nu : {0.01, 1.0, 4.0}) {
        const double h = std::sqrt(nu) / 50;
        const auto mmax = static_cast<std::size_t>(std::ceil(36.0 * std::sqrt(nu) / h)) + 1;
        const auto W = detail::phi_weights(nu, h, mmax);
        double mass = W[0];
        for (std::size_t m = 1; m < W.size(); ++m) mass += 2 * W[m];
        EXPECT_NEAR(mass, 1.0, 1e-9) << "nu = " << nu;
    }
}

TEST(PhiEnergy, GaussianMatchesFourierOracle) {
    for (double nu : {0.25, 1.0}) {
        const double s = 0.7, h = 0.005;
        const UniformGrid g = UniformGrid::symmetric(20.0, h);
        std::vector<double> gv(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] = std::exp(-g.x(i) * g.x(i) / (2 * s * s));
        EXPECT_NEAR(detail::phi_energy(gv, g.dx(), nu) / gaussian_phi_energy(s, nu), 1.0, 1e-4) << "nu = " << nu;
    }
}

TEST(EnergyIdentity, ConstantFieldsGiveZeroTerms) {
    const UniformGrid g = UniformGrid::symmetric(10.0, 0.05);
    const Field u(g, std::vector<double>(g.size(), 1.0));
    const auto e = energy_identity(u, u, -4, 1, 0.0);
    EXPECT_EQ(e.coupling, 0.0);
    EXPECT_EQ(e.diffusion, 0.0);
    EXPECT_EQ(e.reaction, 0.0);
    EXPECT_EQ(e.gap, 0.0);
    EXPECT_FALSE(e.relative);
    EXPECT_THROW(energy_identity(u, u, 4, 1, 0.0), std::invalid_argument);
}

TEST(EnergyIdentity, HoldsOnSelectedWave) {
    const auto& s = wave_chi4();
    const auto e = energy_identity(s.solution.u, s.solution.v, -4, 1, s.c);
    EXPECT_LT(e.gap, 1e-2);
    EXPECT_LT(e.routes_gap, 1e-3);
    EXPECT_GT(e.coupling, 0.0);
}

TEST(OscillationDecay, ConstantAndUnderResolved) {
    const UniformGrid g = UniformGrid::symmetric(10.0, 0.01);
    const Field u(g, std::vector<double>(g.size(), 0.5));
    const auto o = oscillation_decay(u, u, 1.0, 1.0);
    EXPECT_EQ(o.worst_oscillation, 0.0);
    EXPECT_EQ(o.uv_gap, 0.0);
    const UniformGrid coarse = UniformGrid::symmetric(10.0, 0.5);
    const Field uc(coarse, std::vector<double>(coarse.size(), 0.5));
    EXPECT_THROW(oscillation_decay(uc, uc, 1e-4, 1.0), std::domain_error);
}

TEST(OscillationDecay, SlidingWindowMatchesBruteForce) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    const UniformGrid g(0.0, 0.05, 400);
    std::vector<double> a(g.size());
    for (auto& x : a) x = d(rng);
    const Field u(g, a), v(g, std::vector<double>(g.size(), 0.0));
    const double nu = 0.5;
    const auto o = oscillation_decay(u, v, nu, 1.0);
    const auto half = static_cast<std::ptrdiff_t>(std::floor(std::pow(nu, 0.25) / g.dx() + 1e-9));
    double worst = 0;
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.size()); ++i) {
        double lo = 1e300, hi = -1e300;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - half); j <= std::min<std::ptrdiff_t>(a.size() - 1, i + half); ++j) {
            lo = std::min(lo, a[j]);
            hi = std::max(hi, a[j]);
        }
        worst = std::max(worst, hi - lo);
    }
    EXPECT_DOUBLE_EQ(o.worst_oscillation, worst);
}

TEST(OscillationDecay, SweepFitRecoversPowerLaw) {
    const std::vector<double> nus = {1e-1, 1e-2, 1e-3, 1e-4}, cs = {0.7, 0.7, 0.7, 0.7};
    std::vector<double> gaps;
    for (double nu : nus) gaps.push_back(2.0 * (std::sqrt(0.7) + 1) * std::pow(nu, 0.3));
    const DecayFit f = fit_oscillation_sweep(nus, gaps, cs);
    EXPECT_NEAR(f.slope, 0.3, 1e-12);
    EXPECT_NEAR(f.max_C, 2.0 * std::pow(1e-1, 0.3 - 0.125), 1e-12);
    EXPECT_TRUE(f.pass);
    EXPECT_THROW(fit_oscillation_sweep({1.0}, {1.0}, {1.0}), std::invalid_argument);
}

TEST(ExpDecay, ConstantsAndFittedRate) {
    const UniformGrid g(-1.0, 0.01, 4101);
    const Field u = Field::sample(g, [](double x) { return std::exp(-x); });
    const double nu = 1.0, c = 0.01;
    const ExpDecay e = exp_decay_check(u, -4.0, nu, c);
    EXPECT_DOUBLE_EQ(e.A, 4.0 * std::log(8.0));
    EXPECT_DOUBLE_EQ(e.mu, 0.125);
    EXPECT_EQ(e.status, "ok");
    EXPECT_NEAR(e.theta, 1.0, 1e-3);
    EXPECT_EQ(e.violations, 0u);
    EXPECT_GT(e.steps_checked, 0u);
    EXPECT_NEAR(e.origin, std::log(2.0), 0.011);
}

TEST(ExpDecay, ShortTailIsFlagged) {
    const UniformGrid g(-1.0, 0.01, 301);
    const Field u = Field::sample(g, [](double x) { return std::exp(-x); });
    EXPECT_EQ(exp_decay_check(u, -4.0, 1.0, 0.5).status, "insufficient domain");
    EXPECT_THROW(exp_decay_check(u, -4.0, 1.0, 0.0), std::invalid_argument);
}

TEST(ExpDecay, SlowTailViolates) {
    // decay slower than the step contraction
    const UniformGrid g(-1.0, 0.01, 20001);
    const Field u = Field::sample(g, [](double x) { return 0.5 * std::exp(-1e-3 * x); });
    const ExpDecay e = exp_decay_check(u, -4.0, 1.0, 0.01);
    EXPECT_GT(e.violations, 0u);
}

TEST(Structure, DecreasingProfilePasses) {
    const UniformGrid g = UniformGrid::symmetric(10.0, 0.01);
    const Field u = Field::sample(g, [](double x) { return 0.5 * (1 - std::tanh(x)); });
    const StructureChecks s = structure_checks(u, u, 1.0);
    EXPECT_TRUE(s.pass);
    EXPECT_NEAR(s.x_d, std::atanh(1.0 - 4.0 / 3.0), 0.011);
}

TEST(Structure, SyntheticDipIsFlagged) {
    const UniformGrid g = UniformGrid::symmetric(10.0, 0.01);
    Field u = Field::sample(g, [](double x) { return 0.5 * (1 - std::tanh(x)); });
    const std::size_t k = g.nearest(3.0);
    u[k] -= 1e-2;
    const StructureChecks s = structure_checks(u, u, 1.0);
    EXPECT_FALSE(s.pass);
    EXPECT_GT(s.monotonicity_violation, 9e-3);
    EXPECT_NE(std::find(s.offending.begin(), s.offending.end(), k + 1), s.offending.end());
}

TEST(Holder, SquareRootProfileAttainsBound) {
    const double c = 0.8;
    const UniformGrid g = UniformGrid::symmetric(10.0, 0.01);
    const Field v = Field::sample(g, [&](double x) { return std::sqrt(c) * std::sqrt(std::abs(x)); });
    const HolderL2 r = holder_l2_check(v, c);
    EXPECT_NEAR(r.seminorm, std::sqrt(c), 1e-6);
    const Field flat(g, std::vector<double>(g.size(), 0.3));
    EXPECT_EQ(holder_l2_check(flat, c).seminorm, 0.0);
    EXPECT_TRUE(holder_l2_check(flat, c).pass);
}

TEST(RunDiagnostics, AllChecksOnceAndDeterministic) {
    const auto& s = wave_chi4();
    const DiagnosticsInput in{&s.solution.u, &s.solution.v, -4.0, 1.0, s.c};
    const DiagnosticsReport a = run_diagnostics(in), b = run_diagnostics(in);
    const std::vector<std::string> names = {"energy_identity", "energy_routes", "oscillation_decay", "exp_decay", "structure",
                                            "holder_l2"};
    ASSERT_EQ(a.checks.size(), names.size());
    for (std::size_t k = 0; k < names.size(); ++k) {
        EXPECT_EQ(a.checks[k].name, names[k]);
        EXPECT_EQ(a.checks[k].measured, b.checks[k].measured);
    }
    EXPECT_TRUE(a.find("structure")->pass);
    EXPECT_TRUE(a.find("energy_identity")->pass);
    EXPECT_EQ(a.find("nothing"), nullptr);
}
