#include <gtest/gtest.h>

#include <cmath>

#include "chemotw/ode.hpp"
#include "chemotw/slab.hpp"
#include "chemotw/speed.hpp"

using namespace chemotw;

namespace {

// Shooting for D phi'' + b phi' + r phi (1 - k phi) = 0, phi(-L) = left, phi(L) = 0.
// Starts at x = L with phi' = -s and bisects log s until phi(-L) = left.
struct FkppShooting {
    FkppProblem pb;
    double L;

    std::array<double, 2> shoot(double s, double x_end) const {
        auto f = [&](double, const std::array<double, 2>& y) {
            return std::array<double, 2>{y[1], -(pb.b * y[1] + pb.r * y[0] * (1 - pb.k * y[0])) / pb.D};
        };
        OdeOptions o;
        o.rtol = 1e-12;
        o.atol = 1e-300;  // values near x = L are far below any absolute scale
        return dopri5<2>(f, L, {0.0, -s}, x_end, o);
    }

    double slope() const {
        double lo = std::log(1e-30), hi = std::log(1e3);
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            const double end = shoot(std::exp(mid), -L)[0];
            (std::isfinite(end) && end < pb.left ? lo : hi) = mid;
        }
        return std::exp(0.5 * (lo + hi));
    }
};

}  // namespace

TEST(WaveParams, Validation) {
    EXPECT_NO_THROW((WaveParams{-4, 1, 0.5, 0.25, 10}.validate()));
    EXPECT_THROW((WaveParams{0, 1, 0.5, 0.25, 10}.validate()), std::invalid_argument);
    EXPECT_THROW((WaveParams{-4, 0, 0.5, 0.25, 10}.validate()), std::invalid_argument);
    EXPECT_THROW((WaveParams{-4, 1, -0.1, 0.25, 10}.validate()), std::invalid_argument);
    EXPECT_THROW((WaveParams{-4, 1, 0.5, 0.5, 10}.validate()), std::invalid_argument);
    EXPECT_THROW((WaveParams{-4, 1, 0.5, 0.25, 0}.validate()), std::invalid_argument);
    EXPECT_DOUBLE_EQ(WaveParams::default_delta(1.0), 0.25);
}

TEST(SlabOperator, SecondOrderConsistency) {
    const double chi = -4, nu = 0.5, c = 0.7;
    auto U = [](double x) { return 0.5 * (1 - std::tanh(x)); };
    auto V = [](double x) { return 0.5 * (1 - std::tanh(x / 2)); };
    auto exact = [&](double x) {
        const double t = std::tanh(x), s = 1 - t * t;
        const double ux = -0.5 * s, uxx = s * t;
        const double vx = -0.25 * (1 - std::tanh(x / 2) * std::tanh(x / 2));
        const double u = U(x), v = V(x);
        return uxx / std::abs(chi) + (c + vx) * ux + u * (1 - u) + u * (v - u) / nu;
    };
    double prev = 0;
    for (double h : {0.04, 0.02, 0.01}) {
        const UniformGrid g = UniformGrid::symmetric(5.0, h);
        const Field r = slab_operator(Field::sample(g, U), Field::sample(g, V), chi, nu, c);
        double err = 0;
        for (std::size_t i = 1; i + 1 < g.size(); ++i) err = std::max(err, std::abs(r[i] - exact(g.x(i))));
        if (prev > 0) {
            EXPECT_NEAR(prev / err, 4.0, 0.3);
        }
        prev = err;
    }
}

TEST(SolveFkpp, MatchesShootingOracle) {
    FkppProblem pb{1.5, 0.25, 1.0, 1.0, 1.0};
    const double L = 5.0;
    const UniformGrid g = UniformGrid::symmetric(L, 0.005);
    const FkppResult r = solve_fkpp(pb, g);
    ASSERT_TRUE(r.converged);
    const FkppShooting sh{pb, L};
    const double s = sh.slope();
    double gap = 0;
    for (double x : {-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.5, 4.0}) gap = std::max(gap, std::abs(r.phi.at(x) - sh.shoot(s, x)[0]));
    EXPECT_LT(gap, 1e-4);
    // c above the local minimal speed: the front sits at the left end
    EXPECT_LT(r.phi.at(0.0), 1e-10);
    EXPECT_EQ(r.phi[0], 1.0);
    EXPECT_EQ(r.phi[g.size() - 1], 0.0);
}

TEST(SolveSlab, ZeroCouplingReducesToFkpp) {
    const WaveParams p{-4, 1, 0.0, 0.25, 10};
    SlabOptions o;
    o.tau = 0.0;
    const SlabSolution s = solve_slab(p, std::nullopt, o);
    ASSERT_TRUE(s.converged);
    const FkppResult f = solve_fkpp({0.0, p.diffusion(), 1.0, 1.0, 1.0}, s.u.grid());
    ASSERT_TRUE(f.converged);
    double gap = 0;
    for (std::size_t i = 0; i < s.u.size(); ++i) gap = std::max(gap, std::abs(s.u[i] - f.phi[i]));
    EXPECT_LT(gap, 1e-6);
}

TEST(SolveSlab, BracketedBySubAndSuperSolutions) {
    const WaveParams p{-4, 1, 0.4, 0.25, 30};
    const SlabSolution s = solve_slab(p);
    ASSERT_TRUE(s.converged);
    EXPECT_LT(s.residual, 1e-8);
    EXPECT_EQ(s.u[0], 1.0);
    EXPECT_EQ(s.u[s.u.size() - 1], 0.0);
    const FkppResult sub = fkpp_slab(FkppKind::sub, p), sup = fkpp_slab(FkppKind::super, p);
    ASSERT_TRUE(sub.converged && sup.converged);
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        ASSERT_LE(sub.phi[i], s.u[i] + 1e-4) << "x = " << s.u.x(i);
        ASSERT_LE(s.u[i], sup.phi[i] + 1e-4) << "x = " << s.u.x(i);
    }
}

TEST(SolveSlab, SuperSolutionCeilingAtFastSpeed) {
    const WaveParams p{-1e4, 1, 1.2, 0.25, 40};
    const auto ceil = super_solution_ceiling(p);
    ASSERT_TRUE(ceil.has_value());
    // the wave is pressed against the left end; start from a boundary layer
    const UniformGrid g = detail::slab_grid(p, 0.0);
    SlabOptions o;
    o.newton.dt0 = 0.1;
    o.newton.max_iter = 2000;
    const SlabSolution s = solve_slab(p, Field::sample(g, [&](double x) { return x < -p.L + 0.1 ? 1.0 : 0.0; }), o);
    ASSERT_TRUE(s.converged);
    EXPECT_LE(s.u.at(0.0), *ceil + 1e-12);
}

TEST(FkppBounds, SubFloorAndCeilingApplicability) {
    const WaveParams slow{-4, 1, 0.4, 0.25, 30};
    const auto floor = sub_solution_floor(slow, 0.01);
    ASSERT_TRUE(floor.has_value());
    EXPECT_GE(fkpp_slab(FkppKind::sub, slow).phi.at(0.0), *floor);
    EXPECT_FALSE(super_solution_ceiling(slow).has_value());
    const WaveParams fast{-4, 1, 0.8, 0.25, 30};
    EXPECT_FALSE(sub_solution_floor(fast, 0.01).has_value());
}

TEST(QuasiSingularPoint, GapWithinBoundOnSelectedWave) {
    const SpeedSelection sel = select_speed(-100, 1, 0.25, 40);
    const QuasiSingularPoint q = quasi_singular_point(sel.solution);
    ASSERT_TRUE(q.interior) << q.status;
    EXPECT_DOUBLE_EQ(q.bound, 4.0 * 2.0 / 100.0);
    EXPECT_LE(q.gap, q.bound);
    EXPECT_LT(std::abs(q.location), 10.0);
}

TEST(QuasiSingularPoint, RejectsUnconvergedSolution) {
    SlabSolution s;
    s.converged = false;
    EXPECT_THROW(quasi_singular_point(s), std::invalid_argument);
}
