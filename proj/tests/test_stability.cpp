#include "fracvi/stability.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fracvi;
using std::numbers::pi;

namespace {

struct Interval {
    TorusGrid grid = build_grid(1, 2.0, 128);
    DomainMask mask = DomainMask::interval(grid, -1.0, 1.0);
    ScalarField psi = sample(grid, [](const Point& x) { return std::max(1.0 - 4.0 * x[0] * x[0], -1.0); });
    ScalarField f0 = apply_mask(sample(grid, [](const Point&) { return -1.0; }), mask);
};

SweepSpec obstacle_spec(const Interval& I, double p, std::vector<double> orders)
{
    return SweepSpec{Coefficients::p_laplace(I.grid, p, 1.0, 1.0), DualDatum::from_f0(I.f0), I.mask, 0.7,
                     std::move(orders), ConstraintRule::fixed, ObstacleLower{I.psi}};
}

SweepRow zero_row(double s)
{
    SweepRow r;
    r.s = s;
    r.weak.assign(kWeakBatterySize, 0.0);
    r.converged = true;
    return r;
}

}  // namespace

TEST(Sweep, IdenticalOrdersGiveZeroRows)
{
    Interval I;
    const SweepReport r = sweep_orders(obstacle_spec(I, 2.0, {0.7, 0.7, 0.7, 0.7}));
    ASSERT_EQ(r.rows.size(), 4u);
    for (const auto& row : r.rows) {
        EXPECT_LE(row.err_u, 10 * r.solver_tol);
        EXPECT_LE(row.err_grad, 10 * r.solver_tol);
    }
    EXPECT_TRUE(convergence_verdict(r).ok) << convergence_verdict(r).summary;
}

TEST(Sweep, SineIsOrderIndependent)
{
    const TorusGrid g = build_grid(1, pi, 64);
    const ScalarField sine = sample(g, [](const Point& x) { return std::sin(x[0]); });
    SweepSpec spec{Coefficients::p_laplace(g, 2.0, 1.0, 1.0), DualDatum::from_f0(sine), DomainMask::full(g), 0.5,
                   {0.1, 0.3, 0.45, 0.55, 0.9}};
    const SweepReport r = sweep_orders(spec);
    for (const auto& row : r.rows) {
        EXPECT_TRUE(row.converged);
        EXPECT_LE(row.err_u, 10 * r.solver_tol);
        EXPECT_LE(row.err_grad, 10 * r.solver_tol);
    }
}

TEST(Sweep, RowsOrderedByDistance)
{
    Interval I;
    const SweepReport r = sweep_orders(obstacle_spec(I, 2.0, {0.69, 0.2, 0.85, 0.6}));
    ASSERT_EQ(r.rows.size(), 4u);
    EXPECT_DOUBLE_EQ(r.rows[0].s, 0.2);
    EXPECT_DOUBLE_EQ(r.rows[1].s, 0.85);
    EXPECT_DOUBLE_EQ(r.rows[2].s, 0.6);
    EXPECT_DOUBLE_EQ(r.rows[3].s, 0.69);
}

TEST(Sweep, StrongErrorsDecreaseAlongDyadicSchedule)
{
    Interval I;
    for (double p : {2.0, 3.0}) {
        const SweepReport r = sweep_orders(obstacle_spec(I, p, dyadic_orders(0.7, 1, 6, true)));
        ASSERT_EQ(r.rows.size(), 6u);
        for (std::size_t i = 3; i < r.rows.size(); ++i) {
            EXPECT_LT(r.rows[i].err_u, r.rows[i - 1].err_u) << "p=" << p;
            EXPECT_LT(r.rows[i].err_grad, r.rows[i - 1].err_grad) << "p=" << p;
        }
    }
}

TEST(Sweep, WarmStartDoesNotChangeAnswer)
{
    Interval I;
    const SweepSpec spec = obstacle_spec(I, 3.0, dyadic_orders(0.7, 1, 4, false));
    const SweepReport warm = sweep_orders(spec);
    SweepSpec single = spec;
    single.orders = {warm.rows.back().s};
    const SweepReport cold = sweep_orders(single);
    EXPECT_NEAR(warm.rows.back().err_grad, cold.rows.back().err_grad, 10 * warm.solver_tol);
    EXPECT_NEAR(warm.rows.back().err_u, cold.rows.back().err_u, 10 * warm.solver_tol);
}

TEST(Sweep, LimitOrdersRun)
{
    Interval I;
    SweepSpec up = obstacle_spec(I, 2.0, {0.9, 0.95, 0.99});
    up.sigma = 1.0;
    const SweepReport r1 = sweep_orders(up);
    EXPECT_TRUE(r1.sigma_converged);
    SweepSpec down = obstacle_spec(I, 2.0, {0.1, 0.05, 0.01});
    down.sigma = 0.0;
    const SweepReport r0 = sweep_orders(down);
    EXPECT_TRUE(r0.sigma_converged);
    for (const auto& row : r0.rows)
        EXPECT_FALSE(std::isnan(row.err_grad));
}

TEST(Sweep, CsvLayout)
{
    EXPECT_EQ(SweepReport::csv_header(),
              "s,err_u,err_grad,weak_1,weak_2,weak_3,weak_4,weak_5,weak_6,weak_7,weak_8,iters,converged");
    SweepReport r{0.5, 2.0, 1e-8, {zero_row(0.25)}, ScalarField(build_grid(1, pi, 8)), true};
    EXPECT_EQ(r.csv(), SweepReport::csv_header() + "\n0.25,0,0,0,0,0,0,0,0,0,0,0,true\n");
}

TEST(Sweep, Validation)
{
    Interval I;
    SweepSpec bad = obstacle_spec(I, 2.0, {1.5});
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    SweepSpec lifted{Coefficients::p_laplace(I.grid, 2.0), DualDatum::from_f0(I.f0), I.mask, 0.7, {0.8},
                     ConstraintRule::gradient_riesz_lifted,
                     GradientBound{sample(I.grid, [](const Point&) { return 1.0; }), 1.0}};
    EXPECT_THROW(lifted.validate(), std::invalid_argument);
    lifted.orders = {0.5, 0.4};
    EXPECT_THROW(lifted.validate(), std::invalid_argument);
    lifted.orders = {0.4, 0.5};
    EXPECT_NO_THROW(lifted.validate());
}

TEST(Sweep, FailedRowIsMarkedAndSweepContinues)
{
    Interval I;
    SweepSpec spec = obstacle_spec(I, 2.0, {0.6, 0.65});
    SolverConfig cfg;
    cfg.max_iters = 1;
    const SweepReport r = sweep_orders(spec, cfg);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_FALSE(r.rows[0].converged);
    EXPECT_FALSE(convergence_verdict(r).ok);
}

TEST(Sweep, GradientLiftedSweep)
{
    Interval I;
    const ScalarField two = apply_mask(sample(I.grid, [](const Point&) { return 2.0; }), I.mask);
    const ScalarField g = sample(I.grid, [](const Point&) { return 1.0; });
    SweepSpec spec{Coefficients::p_laplace(I.grid, 2.0), DualDatum::from_f0(two), I.mask, 0.7,
                   dyadic_orders(0.7, 1, 5, true), ConstraintRule::gradient_riesz_lifted, GradientBound{g, 1.0}};
    const SweepReport r = sweep_orders(spec);
    ASSERT_EQ(r.rows.size(), 5u);
    for (const auto& row : r.rows)
        EXPECT_TRUE(row.converged) << row.message;
    for (std::size_t i = 1; i < r.rows.size(); ++i)
        EXPECT_LT(r.rows[i].err_grad, r.rows[i - 1].err_grad);
}

// ---------------------------------------------------------------------------

TEST(Verdict, AllZeroReportPasses)
{
    SweepReport r{0.5, 2.0, 1e-8, {}, ScalarField(build_grid(1, pi, 8)), true};
    for (double s : {0.1, 0.3, 0.4, 0.45})
        r.rows.push_back(zero_row(s));
    EXPECT_TRUE(convergence_verdict(r).ok);
}

TEST(Verdict, IncreasingTailNamesColumn)
{
    SweepReport r{0.5, 2.0, 1e-8, {}, ScalarField(build_grid(1, pi, 8)), true};
    for (double s : {0.1, 0.3, 0.4, 0.45})
        r.rows.push_back(zero_row(s));
    r.rows[3].err_grad = 1e-9;
    r.rows[2].err_grad = 0.0;
    const Verdict v = convergence_verdict(r);
    EXPECT_FALSE(v.ok);
    EXPECT_NE(v.summary.find("err_grad"), std::string::npos);
    EXPECT_EQ(v.summary.find("err_u"), std::string::npos);
}

TEST(Verdict, TooFewRows)
{
    SweepReport r{0.5, 2.0, 1e-8, {zero_row(0.4)}, ScalarField(build_grid(1, pi, 8)), true};
    EXPECT_FALSE(convergence_verdict(r).ok);
}

// ---------------------------------------------------------------------------

TEST(ObstacleRecovery, ConstantAtSigmaIsExact)
{
    Interval I;
    const ScalarField psi = apply_mask(I.psi, I.mask);
    const auto r = obstacle_recovery_sequence(psi, 0.6, 0.6, ObstacleRecovery::constant, I.mask, 2.0);
    EXPECT_EQ(r.err_value, 0.0);
    EXPECT_EQ(r.err_grad, 0.0);
}

TEST(ObstacleRecovery, ZeroObstacleIsPositiveCone)
{
    Interval I;
    for (auto mode : {ObstacleRecovery::constant, ObstacleRecovery::mollified}) {
        const auto r = obstacle_recovery_sequence(ScalarField(I.grid), 0.6, 0.3, mode, I.mask, 2.0);
        EXPECT_EQ(r.err_value, 0.0);
        EXPECT_EQ(r.err_grad, 0.0);
    }
}

TEST(ObstacleRecovery, CertificateVanishesAlongDyadicOrders)
{
    const TorusGrid g = build_grid(1, pi, 128);
    const DomainMask full = DomainMask::full(g);
    const ScalarField psi = sample(g, [](const Point& x) { return std::cos(x[0]) + 0.5 * std::sin(3.0 * x[0]); });
    for (auto mode : {ObstacleRecovery::constant, ObstacleRecovery::mollified}) {
        double prev = std::numeric_limits<double>::infinity();
        for (double s : dyadic_orders(0.5, 1, 8, true)) {
            const auto r = obstacle_recovery_sequence(psi, 0.5, s, mode, full, 2.0);
            EXPECT_LT(r.err_grad, prev);
            prev = r.err_grad;
        }
        EXPECT_LT(prev, 0.05);
    }
}

// ---------------------------------------------------------------------------

TEST(GradientRecovery, IdentityAtSigma)
{
    const TorusGrid g = build_grid(1, pi, 32);
    const ScalarField b = sample(g, [](const Point& x) { return 1.0 + std::cos(x[0]); });
    EXPECT_EQ(lp_norm(gradient_recovery_bound(b, 0.6, 0.6) - b, kInfNorm), 0.0);
}

TEST(GradientRecovery, RejectsOrderAboveSigma)
{
    const TorusGrid g = build_grid(1, pi, 32);
    const ScalarField b = sample(g, [](const Point&) { return 1.0; });
    EXPECT_THROW(gradient_recovery_bound(b, 0.5, 0.6), std::invalid_argument);
    EXPECT_THROW(gradient_recovery_bound(-1.0 * b, 0.5, 0.4), std::invalid_argument);
}

TEST(GradientRecovery, ConvergesToBound)
{
    const TorusGrid g = build_grid(1, pi, 256);
    const ScalarField b = sample(g, [](const Point& x) {
        // band-limited surrogate of |sin 2x|
        return 2.0 / pi - 4.0 / (3.0 * pi) * std::cos(4.0 * x[0]) - 4.0 / (15.0 * pi) * std::cos(8.0 * x[0]);
    });
    double prev = std::numeric_limits<double>::infinity();
    for (double s : dyadic_orders(0.8, 1, 8, true)) {
        const double e = lp_norm(gradient_recovery_bound(b, 0.8, s) - b, 2.0);
        EXPECT_LT(e, prev);
        prev = e;
    }
    EXPECT_LT(prev, 0.01);
}

TEST(GradientRecovery, FeasibilityTransfers)
{
    const TorusGrid g = build_grid(1, 2.0, 256);
    const DomainMask mask = DomainMask::interval(g, -1.0, 1.0);
    const double sigma = 0.8;
    const ScalarField bound = sample(g, [](const Point& x) { return 0.5 + 0.3 * std::cos(pi * x[0] / 2.0); });
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
        ScalarField u(g);
        for (std::size_t i = 0; i < g.size(); ++i)
            u[i] = mask.inside(i) ? nd(rng) : 0.0;
        const VectorField du = frac_gradient(u, FracOrder(sigma));
        double scale = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g.size(); ++i)
            scale = std::min(scale, bound[i] / du.magnitude(i));
        u *= scale;
        for (double s : {0.1, 0.4, 0.7, 0.79}) {
            const ScalarField gs = gradient_recovery_bound(bound, sigma, s);
            const VectorField ds = frac_gradient(u, FracOrder(s));
            for (std::size_t i = 0; i < g.size(); ++i)
                ASSERT_LE(ds.magnitude(i), gs[i] + 1e-8) << "s=" << s << " node " << i;
        }
    }
}

TEST(WeakBattery, SeededAndNormalized)
{
    const TorusGrid g = build_grid(2, pi, 16);
    const auto a = weak_battery(g, 4);
    const auto b = weak_battery(g, 4);
    ASSERT_EQ(a.size(), 8u);
    for (std::size_t j = 0; j < a.size(); ++j) {
        EXPECT_NEAR(lp_norm_vec(a[j], 2.0), 1.0, 1e-12);
        EXPECT_EQ(a[j].data(0), b[j].data(0));
        EXPECT_EQ(a[j].data(1), b[j].data(1));
    }
    EXPECT_NE(weak_battery(g, 5)[0].data(0), a[0].data(0));
}
