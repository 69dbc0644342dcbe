#include "fracvi/qvi.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

using namespace fracvi;
using std::numbers::pi;

namespace {

constexpr double kPinnedContinuity = 1.194077;

ScalarField indicator(const DomainMask& mask, double value)
{
    ScalarField u(mask.grid());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = mask.inside(i) ? value : 0.0;
    return u;
}

double max_diff(const ScalarField& a, const ScalarField& b)
{
    return lp_norm(a - b, kInfNorm);
}

struct Reference {
    TorusGrid grid{1, pi, 256};
    DomainMask mask = DomainMask::interval(grid, -0.5 * pi, 0.5 * pi);
    ObstacleQviSpec spec{Coefficients::p_laplace(grid, 2.0, 1.0, 0.0), 0.6, 0.6,
                         DualDatum::from_f0(indicator(mask, 1.0)),
                         SourceOperator::truncation(indicator(mask, 0.2), 2.0), mask};
};

SourceOperator zero_source()
{
    return SourceOperator::custom([](const ScalarField& u, const VectorField&) { return ScalarField(u.grid()); }, 0.0,
                                  "zero");
}

struct GradientCase {
    TorusGrid grid{1, 2.0, 128};
    DomainMask mask = DomainMask::interval(grid, -1.0, 1.0);
    Coefficients coeffs = Coefficients::p_laplace(grid, 2.0, 1.0, 1.0);
    DualDatum F = DualDatum::from_f0(indicator(mask, 2.0));
};

}  // namespace

TEST(Auxiliary, ZeroSourceGivesZero)
{
    Reference ref;
    ref.spec.T = zero_source();
    const ScalarField u = indicator(ref.mask, 1.0);
    const AuxiliaryResult a = auxiliary_obstacle(u, ref.spec);
    EXPECT_EQ(lp_norm(a.psi, kInfNorm), 0.0);
    EXPECT_EQ(a.radius, 0.0);
}

TEST(Auxiliary, SineSourceHalved)
{
    const TorusGrid g(1, pi, 64);
    const DomainMask full = DomainMask::full(g);
    const ScalarField sine = sample(g, [](const Point& x) { return std::sin(x[0]); });
    for (double t : {0.3, 0.6, 1.0}) {
        ObstacleQviSpec spec{Coefficients::p_laplace(g, 2.0, 1.0, 0.0), t, t, DualDatum::from_f0(ScalarField(g)),
                             SourceOperator::custom([&](const ScalarField&, const VectorField&) { return sine; },
                                                    lp_norm(sine, 2.0)),
                             full};
        const AuxiliaryResult a = auxiliary_obstacle(ScalarField(g), spec);
        EXPECT_LT(max_diff(a.psi, 0.5 * sine), 1e-10) << "t = " << t;
        EXPECT_LE(a.norm, a.radius);
        EXPECT_EQ(a.constant, 1.0);
    }
}

TEST(Auxiliary, ZeroTruncationLevel)
{
    Reference ref;
    ref.spec.T = SourceOperator::truncation(ScalarField(ref.grid), 2.0);
    EXPECT_EQ(ref.spec.T.bound, 0.0);
    const AuxiliaryResult a = auxiliary_obstacle(indicator(ref.mask, 3.0), ref.spec);
    EXPECT_EQ(lp_norm(a.psi, kInfNorm), 0.0);
}

TEST(Auxiliary, TruncationClamps)
{
    const TorusGrid g(1, 1.0, 8);
    ScalarField k(g), u(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        k[i] = 0.5;
        u[i] = static_cast<double>(i) - 4.0;
    }
    const SourceOperator T = SourceOperator::truncation(k, 2.0);
    const ScalarField out = T.apply(u, VectorField(g));
    for (std::size_t i = 0; i < g.size(); ++i)
        EXPECT_EQ(out[i], std::clamp(u[i], -0.5, 0.5));
    EXPECT_NEAR(T.bound, 0.5 * std::sqrt(2.0), 1e-15);
}

TEST(ObstacleQvi, ZeroSourceReducesToObstacleSolve)
{
    Reference ref;
    ref.spec.T = zero_source();
    const QviReport q = obstacle_qvi_solve(ref.spec);
    ASSERT_TRUE(q.converged) << q.message;
    SolverConfig cfg;
    cfg.tol = 1e-10;
    const SolveReport r =
        solve_vi(ref.spec.coeffs, ref.spec.F, ObstacleLower{ScalarField(ref.grid)}, FracOrder(0.6), ref.mask, cfg);
    EXPECT_LT(max_diff(q.solution, r.solution), 1e-8);
}

TEST(ObstacleQvi, ZeroDataGivesZero)
{
    Reference ref;
    ref.spec.F = DualDatum::from_f0(ScalarField(ref.grid));
    const QviReport q = obstacle_qvi_solve(ref.spec);
    ASSERT_TRUE(q.converged) << q.message;
    EXPECT_EQ(lp_norm(q.solution, kInfNorm), 0.0);
}

TEST(ObstacleQvi, ReferenceInstance)
{
    Reference ref;
    QviConfig cfg;
    cfg.picard_cap = 100;
    const QviReport q = obstacle_qvi_solve(ref.spec, cfg);
    ASSERT_TRUE(q.converged) << q.message;
    EXPECT_LE(q.iterations, 100);
    EXPECT_LT(q.residuals.back(), 1e-6);
    for (std::size_t k = 1; k < q.residuals.size(); ++k)
        EXPECT_LT(q.residuals[k], q.residuals[k - 1]) << "step " << k;
    EXPECT_LE(q.max_obstacle_norm, q.radius);
    EXPECT_LT(qvi_residual(q.solution, ref.spec, cfg), 1e-6);

    ASSERT_TRUE(q.constraint.has_value());
    for (std::size_t i = 0; i < ref.grid.size(); ++i)
        if (ref.mask.inside(i))
            EXPECT_GE(q.solution[i], (*q.constraint)[i] - cfg.tol);

    const ScalarField golden = read_field_csv(std::string(FRACVI_TEST_DATA) + "/qvi_reference.csv", ref.grid);
    EXPECT_LT(max_diff(q.solution, golden), 1e-8);
}

TEST(ObstacleQvi, ResidualPositiveAtZero)
{
    Reference ref;
    EXPECT_GT(qvi_residual(ScalarField(ref.grid), ref.spec), 0.1);
}

TEST(ObstacleQvi, SecondStartSameFixedPoint)
{
    Reference ref;
    QviConfig cfg;
    cfg.initial = indicator(ref.mask, 3.0);
    const QviReport a = obstacle_qvi_solve(ref.spec);
    const QviReport b = obstacle_qvi_solve(ref.spec, cfg);
    ASSERT_TRUE(a.converged && b.converged);
    EXPECT_LT(max_diff(a.solution, b.solution), 1e-7);
}

TEST(ObstacleQvi, DeclaredBoundViolationAborts)
{
    Reference ref;
    const ScalarField big = indicator(ref.mask, 5.0);
    ref.spec.T = SourceOperator::custom([&](const ScalarField&, const VectorField&) { return big; }, 1.0, "liar");
    const QviReport q = obstacle_qvi_solve(ref.spec);
    EXPECT_FALSE(q.converged);
    EXPECT_NE(q.message.find("declared bound"), std::string::npos) << q.message;
}

TEST(ObstacleQvi, CapExhaustionReported)
{
    Reference ref;
    QviConfig cfg;
    cfg.picard_cap = 3;
    const QviReport q = obstacle_qvi_solve(ref.spec, cfg);
    EXPECT_FALSE(q.converged);
    EXPECT_EQ(q.residuals.size(), 3u);
    EXPECT_EQ(q.message, "Picard cap reached");
}

TEST(ObstacleQvi, Validation)
{
    Reference ref;
    ref.spec.t = 0.5;
    EXPECT_THROW(obstacle_qvi_solve(ref.spec), std::invalid_argument);
    Reference ok;
    QviConfig cfg;
    cfg.omega = 1.5;
    EXPECT_THROW(obstacle_qvi_solve(ok.spec, cfg), std::invalid_argument);
}

TEST(ObstacleQvi, UrysonSource)
{
    Reference ref;
    // |tau| <= 0.1, so ||T||_2 <= 0.1 * |Omega| * sqrt(|Omega|).
    const double omega = ref.mask.measure();
    ref.spec.T = SourceOperator::uryson(
        [](const Point& x, const Point& y, double r) { return 0.1 * std::cos(x[0] - y[0]) * std::tanh(r); },
        0.1 * omega * std::sqrt(omega));
    const QviReport q = obstacle_qvi_solve(ref.spec);
    ASSERT_TRUE(q.converged) << q.message;
    EXPECT_LE(q.max_obstacle_norm, q.radius);
}

TEST(ObstacleQvi, OrderSweepWiring)
{
    const TorusGrid g(1, pi, 128);
    const DomainMask mask = DomainMask::interval(g, -0.5 * pi, 0.5 * pi);
    ObstacleQviSpec spec{Coefficients::p_laplace(g, 2.0, 1.0, 0.0), 0.6, 0.8, DualDatum::from_f0(indicator(mask, 1.0)),
                         SourceOperator::truncation(indicator(mask, 0.2), 2.0), mask};
    const SweepReport r = qvi_sweep(spec, 0.6, {0.35, 0.475, 0.5375}, {}, 7);
    ASSERT_EQ(r.rows.size(), 3u);
    ASSERT_TRUE(r.sigma_converged);
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
        EXPECT_TRUE(r.rows[i].converged);
        EXPECT_LT(r.rows[i].err_grad, r.rows[i - 1].err_grad);
        EXPECT_LT(r.rows[i].err_u, r.rows[i - 1].err_u);
    }
}

TEST(GradientQvi, ConstantBoundReducesToGradientVi)
{
    GradientCase c;
    const ScalarField g = indicator(DomainMask::full(c.grid), 0.6);
    const GradientQviSpec spec{c.coeffs, 0.7, c.F, BoundOperator::constant(g), c.mask};
    const QviReport q = gradient_qvi_solve(spec);
    ASSERT_TRUE(q.converged) << q.message;
    SolverConfig cfg;
    cfg.tol = 1e-10;
    const SolveReport r = solve_gradient_vi(c.coeffs, c.F, g, 0.6, FracOrder(0.7), c.mask, cfg);
    EXPECT_LT(max_diff(q.solution, r.solution), 1e-8);
}

TEST(GradientQvi, ZeroDataGivesZero)
{
    GradientCase c;
    const GradientQviSpec spec{c.coeffs, 0.7, DualDatum::from_f0(ScalarField(c.grid)),
                               BoundOperator::constant(indicator(DomainMask::full(c.grid), 0.5)), c.mask};
    const QviReport q = gradient_qvi_solve(spec);
    ASSERT_TRUE(q.converged);
    EXPECT_EQ(lp_norm(q.solution, kInfNorm), 0.0);
}

TEST(GradientQvi, IntegralBoundFeasible)
{
    GradientCase c;
    const BoundOperator G = BoundOperator::integral([](const Point& x, const Point& y) { return std::exp(-std::abs(x[0] - y[0])); },
                                                    [](const Point&, double w) { return 0.4 + 0.2 / (1.0 + w * w); },
                                                    c.mask, 0.4, 0.6);
    const GradientQviSpec spec{c.coeffs, 0.7, c.F, G, c.mask};
    QviConfig cfg;
    const QviReport q = gradient_qvi_solve(spec, cfg);
    ASSERT_TRUE(q.converged) << q.message;
    const ScalarField bound = G.apply(q.solution);
    const VectorField du = frac_gradient(q.solution, FracOrder(0.7));
    for (std::size_t i = 0; i < c.grid.size(); ++i)
        EXPECT_LE(du.magnitude(i), bound[i] + 1e-7);
    EXPECT_LT(qvi_residual(q.solution, spec, cfg), 1e-6);
}

TEST(GradientQvi, BoundOutsideFloorReported)
{
    GradientCase c;
    BoundOperator G = BoundOperator::constant(indicator(DomainMask::full(c.grid), 0.5));
    G.nu = 0.7;
    G.cap = 1.0;
    const QviReport q = gradient_qvi_solve({c.coeffs, 0.7, c.F, G, c.mask});
    EXPECT_FALSE(q.converged);
    EXPECT_NE(q.message.find("left [nu, cap]"), std::string::npos) << q.message;
}

TEST(GradientQvi, NuMustBePositive)
{
    GradientCase c;
    BoundOperator G = BoundOperator::constant(indicator(DomainMask::full(c.grid), 0.5));
    G.nu = 0.0;
    EXPECT_THROW(gradient_qvi_solve({c.coeffs, 0.7, c.F, G, c.mask}), std::invalid_argument);
}

// Empirical modulus of g -> S(F, g) between two constant bounds, with C fit at
// eta = 1e-2 and pinned.
TEST(GradientQvi, SolutionMapContinuity)
{
    GradientCase c;
    const DomainMask full = DomainMask::full(c.grid);
    SolverConfig cfg;
    cfg.tol = 1e-11;
    const auto solve = [&](double level) {
        return solve_gradient_vi(c.coeffs, c.F, indicator(full, level), level, FracOrder(0.7), c.mask, cfg).solution;
    };
    const ScalarField base = solve(0.5);
    const auto ratio = [&](double eta) {
        return lp_norm_vec(frac_gradient(solve(0.5 + eta) - base, FracOrder(0.7)), 2.0) / eta;
    };
    const double c_fit = ratio(1e-2);
    std::printf("continuity constant %.6f\n", c_fit);
    EXPECT_NEAR(c_fit, kPinnedContinuity, 1e-3);
    EXPECT_LE(ratio(1e-3), 1.1 * c_fit);
}
