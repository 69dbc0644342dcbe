#include "fracvi/spaces.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fracvi;
using std::numbers::pi;

namespace {

ScalarField random_masked(const DomainMask& mask, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    ScalarField u(mask.grid());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = mask.inside(i) ? nd(rng) : 0.0;
    return u;
}

ScalarField trig_poly(const TorusGrid& g, int kmax, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    ScalarField u(g);
    const double w = pi / g.half_length();
    for (int k = 1; k <= kmax; ++k) {
        const double a = nd(rng), b = nd(rng);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.node(i)[0];
            u[i] += a * std::cos(w * k * x) + b * std::sin(w * k * x);
        }
    }
    return u;
}

// Dense 1-d matrix of D^s: column i is D^s e_i.
Eigen::MatrixXd dense_gradient(const TorusGrid& g, double s)
{
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ScalarField e(g);
        e[static_cast<std::size_t>(i)] = 1.0;
        const auto d = frac_gradient(e, FracOrder(s));
        for (Eigen::Index r = 0; r < n; ++r)
            m(r, i) = d.component(0)[static_cast<std::size_t>(r)];
    }
    return m;
}

ScalarField bump(const TorusGrid& g)
{
    return sample(g, [](const Point& x) {
        const double r2 = x[0] * x[0];
        return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
    });
}

}  // namespace

TEST(LambdaNorm, Examples)
{
    const auto g = build_grid(1, pi, 64);
    EXPECT_EQ(lambda_norm(ScalarField(g), FracOrder(0.3), 2.0), 0.0);
    const auto sn = sample(g, [](const Point& x) { return std::sin(x[0]); });
    for (double s : {0.0, 0.5, 1.0})
        EXPECT_NEAR(lambda_norm(sn, FracOrder(s), 2.0), std::sqrt(2 * pi), 1e-12);
    std::mt19937_64 rng(1);
    const auto u = trig_poly(g, 20, rng);
    EXPECT_NEAR(lambda_norm(u, FracOrder(0.0), 2.0), std::sqrt(2.0) * lp_norm(u, 2.0), 1e-12 * lp_norm(u, 2.0));
}

TEST(LambdaNorm, TriangleInequality)
{
    const auto g = build_grid(1, 2.0, 128);
    const auto omega = DomainMask::interval(g, -1.0, 1.0);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_masked(omega, rng), b = random_masked(omega, rng);
        for (double p : {1.5, 2.0, 3.0}) {
            const double s = 0.1 + 0.04 * trial;
            const double lhs = lambda_norm(a + b, FracOrder(s), p);
            const double rhs = lambda_norm(a, FracOrder(s), p) + lambda_norm(b, FracOrder(s), p);
            EXPECT_LE(lhs, rhs * (1 + 1e-12));
        }
    }
}

TEST(DualApply, Examples)
{
    const auto g = build_grid(1, 2.0, 128);
    const auto omega = DomainMask::interval(g, -1.0, 1.0);
    std::mt19937_64 rng(3);
    const auto v = random_masked(omega, rng);
    EXPECT_EQ(dual_apply(DualDatum::zero(g), v, FracOrder(0.4), omega), 0.0);

    const auto f0 = random_masked(omega, rng);
    EXPECT_DOUBLE_EQ(dual_apply(DualDatum::from_f0(f0), v, FracOrder(0.4), omega), inner(f0, v));

    const auto w = trig_poly(g, 30, rng);
    for (double s : {0.2, 0.7}) {
        const double lhs = dual_apply(DualDatum::from_flux(frac_gradient(w, FracOrder(s))), v, FracOrder(s), omega);
        const double rhs = inner(frac_laplacian(w, FracOrder(s)), v);
        EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(rhs));
    }

    ScalarField bad = v;
    bad[0] = 1.0;
    EXPECT_THROW(dual_apply(DualDatum::zero(g), bad, FracOrder(0.4), omega), std::invalid_argument);
}

TEST(DualApply, Bilinear)
{
    const auto g = build_grid(1, 2.0, 128);
    const auto omega = DomainMask::interval(g, -1.0, 1.0);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    auto random_datum = [&] {
        VectorField f(g);
        f.data(0) = random_masked(DomainMask::full(g), rng).data();
        return DualDatum(random_masked(omega, rng), f);
    };
    const FracOrder s(0.45);
    for (int trial = 0; trial < 10; ++trial) {
        const auto F1 = random_datum(), F2 = random_datum();
        const auto v1 = random_masked(omega, rng), v2 = random_masked(omega, rng);
        const double a = nd(rng), b = nd(rng);
        const double lhs = dual_apply(F1, a * v1 + b * v2, s, omega);
        const double rhs = a * dual_apply(F1, v1, s, omega) + b * dual_apply(F1, v2, s, omega);
        EXPECT_NEAR(lhs, rhs, 1e-12 * (std::abs(a * dual_apply(F1, v1, s, omega)) + std::abs(rhs) + 1));
        const auto diff = F1 - F2;
        const double l2 = dual_apply(diff, v1, s, omega);
        const double r2 = dual_apply(F1, v1, s, omega) - dual_apply(F2, v1, s, omega);
        EXPECT_NEAR(l2, r2, 1e-12 * (std::abs(dual_apply(F1, v1, s, omega)) + 1));
    }
}

TEST(DualNormUpper, Examples)
{
    const auto g = build_grid(1, pi, 32);
    const auto full = DomainMask::full(g);
    EXPECT_EQ(dual_norm_upper(DualDatum::zero(g), FracOrder(0.3), 2.0, full).value, 0.0);

    std::mt19937_64 rng(5);
    VectorField f(g);
    f.data(0) = random_masked(full, rng).data();
    for (double p : {1.5, 2.0, 3.0})
        EXPECT_DOUBLE_EQ(dual_norm_upper(DualDatum::from_flux(f), FracOrder(0.3), p, full).value,
                         lp_norm_vec(f, conjugate_exponent(p)));

    // sin(x) sits at |kappa| = 1, so the exact value is ||sin||_2 = sqrt(pi).
    const auto sn = sample(g, [](const Point& x) { return std::sin(x[0]); });
    const auto b = dual_norm_upper(DualDatum::from_f0(sn), FracOrder(0.6), 2.0, full);
    EXPECT_TRUE(b.exact);
    EXPECT_NEAR(b.value, std::sqrt(pi), 1e-12);

    // A constant pairs with constants that D^s cannot see.
    const auto one = sample(g, [](const Point&) { return 1.0; });
    EXPECT_TRUE(std::isinf(dual_norm_upper(DualDatum::from_f0(one), FracOrder(0.6), 2.0, full).value));
}

TEST(DualNormUpper, MatchesDenseQuadraticForm)
{
    // sup <f0, v> / ||D^s v||_2 = sqrt(h f0^T A^+ f0) with A = G^T G.
    const auto g = build_grid(1, pi, 32);
    const auto full = DomainMask::full(g);
    std::mt19937_64 rng(6);
    for (double s : {0.0, 0.35, 0.8, 1.0}) {
        const auto f0 = trig_poly(g, 12, rng);
        const Eigen::MatrixXd G = dense_gradient(g, s);
        const Eigen::MatrixXd A = G.transpose() * G;
        Eigen::VectorXd fv(static_cast<Eigen::Index>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i)
            fv(static_cast<Eigen::Index>(i)) = f0[i];
        const Eigen::MatrixXd pinv = A.completeOrthogonalDecomposition().pseudoInverse();
        const double oracle = std::sqrt(g.spacing() * fv.dot(pinv * fv));
        const auto b = dual_norm_upper(DualDatum::from_f0(f0), FracOrder(s), 2.0, full);
        EXPECT_NEAR(b.value, oracle, 1e-9 * oracle) << "s = " << s;
    }
}

TEST(DualNormUpper, BoundsMaskedDualNorm)
{
    const auto g = build_grid(1, 2.0, 64);
    const auto omega = DomainMask::interval(g, -1.0, 1.0);
    std::mt19937_64 rng(7);
    const double s = 0.5;
    const Eigen::MatrixXd G = dense_gradient(g, s);
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (omega.inside(i))
            idx.push_back(static_cast<Eigen::Index>(i));
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd Gm(G.rows(), m);
    for (Eigen::Index c = 0; c < m; ++c)
        Gm.col(c) = G.col(idx[static_cast<std::size_t>(c)]);
    const Eigen::MatrixXd A = Gm.transpose() * Gm;

    for (int trial = 0; trial < 5; ++trial) {
        const auto f0 = random_masked(omega, rng);
        Eigen::VectorXd fv(m);
        for (Eigen::Index c = 0; c < m; ++c)
            fv(c) = f0[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])];
        const double exact = std::sqrt(g.spacing() * fv.dot(A.ldlt().solve(fv)));
        const auto b2 = dual_norm_upper(DualDatum::from_f0(f0), FracOrder(s), 2.0, omega);
        EXPECT_GE(b2.value, exact * (1 - 1e-9));
        EXPECT_GT(b2.poincare_factor, 0.0);

        // p != 2: random test functions never beat the bound.
        for (double p : {1.5, 3.0}) {
            const auto bp = dual_norm_upper(DualDatum::from_f0(f0), FracOrder(s), p, omega);
            for (int k = 0; k < 20; ++k) {
                const auto v = random_masked(omega, rng);
                const double ratio = std::abs(inner(f0, v)) / lp_norm_vec(frac_gradient(v, FracOrder(s)), p);
                EXPECT_LE(ratio, bp.value);
            }
        }
    }
}

TEST(Poincare, ZeroOrderIsMaskedProjection)
{
    // At s = 0 the form is the identity minus the projections onto the
    // constant and the Nyquist mode, the two modes D^0 annihilates on the torus.
    const auto g = build_grid(1, pi, 128);
    const auto omega = DomainMask::interval(g, -1.0, 1.0);
    double n = 0.0, c = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (omega.inside(i)) {
            n += 1.0;
            c += (i % 2 == 0) ? 1.0 : -1.0;
        }
    const double expected = 1.0 - (n + std::abs(c)) / static_cast<double>(g.size());
    const auto r = poincare_best_constant(omega, FracOrder(0.0));
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.lambda, expected, 1e-9);
    EXPECT_NEAR(r.c, 1.0 / std::sqrt(expected), 1e-8);
}

TEST(Poincare, ClassicalDirichletEigenvalue)
{
    const auto g = build_grid(1, pi, 512);
    const auto omega = DomainMask::interval(g, -1.0, 1.0);
    const auto r = poincare_best_constant(omega, FracOrder(1.0));
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.lambda, pi * pi / 4, 0.02 * pi * pi / 4);
    EXPECT_LT(r.residual, 1e-4);
}

TEST(Poincare, MatchesDenseEigenvalue)
{
    const auto g = build_grid(1, 2.0, 64);
    const auto omega = DomainMask::interval(g, -1.0, 1.0);
    for (double s : {0.1, 0.5, 0.9}) {
        const Eigen::MatrixXd G = dense_gradient(g, s);
        std::vector<Eigen::Index> idx;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (omega.inside(i))
                idx.push_back(static_cast<Eigen::Index>(i));
        Eigen::MatrixXd Gm(G.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c)
            Gm.col(static_cast<Eigen::Index>(c)) = G.col(idx[c]);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gm.transpose() * Gm);
        const double lambda = es.eigenvalues()(0);
        const auto r = poincare_best_constant(omega, FracOrder(s));
        EXPECT_TRUE(r.converged);
        EXPECT_NEAR(r.lambda, lambda, 1e-8 * lambda) << "s = " << s;
    }
}

TEST(Poincare, InequalityHoldsWithComputedConstant)
{
    const auto g = build_grid(1, 2.0, 256);
    const auto omega = DomainMask::interval(g, -1.0, 1.0);
    std::mt19937_64 rng(8);
    for (double s : {0.05, 0.3, 0.7, 1.0}) {
        const auto r = poincare_best_constant(omega, FracOrder(s));
        ASSERT_TRUE(r.converged);
        EXPECT_GT(r.lambda, 0.0);
        for (int k = 0; k < 50; ++k) {
            const auto w = random_masked(omega, rng);
            EXPECT_LE(lp_norm(w, 2.0), r.c * lp_norm_vec(frac_gradient(w, FracOrder(s)), 2.0) * (1 + 1e-8));
        }
    }
}

TEST(Poincare, RejectsFullBoxAndFormatsRow)
{
    const auto g = build_grid(1, 1.0, 16);
    EXPECT_THROW(poincare_best_constant(DomainMask::full(g), FracOrder(0.5)), std::invalid_argument);
    PoincareReport r{0.5, 2.0, 1.0 / std::sqrt(2.0), 12, 1e-11, true};
    EXPECT_EQ(PoincareReport::csv_header(), "s,lambda,c,iters,residual,converged");
    EXPECT_EQ(r.csv_row(), "0.5,2,0.7071067811865475,12,1e-11,true");
}

TEST(GagliardoNirenberg, Examples)
{
    const auto g = build_grid(1, 2.0, 128);
    std::mt19937_64 rng(9);
    const auto u = trig_poly(g, 25, rng);
    EXPECT_EQ(gn_residual(u, 0.3, 0.3, 0.8, 2.0), 1.0);
    EXPECT_EQ(gn_residual(u, 0.3, 0.8, 0.8, 2.0), 1.0);
    EXPECT_THROW(gn_residual(u, 0.5, 0.5, 0.5, 2.0), std::invalid_argument);
    EXPECT_THROW(gn_residual(u, 0.6, 0.5, 0.9, 2.0), std::invalid_argument);
    EXPECT_LE(gn_residual(u, 0.2, 0.5, 0.9, 2.0), 1.0 + 1e-12);
}

TEST(GagliardoNirenberg, BoundedByOneForP2)
{
    const auto g = build_grid(2, 1.0, 32);
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 20; ++k) {
        ScalarField u(g);
        for (auto& v : u.data())
            v = nd(rng);
        double a = ud(rng), b = ud(rng), c = ud(rng);
        if (a > c)
            std::swap(a, c);
        b = a + (c - a) * b;
        EXPECT_LE(gn_residual(u, a, b, c, 2.0), 1.0 + 1e-12);
    }
}

TEST(Embedding, Examples)
{
    const auto g = build_grid(1, pi, 64);
    const auto sn = sample(g, [](const Point& x) { return std::sin(x[0]); });
    EXPECT_NEAR(embedding_probe(sn, 0.8, 0.3, 2.0), 1.0, 1e-13);

    // High band: |kappa| >= 1 everywhere in the spectrum.
    std::mt19937_64 rng(11);
    const auto u = trig_poly(g, 20, rng);
    EXPECT_LE(embedding_probe(u, 0.9, 0.2, 2.0), 1.0);
    EXPECT_LE(embedding_probe(u, 0.9, 0.2, 3.0), 1.0 + 1e-12);
    EXPECT_THROW(embedding_probe(u, 0.5, 0.6, 2.0), std::invalid_argument);
}

TEST(Embedding, BumpRatioRegression)
{
    // Regression-pinned values of ratio * t^{1+1/p} for the standard bump.
    const auto g = build_grid(1, 4.0, 1024);
    const auto u = bump(g);
    const std::array<std::pair<double, double>, 3> pinned{
        {{0.4, 0.2220201189610839}, {0.2, 0.070808655169635498}, {0.1, 0.02400939580827139}}};
    for (auto [t, expected] : pinned)
        EXPECT_NEAR(embedding_probe(u, 0.6, t, 2.0) * std::pow(t, 1.5), expected, 1e-12 * expected) << "t = " << t;
}

TEST(SobolevExponent, Examples)
{
    const auto a = sobolev_exponent(2.0, 0.5, 2);
    EXPECT_EQ(a.kind, SobolevExponent::Kind::finite);
    EXPECT_DOUBLE_EQ(a.value, 4.0);
    EXPECT_EQ(sobolev_exponent(2.0, 1.0, 2).kind, SobolevExponent::Kind::any_finite);
    const auto c = sobolev_exponent(2.0, 0.0, 3);
    EXPECT_DOUBLE_EQ(c.value, 2.0);
    EXPECT_EQ(sobolev_exponent(3.0, 1.0, 2).kind, SobolevExponent::Kind::infinite);
}
