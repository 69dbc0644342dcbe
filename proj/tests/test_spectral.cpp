#include "fracvi/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fracvi;
using std::numbers::pi;

namespace {

// Random trigonometric polynomial with |k_j| <= kmax on every axis.
ScalarField band_limited(const TorusGrid& g, int kmax, std::mt19937_64& rng, bool mean_zero = true)
{
    std::normal_distribution<double> nd;
    ScalarField u(g);
    const double w = pi / g.half_length();
    const int d = g.dim();
    const int span = 2 * kmax + 1;
    int total = 1;
    for (int j = 0; j < d; ++j)
        total *= span;
    for (int t = 0; t < total; ++t) {
        int rem = t;
        std::array<int, 3> k{0, 0, 0};
        for (int j = 0; j < d; ++j) {
            k[static_cast<std::size_t>(j)] = rem % span - kmax;
            rem /= span;
        }
        if (mean_zero && k == std::array<int, 3>{0, 0, 0})
            continue;
        const double a = nd(rng), b = nd(rng);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto x = g.node(i);
            double ph = 0.0;
            for (int j = 0; j < d; ++j)
                ph += w * k[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
            u[i] += a * std::cos(ph) + b * std::sin(ph);
        }
    }
    return u;
}

ScalarField random_field(const TorusGrid& g, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    ScalarField u(g);
    for (auto& v : u.data())
        v = nd(rng);
    return u;
}

VectorField random_vector(const TorusGrid& g, std::mt19937_64& rng)
{
    VectorField v(g);
    for (int j = 0; j < g.dim(); ++j)
        v.data(j) = random_field(g, rng).data();
    return v;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs(std::span<const double> a)
{
    double m = 0.0;
    for (double v : a)
        m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TEST(FracOrder, Range)
{
    EXPECT_NO_THROW(FracOrder(0.0));
    EXPECT_NO_THROW(FracOrder(1.0));
    EXPECT_THROW(FracOrder(1.5), std::invalid_argument);
    EXPECT_THROW(FracOrder(-0.1), std::invalid_argument);
}

TEST(NormalizationConstant, HighPrecisionValues)
{
    EXPECT_NEAR(normalization_constant(1, 0.0), 0.318309886183790671537767526745, 1e-15);
    EXPECT_NEAR(normalization_constant(3, 0.0), 0.10132118364233777144387946321, 1e-15);
    EXPECT_NEAR(normalization_constant(2, 0.5), 0.114111419793701561950134714663, 1e-15);
    EXPECT_THROW(normalization_constant(1, 1.0), std::invalid_argument);
}

TEST(MultiplierTable, SymbolInvariants)
{
    const auto g = build_grid(2, 1.5, 16);
    for (double s : {0.0, 0.3, 1.0}) {
        const MultiplierTable t(g, FracOrder(s));
        for (std::size_t k = 0; k < g.size(); ++k) {
            const auto idx = g.multi_index(k);
            const bool nyquist = g.frequency_index(idx[0]) == -8 || g.frequency_index(idx[1]) == -8;
            if (k == 0) {
                EXPECT_EQ(t.magnitude(k), 0.0);
                continue;
            }
            EXPECT_NEAR(t.magnitude(k), std::pow(t.kappa_norm(k), s), 1e-13 * t.magnitude(k));
            if (!nyquist) {
                EXPECT_NEAR(t.laplacian_symbol(k), std::pow(t.kappa_norm(k), 2 * s), 1e-12 * t.laplacian_symbol(k));
                // m(-k) = conj(m(k)) means the imaginary coefficient is odd.
                const std::array<int, 3> neg{(16 - idx[0]) % 16, (16 - idx[1]) % 16, 0};
                for (int j = 0; j < 2; ++j)
                    EXPECT_EQ(t.gradient_symbol(g.flat_index(neg), j), -t.gradient_symbol(k, j));
            }
            if (s == 1.0 && !nyquist)
                for (int j = 0; j < 2; ++j)
                    EXPECT_EQ(t.gradient_symbol(k, j), g.angular_frequency(idx[static_cast<std::size_t>(j)]));
        }
    }
}

TEST(FracGradient, Examples)
{
    const auto g = build_grid(1, pi, 64);
    const auto c = sample(g, [](const Point&) { return 3.0; });
    EXPECT_EQ(max_abs(frac_gradient(c, FracOrder(0.4)).component(0)), 0.0);

    const auto sn = sample(g, [](const Point& x) { return std::sin(x[0]); });
    const auto cs = sample(g, [](const Point& x) { return std::cos(x[0]); });
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0})
        EXPECT_LT(max_abs_diff(frac_gradient(sn, FracOrder(s)).component(0), cs.values()), 1e-13);

    const auto s2 = sample(g, [](const Point& x) { return std::sin(2 * x[0]); });
    const auto c2 = sample(g, [](const Point& x) { return std::sqrt(2.0) * std::cos(2 * x[0]); });
    EXPECT_LT(max_abs_diff(frac_gradient(s2, FracOrder(0.5)).component(0), c2.values()), 1e-13);
}

TEST(FracGradient, ClassicalLimit)
{
    const auto g = build_grid(1, pi, 64);
    const auto s2 = sample(g, [](const Point& x) { return std::sin(2 * x[0]); });
    const auto c2 = sample(g, [](const Point& x) { return 2 * std::cos(2 * x[0]); });
    EXPECT_LT(max_abs_diff(frac_gradient(s2, FracOrder(1.0)).component(0), c2.values()), 1e-12);

    const auto g2 = build_grid(2, 2.0, 32);
    const auto u = sample(g2, [](const Point& x) { return std::sin(pi * x[0] / 2) * std::cos(3 * pi * x[1] / 2); });
    const auto du = frac_gradient(u, FracOrder(1.0));
    const auto d0 = sample(g2, [](const Point& x) { return pi / 2 * std::cos(pi * x[0] / 2) * std::cos(3 * pi * x[1] / 2); });
    const auto d1 =
        sample(g2, [](const Point& x) { return -3 * pi / 2 * std::sin(pi * x[0] / 2) * std::sin(3 * pi * x[1] / 2); });
    EXPECT_LT(max_abs_diff(du.component(0), d0.values()), 1e-12);
    EXPECT_LT(max_abs_diff(du.component(1), d1.values()), 1e-12);
}

TEST(FracGradient, RealOutputForArbitraryInput)
{
    // Includes Nyquist content; the zeroed Nyquist symbol keeps outputs real.
    std::mt19937_64 rng(11);
    for (int d = 1; d <= 3; ++d) {
        const auto g = build_grid(d, 1.0, d == 3 ? 8 : 16);
        const auto u = random_field(g, rng);
        EXPECT_NO_THROW(frac_gradient(u, FracOrder(0.37)));
        EXPECT_NO_THROW(frac_divergence(random_vector(g, rng), FracOrder(0.81)));
    }
}

TEST(FracDivergence, Examples)
{
    std::mt19937_64 rng(5);
    const auto g = build_grid(2, 1.0, 32);
    const auto w = band_limited(g, 6, rng);
    for (double s : {0.0, 0.3, 0.5, 1.0}) {
        const auto div = frac_divergence(frac_gradient(w, FracOrder(s)), FracOrder(s));
        const auto lap = frac_laplacian(w, FracOrder(s));
        EXPECT_LT(max_abs_diff(div.values(), (-1.0 * lap).values()), 1e-12 * max_abs(lap.values()));
    }

    VectorField cst(g);
    for (int j = 0; j < 2; ++j)
        for (auto& v : cst.data(j))
            v = 1.0 + j;
    EXPECT_LT(max_abs(frac_divergence(cst, FracOrder(0.6)).values()), 1e-14);

    // Curl-like field built spectrally from phi.
    const auto phi = band_limited(g, 5, rng);
    const auto dphi = frac_gradient(phi, FracOrder(1.0));
    VectorField curl(g);
    curl.data(0) = dphi.data(1);
    curl.data(1) = (-1.0 * ScalarField(g, dphi.data(0))).data();
    EXPECT_LT(max_abs(frac_divergence(curl, FracOrder(1.0)).values()), 1e-12 * max_abs(dphi.component(0)));
}

TEST(Spectral, DualityProperty)
{
    std::mt19937_64 rng(2024);
    for (int d = 1; d <= 2; ++d) {
        const auto g = build_grid(d, 1.3, d == 1 ? 128 : 32);
        for (int trial = 0; trial < 5; ++trial) {
            const auto u = random_field(g, rng);
            const auto phi = random_vector(g, rng);
            for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                const double a = inner(u, frac_divergence(phi, FracOrder(s)));
                const double b = inner(phi, frac_gradient(u, FracOrder(s)));
                EXPECT_LE(std::abs(a + b), 1e-10 * (std::abs(a) + std::abs(b)));
            }
        }
    }
}

TEST(Spectral, SemigroupProperty)
{
    std::mt19937_64 rng(17);
    const auto g = build_grid(2, 1.0, 32);
    const std::array<std::pair<double, double>, 4> pairs{{{0.2, 0.9}, {0.5, 0.5}, {0.1, 1.0}, {0.6, 0.75}}};
    for (auto [s, sigma] : pairs) {
        const auto u = band_limited(g, 7, rng);
        const auto lhs = frac_gradient(u, FracOrder(s));
        const auto rhs = riesz_potential(frac_gradient(u, FracOrder(sigma)), sigma - s);
        for (int j = 0; j < 2; ++j)
            EXPECT_LT(max_abs_diff(lhs.component(j), rhs.component(j)), 1e-12 * max_abs(lhs.component(j)));
    }
}

TEST(Spectral, CompositionProperty)
{
    std::mt19937_64 rng(19);
    const auto g = build_grid(1, 2.0, 128);
    for (auto [s, r] : std::array<std::pair<double, double>, 3>{{{0.2, 0.8}, {1.0, 0.0}, {0.35, 0.6}}}) {
        const auto u = band_limited(g, 20, rng);
        const auto lhs = frac_divergence(frac_gradient(u, FracOrder(r)), FracOrder(s));
        const auto rhs = frac_laplacian(u, FracOrder(0.5 * (s + r)));
        EXPECT_LT(max_abs_diff(lhs.values(), (-1.0 * rhs).values()), 1e-12 * max_abs(rhs.values()));
    }
}

TEST(Spectral, RieszTransformLimit)
{
    std::mt19937_64 rng(23);
    const auto g = build_grid(2, 1.0, 32);
    const auto u = band_limited(g, 9, rng);
    const auto back = frac_divergence(frac_gradient(u, FracOrder(0.0)), FracOrder(0.0));
    EXPECT_LT(max_abs_diff(back.values(), (-1.0 * u).values()), 1e-12 * max_abs(u.values()));
}

TEST(Spectral, ContinuityInOrder)
{
    std::mt19937_64 rng(29);
    const auto g = build_grid(1, 1.0, 128);
    const auto u = band_limited(g, 12, rng);
    const double sigma = 0.6;
    const auto ref = frac_gradient(u, FracOrder(sigma));
    double prev = INFINITY;
    for (int i = 1; i <= 8; ++i) {
        const auto d = frac_gradient(u, FracOrder(sigma - std::ldexp(1.0, -i))) - ref;
        const double e = lp_norm_vec(d, 2);
        EXPECT_LT(e, prev);
        prev = e;
    }
}

TEST(RieszPotential, Examples)
{
    const auto g = build_grid(1, pi, 64);
    std::mt19937_64 rng(31);
    const auto u = random_field(g, rng);
    EXPECT_EQ(riesz_potential(u, 0.0).data(), u.data());
    const auto s2 = sample(g, [](const Point& x) { return std::sin(2 * x[0]); });
    const auto out = riesz_potential(s2, 0.5);
    EXPECT_LT(max_abs_diff(out.values(), (std::pow(2.0, -0.5) * s2).values()), 1e-14);
    EXPECT_THROW(riesz_potential(u, 1.0), std::invalid_argument);
    EXPECT_THROW(riesz_potential(u, -0.1), std::invalid_argument);
}

TEST(RieszPotential, PositiveVariantHasNonnegativeKernel)
{
    for (int d = 1; d <= 2; ++d) {
        const auto g = build_grid(d, 1.0, d == 1 ? 256 : 32);
        for (double alpha : {0.05, 0.3, 0.8}) {
            ScalarField delta(g);
            delta[g.size() / 3] = 1.0;
            const auto k = riesz_potential_positive(delta, alpha);
            double lo = INFINITY;
            for (double v : k.values())
                lo = std::min(lo, v);
            EXPECT_GE(lo, -1e-12 * max_abs(k.values()));
            EXPECT_GE(positive_potential_zero_mode(g, alpha), 0.0);
        }
        // Agrees with the plain potential on mean-zero data.
        std::mt19937_64 rng(37);
        const auto u = band_limited(g, 5, rng);
        EXPECT_LT(max_abs_diff(riesz_potential_positive(u, 0.4).values(), riesz_potential(u, 0.4).values()),
                  1e-12 * max_abs(u.values()));
    }
}

TEST(FracLaplacian, Examples)
{
    const auto g = build_grid(1, pi, 32);
    const auto s1 = sample(g, [](const Point& x) { return std::sin(x[0]); });
    for (double s : {0.0, 0.4, 1.0})
        EXPECT_LT(max_abs_diff(frac_laplacian(s1, FracOrder(s)).values(), s1.values()), 1e-13);
    const auto s2 = sample(g, [](const Point& x) { return std::sin(2 * x[0]); });
    EXPECT_LT(max_abs_diff(frac_laplacian(s2, FracOrder(0.5)).values(), (2.0 * s2).values()), 1e-13);
    const auto c = sample(g, [](const Point&) { return 5.0; });
    EXPECT_LT(max_abs(frac_laplacian(c, FracOrder(0.5)).values()), 1e-14);
}

TEST(KernelOracle, TrivialCases)
{
    const auto g = build_grid(1, 8.0, 512);
    const ScalarField zero(g);
    const Point x{0.0, 0.0, 0.0};
    EXPECT_EQ(kernel_gradient_oracle(zero, FracOrder(0.5), x, 16 * g.spacing())[0], 0.0);

    // Even about x = 1: the odd kernel integrates to zero.
    const auto even = sample(g, [](const Point& p) { return std::exp(-(p[0] - 1) * (p[0] - 1)); });
    const Point x1{1.0, 0.0, 0.0};
    EXPECT_NEAR(kernel_gradient_oracle(even, FracOrder(0.3), x1, 16 * g.spacing())[0], 0.0, 1e-12);

    EXPECT_THROW(kernel_gradient_oracle(even, FracOrder(0.5), x, 0.5 * g.spacing()), std::invalid_argument);
    EXPECT_THROW(kernel_gradient_oracle(even, FracOrder(1.0), x, g.spacing()), std::invalid_argument);
    EXPECT_THROW(kernel_gradient_oracle(even, FracOrder(0.0), x, g.spacing()), std::invalid_argument);
}

TEST(KernelOracle, GaussianMatchesRadialQuadrature)
{
    // Reference values: -(1/sqrt(pi)) int_0^inf k^s exp(-k^2/4) sin(k x) dk,
    // evaluated to 30 digits with arbitrary-precision quadrature.
    const auto g = build_grid(1, 16.0, 4096);
    const auto u = sample(g, [](const Point& p) { return std::exp(-p[0] * p[0]); });
    const auto du = frac_gradient(u, FracOrder(0.5));
    const std::array<std::pair<double, double>, 3> ref{{{0.25, -0.343288412794927415931873100794},
                                                        {0.5, -0.588249290107824621399829826237},
                                                        {1.0, -0.648720728267773983155398434233}}};
    for (auto [x, expected] : ref) {
        const Point p{x, 0.0, 0.0};
        const double oracle = kernel_gradient_oracle(u, FracOrder(0.5), p, 16 * g.spacing())[0];
        const std::size_t i = static_cast<std::size_t>(std::lround((x + 16.0) / g.spacing()));
        EXPECT_NEAR(du.component(0)[i], expected, 1e-3 * std::abs(expected));
        EXPECT_NEAR(oracle, expected, 1e-4 * std::abs(expected));
    }
}

TEST(KernelOracle, TwoDimensionalAgreement)
{
    const auto g = build_grid(2, 8.0, 256);
    const auto u = sample(g, [](const Point& p) { return std::exp(-p[0] * p[0] - 2 * p[1] * p[1]); });
    const auto du = frac_gradient(u, FracOrder(0.4));
    const Point x{0.5, -0.25, 0.0};
    const auto o = kernel_gradient_oracle(u, FracOrder(0.4), x, 8 * g.spacing());
    const std::size_t i = g.flat_index({static_cast<int>(std::lround((0.5 + 8) / g.spacing())),
                                        static_cast<int>(std::lround((-0.25 + 8) / g.spacing())), 0});
    for (int j = 0; j < 2; ++j)
        EXPECT_NEAR(o[static_cast<std::size_t>(j)], du.component(j)[i], 5e-3 * std::abs(du.component(j)[i]));
}
