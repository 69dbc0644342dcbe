#include "fracvi/acceptance.hpp"

#include "fracvi/app.hpp"
#include "fracvi/qvi.hpp"
#include "fracvi/stability.hpp"
#include "fracvi/vi_solver.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#ifndef FRACVI_SOURCE_DIR
#define FRACVI_SOURCE_DIR "."
#endif

namespace fracvi {

namespace {

using std::numbers::pi;
namespace fs = std::filesystem;

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Random trigonometric polynomial with |k| <= kmax (d = 1).
ScalarField band_limited(const TorusGrid& g, int kmax, std::mt19937_64& rng, bool mean_zero = true)
{
    std::normal_distribution<double> nd;
    ScalarField u(g);
    const double w = pi / g.half_length();
    for (int k = mean_zero ? 1 : 0; k <= kmax; ++k) {
        const double a = nd(rng), b = nd(rng);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.node(i)[0];
            u[i] += a * std::cos(w * k * x) + b * std::sin(w * k * x);
        }
    }
    return u;
}

ScalarField white_noise(const TorusGrid& g, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    ScalarField u(g);
    for (auto& v : u.data())
        v = nd(rng);
    return u;
}

double max_abs(std::span<const double> a)
{
    double m = 0.0;
    for (double v : a)
        m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Outcome duality()
{
    std::mt19937_64 rng(1);
    const TorusGrid g = build_grid(1, 1.3, 128);
    double worst = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
        const ScalarField u = white_noise(g, rng);
        VectorField phi(g);
        phi.data(0) = white_noise(g, rng).data();
        for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const double a = inner(u, frac_divergence(phi, FracOrder(s)));
            const double b = inner(phi, frac_gradient(u, FracOrder(s)));
            worst = std::max(worst, std::abs(a + b) / (std::abs(a) + std::abs(b)));
        }
    }
    return {worst <= 1e-10, "max relative |<u,D^s.phi> + <phi,D^s u>| = " + fmt(worst) + " (limit 1e-10)"};
}

Outcome semigroup_composition()
{
    std::mt19937_64 rng(2);
    const TorusGrid g = build_grid(1, 2.0, 128);
    const std::array<std::array<double, 3>, 10> triples{{{0.2, 0.9, 0.8},
                                                         {0.5, 0.5, 0.5},
                                                         {0.1, 1.0, 0.0},
                                                         {0.6, 0.75, 0.35},
                                                         {0.0, 0.4, 1.0},
                                                         {0.3, 0.6, 0.3},
                                                         {0.45, 0.9, 0.15},
                                                         {0.7, 1.0, 0.2},
                                                         {0.05, 0.25, 0.95},
                                                         {0.8, 0.85, 0.6}}};
    double semi = 0.0, comp = 0.0;
    for (const auto& [s, sigma, r] : triples) {
        const ScalarField u = band_limited(g, 20, rng);
        const VectorField lhs = frac_gradient(u, FracOrder(s));
        const VectorField rhs = riesz_potential(frac_gradient(u, FracOrder(sigma)), sigma - s);
        semi = std::max(semi, max_abs_diff(lhs.component(0), rhs.component(0)) / max_abs(lhs.component(0)));
        const ScalarField dd = frac_divergence(frac_gradient(u, FracOrder(r)), FracOrder(s));
        const ScalarField lap = -1.0 * frac_laplacian(u, FracOrder(0.5 * (s + r)));
        comp = std::max(comp, max_abs_diff(dd.values(), lap.values()) / max_abs(lap.values()));
    }
    return {semi <= 1e-12 && comp <= 1e-12,
            "semigroup " + fmt(semi) + ", composition " + fmt(comp) + " (relative, limit 1e-12)"};
}

Outcome limit_cases()
{
    const TorusGrid g = build_grid(1, pi, 64);
    const ScalarField sn = sample(g, [](const Point& x) { return std::sin(2.0 * x[0]); });
    const ScalarField cs = sample(g, [](const Point& x) { return 2.0 * std::cos(2.0 * x[0]); });
    const double e1 = max_abs_diff(frac_gradient(sn, FracOrder(1.0)).component(0), cs.values());

    std::mt19937_64 rng(3);
    const ScalarField u = band_limited(g, 20, rng);
    const ScalarField back = -1.0 * frac_divergence(frac_gradient(u, FracOrder(0.0)), FracOrder(0.0));
    const double e0 = max_abs_diff(back.values(), u.values()) / max_abs(u.values());
    return {e1 <= 1e-12 && e0 <= 1e-12,
            "|D^1 sin 2x - 2cos 2x| = " + fmt(e1) + ", |-D^0.D^0 u - u|/|u| = " + fmt(e0) + " (limit 1e-12)"};
}

// -(1/sqrt(pi)) int_0^inf k^s exp(-k^2/4) sin(k x) dk, the 1-d Fourier
// representation of D^s exp(-x^2), by Simpson's rule after k = t^2.
double gaussian_gradient_quadrature(double s, double x)
{
    const double T = std::sqrt(60.0);
    const int n = 40000;
    const double h = T / n;
    const auto f = [&](double t) {
        const double k = t * t;
        return 2.0 * t * std::pow(k, s) * std::exp(-0.25 * k * k) * std::sin(k * x);
    };
    double acc = f(0.0) + f(T);
    for (int i = 1; i < n; ++i)
        acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return -acc * h / 3.0 / std::sqrt(pi);
}

Outcome rd_grounding()
{
    const TorusGrid g = build_grid(1, 16.0, 4096);
    const ScalarField u = sample(g, [](const Point& p) { return std::exp(-p[0] * p[0]); });
    const VectorField du = frac_gradient(u, FracOrder(0.5));
    double worst_kernel = 0.0, worst_quad = 0.0;
    for (double x : {0.25, 0.5, 1.0}) {
        const auto i = static_cast<std::size_t>(std::lround((x + 16.0) / g.spacing()));
        const double torus = du.component(0)[i];
        const double kern = kernel_gradient_oracle(u, FracOrder(0.5), Point{x, 0.0, 0.0}, 16 * g.spacing())[0];
        const double quad = gaussian_gradient_quadrature(0.5, x);
        worst_kernel = std::max(worst_kernel, std::abs(torus - kern) / std::abs(kern));
        worst_quad = std::max(worst_quad, std::abs(torus - quad) / std::abs(quad));
    }
    return {worst_kernel <= 1e-3 && worst_quad <= 1e-3,
            "relative gap to kernel oracle " + fmt(worst_kernel) + ", to radial quadrature " + fmt(worst_quad) +
                " (limit 1e-3)"};
}

Outcome poincare()
{
    const TorusGrid g = build_grid(1, pi, 512);
    const DomainMask omega = DomainMask::interval(g, -1.0, 1.0);
    const PoincareReport one = poincare_best_constant(omega, FracOrder(1.0));
    const double target = pi * pi / 4.0;
    const double rel = std::abs(one.lambda - target) / target;
    bool ok = one.converged && rel <= 0.02;
    std::string detail = "lambda_1 = " + fmt(one.lambda) + " vs pi^2/4 (" + fmt(100 * rel) + "%)";
    double prev = INFINITY;
    bool monotone = true;
    detail += "; |c_2s - 1| at s = 0.4, 0.2, 0.1, 0.05:";
    for (double s : {0.4, 0.2, 0.1, 0.05}) {
        const PoincareReport r = poincare_best_constant(omega, FracOrder(s));
        const bool finite = r.converged && r.c > 0.0 && std::isfinite(r.c);
        ok = ok && finite;
        const double gap = std::abs(r.c - 1.0);
        detail += " " + fmt(gap);
        monotone = monotone && gap <= prev;
        prev = gap;
    }
    if (!monotone)
        detail += " (not non-increasing)";
    return {ok && monotone, detail};
}

Outcome gagliardo_nirenberg()
{
    std::mt19937_64 rng(6);
    const TorusGrid g = build_grid(1, 2.0, 128);
    const std::array<std::array<double, 3>, 10> triples{{{0.0, 0.5, 1.0},
                                                         {0.1, 0.2, 0.3},
                                                         {0.2, 0.5, 0.9},
                                                         {0.0, 0.1, 0.2},
                                                         {0.3, 0.6, 1.0},
                                                         {0.05, 0.5, 0.95},
                                                         {0.4, 0.45, 0.5},
                                                         {0.0, 0.9, 1.0},
                                                         {0.25, 0.5, 0.75},
                                                         {0.6, 0.8, 1.0}}};
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const ScalarField u = white_noise(g, rng);
        for (const auto& [r, s, t] : triples)
            worst = std::max(worst, gn_residual(u, r, s, t, 2.0));
    }
    return {worst <= 1.0 + 1e-12, "max gn_residual = " + fmt(worst) + " over 500 cases (limit 1 + 1e-12)"};
}

Outcome unconstrained_closed_form()
{
    const TorusGrid g = build_grid(1, pi, 64);
    const DomainMask full = DomainMask::full(g);
    const ScalarField sn = sample(g, [](const Point& x) { return std::sin(x[0]); });
    const Coefficients c = Coefficients::p_laplace(g, 2.0, 1.0, 1.0);
    double worst = 0.0;
    bool converged = true;
    for (int i = 0; i <= 8; ++i) {
        const SolveReport r = solve_vi(c, DualDatum::from_f0(sn), Unconstrained{}, FracOrder(i / 8.0), full);
        converged = converged && r.converged;
        worst = std::max(worst, max_abs_diff(r.solution.values(), (0.5 * sn).values()));
    }
    return {converged && worst <= 1e-10, "max |u - sin(x)/2| over 9 orders = " + fmt(worst) + " (limit 1e-10)"};
}

// Primal-dual active set on the dense masked system A u - b = lambda >= 0,
// u >= lo, lambda (u - lo) = 0.
Eigen::VectorXd active_set_obstacle(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& lo)
{
    const Eigen::Index n = b.size();
    Eigen::VectorXd u = A.ldlt().solve(b), lambda = Eigen::VectorXd::Zero(n);
    std::vector<bool> active(static_cast<std::size_t>(n), false);
    for (int it = 0; it < 500; ++it) {
        std::vector<bool> next(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i)
            next[static_cast<std::size_t>(i)] = lambda(i) + (lo(i) - u(i)) > 0.0;
        if (it > 0 && next == active)
            return u;
        active = next;
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!active[static_cast<std::size_t>(i)])
                free.push_back(i);
        u = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i)
            if (active[static_cast<std::size_t>(i)])
                u(i) = lo(i);
        const auto m = static_cast<Eigen::Index>(free.size());
        if (m > 0) {
            Eigen::MatrixXd Aff(m, m);
            Eigen::VectorXd rhs(m);
            for (Eigen::Index r = 0; r < m; ++r) {
                rhs(r) = b(free[static_cast<std::size_t>(r)]);
                for (Eigen::Index c = 0; c < n; ++c)
                    if (active[static_cast<std::size_t>(c)])
                        rhs(r) -= A(free[static_cast<std::size_t>(r)], c) * u(c);
                for (Eigen::Index c = 0; c < m; ++c)
                    Aff(r, c) = A(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(c)]);
            }
            const Eigen::VectorXd uf = Aff.ldlt().solve(rhs);
            for (Eigen::Index r = 0; r < m; ++r)
                u(free[static_cast<std::size_t>(r)]) = uf(r);
        }
        lambda = A * u - b;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!active[static_cast<std::size_t>(i)])
                lambda(i) = 0.0;
    }
    throw std::runtime_error("active-set oracle did not settle");
}

struct ObstacleInstance {
    TorusGrid grid;
    DomainMask mask;
    ScalarField psi;
    ScalarField f0;

    explicit ObstacleInstance(int N)
        : grid(build_grid(1, 2.0, N)), mask(DomainMask::interval(grid, -1.0, 1.0)),
          psi(sample(grid, [](const Point& x) { return std::max(1.0 - 4.0 * x[0] * x[0], -1.0); })),
          f0(apply_mask(sample(grid, [](const Point&) { return -1.0; }), mask))
    {
    }
};

Outcome obstacle_oracle()
{
    const ObstacleInstance small(64);
    const FracOrder s(1.0);
    const Coefficients c = Coefficients::p_laplace(small.grid, 2.0);
    const SolveReport r = solve_vi(c, DualDatum::from_f0(small.f0), ObstacleLower{small.psi}, s, small.mask);

    const FracOperator op(small.grid, s);
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < small.grid.size(); ++i)
        if (small.mask.inside(i))
            nodes.push_back(i);
    const auto m = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd A(m, m);
    Eigen::VectorXd b(m), lo(m);
    for (Eigen::Index col = 0; col < m; ++col) {
        ScalarField e(small.grid);
        e[nodes[static_cast<std::size_t>(col)]] = 1.0;
        const ScalarField column = op.neg_div_grad(e);
        for (Eigen::Index row = 0; row < m; ++row)
            A(row, col) = column[nodes[static_cast<std::size_t>(row)]];
        b(col) = small.f0[nodes[static_cast<std::size_t>(col)]];
        lo(col) = small.psi[nodes[static_cast<std::size_t>(col)]];
    }
    A = 0.5 * (A + A.transpose()).eval();
    const Eigen::VectorXd oracle = active_set_obstacle(A, b, lo);
    double err = 0.0;
    for (Eigen::Index k = 0; k < m; ++k)
        err = std::max(err, std::abs(r.solution[nodes[static_cast<std::size_t>(k)]] - oracle(k)));

    const ObstacleInstance big(512);
    const SolveReport rb = solve_vi(Coefficients::p_laplace(big.grid, 2.0), DualDatum::from_f0(big.f0),
                                    ObstacleLower{big.psi}, s, big.mask);
    const bool ok = r.converged && rb.converged && err <= 1e-6 && rb.kkt.max() <= 1e-6;
    return {ok, "N=64 max gap to active-set oracle " + fmt(err) + " (limit 1e-6); N=512 KKT (" +
                    fmt(rb.kkt.primal) + ", " + fmt(rb.kkt.multiplier) + ", " + fmt(rb.kkt.complementarity) +
                    ") (limit 1e-6)"};
}

double torsion_error(int N, bool& converged)
{
    const TorusGrid g = build_grid(1, 2.0, N);
    const DomainMask m = DomainMask::interval(g, -1.0, 1.0);
    const ScalarField f0 = apply_mask(sample(g, [](const Point&) { return 2.0; }), m);
    const ScalarField gb = sample(g, [](const Point&) { return 1.0; });
    const SolveReport r =
        solve_gradient_vi(Coefficients::p_laplace(g, 2.0), DualDatum::from_f0(f0), gb, 1.0, FracOrder(1.0), m);
    converged = converged && r.converged;
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = std::abs(g.node(i)[0]);
        const double exact = x >= 1.0 ? 0.0 : (x <= 0.5 ? 0.75 - x * x : 1.0 - x);
        err = std::max(err, std::abs(r.solution[i] - exact));
    }
    return err;
}

Outcome torsion()
{
    bool converged = true;
    const double e256 = torsion_error(256, converged);
    const double e512 = torsion_error(512, converged);
    const double h = 4.0 / 512;
    const double ratio = e256 / e512;
    const bool ok = converged && e512 <= 5 * h && ratio >= 1.6 && ratio <= 2.4;
    return {ok, "max error N=256 " + fmt(e256) + ", N=512 " + fmt(e512) + " (limit 5h = " + fmt(5 * h) +
                    "), ratio " + fmt(ratio) + " (need 2 +- 20%)"};
}

VectorField smooth_flux(const TorusGrid& g, std::mt19937_64& rng)
{
    VectorField f(g);
    f.data(0) = band_limited(g, 4, rng, false).data();
    return f;
}

Outcome holder()
{
    const TorusGrid g = build_grid(1, 2.0, 128);
    const DomainMask m = DomainMask::interval(g, -1.0, 1.0);
    const FracOrder s(0.6);
    int violations = 0, failed = 0, total = 0;
    double worst = 0.0;
    for (double p : {3.0, 1.5}) {
        std::mt19937_64 rng(p == 3.0 ? 10 : 11);
        const Coefficients c = Coefficients::p_laplace(g, p);
        for (int k = 0; k < 20; ++k) {
            const DualDatum F1 = DualDatum::from_flux(smooth_flux(g, rng));
            const DualDatum F2 = DualDatum::from_flux(smooth_flux(g, rng));
            const HolderRecord rec = holder_modulus_check(c, F1, F2, Unconstrained{}, s, m);
            ++total;
            violations += rec.holds ? 0 : 1;
            failed += rec.solves_converged ? 0 : 1;
            worst = std::max(worst, rec.lhs / rec.rhs);
        }
    }
    return {violations == 0 && failed == 0, std::to_string(violations) + " violations, " + std::to_string(failed) +
                                                " unconverged solves in " + std::to_string(total) +
                                                " pairs; max lhs/rhs = " + fmt(worst)};
}

std::string verdict_text(const Verdict& v)
{
    return v.ok ? "verdict true" : "verdict false: " + v.summary;
}

Outcome mosco_obstacle()
{
    const ObstacleInstance inst(512);
    bool ok = true;
    std::string detail;
    for (double p : {2.0, 3.0})
        for (bool below : {true, false}) {
            const SweepSpec spec{Coefficients::p_laplace(inst.grid, p, 1.0, 1.0),
                                 DualDatum::from_f0(inst.f0),
                                 inst.mask,
                                 0.7,
                                 dyadic_orders(0.7, 1, 6, below),
                                 ConstraintRule::fixed,
                                 ObstacleLower{inst.psi},
                                 ObstacleRecovery::constant,
                                 7};
            const SweepReport r = sweep_orders(spec);
            const Verdict v = convergence_verdict(r);
            ok = ok && v.ok;
            detail += (detail.empty() ? "" : " | ") + std::string("p=") + fmt(p) + (below ? " below: " : " above: ") +
                      verdict_text(v);
        }
    return {ok, detail};
}

Outcome mosco_gradient()
{
    const TorusGrid g = build_grid(1, 2.0, 512);
    const DomainMask m = DomainMask::interval(g, -1.0, 1.0);
    const ScalarField gb = sample(g, [](const Point& x) { return 0.5 + 0.25 * std::cos(0.5 * pi * x[0]); });
    const double sigma = 0.7;
    const std::vector<double> orders = dyadic_orders(sigma, 1, 6, true);

    // Feasibility transfer on fields scaled onto the boundary of K_sigma.
    std::mt19937_64 rng(12);
    double excess = -INFINITY;
    for (int k = 0; k < 20; ++k) {
        ScalarField u = apply_mask(band_limited(g, 12, rng, false), m);
        const VectorField du = frac_gradient(u, FracOrder(sigma));
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            worst = std::max(worst, du.magnitude(i) / gb[i]);
        u *= 1.0 / worst;
        for (double s : orders) {
            const ScalarField gs = gradient_recovery_bound(gb, sigma, s);
            const VectorField ds = frac_gradient(u, FracOrder(s));
            for (std::size_t i = 0; i < g.size(); ++i)
                excess = std::max(excess, ds.magnitude(i) - gs[i]);
        }
    }
    const bool feasible = excess <= 1e-8;

    const ScalarField f0 = apply_mask(sample(g, [](const Point&) { return 2.0; }), m);
    const SweepSpec spec{Coefficients::p_laplace(g, 2.0),
                         DualDatum::from_f0(f0),
                         m,
                         sigma,
                         orders,
                         ConstraintRule::gradient_riesz_lifted,
                         GradientBound{gb, 0.25},
                         ObstacleRecovery::constant,
                         7};
    const SweepReport r = sweep_orders(spec);
    const Verdict v = convergence_verdict(r);
    return {feasible && v.ok, "max(|D^s u| - g_s) over sigma-feasible fields = " + fmt(excess) +
                                  " (limit 1e-8); " + verdict_text(v)};
}

Outcome qvi_reductions()
{
    const TorusGrid g = build_grid(1, pi, 256);
    const DomainMask m = DomainMask::interval(g, -0.5 * pi, 0.5 * pi);
    const ScalarField one = apply_mask(sample(g, [](const Point&) { return 1.0; }), m);
    const Coefficients c = Coefficients::p_laplace(g, 2.0, 1.0, 0.0);
    SolverConfig tight;
    tight.tol = 1e-10;

    ObstacleQviSpec zero{c, 0.6, 0.6, DualDatum::from_f0(one),
                         SourceOperator::custom([](const ScalarField& u, const VectorField&) { return ScalarField(u.grid()); },
                                                0.0, "zero"),
                         m};
    const QviReport qz = obstacle_qvi_solve(zero);
    const SolveReport vz = solve_vi(c, zero.F, ObstacleLower{ScalarField(g)}, FracOrder(0.6), m, tight);
    const double e_obstacle = max_abs_diff(qz.solution.values(), vz.solution.values());

    const TorusGrid gg = build_grid(1, 2.0, 128);
    const DomainMask mg = DomainMask::interval(gg, -1.0, 1.0);
    const ScalarField bound = sample(gg, [](const Point&) { return 0.6; });
    const Coefficients cg = Coefficients::p_laplace(gg, 2.0, 1.0, 1.0);
    const DualDatum Fg = DualDatum::from_f0(apply_mask(sample(gg, [](const Point&) { return 2.0; }), mg));
    const QviReport qg = gradient_qvi_solve({cg, 0.7, Fg, BoundOperator::constant(bound), mg});
    const SolveReport vg = solve_gradient_vi(cg, Fg, bound, 0.6, FracOrder(0.7), mg, tight);
    const double e_gradient = max_abs_diff(qg.solution.values(), vg.solution.values());

    ObstacleQviSpec ref = zero;
    ref.T = SourceOperator::truncation(0.2 * one, 2.0);
    QviConfig cfg;
    cfg.picard_cap = 100;
    const QviReport q = obstacle_qvi_solve(ref, cfg);
    const ScalarField golden =
        read_field_csv(std::string(FRACVI_SOURCE_DIR) + "/tests/data/qvi_reference.csv", g);
    const double e_golden = max_abs_diff(q.solution.values(), golden.values());
    const double res = q.residuals.empty() ? INFINITY : q.residuals.back();

    const bool ok = qz.converged && qg.converged && q.converged && e_obstacle <= 1e-8 && e_gradient <= 1e-8 &&
                    res < 1e-6 && q.iterations <= 100 && e_golden <= 1e-8;
    return {ok, "constant T gap " + fmt(e_obstacle) + ", constant G gap " + fmt(e_gradient) +
                    " (limit 1e-8); reference: " + std::to_string(q.iterations) + " Picard steps, residual " +
                    fmt(res) + ", golden gap " + fmt(e_golden)};
}

Outcome determinism()
{
    const fs::path root = fs::temp_directory_path() / ("fracvi_determinism_" + std::to_string(std::random_device{}()));
    const fs::path configs = fs::path(FRACVI_SOURCE_DIR) / "configs";
    std::vector<std::string> mismatches;
    int compared = 0;
    const auto check = [&](const std::string& config, const std::function<CommandOutcome(const Json&, const fs::path&)>& run) {
        const Json doc = load_json((configs / config).string());
        const CommandOutcome a = run(doc, root / (config + ".a"));
        const CommandOutcome b = run(doc, root / (config + ".b"));
        for (std::size_t i = 0; i < a.files.size(); ++i) {
            if (a.files[i].extension() != ".csv")
                continue;
            ++compared;
            if (read_text(a.files[i]) != read_text(b.files[i]))
                mismatches.push_back(config + ":" + a.files[i].filename().string());
        }
    };
    check("reference_sweep.json", run_sweep);
    check("qvi_reference.json", run_qvi);
    check("torsion.json", run_solve);
    fs::remove_all(root);
    std::string detail = std::to_string(compared) + " CSV files compared across repeated runs";
    for (const auto& m : mismatches)
        detail += "; differs: " + m;
    return {mismatches.empty() && compared > 0, detail};
}

struct Entry {
    const char* name;
    Outcome (*run)();
};

const std::array<Entry, kCriterionCount> kCriteria{{{"duality-identity", duality},
                                                    {"semigroup-composition", semigroup_composition},
                                                    {"limit-cases", limit_cases},
                                                    {"rd-grounding", rd_grounding},
                                                    {"poincare", poincare},
                                                    {"gagliardo-nirenberg", gagliardo_nirenberg},
                                                    {"unconstrained-closed-form", unconstrained_closed_form},
                                                    {"obstacle-oracle", obstacle_oracle},
                                                    {"elastoplastic-torsion", torsion},
                                                    {"holder-modulus", holder},
                                                    {"mosco-obstacle-sweep", mosco_obstacle},
                                                    {"mosco-gradient-sweep", mosco_gradient},
                                                    {"qvi-reductions", qvi_reductions},
                                                    {"determinism", determinism}}};

}  // namespace

std::string CriterionResult::line() const
{
    char head[64];
    std::snprintf(head, sizeof head, "[%s] %02d ", passed ? "PASS" : "FAIL", id);
    return head + name + ": " + detail;
}

std::string criterion_name(int id)
{
    if (id < 1 || id > kCriterionCount)
        throw std::invalid_argument("no criterion " + std::to_string(id));
    return kCriteria[static_cast<std::size_t>(id - 1)].name;
}

CriterionResult run_criterion(int id)
{
    CriterionResult out;
    out.id = id;
    out.name = criterion_name(id);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const Outcome o = kCriteria[static_cast<std::size_t>(id - 1)].run();
        out.passed = o.passed;
        out.detail = o.detail;
    } catch (const std::exception& e) {
        out.passed = false;
        out.detail = std::string("exception: ") + e.what();
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<int> suite_criteria(const std::string& suite)
{
    if (suite == "spectral")
        return {1, 2, 3, 4};
    if (suite == "spaces")
        return {5, 6};
    if (suite == "vi_solver")
        return {7, 8, 9, 10};
    if (suite == "stability")
        return {11, 12};
    if (suite == "qvi")
        return {13};
    if (suite == "cli")
        return {14};
    if (suite == "all") {
        std::vector<int> all;
        for (int i = 1; i <= kCriterionCount; ++i)
            all.push_back(i);
        return all;
    }
    throw std::invalid_argument("unknown suite '" + suite + "' (spectral, spaces, vi_solver, stability, qvi, cli, all)");
}

}  // namespace fracvi
