#include "fracvi/spaces.hpp"

#include "fracvi/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>

namespace fracvi {

namespace {

void check_exponent(double p, const char* what)
{
    if (!(p > 1.0 && std::isfinite(p)))
        throw std::invalid_argument(std::string(what) + ": p must lie in (1, inf)");
}

bool all_zero(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

double conjugate_exponent(double p)
{
    check_exponent(p, "conjugate_exponent");
    return p / (p - 1.0);
}

double lambda_norm(const ScalarField& u, FracOrder s, double p)
{
    check_exponent(p, "lambda_norm");
    const double a = lp_norm(u, p);
    const double b = lp_norm_vec(frac_gradient(u, s), p);
    const double m = std::max(a, b);
    if (m == 0.0)
        return 0.0;
    return m * std::pow(std::pow(a / m, p) + std::pow(b / m, p), 1.0 / p);
}

// ---------------------------------------------------------------------------

DualDatum::DualDatum(ScalarField f0, VectorField f) : f0_(std::move(f0)), f_(std::move(f))
{
    require_same_grid(f0_.grid(), f_.grid(), "DualDatum");
    f0_.check_finite("DualDatum f0");
    f_.check_finite("DualDatum f");
}

DualDatum DualDatum::zero(const TorusGrid& grid)
{
    return DualDatum(ScalarField(grid), VectorField(grid));
}

DualDatum DualDatum::from_f0(ScalarField f0)
{
    VectorField f(f0.grid());
    return DualDatum(std::move(f0), std::move(f));
}

DualDatum DualDatum::from_flux(VectorField f)
{
    ScalarField f0(f.grid());
    return DualDatum(std::move(f0), std::move(f));
}

bool DualDatum::f0_is_zero() const noexcept
{
    return all_zero(f0_.values());
}

bool DualDatum::flux_is_zero() const noexcept
{
    for (int j = 0; j < f_.dim(); ++j)
        if (!all_zero(f_.component(j)))
            return false;
    return true;
}

void DualDatum::require_support(const DomainMask& mask) const
{
    require_same_grid(f0_.grid(), mask.grid(), "DualDatum");
    for (std::size_t i = 0; i < f0_.size(); ++i)
        if (!mask.inside(i) && f0_[i] != 0.0)
            throw std::invalid_argument("DualDatum: f0 must vanish outside Omega (node " + std::to_string(i) + ")");
}

DualDatum& DualDatum::operator-=(const DualDatum& other)
{
    f0_ -= other.f0_;
    f_ -= other.f_;
    return *this;
}

DualDatum operator-(DualDatum a, const DualDatum& b)
{
    a -= b;
    return a;
}

double dual_apply(const DualDatum& F, const ScalarField& v, FracOrder s, const DomainMask& mask)
{
    require_same_grid(v.grid(), mask.grid(), "dual_apply");
    require_same_grid(F.grid(), mask.grid(), "dual_apply");
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!mask.inside(i) && v[i] != 0.0)
            throw std::invalid_argument("dual_apply: v must vanish outside Omega (node " + std::to_string(i) + ")");
    double out = inner(F.f0(), v);
    if (!F.flux_is_zero())
        out += inner(F.f(), frac_gradient(v, s));
    return out;
}

// ---------------------------------------------------------------------------

namespace {

/// g with -D^s . g = f0, or nothing when f0 has content on modes that D^s
/// annihilates.
std::optional<VectorField> divergence_potential(const ScalarField& f0, FracOrder s)
{
    const FracOperator op(f0.grid(), s);
    const auto& table = op.table();
    const Spectrum hat = op.fft().forward(f0.values());
    double scale = 0.0;
    for (const auto& c : hat)
        scale = std::max(scale, std::abs(c));
    for (std::size_t k = 0; k < hat.size(); ++k)
        if (table.laplacian_symbol(k) == 0.0 && std::abs(hat[k]) > 1e-12 * scale)
            return std::nullopt;

    VectorField g(f0.grid());
    Spectrum buf(hat.size());
    for (int j = 0; j < f0.grid().dim(); ++j) {
        for (std::size_t k = 0; k < hat.size(); ++k) {
            const double lap = table.laplacian_symbol(k);
            buf[k] = lap == 0.0 ? Complex(0.0, 0.0) : Complex(0.0, table.gradient_symbol(k, j) / lap) * hat[k];
        }
        g.data(j) = real_part_checked(op.fft().inverse(buf), 1e-10 * (scale + 1e-300), "dual_norm_upper");
    }
    return g;
}

/// C with ||w||_{L^p(Omega)} <= C ||D^s w||_p given the L^2 best constant c2.
double lp_poincare_factor(const DomainMask& mask, double c2, double p)
{
    if (p == 2.0)
        return c2;
    if (p > 2.0)
        return c2 * std::pow(static_cast<double>(mask.grid().size()), 0.5 - 1.0 / p);
    return c2 * std::pow(static_cast<double>(mask.count()), 1.0 / p - 0.5);
}

}  // namespace

DualNormBound dual_norm_upper(const DualDatum& F, FracOrder s, double p, const DomainMask& mask)
{
    check_exponent(p, "dual_norm_upper");
    F.require_support(mask);
    const double q = conjugate_exponent(p);
    DualNormBound out;
    if (F.f0_is_zero()) {
        out.value = lp_norm_vec(F.f(), q);
        return out;
    }

    const auto g = divergence_potential(F.f0(), s);
    if (!mask.is_strict() && p == 2.0 && F.flux_is_zero()) {
        out.value = g ? lp_norm_vec(*g, 2.0) : std::numeric_limits<double>::infinity();
        out.exact = true;
        return out;
    }

    double best = std::numeric_limits<double>::infinity();
    if (g)
        best = lp_norm_vec(*g + F.f(), q);
    if (mask.is_strict()) {
        const PoincareReport pr = poincare_best_constant(mask, s);
        out.poincare_factor = lp_poincare_factor(mask, pr.c, p);
        best = std::min(best, lp_norm(F.f0(), q) * out.poincare_factor + lp_norm_vec(F.f(), q));
    }
    out.value = best;
    return out;
}

// ---------------------------------------------------------------------------

std::string PoincareReport::csv_row() const
{
    return format_double(s) + "," + format_double(lambda) + "," + format_double(c) + "," + std::to_string(iterations) +
           "," + format_double(residual) + "," + (converged ? "true" : "false");
}

PoincareReport poincare_best_constant(const DomainMask& mask, FracOrder s, const PoincareOptions& options)
{
    mask.require_strict("poincare_best_constant");
    if (!(options.tol > 0.0) || options.max_iters < 1)
        throw std::invalid_argument("poincare_best_constant: tol must be positive and max_iters at least 1");

    const TorusGrid& grid = mask.grid();
    const FracOperator op(grid, s);
    const auto& table = op.table();
    const double sv = s.value();
    const std::size_t n = grid.size();

    auto restrict_to_mask = [&](std::span<double> v) {
        for (std::size_t i = 0; i < n; ++i)
            if (!mask.inside(i))
                v[i] = 0.0;
    };
    const LinearMap apply = [&](std::span<const double> x, std::span<double> y) {
        ScalarField xf(grid, Vec(x.begin(), x.end()));
        restrict_to_mask(xf.values());
        const ScalarField ax = op.neg_div_grad(xf);
        std::copy(ax.values().begin(), ax.values().end(), y.begin());
        restrict_to_mask(y);
    };
    const LinearMap precondition = [&](std::span<const double> x, std::span<double> y) {
        ScalarField xf(grid, Vec(x.begin(), x.end()));
        restrict_to_mask(xf.values());
        const ScalarField px = op.apply_even_symbol(
            xf,
            [&](std::size_t k) {
                const double r = table.kappa_norm(k);
                return std::pow(1.0 + r * r, -sv);
            },
            "poincare preconditioner");
        std::copy(px.values().begin(), px.values().end(), y.begin());
        restrict_to_mask(y);
    };

    PoincareReport report;
    report.s = sv;

    // Block inverse iteration with Rayleigh-Ritz on the block. The first
    // start vector is the indicator of Omega; the rest are seeded noise.
    const std::size_t b = std::min<std::size_t>(4, mask.count());
    std::vector<Vec> block(b, Vec(n, 0.0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        if (mask.inside(i)) {
            block[0][i] = 1.0;
            for (std::size_t c = 1; c < b; ++c)
                block[c][i] = ud(rng);
        }

    std::vector<Vec> applied(b, Vec(n));
    auto rayleigh_ritz = [&]() {
        // Modified Gram-Schmidt, then diagonalize the projected operator.
        for (std::size_t c = 0; c < b; ++c) {
            for (std::size_t e = 0; e < c; ++e)
                axpy(-dot(block[e], block[c]), block[e], block[c]);
            const double nc = norm2(block[c]);
            if (!(nc > 0.0) || !std::isfinite(nc))
                throw std::runtime_error("poincare_best_constant: inverse iteration broke down");
            for (double& v : block[c])
                v /= nc;
        }
        for (std::size_t c = 0; c < b; ++c)
            apply(block[c], applied[c]);
        Eigen::MatrixXd h(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b));
        for (std::size_t r = 0; r < b; ++r)
            for (std::size_t c = 0; c < b; ++c)
                h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    0.5 * (dot(block[r], applied[c]) + dot(block[c], applied[r]));
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        std::vector<Vec> rotated(b, Vec(n, 0.0)), rotated_applied(b, Vec(n, 0.0));
        for (std::size_t c = 0; c < b; ++c)
            for (std::size_t e = 0; e < b; ++e) {
                const double q = es.eigenvectors()(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(c));
                axpy(q, block[e], rotated[c]);
                axpy(q, applied[e], rotated_applied[c]);
            }
        block.swap(rotated);
        applied.swap(rotated_applied);
        return es.eigenvalues();
    };

    Eigen::VectorXd ritz = rayleigh_ritz();
    double lambda = ritz(0);
    const int cg_cap = static_cast<int>(2 * mask.count()) + 200;
    Vec z(n);
    for (int it = 1; it <= options.max_iters; ++it) {
        for (std::size_t c = 0; c < b; ++c) {
            const double theta = ritz(static_cast<Eigen::Index>(c));
            for (std::size_t i = 0; i < n; ++i)
                z[i] = block[c][i] / theta;
            conjugate_gradient(apply, block[c], z, precondition, 1e-14, cg_cap);
            block[c] = z;
        }
        ritz = rayleigh_ritz();
        const double next = ritz(0);
        const double change = std::abs(next - lambda) / std::abs(next);
        lambda = next;
        report.iterations = it;
        if (change < options.tol) {
            report.converged = true;
            break;
        }
    }

    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        r2 += (applied[0][i] - lambda * block[0][i]) * (applied[0][i] - lambda * block[0][i]);
    report.lambda = lambda;
    report.c = lambda > 0.0 ? 1.0 / std::sqrt(lambda) : std::numeric_limits<double>::infinity();
    report.residual = std::sqrt(r2) / std::abs(lambda);
    return report;
}

// ---------------------------------------------------------------------------

double gn_residual(const ScalarField& u, double r, double s, double t, double p)
{
    check_exponent(p, "gn_residual");
    if (!(0.0 <= r && r <= s && s <= t && t <= 1.0))
        throw std::invalid_argument("gn_residual: requires 0 <= r <= s <= t <= 1");
    if (r == t)
        throw std::invalid_argument("gn_residual: degenerate interpolation r = t");
    const FracOperator opr(u.grid(), FracOrder(r)), ops(u.grid(), FracOrder(s)), opt(u.grid(), FracOrder(t));
    const double nr = lp_norm_vec(opr.gradient(u), p);
    const double nt = lp_norm_vec(opt.gradient(u), p);
    const double ns = s == r ? nr : (s == t ? nt : lp_norm_vec(ops.gradient(u), p));
    if (ns == 0.0)
        return 0.0;
    const double theta = (s - r) / (t - r);
    return ns / (std::pow(nr, 1.0 - theta) * std::pow(nt, theta));
}

double embedding_probe(const ScalarField& u, double s, double t, double p)
{
    check_exponent(p, "embedding_probe");
    if (!(0.0 < t && t < s && s <= 1.0))
        throw std::invalid_argument("embedding_probe: requires 0 < t < s <= 1");
    const double num = lp_norm_vec(frac_gradient(u, FracOrder(t)), p);
    const double den = lp_norm_vec(frac_gradient(u, FracOrder(s)), p);
    if (den == 0.0)
        return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return num / den;
}

SobolevExponent sobolev_exponent(double p, double s, int d)
{
    check_exponent(p, "sobolev_exponent");
    if (d < 1)
        throw std::invalid_argument("sobolev_exponent: d must be positive");
    SobolevExponent out;
    const double sp = s * p;
    if (sp < d) {
        out.kind = SobolevExponent::Kind::finite;
        out.value = d * p / (d - sp);
    } else if (sp == d) {
        out.kind = SobolevExponent::Kind::any_finite;
    } else {
        out.kind = SobolevExponent::Kind::infinite;
        out.value = std::numeric_limits<double>::infinity();
    }
    return out;
}

}  // namespace fracvi
