#include "fracvi/qvi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fracvi {

namespace {

ScalarField apply_source(const SourceOperator& T, const ScalarField& u, FracOrder s, const DomainMask& mask)
{
    ScalarField out = T.apply(u, frac_gradient(u, s));
    require_same_grid(out.grid(), u.grid(), "source operator");
    out.check_finite("source operator");
    apply_mask_inplace(out, mask);
    return out;
}

ScalarField apply_bound(const BoundOperator& G, const ScalarField& u, std::string& violation)
{
    ScalarField g = G.apply(u);
    require_same_grid(g.grid(), u.grid(), "bound operator");
    g.check_finite("bound operator");
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] < G.nu * (1.0 - 1e-12) || g[i] > G.cap * (1.0 + 1e-12)) {
            violation = "bound operator " + G.name + " left [nu, cap] at node " + std::to_string(i) + " (value " +
                        format_double(g[i]) + ")";
            break;
        }
    return g;
}

}  // namespace

SourceOperator SourceOperator::truncation(ScalarField k, double p)
{
    for (double v : k.values())
        if (!(v >= 0.0))
            throw std::invalid_argument("truncation: k must be nonnegative");
    const double M = lp_norm(k, conjugate_exponent(p));
    return {[k = std::move(k)](const ScalarField& u, const VectorField&) {
                ScalarField out(u.grid());
                for (std::size_t i = 0; i < u.size(); ++i)
                    out[i] = std::clamp(u[i], -k[i], k[i]);
                return out;
            },
            M, "truncation"};
}

SourceOperator SourceOperator::uryson(std::function<double(const Point&, const Point&, double)> tau, double bound)
{
    return {[tau = std::move(tau)](const ScalarField& u, const VectorField&) {
                const TorusGrid& g = u.grid();
                ScalarField out(g);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const Point x = g.node(i);
                    double acc = 0.0;
                    for (std::size_t j = 0; j < g.size(); ++j)
                        acc += tau(x, g.node(j), u[j]);
                    out[i] = acc * g.cell_volume();
                }
                return out;
            },
            bound, "uryson"};
}

SourceOperator SourceOperator::custom(std::function<ScalarField(const ScalarField&, const VectorField&)> fn,
                                      double bound, std::string name)
{
    return {std::move(fn), bound, std::move(name)};
}

BoundOperator BoundOperator::constant(ScalarField g)
{
    double lo = kInfNorm, hi = 0.0;
    for (double v : g.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {[g = std::move(g)](const ScalarField&) { return g; }, lo, hi, "constant"};
}

BoundOperator BoundOperator::integral(std::function<double(const Point&, const Point&)> theta,
                                      std::function<double(const Point&, double)> bound, const DomainMask& mask,
                                      double nu, double cap)
{
    return {[theta = std::move(theta), bound = std::move(bound), mask](const ScalarField& u) {
                const TorusGrid& g = u.grid();
                ScalarField out(g);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const Point x = g.node(i);
                    double w = 0.0;
                    for (std::size_t j = 0; j < g.size(); ++j)
                        if (mask.inside(j))
                            w += theta(x, g.node(j)) * u[j];
                    out[i] = bound(x, w * g.cell_volume());
                }
                return out;
            },
            nu, cap, "integral"};
}

void ObstacleQviSpec::validate() const
{
    if (!(s > 0.0 && s <= t && t <= 1.0))
        throw std::invalid_argument("obstacle qvi: needs 0 < s <= t <= 1");
    if (!T.apply || !(T.bound >= 0.0))
        throw std::invalid_argument("obstacle qvi: source operator needs a handle and a bound M >= 0");
    if (!std::holds_alternative<PLaplace>(coeffs.principal) && !std::holds_alternative<LinearMatrix>(coeffs.principal))
        throw std::invalid_argument("obstacle qvi: needs a p-Laplacian type principal part");
    coeffs.validate(mask.grid(), FracOrder(s));
}

void GradientQviSpec::validate() const
{
    if (!(s > 0.0 && s <= 1.0))
        throw std::invalid_argument("gradient qvi: s out of (0,1]");
    if (!G.apply)
        throw std::invalid_argument("gradient qvi: bound operator handle is missing");
    if (!(G.nu > 0.0))
        throw std::invalid_argument("gradient qvi: nu must be positive (G(u) >= nu > 0)");
    if (!(G.cap >= G.nu))
        throw std::invalid_argument("gradient qvi: cap must be at least nu");
    coeffs.validate(mask.grid(), FracOrder(s));
}

void QviConfig::validate() const
{
    if (!(tol > 0.0))
        throw std::invalid_argument("qvi: tol must be positive");
    if (!(omega > 0.0 && omega <= 1.0))
        throw std::invalid_argument("qvi: omega must lie in (0, 1]");
    if (picard_cap < 1)
        throw std::invalid_argument("qvi: picard_cap must be positive");
    inner.validate();
}

AuxiliaryResult auxiliary_obstacle(const ScalarField& u, const ObstacleQviSpec& spec, const SolverConfig& config)
{
    const double p = spec.coeffs.p;
    const ScalarField Tu = apply_source(spec.T, u, FracOrder(spec.s), spec.mask);
    const Coefficients aux = Coefficients::p_laplace(spec.mask.grid(), p, 1.0, 1.0);
    const SolveReport r = solve_vi(aux, DualDatum::from_f0(Tu), Unconstrained{}, FracOrder(spec.t), spec.mask, config);
    AuxiliaryResult out{r.solution};
    out.norm = lambda_norm(r.solution, FracOrder(spec.t), p);
    out.radius = std::pow(spec.T.bound, 1.0 / (p - 1.0));
    out.source_norm = lp_norm(Tu, conjugate_exponent(p));
    out.converged = r.converged;
    return out;
}

namespace {

struct ObstacleStep {
    ScalarField next;
    AuxiliaryResult aux;
    SolveReport inner;
};

ObstacleStep obstacle_map(const ScalarField& u, const ObstacleQviSpec& spec, const SolverConfig& inner)
{
    AuxiliaryResult aux = auxiliary_obstacle(u, spec, inner);
    SolverConfig cfg = inner;
    cfg.initial = u;
    SolveReport r = solve_vi(spec.coeffs, spec.F, ObstacleLower{aux.psi}, FracOrder(spec.s), spec.mask, cfg);
    ScalarField next = r.solution;
    return {std::move(next), std::move(aux), std::move(r)};
}

SolveReport gradient_map(const ScalarField& u, const ScalarField& bound, const GradientQviSpec& spec,
                         const SolverConfig& inner)
{
    SolverConfig cfg = inner;
    cfg.initial = u;
    return solve_gradient_vi(spec.coeffs, spec.F, bound, spec.G.nu, FracOrder(spec.s), spec.mask, cfg);
}

}  // namespace

QviReport obstacle_qvi_solve(const ObstacleQviSpec& spec, const QviConfig& config)
{
    spec.validate();
    config.validate();
    const TorusGrid& grid = spec.mask.grid();
    const double p = spec.coeffs.p;
    const FracOrder s(spec.s);

    ScalarField u = config.initial ? *config.initial : ScalarField(grid);
    apply_mask_inplace(u, spec.mask);
    QviReport report{ScalarField(grid)};
    report.radius = std::pow(spec.T.bound, 1.0 / (p - 1.0));

    for (int k = 1; k <= config.picard_cap; ++k) {
        ObstacleStep step = obstacle_map(u, spec, config.inner);
        report.inner.push_back({step.inner.iterations, step.inner.converged});
        report.max_obstacle_norm = std::max(report.max_obstacle_norm, step.aux.norm);
        if (step.aux.source_norm > spec.T.bound * (1.0 + 1e-12) + 1e-300) {
            report.message = "source operator exceeded its declared bound: ||T||_{p'} = " +
                             format_double(step.aux.source_norm) + " > M = " + format_double(spec.T.bound);
            break;
        }
        // Slack for the inner solver tolerance.
        if (step.aux.norm > report.radius * (1.0 + 1e-6) + 1e-9) {
            report.message = "a-priori ball violated: ||Psi(u)|| = " + format_double(step.aux.norm) + " > R = " +
                             format_double(report.radius);
            break;
        }
        if (!step.inner.converged || !step.aux.converged) {
            report.message = "inner solve failed at Picard step " + std::to_string(k) + ": " + step.inner.message;
            break;
        }
        ScalarField next = (1.0 - config.omega) * u + config.omega * step.next;
        const double res = lambda_norm(next - u, s, p);
        report.residuals.push_back(res);
        report.iterations = k;
        report.constraint = std::move(step.aux.psi);
        u = std::move(next);
        if (res <= config.tol) {
            report.converged = true;
            break;
        }
    }
    if (!report.converged && report.message.empty())
        report.message = "Picard cap reached";
    if (report.converged) {
        // Feasibility for the set generated by the returned iterate.
        const AuxiliaryResult aux = auxiliary_obstacle(u, spec, config.inner);
        double gap = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (spec.mask.inside(i))
                gap = std::max(gap, aux.psi[i] - u[i]);
        if (gap > config.tol * 10.0) {
            report.converged = false;
            report.message = "fixed point infeasible for its own obstacle by " + format_double(gap);
        }
        report.constraint = aux.psi;
    }
    report.solution = std::move(u);
    return report;
}

QviReport gradient_qvi_solve(const GradientQviSpec& spec, const QviConfig& config)
{
    spec.validate();
    config.validate();
    const TorusGrid& grid = spec.mask.grid();
    const double p = spec.coeffs.p;
    const FracOrder s(spec.s);

    ScalarField u = config.initial ? *config.initial : ScalarField(grid);
    apply_mask_inplace(u, spec.mask);
    QviReport report{ScalarField(grid)};

    for (int k = 1; k <= config.picard_cap; ++k) {
        std::string violation;
        ScalarField bound = apply_bound(spec.G, u, violation);
        if (!violation.empty()) {
            report.message = violation;
            break;
        }
        const SolveReport r = gradient_map(u, bound, spec, config.inner);
        report.inner.push_back({r.iterations, r.converged});
        if (!r.converged) {
            report.message = "inner solve failed at Picard step " + std::to_string(k) + ": " + r.message;
            break;
        }
        ScalarField next = (1.0 - config.omega) * u + config.omega * r.solution;
        const double res = lambda_norm(next - u, s, p);
        report.residuals.push_back(res);
        report.iterations = k;
        report.constraint = std::move(bound);
        u = std::move(next);
        if (res <= config.tol) {
            report.converged = true;
            break;
        }
    }
    if (!report.converged && report.message.empty())
        report.message = "Picard cap reached";
    if (report.converged) {
        std::string violation;
        const ScalarField bound = apply_bound(spec.G, u, violation);
        const VectorField du = frac_gradient(u, s);
        double excess = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            excess = std::max(excess, du.magnitude(i) - bound[i]);
        if (!violation.empty() || excess > config.tol * 10.0 * (1.0 + lp_norm(bound, kInfNorm))) {
            report.converged = false;
            report.message = violation.empty() ? "fixed point infeasible for its own bound by " + format_double(excess)
                                               : violation;
        }
        report.constraint = bound;
    }
    report.solution = std::move(u);
    return report;
}

double qvi_residual(const ScalarField& u, const ObstacleQviSpec& spec, const QviConfig& config)
{
    const ObstacleStep step = obstacle_map(u, spec, config.inner);
    return lambda_norm(u - step.next, FracOrder(spec.s), spec.coeffs.p);
}

double qvi_residual(const ScalarField& u, const GradientQviSpec& spec, const QviConfig& config)
{
    std::string violation;
    const ScalarField bound = apply_bound(spec.G, u, violation);
    if (!violation.empty())
        throw std::domain_error(violation);
    const SolveReport r = gradient_map(u, bound, spec, config.inner);
    return lambda_norm(u - r.solution, FracOrder(spec.s), spec.coeffs.p);
}

}  // namespace fracvi

namespace fracvi {

SweepReport qvi_sweep(const ObstacleQviSpec& base, double sigma, const std::vector<double>& orders,
                      const QviConfig& config, std::uint64_t seed)
{
    const double p = base.coeffs.p;
    ObstacleQviSpec spec = base;
    spec.s = sigma;
    const QviReport ref = obstacle_qvi_solve(spec, config);
    SweepReport report{sigma, p, config.tol, {}, ref.solution, ref.converged};
    const VectorField ref_grad = frac_gradient(ref.solution, FracOrder(sigma));
    const auto battery = weak_battery(base.mask.grid(), seed);

    std::vector<double> sorted = orders;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](double a, double b) { return std::abs(a - sigma) > std::abs(b - sigma); });
    for (double s : sorted) {
        SweepRow row;
        row.s = s;
        try {
            spec.s = s;
            const QviReport r = obstacle_qvi_solve(spec, config);
            const VectorField diff = frac_gradient(r.solution, FracOrder(s)) - ref_grad;
            row.err_u = lp_norm(r.solution - ref.solution, p);
            row.err_grad = lp_norm_vec(diff, p);
            for (const auto& phi : battery)
                row.weak.push_back(inner(diff, phi));
            row.iterations = r.iterations;
            row.converged = r.converged;
            row.message = r.message;
        } catch (const std::exception& e) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.err_u = row.err_grad = nan;
            row.weak.assign(battery.size(), nan);
            row.message = e.what();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace fracvi
