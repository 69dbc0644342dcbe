#include "fracvi/stability.hpp"

#include "fracvi/fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fracvi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_obstacle(const ConstraintSet& K)
{
    return std::holds_alternative<ObstacleLower>(K) || std::holds_alternative<ObstacleUpper>(K);
}

ConstraintSet constraint_at(const SweepSpec& spec, double s)
{
    switch (spec.rule) {
    case ConstraintRule::fixed:
        return spec.constraint;
    case ConstraintRule::obstacle_translated: {
        if (const auto* lo = std::get_if<ObstacleLower>(&spec.constraint))
            return ObstacleLower{
                obstacle_recovery_sequence(lo->psi, spec.sigma, s, spec.recovery, spec.mask, spec.coeffs.p).psi};
        const auto& up = std::get<ObstacleUpper>(spec.constraint);
        return ObstacleUpper{
            obstacle_recovery_sequence(up.phi, spec.sigma, s, spec.recovery, spec.mask, spec.coeffs.p).psi};
    }
    case ConstraintRule::gradient_riesz_lifted: {
        const auto& gb = std::get<GradientBound>(spec.constraint);
        ScalarField gs = gradient_recovery_bound(gb.g, spec.sigma, s);
        double nu = std::numeric_limits<double>::infinity();
        for (double v : gs.values())
            nu = std::min(nu, v);
        return GradientBound{std::move(gs), nu};
    }
    }
    throw std::logic_error("constraint_at: unknown rule");
}

SolveReport solve_any(const SweepSpec& spec, const ConstraintSet& K, double s, const SolverConfig& config)
{
    if (const auto* gb = std::get_if<GradientBound>(&K))
        return solve_gradient_vi(spec.coeffs, spec.F, gb->g, gb->nu, FracOrder(s), spec.mask, config);
    return solve_vi(spec.coeffs, spec.F, K, FracOrder(s), spec.mask, config);
}

}  // namespace

void SweepSpec::validate() const
{
    std::ostringstream err;
    if (!(sigma >= 0.0 && sigma <= 1.0))
        err << "sigma out of [0,1]; ";
    for (double s : orders)
        if (!(s >= 0.0 && s <= 1.0))
            err << "order " << format_double(s) << " out of [0,1]; ";
    switch (rule) {
    case ConstraintRule::fixed:
        break;
    case ConstraintRule::obstacle_translated:
        if (!is_obstacle(constraint))
            err << "obstacle_translated needs an obstacle constraint; ";
        break;
    case ConstraintRule::gradient_riesz_lifted:
        if (!std::holds_alternative<GradientBound>(constraint))
            err << "gradient_riesz_lifted needs a gradient bound; ";
        for (std::size_t i = 0; i < orders.size(); ++i) {
            if (orders[i] > sigma || orders[i] <= 0.0)
                err << "gradient_riesz_lifted needs 0 < s <= sigma (s = " << format_double(orders[i]) << "); ";
            if (i > 0 && !(orders[i] > orders[i - 1]))
                err << "gradient_riesz_lifted needs increasing orders; ";
        }
        break;
    }
    const std::string msg = err.str();
    if (!msg.empty())
        throw std::invalid_argument("sweep: " + msg.substr(0, msg.size() - 2));
}

std::string SweepReport::csv_header(int battery)
{
    std::string h = "s,err_u,err_grad";
    for (int j = 1; j <= battery; ++j)
        h += ",weak_" + std::to_string(j);
    return h + ",iters,converged";
}

std::string SweepReport::csv() const
{
    const int battery = rows.empty() ? kWeakBatterySize : static_cast<int>(rows.front().weak.size());
    std::string out = csv_header(battery) + "\n";
    for (const auto& r : rows) {
        out += format_double(r.s) + "," + format_double(r.err_u) + "," + format_double(r.err_grad);
        for (double w : r.weak)
            out += "," + format_double(w);
        out += "," + std::to_string(r.iterations) + "," + (r.converged ? "true" : "false") + "\n";
    }
    return out;
}

std::vector<VectorField> weak_battery(const TorusGrid& grid, std::uint64_t seed, int count)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const int kmax = std::min(3, grid.points_per_axis() / 2 - 1);
    const int d = grid.dim();
    const double w = std::numbers::pi / grid.half_length();
    std::vector<VectorField> out;
    for (int j = 0; j < count; ++j) {
        VectorField phi(grid);
        for (int c = 0; c < d; ++c) {
            auto& comp = phi.data(c);
            // Random coefficients on the modes |k_axis| <= kmax of every axis.
            const int side = 2 * kmax + 1;
            int total = 1;
            for (int a = 0; a < d; ++a)
                total *= side;
            for (int m = 0; m < total; ++m) {
                std::array<int, 3> k{0, 0, 0};
                int rest = m;
                for (int a = 0; a < d; ++a) {
                    k[static_cast<std::size_t>(a)] = rest % side - kmax;
                    rest /= side;
                }
                const double re = nd(rng), im = nd(rng);
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    const Point x = grid.node(i);
                    double phase = 0.0;
                    for (int a = 0; a < d; ++a)
                        phase += w * k[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
                    comp[i] += re * std::cos(phase) + im * std::sin(phase);
                }
            }
        }
        phi *= 1.0 / lp_norm_vec(phi, 2.0);
        out.push_back(std::move(phi));
    }
    return out;
}

SweepReport sweep_orders(const SweepSpec& spec, const SolverConfig& config)
{
    spec.validate();
    config.validate();
    const double p = spec.coeffs.p;
    const TorusGrid& grid = spec.mask.grid();

    const SolveReport ref = solve_any(spec, spec.constraint, spec.sigma, config);
    SweepReport report{spec.sigma, p, config.tol, {}, ref.solution, ref.converged};
    const VectorField ref_grad = frac_gradient(ref.solution, FracOrder(spec.sigma));
    const auto battery = weak_battery(grid, spec.seed);

    std::vector<double> orders = spec.orders;
    std::stable_sort(orders.begin(), orders.end(), [&](double a, double b) {
        return std::abs(a - spec.sigma) > std::abs(b - spec.sigma);
    });

    std::optional<ScalarField> warm;
    for (double s : orders) {
        SweepRow row;
        row.s = s;
        try {
            const ConstraintSet K = constraint_at(spec, s);
            SolverConfig cfg = config;
            if (warm)
                cfg.initial = *warm;
            const SolveReport r = solve_any(spec, K, s, cfg);
            const VectorField diff = frac_gradient(r.solution, FracOrder(s)) - ref_grad;
            row.err_u = lp_norm(r.solution - report.sigma_solution, p);
            row.err_grad = lp_norm_vec(diff, p);
            for (const auto& phi : battery)
                row.weak.push_back(inner(diff, phi));
            row.iterations = r.iterations;
            row.converged = r.converged;
            row.message = r.message;
            warm = r.solution;
        } catch (const std::exception& e) {
            row.err_u = row.err_grad = kNaN;
            row.weak.assign(battery.size(), kNaN);
            row.converged = false;
            row.message = e.what();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

ObstacleRecoveryResult obstacle_recovery_sequence(const ScalarField& psi_sigma, double sigma, double s,
                                                  ObstacleRecovery mode, const DomainMask& mask, double p)
{
    ScalarField psi = psi_sigma;
    if (mode == ObstacleRecovery::mollified && s != sigma) {
        const TorusGrid& g = psi_sigma.grid();
        const auto cutoff = static_cast<int>(std::floor(1.0 / std::abs(s - sigma)));
        const FracOperator op(g, FracOrder(0.0));
        psi = op.apply_even_symbol(
            psi_sigma,
            [&](std::size_t k) {
                const auto idx = g.multi_index(k);
                for (int a = 0; a < g.dim(); ++a)
                    if (std::abs(g.frequency_index(idx[static_cast<std::size_t>(a)])) > cutoff)
                        return 0.0;
                return 1.0;
            },
            "mollified obstacle");
        apply_mask_inplace(psi, mask);
    }
    ObstacleRecoveryResult out{psi, 0.0, 0.0};
    out.err_value = lp_norm(psi - psi_sigma, p);
    out.err_grad = lp_norm_vec(frac_gradient(psi, FracOrder(s)) - frac_gradient(psi_sigma, FracOrder(sigma)), p);
    return out;
}

ScalarField gradient_recovery_bound(const ScalarField& g, double sigma, double s)
{
    if (!(s > 0.0) || !(s <= sigma) || sigma > 1.0)
        throw std::invalid_argument("gradient_recovery_bound: needs 0 < s <= sigma <= 1");
    for (double v : g.values())
        if (!(v >= 0.0))
            throw std::invalid_argument("gradient_recovery_bound: g must be nonnegative");
    if (s == sigma)
        return g;
    ScalarField gs = riesz_potential_positive(g, sigma - s);
    for (double& v : gs.values())
        v = std::max(v, 0.0);
    return gs;
}

Verdict convergence_verdict(const SweepReport& report, double tol_factor)
{
    Verdict v;
    const auto& rows = report.rows;
    if (rows.size() < 4) {
        v.summary = "fewer than 4 rows";
        return v;
    }
    std::vector<std::string> problems;
    const std::size_t first = rows.size() - 4;
    for (std::size_t i = first + 1; i < rows.size(); ++i) {
        if (!(rows[i].err_u <= rows[i - 1].err_u))
            problems.push_back("err_u increases at s = " + format_double(rows[i].s));
        if (!(rows[i].err_grad <= rows[i - 1].err_grad))
            problems.push_back("err_grad increases at s = " + format_double(rows[i].s));
    }
    const double bound = tol_factor * report.solver_tol;
    const SweepRow& last = rows.back();
    if (!(last.err_u <= bound))
        problems.push_back("final err_u = " + format_double(last.err_u) + " > " + format_double(bound));
    if (!(last.err_grad <= bound))
        problems.push_back("final err_grad = " + format_double(last.err_grad) + " > " + format_double(bound));
    for (std::size_t j = 0; j < last.weak.size(); ++j)
        if (!(std::abs(last.weak[j]) <= bound))
            problems.push_back("final |weak_" + std::to_string(j + 1) + "| = " + format_double(std::abs(last.weak[j])) + " > " +
                               format_double(bound));
    for (const auto& r : rows)
        if (!r.converged)
            problems.push_back("row s = " + format_double(r.s) + " did not converge");
    v.ok = problems.empty();
    if (v.ok) {
        v.summary = "converged";
    } else {
        for (std::size_t i = 0; i < problems.size(); ++i)
            v.summary += (i ? "; " : "") + problems[i];
    }
    return v;
}

std::vector<double> dyadic_orders(double sigma, int first, int last, bool from_below)
{
    std::vector<double> out;
    for (int i = first; i <= last; ++i) {
        const double s = from_below ? sigma - std::ldexp(1.0, -i) : sigma + std::ldexp(1.0, -i);
        if (s >= 0.0 && s <= 1.0)
            out.push_back(s);
    }
    return out;
}

}  // namespace fracvi
