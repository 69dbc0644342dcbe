#include "fracvi/vi_solver.hpp"

#include "fracvi/linalg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace fracvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double elapsed_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

/// (b2 + delta2)^{p/2} - b2^{p/2} without cancellation.
double power_change(double b2, double delta2, double p)
{
    if (b2 <= 0.0)
        return std::pow(std::max(delta2, 0.0), 0.5 * p);
    const double ratio = std::max(delta2 / b2, -1.0);
    return std::pow(b2, 0.5 * p) * std::expm1(0.5 * p * std::log1p(ratio));
}

double regularization(double p)
{
    return p < 2.0 ? 1e-12 : 0.0;
}

// ---------------------------------------------------------------------------
// Energy densities of the flux part, with their Hessians.

class FluxModel {
public:
    virtual ~FluxModel() = default;
    virtual void flux(const VectorField& xi, VectorField& out) const = 0;
    /// h^d sum phi(x, xi)
    virtual double energy(const VectorField& xi) const = 0;
    virtual double energy_change(const VectorField& from, const VectorField& to) const = 0;
    virtual void prepare_hessian(const VectorField& xi) = 0;
    virtual void hessian_apply(const VectorField& eta, VectorField& out) const = 0;
    /// Representative scalar weight for the spectral preconditioner.
    virtual double mean_weight() const = 0;
};

class PLaplaceFlux final : public FluxModel {
public:
    PLaplaceFlux(const ScalarField& alpha, double p) : alpha_(alpha), p_(p), eps_(regularization(p)) {}

    void flux(const VectorField& xi, VectorField& out) const override
    {
        const int d = xi.dim();
        for (std::size_t i = 0; i < xi.size(); ++i) {
            const double r = std::sqrt(sq(xi, i) + eps_ * eps_);
            const double w = p_ == 2.0 ? alpha_[i] : (r > 0.0 ? alpha_[i] * std::pow(r, p_ - 2.0) : 0.0);
            for (int j = 0; j < d; ++j)
                out.data(j)[i] = w * xi.data(j)[i];
        }
    }

    double energy(const VectorField& xi) const override
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < xi.size(); ++i) {
            const double r2 = sq(xi, i) + eps_ * eps_;
            acc += alpha_[i] * (std::pow(r2, 0.5 * p_) - std::pow(eps_, p_)) / p_;
        }
        return acc * xi.grid().cell_volume();
    }

    double energy_change(const VectorField& from, const VectorField& to) const override
    {
        const int d = from.dim();
        double acc = 0.0;
        for (std::size_t i = 0; i < from.size(); ++i) {
            double cross = 0.0, eta2 = 0.0;
            for (int j = 0; j < d; ++j) {
                const double a = from.data(j)[i];
                const double e = to.data(j)[i] - a;
                cross += a * e;
                eta2 += e * e;
            }
            acc += alpha_[i] * power_change(sq(from, i) + eps_ * eps_, 2.0 * cross + eta2, p_) / p_;
        }
        return acc * from.grid().cell_volume();
    }

    void prepare_hessian(const VectorField& xi) override
    {
        const int d = xi.dim();
        const std::size_t n = xi.size();
        w0_.assign(n, 0.0);
        w1_.assign(n, 0.0);
        dir_.assign(static_cast<std::size_t>(d), std::vector<double>(n, 0.0));
        double top = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            top = std::max(top, std::sqrt(sq(xi, i)));
        // Degenerate weights (p > 2) are floored; singular ones are exact.
        const double floor = p_ > 2.0 ? (top > 0.0 ? 1e-4 * top : 1.0) : 0.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double mag = std::sqrt(sq(xi, i));
            const double r = std::max(std::sqrt(mag * mag + eps_ * eps_), floor);
            const double base = p_ == 2.0 ? alpha_[i] : alpha_[i] * std::pow(r, p_ - 2.0);
            w0_[i] = base;
            // For p < 2 the isotropic weight majorizes the energy, which avoids
            // the sign flip of a pure Newton step where D^s u is near zero.
            if (p_ > 2.0 && mag > floor) {
                w1_[i] = (p_ - 2.0) * base;
                for (int j = 0; j < d; ++j)
                    dir_[static_cast<std::size_t>(j)][i] = xi.data(j)[i] / mag;
            }
            sum += base;
        }
        mean_ = sum / static_cast<double>(n);
    }

    void hessian_apply(const VectorField& eta, VectorField& out) const override
    {
        const int d = eta.dim();
        for (std::size_t i = 0; i < eta.size(); ++i) {
            double proj = 0.0;
            if (w1_[i] != 0.0)
                for (int j = 0; j < d; ++j)
                    proj += dir_[static_cast<std::size_t>(j)][i] * eta.data(j)[i];
            for (int j = 0; j < d; ++j)
                out.data(j)[i] = w0_[i] * eta.data(j)[i] + w1_[i] * proj * (w1_[i] != 0.0 ? dir_[static_cast<std::size_t>(j)][i] : 0.0);
        }
    }

    double mean_weight() const override { return mean_; }

private:
    static double sq(const VectorField& v, std::size_t i)
    {
        double s = 0.0;
        for (int j = 0; j < v.dim(); ++j)
            s += v.data(j)[i] * v.data(j)[i];
        return s;
    }

    ScalarField alpha_;
    double p_;
    double eps_;
    std::vector<double> w0_, w1_;
    std::vector<std::vector<double>> dir_;
    double mean_ = 1.0;
};

class LinearFlux final : public FluxModel {
public:
    explicit LinearFlux(const LinearMatrix& m) : m_(m)
    {
        const int d = static_cast<int>(m.entries.size());
        double sum = 0.0;
        for (int j = 0; j < d; ++j)
            for (double v : m.entries[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)].values())
                sum += v;
        mean_ = sum / (d * static_cast<double>(m.entries[0][0].size()));
    }

    void flux(const VectorField& xi, VectorField& out) const override { multiply(xi, out); }

    double energy(const VectorField& xi) const override
    {
        VectorField a(xi.grid());
        multiply(xi, a);
        return 0.5 * inner(a, xi);
    }

    double energy_change(const VectorField& from, const VectorField& to) const override
    {
        VectorField eta = to - from;
        VectorField a(from.grid());
        multiply(eta, a);
        VectorField b(from.grid());
        multiply(from, b);
        return inner(b, eta) + 0.5 * inner(a, eta);
    }

    void prepare_hessian(const VectorField&) override {}
    void hessian_apply(const VectorField& eta, VectorField& out) const override { multiply(eta, out); }
    double mean_weight() const override { return mean_; }

private:
    void multiply(const VectorField& xi, VectorField& out) const
    {
        const int d = xi.dim();
        for (std::size_t i = 0; i < xi.size(); ++i)
            for (int j = 0; j < d; ++j) {
                double s = 0.0;
                for (int k = 0; k < d; ++k)
                    s += m_.entries[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][i] * xi.data(k)[i];
                out.data(j)[i] = s;
            }
    }

    const LinearMatrix& m_;
    double mean_ = 1.0;
};

/// rho/2 |xi - c(x)|^2, the ADMM penalty.
class PenaltyFlux final : public FluxModel {
public:
    PenaltyFlux(double rho, const VectorField& c) : rho_(rho), c_(c) {}

    void flux(const VectorField& xi, VectorField& out) const override
    {
        for (int j = 0; j < xi.dim(); ++j)
            for (std::size_t i = 0; i < xi.size(); ++i)
                out.data(j)[i] = rho_ * (xi.data(j)[i] - c_.data(j)[i]);
    }

    double energy(const VectorField& xi) const override
    {
        const VectorField r = xi - c_;
        return 0.5 * rho_ * inner(r, r);
    }

    double energy_change(const VectorField& from, const VectorField& to) const override
    {
        const VectorField eta = to - from;
        const VectorField r = from - c_;
        return rho_ * inner(r, eta) + 0.5 * rho_ * inner(eta, eta);
    }

    void prepare_hessian(const VectorField&) override {}
    void hessian_apply(const VectorField& eta, VectorField& out) const override
    {
        for (int j = 0; j < eta.dim(); ++j)
            for (std::size_t i = 0; i < eta.size(); ++i)
                out.data(j)[i] = rho_ * eta.data(j)[i];
    }
    double mean_weight() const override { return rho_; }

private:
    double rho_;
    const VectorField& c_;
};

// ---------------------------------------------------------------------------
// J(u) = Flux(D^s u) + h^d sum beta(|u|^p)/p - <f0, u> - <f, D^s u> over
// functions supported in the mask.

class SmoothModel {
public:
    struct State {
        ScalarField u;
        VectorField xi;
    };

    SmoothModel(const FracOperator& op, const DomainMask& mask, std::unique_ptr<FluxModel> flux, double beta,
                double p, const ScalarField& f0, const VectorField* f)
        : op_(op), mask_(mask), flux_(std::move(flux)), beta_(beta), p_(p), eps_(regularization(p)), f0_(f0), f_(f)
    {
    }

    const DomainMask& mask() const noexcept { return mask_; }
    const TorusGrid& grid() const noexcept { return mask_.grid(); }

    State eval(ScalarField u) const
    {
        apply_mask_inplace(u, mask_);
        VectorField xi = op_.gradient(u);
        return {std::move(u), std::move(xi)};
    }

    ScalarField gradient(const State& st) const
    {
        VectorField a(grid());
        flux_->flux(st.xi, a);
        if (f_ != nullptr)
            a -= *f_;
        ScalarField g = op_.divergence(a);
        g *= -1.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!mask_.inside(i)) {
                g[i] = 0.0;
                continue;
            }
            g[i] += lower_derivative(st.u[i]) - f0_[i];
        }
        return g;
    }

    double energy(const State& st) const
    {
        double lower = 0.0;
        if (beta_ != 0.0)
            for (double v : st.u.values())
                lower += beta_ * (std::pow(v * v + eps_ * eps_, 0.5 * p_) - std::pow(eps_, p_)) / p_;
        double linear = inner(f0_, st.u);
        if (f_ != nullptr)
            linear += inner(*f_, st.xi);
        return flux_->energy(st.xi) + lower * grid().cell_volume() - linear;
    }

    double energy_change(const State& from, const State& to) const
    {
        double lower = 0.0;
        if (beta_ != 0.0)
            for (std::size_t i = 0; i < from.u.size(); ++i) {
                const double a = from.u[i];
                const double e = to.u[i] - a;
                lower += beta_ * power_change(a * a + eps_ * eps_, 2.0 * a * e + e * e, p_) / p_;
            }
        const ScalarField du = to.u - from.u;
        double linear = inner(f0_, du);
        if (f_ != nullptr)
            linear += inner(*f_, to.xi - from.xi);
        return flux_->energy_change(from.xi, to.xi) + lower * grid().cell_volume() - linear;
    }

    void prepare(const State& st)
    {
        flux_->prepare_hessian(st.xi);
        lower_weight_.assign(st.u.size(), 0.0);
        double top = 0.0;
        for (double v : st.u.values())
            top = std::max(top, std::abs(v));
        const double floor = p_ > 2.0 ? (top > 0.0 ? 1e-4 * top : 1.0) : 0.0;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < st.u.size(); ++i) {
            if (!mask_.inside(i) || beta_ == 0.0)
                continue;
            const double r = std::max(std::sqrt(st.u[i] * st.u[i] + eps_ * eps_), floor);
            lower_weight_[i] = p_ == 2.0 ? beta_ : beta_ * (p_ - 1.0) * std::pow(r, p_ - 2.0);
            sum += lower_weight_[i];
            ++count;
        }
        lower_mean_ = count > 0 ? sum / static_cast<double>(count) : 0.0;
    }

    /// Hessian on functions supported in `support` (a subset of the mask).
    void hessian_apply(std::span<const double> x, std::span<double> y, const std::vector<std::uint8_t>& support) const
    {
        ScalarField xf(grid());
        for (std::size_t i = 0; i < xf.size(); ++i)
            xf[i] = support[i] ? x[i] : 0.0;
        const VectorField eta = op_.gradient(xf);
        VectorField w(grid());
        flux_->hessian_apply(eta, w);
        const ScalarField div = op_.divergence(w);
        for (std::size_t i = 0; i < xf.size(); ++i)
            y[i] = support[i] ? -div[i] + lower_weight_[i] * xf[i] : 0.0;
    }

    void precondition(std::span<const double> x, std::span<double> y, const std::vector<std::uint8_t>& support) const
    {
        ScalarField xf(grid());
        for (std::size_t i = 0; i < xf.size(); ++i)
            xf[i] = support[i] ? x[i] : 0.0;
        const auto& table = op_.table();
        const double w = flux_->mean_weight();
        const double kmin = std::numbers::pi / grid().half_length();
        const double floor = w * std::pow(kmin, 2.0 * op_.order().value()) + lower_mean_;
        const ScalarField px = op_.apply_even_symbol(
            xf, [&](std::size_t k) { return 1.0 / std::max(w * table.laplacian_symbol(k) + lower_mean_, floor); },
            "preconditioner");
        for (std::size_t i = 0; i < xf.size(); ++i)
            y[i] = support[i] ? px[i] : 0.0;
    }

private:
    double lower_derivative(double u) const
    {
        if (beta_ == 0.0)
            return 0.0;
        if (p_ == 2.0)
            return beta_ * u;
        return beta_ * std::pow(u * u + eps_ * eps_, 0.5 * (p_ - 2.0)) * u;
    }

    const FracOperator& op_;
    const DomainMask& mask_;
    std::unique_ptr<FluxModel> flux_;
    double beta_;
    double p_;
    double eps_;
    const ScalarField& f0_;
    const VectorField* f_;
    std::vector<double> lower_weight_;
    double lower_mean_ = 0.0;
};

// ---------------------------------------------------------------------------
// Pointwise bounds lower <= u <= upper on the mask, u = 0 off the mask.

struct Bounds {
    const ScalarField* lower = nullptr;
    const ScalarField* upper = nullptr;

    void project(ScalarField& u, const DomainMask& mask) const
    {
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!mask.inside(i)) {
                u[i] = 0.0;
                continue;
            }
            if (lower != nullptr)
                u[i] = std::max(u[i], (*lower)[i]);
            if (upper != nullptr)
                u[i] = std::min(u[i], (*upper)[i]);
        }
    }

    /// Bertsekas eps-active set: at (or within eps of) a bound with the
    /// gradient pushing outward.
    bool active(std::size_t i, double u, double g, double eps) const
    {
        if (lower != nullptr && u - (*lower)[i] <= eps && g > 0.0)
            return true;
        if (upper != nullptr && (*upper)[i] - u <= eps && g < 0.0)
            return true;
        return false;
    }
};

Bounds bounds_of(const ConstraintSet& K)
{
    Bounds b;
    if (const auto* lo = std::get_if<ObstacleLower>(&K))
        b.lower = &lo->psi;
    else if (const auto* up = std::get_if<ObstacleUpper>(&K))
        b.upper = &up->phi;
    return b;
}

double stationarity(const ScalarField& u, const ScalarField& g, const Bounds& bounds, const DomainMask& mask)
{
    ScalarField trial = u - g;
    bounds.project(trial, mask);
    return lp_norm(u - trial, 2.0);
}

struct MinimizeOptions {
    double tol = 1e-8;           // absolute stationarity tolerance
    int max_iters = 50000;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double cg_rel_tol = 0.0;     // zero selects the adaptive forcing term
};

struct MinimizeResult {
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    std::string message;
};

/// Projected Newton-CG with Armijo search along the projection arc.
MinimizeResult projected_newton(SmoothModel& model, const Bounds& bounds, SmoothModel::State& st,
                                const MinimizeOptions& opt, std::vector<double>* trace, double* energy)
{
    const DomainMask& mask = model.mask();
    const std::size_t n = st.u.size();
    MinimizeResult res;
    ScalarField g = model.gradient(st);
    double r = stationarity(st.u, g, bounds, mask);
    const double r0 = std::max(r, 1e-300);
    const int cg_cap = static_cast<int>(std::min<std::size_t>(2 * mask.count() + 50, 2000));

    std::vector<std::uint8_t> free_set(n, 0);
    Vec rhs(n), dir(n);
    for (int it = 0;; ++it) {
        res.iterations = it;
        res.residual = r;
        if (r <= opt.tol) {
            res.converged = true;
            return res;
        }
        if (it >= opt.max_iters) {
            res.message = "iteration cap reached";
            return res;
        }

        const double eps_active = std::min(1e-3 * (1.0 + max_abs(st.u.values())), r);
        for (std::size_t i = 0; i < n; ++i)
            free_set[i] = mask.inside(i) && !bounds.active(i, st.u[i], g[i], eps_active) ? 1 : 0;

        model.prepare(st);
        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = free_set[i] ? -g[i] : 0.0;
            dir[i] = 0.0;
        }
        const double eta = opt.cg_rel_tol > 0.0 ? opt.cg_rel_tol : std::clamp(r / r0, 1e-12, 1e-2);
        const LinearMap apply = [&](std::span<const double> x, std::span<double> y) { model.hessian_apply(x, y, free_set); };
        const LinearMap prec = [&](std::span<const double> x, std::span<double> y) { model.precondition(x, y, free_set); };
        conjugate_gradient(apply, rhs, dir, prec, eta, cg_cap);
        for (std::size_t i = 0; i < n; ++i)
            if (mask.inside(i) && !free_set[i])
                dir[i] = -g[i];

        // Search along u(t) = P(u + t d); fall back to the projected gradient.
        const Vec newton_dir = dir;
        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1)
                for (std::size_t i = 0; i < n; ++i)
                    dir[i] = mask.inside(i) ? -g[i] : 0.0;
            double t = 1.0;
            for (int k = 0; k < 60; ++k, t *= opt.backtrack) {
                ScalarField trial(st.u.grid());
                for (std::size_t i = 0; i < n; ++i)
                    trial[i] = st.u[i] + t * dir[i];
                bounds.project(trial, mask);
                const double model_change = inner(g, trial - st.u);
                if (!(model_change < 0.0))
                    continue;
                SmoothModel::State next = model.eval(std::move(trial));
                const double change = model.energy_change(st, next);
                if (change <= opt.armijo_c * model_change) {
                    st = std::move(next);
                    if (energy != nullptr) {
                        *energy += change;
                        if (trace != nullptr)
                            trace->push_back(*energy);
                    }
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            // Predicted decrease below the rounding level of J: take the
            // Newton point if it clearly reduces the stationarity measure.
            ScalarField trial(st.u.grid());
            for (std::size_t i = 0; i < n; ++i)
                trial[i] = st.u[i] + newton_dir[i];
            bounds.project(trial, mask);
            SmoothModel::State next = model.eval(std::move(trial));
            ScalarField g_next = model.gradient(next);
            const double r_next = stationarity(next.u, g_next, bounds, mask);
            if (!(r_next <= 0.5 * r)) {
                res.message = "line search failed";
                return res;
            }
            const double change = model.energy_change(st, next);
            st = std::move(next);
            if (energy != nullptr) {
                *energy += change;
                if (trace != nullptr)
                    trace->push_back(*energy);
            }
            g = std::move(g_next);
            r = r_next;
            continue;
        }
        g = model.gradient(st);
        r = stationarity(st.u, g, bounds, mask);
    }
}

// ---------------------------------------------------------------------------

std::unique_ptr<FluxModel> make_flux(const Coefficients& coeffs)
{
    if (const auto* pl = std::get_if<PLaplace>(&coeffs.principal))
        return std::make_unique<PLaplaceFlux>(pl->alpha, coeffs.p);
    if (const auto* lm = std::get_if<LinearMatrix>(&coeffs.principal))
        return std::make_unique<LinearFlux>(*lm);
    throw std::invalid_argument("non-potential operator");
}

void check_obstacle(const ConstraintSet& K, const DomainMask& mask)
{
    const ScalarField* field = nullptr;
    double sign = 1.0;
    if (const auto* lo = std::get_if<ObstacleLower>(&K)) {
        field = &lo->psi;
    } else if (const auto* up = std::get_if<ObstacleUpper>(&K)) {
        field = &up->phi;
        sign = -1.0;
    } else {
        return;
    }
    const TorusGrid& g = mask.grid();
    require_same_grid(field->grid(), g, "obstacle");
    field->check_finite("obstacle");
    // u = 0 off the mask, so a lower obstacle that is positive right next
    // to Omega leaves no admissible grid function.
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (mask.inside(i) || sign * (*field)[i] <= 0.0)
            continue;
        const auto idx = g.multi_index(i);
        for (int j = 0; j < g.dim(); ++j)
            for (int step : {-1, 1}) {
                auto nb = idx;
                nb[static_cast<std::size_t>(j)] += step;
                if (mask.inside(g.flat_index(nb)))
                    throw std::invalid_argument("infeasible obstacle: " +
                                                std::string(sign > 0 ? "psi > 0" : "phi < 0") +
                                                " at exterior node " + std::to_string(i) + " next to Omega");
            }
    }
}

void check_inputs(const Coefficients& coeffs, const DualDatum& F, FracOrder s, const DomainMask& mask,
                  const SolverConfig& config)
{
    config.validate();
    coeffs.validate(mask.grid(), s);
    require_same_grid(F.grid(), mask.grid(), "solve");
    F.require_support(mask);
}

ScalarField initial_point(const SolverConfig& config, const TorusGrid& grid)
{
    if (config.initial) {
        require_same_grid(config.initial->grid(), grid, "initial point");
        config.initial->check_finite("initial point");
        return *config.initial;
    }
    return ScalarField(grid);
}

SolveReport finish(SolveReport report, const Coefficients& coeffs, const DualDatum& F, const ConstraintSet& K,
                   FracOrder s, const DomainMask& mask, std::chrono::steady_clock::time_point t0)
{
    report.kkt = kkt_residuals(report, coeffs, F, K, s, mask);
    report.wall_time = elapsed_since(t0);
    return report;
}

/// p = 2, constant scalar weight, no constraint, full box: one diagonal solve.
bool fast_path_applies(const Coefficients& coeffs, const ConstraintSet& K, const DomainMask& mask)
{
    if (coeffs.p != 2.0 || coeffs.drift || mask.is_strict() || !std::holds_alternative<Unconstrained>(K))
        return false;
    const auto* pl = std::get_if<PLaplace>(&coeffs.principal);
    if (pl == nullptr)
        return false;
    const auto v = pl->alpha.values();
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
}

SolveReport diagonal_solve(const Coefficients& coeffs, const DualDatum& F, FracOrder s)
{
    const TorusGrid& g = F.grid();
    const FracOperator op(g, s);
    const double alpha = std::get<PLaplace>(coeffs.principal).alpha[0];
    ScalarField rhs = F.f0();
    if (!F.flux_is_zero())
        rhs -= op.divergence(F.f());
    const auto& table = op.table();
    const Spectrum hat = op.fft().forward(rhs.values());
    double scale = 0.0;
    for (const auto& c : hat)
        scale = std::max(scale, std::abs(c));
    for (std::size_t k = 0; k < hat.size(); ++k)
        if (alpha * table.laplacian_symbol(k) + coeffs.beta == 0.0 && std::abs(hat[k]) > 1e-12 * scale)
            throw std::domain_error("solve_vi: data has content on a mode the operator annihilates");
    SolveReport report{ScalarField(g)};
    report.solution = op.apply_even_symbol(
        rhs,
        [&](std::size_t k) {
            const double m = alpha * table.laplacian_symbol(k) + coeffs.beta;
            return m == 0.0 ? 0.0 : 1.0 / m;
        },
        "diagonal solve");
    report.s = s.value();
    report.iterations = 1;
    report.converged = true;
    report.method = "diagonal";
    return report;
}

// ---------------------------------------------------------------------------
// Non-potential operators.

/// Projected extragradient on mask(A(v) - F_frozen) with a self-adapting step.
MinimizeResult extragradient(const std::function<ScalarField(const ScalarField&)>& residual, const Bounds& bounds,
                             const DomainMask& mask, ScalarField& u, double tol, int max_iters, double step)
{
    MinimizeResult res;
    ScalarField ru = residual(u);
    double tau = step;
    for (int it = 0;; ++it) {
        res.iterations = it;
        res.residual = stationarity(u, ru, bounds, mask);
        if (res.residual <= tol) {
            res.converged = true;
            return res;
        }
        if (it >= max_iters) {
            res.message = "iteration cap reached";
            return res;
        }
        for (int k = 0; k < 60; ++k) {
            ScalarField half = u - tau * ru;
            bounds.project(half, mask);
            const ScalarField rh = residual(half);
            const double num = lp_norm(rh - ru, 2.0);
            const double den = lp_norm(half - u, 2.0);
            if (tau * num <= 0.9 * den || den == 0.0) {
                ScalarField next = u - tau * rh;
                bounds.project(next, mask);
                u = std::move(next);
                ru = residual(u);
                if (tau * num < 0.5 * den)
                    tau *= 1.5;
                break;
            }
            tau *= 0.5;
        }
    }
}

VectorField drift_field(const ScalarField& u, const Drift& drift)
{
    const TorusGrid& g = u.grid();
    VectorField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec3 e = drift.e(g.node(i), u[i]);
        for (int j = 0; j < g.dim(); ++j)
            out.data(j)[i] = e[static_cast<std::size_t>(j)];
    }
    out.check_finite("drift");
    return out;
}

SolveReport solve_general(const Coefficients& coeffs, const DualDatum& F, const ConstraintSet& K, FracOrder s,
                          const DomainMask& mask, const SolverConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    const TorusGrid& grid = mask.grid();
    const auto& h = std::get<GeneralHandles>(coeffs.principal);
    const FracOperator op(grid, s);
    const Bounds bounds = bounds_of(K);

    ScalarField u = initial_point(config, grid);
    bounds.project(u, mask);

    SolveReport report{ScalarField(grid)};
    report.s = s.value();
    report.method = "picard-extragradient";

    const double step = 1.0 / std::max(1.0, op.table().max_magnitude() * op.table().max_magnitude());
    for (int k = 1; k <= config.picard_max; ++k) {
        // Freeze the u-dependence of a and b at the current iterate.
        const ScalarField frozen = u;
        ScalarField b_frozen(grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            b_frozen[i] = mask.inside(i) && h.b ? h.b(grid.node(i), frozen[i]) : 0.0;
        VectorField e_frozen(grid);
        if (coeffs.drift)
            e_frozen = drift_field(frozen, *coeffs.drift);
        const auto residual = [&](const ScalarField& v) {
            const VectorField xi = op.gradient(v);
            VectorField a(grid);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const Vec3 x3{xi.data(0)[i], grid.dim() > 1 ? xi.data(1)[i] : 0.0, grid.dim() > 2 ? xi.data(2)[i] : 0.0};
                const Vec3 ai = h.a(grid.node(i), frozen[i], x3);
                for (int j = 0; j < grid.dim(); ++j)
                    a.data(j)[i] = ai[static_cast<std::size_t>(j)] + e_frozen.data(j)[i] - F.f().data(j)[i];
            }
            ScalarField r = op.divergence(a);
            r *= -1.0;
            for (std::size_t i = 0; i < grid.size(); ++i)
                r[i] = mask.inside(i) ? r[i] + b_frozen[i] - F.f0()[i] : 0.0;
            return r;
        };
        ScalarField v = u;
        const MinimizeResult inner_res = extragradient(residual, bounds, mask, v, 0.1 * config.tol, config.max_iters, step);
        report.iterations += inner_res.iterations;
        ScalarField next = (1.0 - config.omega) * u + config.omega * v;
        const double change = lp_norm(next - u, 2.0);
        u = std::move(next);
        report.energy_trace.push_back(change);
        if (change <= config.tol * std::max(1.0, lp_norm(u, 2.0))) {
            const ScalarField full = operator_residual(u, coeffs, F, s, mask);
            report.residual = stationarity(u, full, bounds, mask);
            report.converged = inner_res.converged;
            break;
        }
    }
    if (!report.converged) {
        report.residual = stationarity(u, operator_residual(u, coeffs, F, s, mask), bounds, mask);
        report.message = "Picard iteration did not settle";
    }
    report.solution = std::move(u);
    return finish(std::move(report), coeffs, F, K, s, mask, t0);
}

SolveReport solve_with_drift(const Coefficients& coeffs, const DualDatum& F, const ConstraintSet& K, FracOrder s,
                             const DomainMask& mask, const SolverConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    const TorusGrid& grid = mask.grid();
    Coefficients inner_coeffs = coeffs;
    inner_coeffs.drift.reset();
    const Drift& drift = *coeffs.drift;

    SolveReport report{ScalarField(grid)};
    report.s = s.value();
    report.method = "picard-drift";
    ScalarField u = initial_point(config, grid);
    const Bounds bounds = bounds_of(K);
    bounds.project(u, mask);

    SolverConfig inner_cfg = config;
    inner_cfg.tol = 0.1 * config.tol;
    for (int k = 1; k <= config.picard_max; ++k) {
        const DualDatum Fk(F.f0(), F.f() - drift_field(u, drift));
        inner_cfg.initial = u;
        const SolveReport step = solve_vi(inner_coeffs, Fk, K, s, mask, inner_cfg);
        report.iterations += step.iterations;
        ScalarField next = (1.0 - config.omega) * u + config.omega * step.solution;
        const double change = lp_norm_vec(frac_gradient(next - u, s), 2.0);
        u = std::move(next);
        report.energy_trace.push_back(change);
        if (change <= config.tol * std::max(1.0, lp_norm_vec(frac_gradient(u, s), 2.0))) {
            report.converged = step.converged;
            break;
        }
    }
    report.residual = stationarity(u, operator_residual(u, coeffs, F, s, mask), bounds, mask);
    if (!report.converged)
        report.message = "Picard iteration did not settle";
    report.solution = std::move(u);
    return finish(std::move(report), coeffs, F, K, s, mask, t0);
}

}  // namespace

// ---------------------------------------------------------------------------

Coefficients Coefficients::p_laplace(const TorusGrid& grid, double p, double alpha, double beta)
{
    return Coefficients{p, PLaplace{sample(grid, [alpha](const Point&) { return alpha; })}, beta, std::nullopt,
                        std::nullopt};
}

bool Coefficients::is_potential() const noexcept
{
    return !drift && !std::holds_alternative<GeneralHandles>(principal);
}

double Coefficients::coercivity() const
{
    return std::visit(Overloaded{[](const PLaplace& pl) {
                                     double m = kInf;
                                     for (double a : pl.alpha.values())
                                         m = std::min(m, a);
                                     return m;
                                 },
                                 [](const LinearMatrix& lm) { return lm.ellipticity; },
                                 [](const GeneralHandles& gh) { return gh.monotonicity; }},
                      principal);
}

double Coefficients::monotonicity_constant() const
{
    if (const auto* gh = std::get_if<GeneralHandles>(&principal))
        return gh->monotonicity;
    const double base = coercivity();
    return p >= 2.0 ? base * std::pow(2.0, 2.0 - p) : base * (p - 1.0);
}

void Coefficients::validate(const TorusGrid& grid, FracOrder s) const
{
    if (!(p > 1.0 && std::isfinite(p)))
        throw std::invalid_argument("coefficients: p must lie in (1, inf)");
    if (!(beta >= 0.0 && std::isfinite(beta)))
        throw std::invalid_argument("coefficients: beta must be nonnegative");
    std::visit(Overloaded{[&](const PLaplace& pl) {
                              require_same_grid(pl.alpha.grid(), grid, "coefficients alpha");
                              pl.alpha.check_finite("coefficients alpha");
                              if (!(coercivity() > 0.0))
                                  throw std::invalid_argument("coefficients: alpha must be bounded below by a positive constant");
                          },
                          [&](const LinearMatrix& lm) {
                              if (p != 2.0)
                                  throw std::invalid_argument("coefficients: a matrix principal part requires p = 2");
                              const auto d = static_cast<std::size_t>(grid.dim());
                              if (lm.entries.size() != d)
                                  throw std::invalid_argument("coefficients: matrix must be d x d");
                              for (std::size_t j = 0; j < d; ++j) {
                                  if (lm.entries[j].size() != d)
                                      throw std::invalid_argument("coefficients: matrix must be d x d");
                                  for (std::size_t k = 0; k < d; ++k) {
                                      require_same_grid(lm.entries[j][k].grid(), grid, "coefficients matrix");
                                      if (lm.entries[j][k].data() != lm.entries[k][j].data())
                                          throw std::invalid_argument("coefficients: matrix must be symmetric");
                                  }
                              }
                              if (!(lm.ellipticity > 0.0))
                                  throw std::invalid_argument("coefficients: matrix ellipticity must be positive");
                          },
                          [&](const GeneralHandles& gh) {
                              if (!gh.a)
                                  throw std::invalid_argument("coefficients: handle a is missing");
                          }},
               principal);

    if (drift) {
        if (p != 2.0)
            throw std::invalid_argument("coefficients: a drift requires p = 2");
        if (!drift->e)
            throw std::invalid_argument("coefficients: drift handle is missing");
        if (!(drift->lipschitz >= 0.0))
            throw std::invalid_argument("coefficients: drift Lipschitz constant must be nonnegative");
    }

    if (certificate) {
        const auto ps = sobolev_exponent(p, s.value(), grid.dim());
        const double pstar = ps.kind == SobolevExponent::Kind::finite ? ps.value : kInf;
        const auto& c = *certificate;
        if (!(c.q1 > 1.0 && c.q1 < std::min(pstar, p * p / (p - 1.0))))
            throw std::invalid_argument("coefficients: exponent q1 violates 1 < q1 < min(p*_s, p^2/(p-1))");
        if (!(c.q2 > 1.0 && c.q2 < std::min(pstar, p + 1.0)))
            throw std::invalid_argument("coefficients: exponent q2 violates 1 < q2 < min(p*_s, p+1)");
        if (!(c.q3 < p))
            throw std::invalid_argument("coefficients: exponent q3 must be below p");
        if (!(c.alpha > 0.0))
            throw std::invalid_argument("coefficients: certificate alpha must be positive");
    }
}

void SolverConfig::validate() const
{
    if (!(tol > 0.0))
        throw std::invalid_argument("solver: tol must be positive");
    if (!(omega > 0.0 && omega <= 1.0))
        throw std::invalid_argument("solver: omega must lie in (0, 1]");
    if (max_iters < 1 || picard_max < 1)
        throw std::invalid_argument("solver: iteration caps must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0) || !(backtrack > 0.0 && backtrack < 1.0))
        throw std::invalid_argument("solver: line-search parameters must lie in (0, 1)");
    if (!(rho > 0.0) || !(rho_band > 1.0) || !(rho_scale > 1.0))
        throw std::invalid_argument("solver: rho must be positive and the adaptation band above 1");
}

double KktResiduals::max() const noexcept
{
    return std::max({primal, multiplier, complementarity});
}

ScalarField project(const ScalarField& u, const ConstraintSet& K, const DomainMask& mask)
{
    ScalarField out = u;
    bounds_of(K).project(out, mask);
    return out;
}

VectorField flux(const ScalarField& u, const VectorField& xi, const Coefficients& coeffs)
{
    const TorusGrid& g = u.grid();
    VectorField out(g);
    std::visit(Overloaded{[&](const PLaplace& pl) { PLaplaceFlux(pl.alpha, coeffs.p).flux(xi, out); },
                          [&](const LinearMatrix& lm) { LinearFlux(lm).flux(xi, out); },
                          [&](const GeneralHandles& gh) {
                              for (std::size_t i = 0; i < g.size(); ++i) {
                                  Vec3 x3{0.0, 0.0, 0.0};
                                  for (int j = 0; j < g.dim(); ++j)
                                      x3[static_cast<std::size_t>(j)] = xi.data(j)[i];
                                  const Vec3 a = gh.a(g.node(i), u[i], x3);
                                  for (int j = 0; j < g.dim(); ++j)
                                      out.data(j)[i] = a[static_cast<std::size_t>(j)];
                              }
                          }},
               coeffs.principal);
    if (coeffs.drift)
        out += drift_field(u, *coeffs.drift);
    out.check_finite("flux");
    return out;
}

ScalarField operator_residual(const ScalarField& u, const Coefficients& coeffs, const DualDatum& F, FracOrder s,
                              const DomainMask& mask)
{
    const FracOperator op(u.grid(), s);
    VectorField a = flux(u, op.gradient(u), coeffs);
    a -= F.f();
    ScalarField r = op.divergence(a);
    r *= -1.0;
    const auto* gh = std::get_if<GeneralHandles>(&coeffs.principal);
    const double eps = regularization(coeffs.p);
    const TorusGrid& g = u.grid();
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!mask.inside(i)) {
            r[i] = 0.0;
            continue;
        }
        double b = 0.0;
        if (gh != nullptr)
            b = gh->b ? gh->b(g.node(i), u[i]) : 0.0;
        else if (coeffs.beta != 0.0)
            b = coeffs.p == 2.0 ? coeffs.beta * u[i]
                                : coeffs.beta * std::pow(u[i] * u[i] + eps * eps, 0.5 * (coeffs.p - 2.0)) * u[i];
        r[i] += b - F.f0()[i];
    }
    return r;
}

double energy(const ScalarField& u, const Coefficients& coeffs, const DualDatum& F, FracOrder s,
              const DomainMask& mask)
{
    if (!coeffs.is_potential())
        throw std::invalid_argument("energy: non-potential operator");
    const FracOperator op(u.grid(), s);
    SmoothModel model(op, mask, make_flux(coeffs), coeffs.beta, coeffs.p, F.f0(), &F.f());
    for (std::size_t i = 0; i < u.size(); ++i)
        if (!mask.inside(i) && u[i] != 0.0)
            throw std::invalid_argument("energy: u must vanish outside Omega");
    return model.energy(model.eval(u));
}

ScalarField energy_gradient(const ScalarField& u, const Coefficients& coeffs, const DualDatum& F, FracOrder s,
                            const DomainMask& mask)
{
    if (!coeffs.is_potential())
        throw std::invalid_argument("energy_gradient: non-potential operator");
    const FracOperator op(u.grid(), s);
    SmoothModel model(op, mask, make_flux(coeffs), coeffs.beta, coeffs.p, F.f0(), &F.f());
    return model.gradient(model.eval(u));
}

SolveReport solve_vi(const Coefficients& coeffs, const DualDatum& F, const ConstraintSet& K, FracOrder s,
                     const DomainMask& mask, const SolverConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    check_inputs(coeffs, F, s, mask, config);
    if (std::holds_alternative<GradientBound>(K))
        throw std::invalid_argument("solve_vi: use solve_gradient_vi for a gradient constraint");
    check_obstacle(K, mask);

    if (coeffs.drift) {
        const double alpha2 = coeffs.monotonicity_constant();
        const double c2 = poincare_best_constant(mask, s).c;
        if (!(alpha2 > coeffs.drift->lipschitz * c2))
            throw std::invalid_argument("solve_vi: drift too strong, need alpha_2 > lambda c_{2,s} (alpha_2 = " +
                                        format_double(alpha2) + ", lambda c = " +
                                        format_double(coeffs.drift->lipschitz * c2) + ")");
        return solve_with_drift(coeffs, F, K, s, mask, config);
    }
    if (std::holds_alternative<GeneralHandles>(coeffs.principal))
        return solve_general(coeffs, F, K, s, mask, config);
    if (fast_path_applies(coeffs, K, mask) && !config.initial)
        return finish(diagonal_solve(coeffs, F, s), coeffs, F, K, s, mask, t0);

    const TorusGrid& grid = mask.grid();
    const FracOperator op(grid, s);
    SmoothModel model(op, mask, make_flux(coeffs), coeffs.beta, coeffs.p, F.f0(), &F.f());
    const Bounds bounds = bounds_of(K);
    ScalarField u0 = initial_point(config, grid);
    bounds.project(u0, mask);
    SmoothModel::State st = model.eval(std::move(u0));

    SolveReport report{ScalarField(grid)};
    report.s = s.value();
    report.method = "projected-newton";
    double J = model.energy(st);
    report.energy_trace.push_back(J);

    const double r0 = stationarity(st.u, model.gradient(st), bounds, mask);
    MinimizeOptions opt;
    opt.tol = config.tol * std::max(1.0, r0);
    opt.max_iters = config.max_iters;
    opt.armijo_c = config.armijo_c;
    opt.backtrack = config.backtrack;
    const MinimizeResult res = projected_newton(model, bounds, st, opt, &report.energy_trace, &J);
    report.iterations = res.iterations;
    report.residual = res.residual;
    report.converged = res.converged;
    report.message = res.message;
    report.solution = std::move(st.u);
    return finish(std::move(report), coeffs, F, K, s, mask, t0);
}

// ---------------------------------------------------------------------------

namespace {

/// Radial minimizer of alpha t^p/p + rho/2 (t - m)^2 over 0 <= t <= cap.
double radial_prox(double alpha, double p, double rho, double m, double cap)
{
    if (m <= 0.0)
        return 0.0;
    double t;
    if (p == 2.0) {
        t = rho * m / (alpha + rho);
    } else {
        // phi(t) = alpha t^{p-1} + rho t - rho m is increasing with phi(0) < 0 <= phi(m).
        double lo = 0.0, hi = m;
        t = rho * m / (alpha + rho);
        for (int k = 0; k < 200; ++k) {
            const double phi = alpha * std::pow(t, p - 1.0) + rho * (t - m);
            if (phi > 0.0)
                hi = t;
            else
                lo = t;
            const double dphi = alpha * (p - 1.0) * std::pow(t, p - 2.0) + rho;
            double next = t - phi / dphi;
            if (!(next > lo && next < hi) || !std::isfinite(next))
                next = 0.5 * (lo + hi);
            if (std::abs(next - t) <= 1e-16 * m) {
                t = next;
                break;
            }
            t = next;
        }
    }
    return std::min(t, cap);
}

}  // namespace

SolveReport solve_gradient_vi(const Coefficients& coeffs, const DualDatum& F, const ScalarField& g, double nu,
                              FracOrder s, const DomainMask& mask, const SolverConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    if (!(nu > 0.0))
        throw std::invalid_argument("solve_gradient_vi: nu must be positive (g >= nu > 0)");
    check_inputs(coeffs, F, s, mask, config);
    const auto* pl = std::get_if<PLaplace>(&coeffs.principal);
    if (pl == nullptr || coeffs.drift)
        throw std::invalid_argument("solve_gradient_vi: requires the built-in p-Laplacian principal part");
    require_same_grid(g.grid(), mask.grid(), "solve_gradient_vi");
    g.check_finite("gradient bound");
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(g[i] >= nu))
            throw std::invalid_argument("solve_gradient_vi: g falls below nu at node " + std::to_string(i));
    if (!mask.is_strict() && coeffs.beta == 0.0)
        throw std::invalid_argument("solve_gradient_vi: needs a strict mask or beta > 0");

    const TorusGrid& grid = mask.grid();
    const std::size_t n = grid.size();
    const int d = grid.dim();
    const FracOperator op(grid, s);
    const double p = coeffs.p;
    const ScalarField& alpha = pl->alpha;
    const ConstraintSet K = GradientBound{g, nu};

    ScalarField u = initial_point(config, grid);
    apply_mask_inplace(u, mask);
    VectorField xi = op.gradient(u);
    VectorField z(grid), w(grid);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = xi.magnitude(i);
        const double f = m > g[i] ? g[i] / m : 1.0;
        for (int j = 0; j < d; ++j)
            z.data(j)[i] = f * xi.data(j)[i];
    }

    SolveReport report{ScalarField(grid)};
    report.s = s.value();
    report.method = "admm";
    double rho = config.rho;
    const double g_inf = lp_norm(g, kInfNorm);
    ScalarField data = F.f0();
    if (!F.flux_is_zero())
        data -= op.divergence(F.f());
    apply_mask_inplace(data, mask);
    const double dual_scale = std::max(1.0, lp_norm(data, 2.0));
    const ScalarField& f0 = F.f0();
    const bool linear_u = p == 2.0 || coeffs.beta == 0.0;
    Coefficients energy_coeffs = coeffs;

    for (int it = 1; it <= config.max_iters; ++it) {
        // u-update: minimize beta|u|^p/p - <f0,u> + rho/2 |D^s u - (z - w)|^2.
        const VectorField c = z - w;
        SmoothModel model(op, mask, std::make_unique<PenaltyFlux>(rho, c), linear_u && p != 2.0 ? 0.0 : coeffs.beta, p, f0,
                          nullptr);
        SmoothModel::State st = model.eval(u);
        MinimizeOptions opt;
        opt.tol = 1e-3 * config.tol * dual_scale;
        opt.max_iters = linear_u ? 3 : 50;
        opt.cg_rel_tol = linear_u ? 1e-13 : 0.0;
        projected_newton(model, Bounds{}, st, opt, nullptr, nullptr);
        u = std::move(st.u);
        xi = std::move(st.xi);

        // z-update: radial prox of alpha|z|^p/p - f.z, then the ball |z| <= g.
        VectorField z_old = z;
        double primal_inf = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double m2 = 0.0;
            std::array<double, 3> v{0.0, 0.0, 0.0};
            for (int j = 0; j < d; ++j) {
                const auto uj = static_cast<std::size_t>(j);
                v[uj] = xi.data(j)[i] + w.data(j)[i] + F.f().data(j)[i] / rho;
                m2 += v[uj] * v[uj];
            }
            const double m = std::sqrt(m2);
            const double t = radial_prox(alpha[i], p, rho, m, g[i]);
            const double f = m > 0.0 ? t / m : 0.0;
            double r2 = 0.0;
            for (int j = 0; j < d; ++j) {
                const double zn = f * v[static_cast<std::size_t>(j)];
                z.data(j)[i] = zn;
                const double r = xi.data(j)[i] - zn;
                w.data(j)[i] += r;
                r2 += r * r;
            }
            primal_inf = std::max(primal_inf, std::sqrt(r2));
        }
        const VectorField dz = z - z_old;
        ScalarField dual = op.divergence(dz);
        dual *= rho;
        apply_mask_inplace(dual, mask);
        const double dual_norm = lp_norm(dual, 2.0);
        const double primal_l2 = lp_norm_vec(xi - z, 2.0);

        report.iterations = it;
        report.residual = primal_inf;
        if (it % 10 == 1 || it <= 10) {
            // The objective without the indicator of K; trace for diagnostics.
            report.energy_trace.push_back(energy(u, energy_coeffs, F, s, mask));
        }
        if (primal_inf <= config.tol * (1.0 + g_inf) && dual_norm <= config.tol * dual_scale) {
            report.converged = true;
            break;
        }
        if (primal_l2 > config.rho_band * dual_norm / rho * 1.0 && primal_l2 * rho > config.rho_band * dual_norm) {
            rho *= config.rho_scale;
            w *= 1.0 / config.rho_scale;
        } else if (dual_norm > config.rho_band * primal_l2 * rho) {
            rho /= config.rho_scale;
            w *= config.rho_scale;
        }
    }
    if (!report.converged)
        report.message = "ADMM iteration cap reached";
    report.rho = rho;
    report.split = z;
    VectorField y = w;
    y *= rho;
    report.multiplier = std::move(y);
    report.solution = std::move(u);
    return finish(std::move(report), coeffs, F, K, s, mask, t0);
}

// ---------------------------------------------------------------------------

KktResiduals kkt_residuals(const SolveReport& report, const Coefficients& coeffs, const DualDatum& F,
                           const ConstraintSet& K, FracOrder s, const DomainMask& mask)
{
    const ScalarField& u = report.solution;
    const TorusGrid& grid = mask.grid();
    KktResiduals out;

    if (const auto* gb = std::get_if<GradientBound>(&K)) {
        const FracOperator op(grid, s);
        const VectorField xi = op.gradient(u);
        const double g_scale = 1.0 + lp_norm(gb->g, kInfNorm);
        for (std::size_t i = 0; i < grid.size(); ++i)
            out.primal = std::max(out.primal, xi.magnitude(i) - gb->g[i]);
        out.primal = std::max(out.primal, 0.0) / g_scale;
        if (!report.split || !report.multiplier)
            return out;
        const VectorField& z = *report.split;
        const VectorField& y = *report.multiplier;
        // u-stationarity: mask(b(u) - f0 - D^s . y) = 0.
        Coefficients lower = coeffs;
        ScalarField st = op.divergence(y);
        st *= -1.0;
        const double eps = regularization(coeffs.p);
        double data_scale = 1.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!mask.inside(i)) {
                st[i] = 0.0;
                continue;
            }
            const double b = coeffs.p == 2.0 ? coeffs.beta * u[i]
                                             : coeffs.beta * std::pow(u[i] * u[i] + eps * eps, 0.5 * (coeffs.p - 2.0)) * u[i];
            st[i] += b - F.f0()[i];
            data_scale = std::max(data_scale, std::abs(F.f0()[i]));
        }
        // z-stationarity: alpha|z|^{p-2}z - f - y + mu zhat = 0 with mu >= 0.
        const auto& alpha = std::get<PLaplace>(coeffs.principal).alpha;
        double zres2 = 0.0, gap = 0.0;
        const int d = grid.dim();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double m = z.magnitude(i);
            const double w = coeffs.p == 2.0 ? alpha[i] : (m > 0.0 ? alpha[i] * std::pow(m, coeffs.p - 2.0) : 0.0);
            double mu = 0.0;
            std::array<double, 3> q{0.0, 0.0, 0.0};
            for (int j = 0; j < d; ++j) {
                const auto uj = static_cast<std::size_t>(j);
                q[uj] = y.data(j)[i] + F.f().data(j)[i] - w * z.data(j)[i];
                if (m > 0.0)
                    mu += q[uj] * z.data(j)[i] / m;
            }
            const double mu_plus = std::max(mu, 0.0);
            for (int j = 0; j < d; ++j) {
                const auto uj = static_cast<std::size_t>(j);
                const double zhat = m > 0.0 ? z.data(j)[i] / m : 0.0;
                const double rj = q[uj] - mu_plus * zhat;
                zres2 += rj * rj;
            }
            gap += mu_plus * std::max(gb->g[i] - m, 0.0);
        }
        const double h = grid.cell_volume();
        out.multiplier = (lp_norm(st, 2.0) + std::sqrt(zres2 * h)) / data_scale;
        out.complementarity = gap * h / data_scale;
        return out;
    }

    const ScalarField lambda = operator_residual(u, coeffs, F, s, mask);
    ScalarField data = F.f0();
    if (!F.flux_is_zero())
        data -= frac_divergence(F.f(), s);
    apply_mask_inplace(data, mask);
    const double sigma = std::max(1.0, lp_norm(data, kInfNorm));

    if (std::holds_alternative<Unconstrained>(K)) {
        out.multiplier = lp_norm(lambda, kInfNorm) / sigma;
        return out;
    }
    const bool lower = std::holds_alternative<ObstacleLower>(K);
    const ScalarField& bound = lower ? std::get<ObstacleLower>(K).psi : std::get<ObstacleUpper>(K).phi;
    const double sign = lower ? 1.0 : -1.0;
    const double bound_scale = std::max(1.0, lp_norm(apply_mask(bound, mask), kInfNorm));
    double comp = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!mask.inside(i))
            continue;
        const double gap = sign * (u[i] - bound[i]);
        out.primal = std::max(out.primal, -gap);
        out.multiplier = std::max(out.multiplier, -sign * lambda[i]);
        comp += sign * lambda[i] * gap;
    }
    out.primal = std::max(out.primal, 0.0) / bound_scale;
    out.multiplier = std::max(out.multiplier, 0.0) / sigma;
    out.complementarity = std::abs(comp * grid.cell_volume()) / (sigma * bound_scale);
    return out;
}

// ---------------------------------------------------------------------------

HolderRecord holder_modulus_check(const Coefficients& coeffs, const DualDatum& F1, const DualDatum& F2,
                                  const ConstraintSet& K, FracOrder s, const DomainMask& mask,
                                  const SolverConfig& config)
{
    if (std::holds_alternative<GeneralHandles>(coeffs.principal) || coeffs.drift)
        throw std::invalid_argument("holder_modulus_check: needs a p-Laplacian type principal part");
    const ScalarField zero(mask.grid());
    const ScalarField p0 = std::holds_alternative<GradientBound>(K) ? zero : project(zero, K, mask);
    if (lp_norm(p0, kInfNorm) != 0.0)
        throw std::invalid_argument("holder_modulus_check: requires 0 in K");

    auto solve = [&](const DualDatum& F) {
        if (const auto* gb = std::get_if<GradientBound>(&K))
            return solve_gradient_vi(coeffs, F, gb->g, gb->nu, s, mask, config);
        return solve_vi(coeffs, F, K, s, mask, config);
    };
    const SolveReport r1 = solve(F1);
    const SolveReport r2 = solve(F2);
    const double p = coeffs.p;

    HolderRecord rec;
    rec.solves_converged = r1.converged && r2.converged;
    rec.lhs = lp_norm_vec(frac_gradient(r1.solution - r2.solution, s), p);
    rec.dual_norm = dual_norm_upper(F1 - F2, s, p, mask).value;
    const double ap = coeffs.monotonicity_constant();
    if (p >= 2.0) {
        rec.rhs = std::pow(ap, 1.0 / (1.0 - p)) * std::pow(rec.dual_norm, 1.0 / (p - 1.0));
    } else {
        const double n1 = dual_norm_upper(F1, s, p, mask).value;
        const double n2 = dual_norm_upper(F2, s, p, mask).value;
        rec.rhs = std::pow(2.0, (p - 1.0) * (2.0 - p) / p) * std::pow(ap, (3.0 - p) / (1.0 - p)) * rec.dual_norm *
                  std::pow(std::pow(n1, 1.0 / (p - 1.0)) + std::pow(n2, 1.0 / (p - 1.0)), 2.0 - p);
    }
    rec.holds = rec.lhs <= rec.rhs + 1e-9 * (1.0 + rec.rhs);
    return rec;
}

}  // namespace fracvi
