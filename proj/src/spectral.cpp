#include "fracvi/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fracvi {

FracOrder::FracOrder(double s) : s_(s)
{
    if (!(s >= 0.0 && s <= 1.0))
        throw std::invalid_argument("fractional order s out of [0,1]: " + std::to_string(s));
}

// ---------------------------------------------------------------------------

MultiplierTable::MultiplierTable(const TorusGrid& grid, FracOrder s) : grid_(grid), s_(s)
{
    const int n = grid.points_per_axis();
    const int d = grid.dim();
    for (int j = 0; j < d; ++j) {
        auto& axis = kappa_axis_[static_cast<std::size_t>(j)];
        axis.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            axis[static_cast<std::size_t>(i)] = grid.frequency_index(i) == -n / 2 ? 0.0 : grid.angular_frequency(i);
    }

    kappa_norm_.resize(grid.size());
    weight_.resize(grid.size());
    const double sv = s.value();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto idx = grid.multi_index(k);
        double r2 = 0.0;
        for (int j = 0; j < d; ++j) {
            const double kap = grid.angular_frequency(idx[static_cast<std::size_t>(j)]);
            r2 += kap * kap;
        }
        const double r = std::sqrt(r2);
        kappa_norm_[k] = r;
        if (r == 0.0) {
            weight_[k] = 0.0;
        } else {
            weight_[k] = sv == 1.0 ? 1.0 : std::pow(r, sv - 1.0);
            max_magnitude_ = std::max(max_magnitude_, r * weight_[k]);
        }
    }
}

double MultiplierTable::gradient_symbol(std::size_t mode, int axis) const noexcept
{
    const auto idx = grid_.multi_index(mode);
    return kappa_axis_[static_cast<std::size_t>(axis)][static_cast<std::size_t>(idx[static_cast<std::size_t>(axis)])] *
           weight_[mode];
}

double MultiplierTable::magnitude(std::size_t mode) const noexcept
{
    return kappa_norm_[mode] * weight_[mode];
}

double MultiplierTable::laplacian_symbol(std::size_t mode) const noexcept
{
    double s = 0.0;
    for (int j = 0; j < grid_.dim(); ++j) {
        const double c = gradient_symbol(mode, j);
        s += c * c;
    }
    return s;
}

// ---------------------------------------------------------------------------

FracOperator::FracOperator(const TorusGrid& grid, FracOrder s)
    : table_(grid, s), plan_(FftPlan::for_grid(grid))
{
}

namespace {

double rms(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

VectorField FracOperator::gradient(const ScalarField& u) const
{
    require_same_grid(u.grid(), grid(), "frac_gradient");
    const Spectrum hat = plan_->forward(u.values());
    const double tol = 1e-12 * rms(u.values()) * std::max(1.0, table_.max_magnitude()) + 1e-300;
    VectorField out(grid());
    Spectrum buf(hat.size());
    for (int j = 0; j < grid().dim(); ++j) {
        for (std::size_t k = 0; k < hat.size(); ++k)
            buf[k] = Complex(0.0, table_.gradient_symbol(k, j)) * hat[k];
        out.data(j) = real_part_checked(plan_->inverse(buf), tol, "frac_gradient");
    }
    return out;
}

ScalarField FracOperator::divergence(const VectorField& v) const
{
    require_same_grid(v.grid(), grid(), "frac_divergence");
    Spectrum acc(grid().size(), Complex(0.0, 0.0));
    double scale = 0.0;
    for (int j = 0; j < grid().dim(); ++j) {
        const Spectrum hat = plan_->forward(v.component(j));
        for (std::size_t k = 0; k < hat.size(); ++k)
            acc[k] += Complex(0.0, table_.gradient_symbol(k, j)) * hat[k];
        scale += rms(v.component(j));
    }
    const double tol = 1e-12 * scale * std::max(1.0, table_.max_magnitude()) + 1e-300;
    return ScalarField(grid(), real_part_checked(plan_->inverse(std::move(acc)), tol, "frac_divergence"));
}

ScalarField FracOperator::neg_div_grad(const ScalarField& u) const
{
    return apply_even_symbol(u, [this](std::size_t k) { return table_.laplacian_symbol(k); }, "neg_div_grad");
}

// ---------------------------------------------------------------------------

double normalization_constant(int d, double s)
{
    if (d < 1)
        throw std::invalid_argument("normalization_constant: d must be a positive integer");
    if (!(s >= 0.0 && s < 1.0))
        throw std::invalid_argument("normalization_constant: requires 0 <= s < 1 (Gamma pole at s = 1)");
    return std::pow(2.0, s) * std::tgamma(0.5 * (d + s + 1.0)) /
           (std::pow(std::numbers::pi, 0.5 * d) * std::tgamma(0.5 * (1.0 - s)));
}

VectorField frac_gradient(const ScalarField& u, FracOrder s)
{
    return FracOperator(u.grid(), s).gradient(u);
}

ScalarField frac_divergence(const VectorField& v, FracOrder s)
{
    return FracOperator(v.grid(), s).divergence(v);
}

namespace {

void check_potential_order(double alpha)
{
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("riesz_potential: alpha must lie in [0,1)");
}

ScalarField potential_with_zero_mode(const ScalarField& u, double alpha, double zero_mode)
{
    const TorusGrid& g = u.grid();
    const FracOperator op(g, FracOrder(0.0));
    const auto& table = op.table();
    return op.apply_even_symbol(
        u,
        [&](std::size_t k) {
            const double r = table.kappa_norm(k);
            return r == 0.0 ? zero_mode : std::pow(r, -alpha);
        },
        "riesz_potential");
}

}  // namespace

ScalarField riesz_potential(const ScalarField& u, double alpha)
{
    check_potential_order(alpha);
    if (alpha == 0.0)
        return u;
    return potential_with_zero_mode(u, alpha, 0.0);
}

VectorField riesz_potential(const VectorField& v, double alpha)
{
    check_potential_order(alpha);
    if (alpha == 0.0)
        return v;
    VectorField out(v.grid());
    for (int j = 0; j < v.dim(); ++j) {
        ScalarField comp(v.grid(), v.data(j));
        out.data(j) = riesz_potential(comp, alpha).data();
    }
    return out;
}

ScalarField frac_laplacian(const ScalarField& u, FracOrder s)
{
    const FracOperator op(u.grid(), s);
    const auto& table = op.table();
    const double sv = s.value();
    return op.apply_even_symbol(
        u,
        [&](std::size_t k) {
            const double r = table.kappa_norm(k);
            return r == 0.0 ? 0.0 : std::pow(r, 2.0 * sv);
        },
        "frac_laplacian");
}

double positive_potential_zero_mode(const TorusGrid& grid, double alpha)
{
    check_potential_order(alpha);
    if (alpha == 0.0)
        return 1.0;
    const auto plan = FftPlan::for_grid(grid);
    const MultiplierTable table(grid, FracOrder(0.0));
    Spectrum sym(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double r = table.kappa_norm(k);
        sym[k] = r == 0.0 ? 0.0 : std::pow(r, -alpha);
    }
    // Kernel values (up to the factor 1/N^d) at every node offset.
    const Spectrum kernel = plan->inverse(std::move(sym));
    double lowest = 0.0;
    for (const auto& v : kernel)
        lowest = std::min(lowest, v.real());
    return -lowest * static_cast<double>(grid.size());
}

ScalarField riesz_potential_positive(const ScalarField& u, double alpha)
{
    check_potential_order(alpha);
    if (alpha == 0.0)
        return u;
    return potential_with_zero_mode(u, alpha, positive_potential_zero_mode(u.grid(), alpha));
}

// ---------------------------------------------------------------------------

namespace {

/// Fornberg weights for the m-th derivative at 0 on the integer stencil -w..w.
std::vector<double> central_weights(int m, int w)
{
    const int n = 2 * w + 1;
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        xs[static_cast<std::size_t>(i)] = i - w;
    // c[j][k]: weight of node j for derivative k.
    std::vector<std::vector<double>> c(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
    double c1 = 1.0;
    double c4 = xs[0];
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[ui];
        for (int j = 0; j < i; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double c3 = xs[ui] - xs[uj];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    const auto uk = static_cast<std::size_t>(k);
                    c[ui][uk] = c1 * (k * c[ui - 1][uk - 1] - c5 * c[ui - 1][uk]) / c2;
                }
                c[ui][0] = -c1 * c5 * c[ui - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) {
                const auto uk = static_cast<std::size_t>(k);
                c[uj][uk] = (c4 * c[uj][uk] - k * c[uj][uk - 1]) / c3;
            }
            c[uj][0] = c4 * c[uj][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
    return out;
}

/// Mixed central difference: order[j]-th derivative along axis j at `center`.
double mixed_derivative(const ScalarField& u, const std::array<int, 3>& center, const std::array<int, 3>& order)
{
    constexpr int w = 4;
    const TorusGrid& g = u.grid();
    const double h = g.spacing();
    std::array<std::vector<double>, 3> weights;
    for (int j = 0; j < g.dim(); ++j)
        weights[static_cast<std::size_t>(j)] = central_weights(order[static_cast<std::size_t>(j)], w);

    double acc = 0.0;
    std::array<int, 3> off{0, 0, 0};
    const int span = 2 * w + 1;
    int total = 1;
    for (int j = 0; j < g.dim(); ++j)
        total *= span;
    for (int t = 0; t < total; ++t) {
        int rem = t;
        double wt = 1.0;
        for (int j = g.dim() - 1; j >= 0; --j) {
            const auto uj = static_cast<std::size_t>(j);
            off[uj] = rem % span;
            rem /= span;
            wt *= weights[uj][static_cast<std::size_t>(off[uj])];
        }
        if (wt == 0.0)
            continue;
        std::array<int, 3> idx = center;
        for (int j = 0; j < g.dim(); ++j)
            idx[static_cast<std::size_t>(j)] += off[static_cast<std::size_t>(j)] - w;
        acc += wt * u[g.flat_index(idx)];
    }
    int total_order = 0;
    for (int j = 0; j < g.dim(); ++j)
        total_order += order[static_cast<std::size_t>(j)];
    return acc / std::pow(h, total_order);
}

double unit_sphere_area(int d)
{
    switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    default: return 4.0 * std::numbers::pi;
    }
}

}  // namespace

std::array<double, 3> kernel_gradient_oracle(const ScalarField& u, FracOrder s, const Point& x, double eps)
{
    const TorusGrid& g = u.grid();
    const double sv = s.value();
    const double h = g.spacing();
    if (!(sv > 0.0 && sv < 1.0))
        throw std::invalid_argument("kernel_gradient_oracle: requires 0 < s < 1");
    if (!(eps >= h * (1.0 - 1e-12)))
        throw std::invalid_argument("kernel_gradient_oracle: eps below the grid spacing");
    if (!(eps < 0.5 * g.half_length()))
        throw std::invalid_argument("kernel_gradient_oracle: eps must be below L/2");

    const int d = g.dim();
    std::array<int, 3> center{0, 0, 0};
    for (int j = 0; j < d; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        const double t = (x[uj] + g.half_length()) / h;
        const double r = std::round(t);
        if (std::abs(t - r) > 1e-9 || r < 0 || r >= g.points_per_axis())
            throw std::invalid_argument("kernel_gradient_oracle: x must be a grid node inside the box");
        center[uj] = static_cast<int>(r);
    }

    const double mu = normalization_constant(d, sv);
    const double cutoff = 0.5 * g.half_length();
    const double vol = g.cell_volume();
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point xi = g.node(i);
        Point y{0.0, 0.0, 0.0};
        double r2 = 0.0;
        for (int j = 0; j < d; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            y[uj] = xi[uj] - x[uj];
            r2 += y[uj] * y[uj];
        }
        const double r = std::sqrt(r2);
        if (r < eps * (1.0 - 1e-12) || r >= cutoff)
            continue;
        double wt = vol;
        if (std::abs(r - eps) <= 1e-12 * eps)
            wt *= 0.5;
        const double kern = wt * u[i] / std::pow(r, d + sv + 1.0);
        for (int j = 0; j < d; ++j)
            acc[static_cast<std::size_t>(j)] += kern * y[static_cast<std::size_t>(j)];
    }

    // Odd Taylor terms of the excluded ball |y| < eps; even terms vanish by symmetry.
    const double area = unit_sphere_area(d);
    const double c1 = area / d * std::pow(eps, 1.0 - sv) / (1.0 - sv);
    const double c3 = area / (2.0 * d * (d + 2.0)) * std::pow(eps, 3.0 - sv) / (3.0 - sv);
    for (int i = 0; i < d; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        std::array<int, 3> ord{0, 0, 0};
        ord[ui] = 1;
        const double grad_i = mixed_derivative(u, center, ord);
        double grad_lap_i = 0.0;
        for (int j = 0; j < d; ++j) {
            std::array<int, 3> o{0, 0, 0};
            o[ui] += 1;
            o[static_cast<std::size_t>(j)] += 2;
            grad_lap_i += mixed_derivative(u, center, o);
        }
        acc[ui] += c1 * grad_i + c3 * grad_lap_i;
    }

    for (int j = 0; j < d; ++j)
        acc[static_cast<std::size_t>(j)] *= mu;
    return acc;
}

}  // namespace fracvi
