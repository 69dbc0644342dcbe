#pragma once

/**
 * @file spectral.hpp
 * @brief Riesz fractional gradient, divergence, potential and Laplacian as
 * Fourier multipliers on the periodic box.
 *
 * With angular frequency kappa = pi k / L, the gradient of order s has the
 * symbol i kappa_j |kappa|^{s-1}, so s = 1 reproduces the spectral
 * derivative exactly and s = 0 gives minus the Riesz transform. The zero
 * mode is annihilated by every operator here. On an axis where k_j is the
 * Nyquist index -N/2 the j-th gradient symbol is set to zero; this keeps
 * the table conjugate symmetric so outputs are real for every input.
 *
 * kernel_gradient_oracle evaluates the same operator from its singular
 * integral representation with real-space quadrature. It shares no code
 * with the multiplier path and is used to cross-check it.
 */

#include "fracvi/fft.hpp"
#include "fracvi/grid.hpp"

#include <array>
#include <memory>
#include <vector>

namespace fracvi {

/// Fractional order s in [0, 1].
class FracOrder {
public:
    explicit FracOrder(double s);
    double value() const noexcept { return s_; }
    operator double() const noexcept { return s_; }

private:
    double s_;
};

/// Per-mode symbols of D^s on a grid.
class MultiplierTable {
public:
    MultiplierTable(const TorusGrid& grid, FracOrder s);

    const TorusGrid& grid() const noexcept { return grid_; }
    FracOrder order() const noexcept { return s_; }

    /// Imaginary part c of m_s(k)_j = i c; the real part is zero.
    double gradient_symbol(std::size_t mode, int axis) const noexcept;
    /// |kappa|^s for k != 0, zero at k = 0.
    double magnitude(std::size_t mode) const noexcept;
    /// sum_j |m_s(k)_j|^2, the symbol of -D^s . D^s. Equals |kappa|^{2s}
    /// away from the Nyquist planes.
    double laplacian_symbol(std::size_t mode) const noexcept;
    /// |kappa| of a flat mode position.
    double kappa_norm(std::size_t mode) const noexcept { return kappa_norm_[mode]; }
    double max_magnitude() const noexcept { return max_magnitude_; }

private:
    TorusGrid grid_;
    FracOrder s_;
    std::vector<double> kappa_norm_;
    std::vector<double> weight_;                  // |kappa|^{s-1}, zero at k = 0
    std::array<std::vector<double>, 3> kappa_axis_;  // Nyquist entry zeroed
    double max_magnitude_ = 0.0;
};

/// Reusable D^s, D^s. and -D^s.D^s on one grid; holds the FFT plan and
/// the multiplier table.
class FracOperator {
public:
    FracOperator(const TorusGrid& grid, FracOrder s);

    const TorusGrid& grid() const noexcept { return table_.grid(); }
    FracOrder order() const noexcept { return table_.order(); }
    const MultiplierTable& table() const noexcept { return table_; }

    VectorField gradient(const ScalarField& u) const;
    ScalarField divergence(const VectorField& v) const;
    /// -D^s . D^s u, evaluated with one forward and one inverse transform.
    ScalarField neg_div_grad(const ScalarField& u) const;

    /// Applies a real, even symbol sym(mode) to u.
    template <class Symbol>
    ScalarField apply_even_symbol(const ScalarField& u, Symbol&& sym, const char* what) const;

    const FftPlan& fft() const noexcept { return *plan_; }

private:
    MultiplierTable table_;
    std::shared_ptr<const FftPlan> plan_;
};

/// Normalization constant mu_{d,s} of the singular-integral representation.
double normalization_constant(int d, double s);

VectorField frac_gradient(const ScalarField& u, FracOrder s);
ScalarField frac_divergence(const VectorField& v, FracOrder s);
/// Multiplier |kappa|^{-alpha}, alpha in [0,1); the zero mode maps to 0 for
/// alpha > 0 and alpha = 0 returns u unchanged.
ScalarField riesz_potential(const ScalarField& u, double alpha);
VectorField riesz_potential(const VectorField& v, double alpha);
/// Multiplier |kappa|^{2s}; the zero mode maps to 0.
ScalarField frac_laplacian(const ScalarField& u, FracOrder s);

/// Smallest zero-mode value c0 >= 0 for which the periodic kernel of
/// |kappa|^{-alpha} (with c0 at k = 0) is nonnegative at every node.
double positive_potential_zero_mode(const TorusGrid& grid, double alpha);
/// Riesz potential with the zero mode lifted to positive_potential_zero_mode,
/// i.e. convolution with a nonnegative periodic kernel. Agrees with
/// riesz_potential on mean-zero fields. alpha = 0 is the identity.
ScalarField riesz_potential_positive(const ScalarField& u, double alpha);

/// D^s u(x) from mu_{d,s} p.v. int y u(x+y)/|y|^{d+s+1} dy by trapezoidal
/// quadrature over eps <= |y| < L/2. The dropped ball |y| < eps is restored
/// with its third-order Taylor expansion about x (central differences).
/// x must be a grid node; requires 0 < s < 1 and eps >= h.
std::array<double, 3> kernel_gradient_oracle(const ScalarField& u, FracOrder s, const Point& x, double eps);

// ---------------------------------------------------------------------------

template <class Symbol>
ScalarField FracOperator::apply_even_symbol(const ScalarField& u, Symbol&& sym, const char* what) const
{
    require_same_grid(u.grid(), grid(), what);
    Spectrum hat = plan_->forward(u.values());
    double max_sym = 0.0;
    for (std::size_t k = 0; k < hat.size(); ++k) {
        const double m = sym(k);
        hat[k] *= m;
        max_sym = std::max(max_sym, std::abs(m));
    }
    double norm2 = 0.0;
    for (double v : u.values())
        norm2 += v * v;
    const double tol = 1e-12 * std::sqrt(norm2 / static_cast<double>(u.size())) * std::max(1.0, max_sym) + 1e-300;
    return ScalarField(grid(), real_part_checked(plan_->inverse(std::move(hat)), tol, what));
}

}  // namespace fracvi
