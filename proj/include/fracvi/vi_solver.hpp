#pragma once

/**
 * @file vi_solver.hpp
 * @brief Variational inequalities <A_s(u) - F, v - u> >= 0 over convex sets
 * of functions supported in Omega.
 *
 * The operator is A_s(u) = -D^s . (a(x, u, D^s u) + e(x, u)) + b(x, u).
 * Built-in principal parts are the weighted p-Laplacian flux
 * alpha(x)|xi|^{p-2} xi and a symmetric matrix flux A(x) xi (p = 2), with
 * b(u) = beta |u|^{p-2} u. Those are potential operators and are solved by
 * projected Newton-CG on the energy. General handles are solved by Picard
 * freezing of the u-dependence with an inner projected extragradient loop;
 * a drift e(x, u) is handled by an outer Picard loop.
 *
 * Constraints on u (obstacles) are projected pointwise. The constraint
 * |D^s u| <= g on the whole box goes through solve_gradient_vi (ADMM).
 */

#include "fracvi/grid.hpp"
#include "fracvi/spaces.hpp"
#include "fracvi/spectral.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fracvi {

using Vec3 = std::array<double, 3>;

/// alpha(x)|xi|^{p-2} xi with alpha(x) >= alpha_* > 0 on the whole box.
struct PLaplace {
    ScalarField alpha;
};

/// A(x) xi with A symmetric; p = 2 only. entries[j][k] holds A_jk.
struct LinearMatrix {
    std::vector<std::vector<ScalarField>> entries;
    double ellipticity = 0.0;
};

/// Caller-supplied a(x, r, xi) and b(x, r). No convergence guarantee.
struct GeneralHandles {
    std::function<Vec3(const Point& x, double r, const Vec3& xi)> a;
    std::function<double(const Point& x, double r)> b;
    /// alpha_p of the frozen flux when known; zero otherwise.
    double monotonicity = 0.0;
};

using PrincipalPart = std::variant<PLaplace, LinearMatrix, GeneralHandles>;

/// e(x, r), Lipschitz in r with constant `lipschitz`, e(x, 0) = 0.
struct Drift {
    std::function<Vec3(const Point& x, double r)> e;
    double lipschitz = 0.0;
};

/// Structural constants of the growth and coercivity hypotheses.
struct StructuralCertificate {
    double alpha = 0.0;
    double beta = 0.0;
    double c1 = 0.0, c1_prime = 0.0, c2 = 0.0, c2_prime = 0.0;
    double q1 = 0.0, q2 = 0.0, q3 = 0.0;
};

struct Coefficients {
    double p = 2.0;
    PrincipalPart principal;
    /// Strength of b(r) = beta |r|^{p-2} r for the built-in principal parts.
    double beta = 0.0;
    std::optional<Drift> drift;
    std::optional<StructuralCertificate> certificate;

    /// p-Laplacian with constant weight alpha.
    static Coefficients p_laplace(const TorusGrid& grid, double p, double alpha = 1.0, double beta = 0.0);

    bool is_potential() const noexcept;
    /// alpha_* of the built-in principal parts (min of the weight, or the
    /// matrix ellipticity); the declared value for handles.
    double coercivity() const;
    /// Constant alpha_p in (a(xi)-a(eta)).(xi-eta) >= alpha_p |xi-eta|^p
    /// (p >= 2) or its 1 < p < 2 analogue: alpha_* 2^{2-p} or alpha_* (p-1).
    double monotonicity_constant() const;
    /// Throws std::invalid_argument on a violated hypothesis.
    void validate(const TorusGrid& grid, FracOrder s) const;
};

struct Unconstrained {};
struct ObstacleLower {
    ScalarField psi;
};
struct ObstacleUpper {
    ScalarField phi;
};
struct GradientBound {
    ScalarField g;
    double nu = 0.0;
};

using ConstraintSet = std::variant<Unconstrained, ObstacleLower, ObstacleUpper, GradientBound>;

/// Pointwise projection onto an obstacle set (identity otherwise); values
/// off the mask are set to zero.
ScalarField project(const ScalarField& u, const ConstraintSet& K, const DomainMask& mask);

struct SolverConfig {
    double tol = 1e-8;
    int max_iters = 50000;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    /// ADMM penalty and residual-balancing band: rho is rescaled by
    /// rho_scale whenever one residual exceeds rho_band times the other.
    double rho = 1.0;
    double rho_band = 10.0;
    double rho_scale = 2.0;
    /// Picard damping.
    double omega = 0.7;
    int picard_max = 500;
    std::uint64_t seed = 0;
    /// Starting point; projected onto K before use. Defaults to P_K(0).
    std::optional<ScalarField> initial;

    void validate() const;
};

struct KktResiduals {
    double primal = 0.0;
    double multiplier = 0.0;
    double complementarity = 0.0;
    double max() const noexcept;
};

struct SolveReport {
    explicit SolveReport(ScalarField u) : solution(std::move(u)) {}

    ScalarField solution;
    double s = 0.0;
    int iterations = 0;
    std::vector<double> energy_trace;
    /// Final stationarity measure ||u - P_K(u - grad)||_2 (ADMM: primal residual).
    double residual = 0.0;
    KktResiduals kkt;
    bool converged = false;
    double wall_time = 0.0;
    std::string method;
    std::string message;
    /// ADMM state: split variable z ~ D^s u and multiplier y.
    std::optional<VectorField> split;
    std::optional<VectorField> multiplier;
    double rho = 0.0;
};

/// Flux a(x, u, xi) (+ e(x, u)) at every node.
VectorField flux(const ScalarField& u, const VectorField& xi, const Coefficients& coeffs);

/// mask (A_s(u) - F).
ScalarField operator_residual(const ScalarField& u, const Coefficients& coeffs, const DualDatum& F, FracOrder s,
                              const DomainMask& mask);

/// int alpha|D^s u|^p/p + int beta|u|^p/p - <F, u>; potential parts only.
double energy(const ScalarField& u, const Coefficients& coeffs, const DualDatum& F, FracOrder s,
              const DomainMask& mask);
/// mask (-D^s.(alpha|D^s u|^{p-2} D^s u - f) + beta|u|^{p-2}u - f0).
ScalarField energy_gradient(const ScalarField& u, const Coefficients& coeffs, const DualDatum& F, FracOrder s,
                            const DomainMask& mask);

/// K must be unconstrained or an obstacle set.
SolveReport solve_vi(const Coefficients& coeffs, const DualDatum& F, const ConstraintSet& K, FracOrder s,
                     const DomainMask& mask, const SolverConfig& config = {});

/// K = {|D^s u| <= g on the box}, g >= nu > 0.
SolveReport solve_gradient_vi(const Coefficients& coeffs, const DualDatum& F, const ScalarField& g, double nu,
                              FracOrder s, const DomainMask& mask, const SolverConfig& config = {});

/// Obstacles: (||(u-psi)^-||_inf, ||lambda^-||_inf, |<lambda, u-psi>|) with
/// lambda = mask(A_s(u) - F), each divided by max(1, ||lambda||_inf) or
/// max(1, ||psi||_inf). Gradient bound: (||(|D^s u|-g)^+||_inf, stationarity
/// residual of the ADMM multiplier, h^d sum mu^+(g-|z|)).
KktResiduals kkt_residuals(const SolveReport& report, const Coefficients& coeffs, const DualDatum& F,
                           const ConstraintSet& K, FracOrder s, const DomainMask& mask);

struct HolderRecord {
    double lhs = 0.0;
    double rhs = 0.0;
    double dual_norm = 0.0;
    bool holds = false;
    bool solves_converged = false;
};

/// Solves with F1 and F2 and compares ||D^s(u1-u2)||_p with the continuity
/// bound of the solution map, using dual_norm_upper for every dual norm.
/// For 1 < p < 2 the bound is
/// 2^{(p-1)(2-p)/p} alpha_p^{(3-p)/(1-p)} ||F1-F2|| (||F1||^{1/(p-1)} + ||F2||^{1/(p-1)})^{2-p}.
HolderRecord holder_modulus_check(const Coefficients& coeffs, const DualDatum& F1, const DualDatum& F2,
                                  const ConstraintSet& K, FracOrder s, const DomainMask& mask,
                                  const SolverConfig& config = {});

}  // namespace fracvi
