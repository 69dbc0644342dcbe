#pragma once

/**
 * @file qvi.hpp
 * @brief Quasi-variational inequalities by damped Picard iteration over the
 * solution map: an implicit obstacle produced by an auxiliary (t,p)-Laplacian
 * equation, and a gradient bound that depends on u.
 *
 * Existence of the fixed points comes from a compactness argument, not a
 * contraction, so a Picard run that does not settle is a legitimate outcome
 * and is reported as such.
 */

#include "fracvi/stability.hpp"
#include "fracvi/vi_solver.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fracvi {

/// Source T(u, D^s u) of the auxiliary equation with a declared bound
/// ||T(.)||_{p'} <= M, checked at every Picard step.
struct SourceOperator {
    std::function<ScalarField(const ScalarField& u, const VectorField& du)> apply;
    double bound = 0.0;
    std::string name;

    /// T(u) = (u ^ k) v -k with k >= 0; M = ||k||_{p'}.
    static SourceOperator truncation(ScalarField k, double p);
    /// T(u)(x) = h^d sum_y tau(x, y, u(y)).
    static SourceOperator uryson(std::function<double(const Point& x, const Point& y, double r)> tau, double bound);
    static SourceOperator custom(std::function<ScalarField(const ScalarField&, const VectorField&)> fn, double bound,
                                 std::string name = "custom");
};

/// Bound field G(u) with nu <= G(u) <= cap, checked at every Picard step.
struct BoundOperator {
    std::function<ScalarField(const ScalarField& u)> apply;
    double nu = 0.0;
    double cap = 0.0;
    std::string name;

    static BoundOperator constant(ScalarField g);
    /// G(u)(x) = bound(x, w_u(x)) with w_u(x) = h^d sum_{y in Omega} theta(x, y) u(y).
    static BoundOperator integral(std::function<double(const Point& x, const Point& y)> theta,
                                  std::function<double(const Point& x, double w)> bound, const DomainMask& mask,
                                  double nu, double cap);
};

struct ObstacleQviSpec {
    Coefficients coeffs;
    double s = 0.5;
    double t = 0.5;
    DualDatum F;
    SourceOperator T;
    DomainMask mask;

    void validate() const;
};

struct GradientQviSpec {
    Coefficients coeffs;
    double s = 0.5;
    DualDatum F;
    BoundOperator G;
    DomainMask mask;

    void validate() const;
};

struct QviConfig {
    double tol = 1e-8;
    double omega = 0.7;
    int picard_cap = 500;
    /// Inner VI solves; tighter than tol so the Picard residual is not
    /// dominated by inner error.
    SolverConfig inner = [] {
        SolverConfig c;
        c.tol = 1e-10;
        return c;
    }();
    std::optional<ScalarField> initial;

    void validate() const;
};

struct InnerSummary {
    int iterations = 0;
    bool converged = false;
};

struct QviReport {
    explicit QviReport(ScalarField u) : solution(std::move(u)) {}

    ScalarField solution;
    int iterations = 0;
    /// lambda_norm(u^{k+1} - u^k, s, p) per Picard step.
    std::vector<double> residuals;
    std::vector<InnerSummary> inner;
    bool converged = false;
    std::string message;
    /// Obstacle mode: a-priori radius R = M^{1/(p-1)} and the largest
    /// lambda_norm(Psi(u^k), t, p) observed.
    double radius = 0.0;
    double constant = 1.0;
    double max_obstacle_norm = 0.0;
    /// Last obstacle Psi(u) or bound G(u).
    std::optional<ScalarField> constraint;
};

struct AuxiliaryResult {
    ScalarField psi;
    /// lambda_norm(psi, t, p) and the a-priori radius (M/C)^{1/(p-1)}. With M
    /// measured in L^{p'} the pairing <T, psi> <= M ||psi||_p <= M ||psi||_Lambda
    /// gives C = 1 exactly; the constant is reported, not tuned.
    double norm = 0.0;
    double radius = 0.0;
    double constant = 1.0;
    double source_norm = 0.0;
    bool converged = false;
};

/// Solves -D^t.(|D^t psi|^{p-2} D^t psi) + |psi|^{p-2} psi = T(u, D^s u) on the mask.
AuxiliaryResult auxiliary_obstacle(const ScalarField& u, const ObstacleQviSpec& spec, const SolverConfig& config = {});

QviReport obstacle_qvi_solve(const ObstacleQviSpec& spec, const QviConfig& config = {});
QviReport gradient_qvi_solve(const GradientQviSpec& spec, const QviConfig& config = {});

/// lambda_norm(u - S(u), s, p) for one undamped application S of the map.
double qvi_residual(const ScalarField& u, const ObstacleQviSpec& spec, const QviConfig& config = {});
double qvi_residual(const ScalarField& u, const GradientQviSpec& spec, const QviConfig& config = {});

/// Obstacle QVI solved at every order of `orders` (each must not exceed
/// base.t) and compared with the solution at sigma; columns as sweep_orders.
SweepReport qvi_sweep(const ObstacleQviSpec& base, double sigma, const std::vector<double>& orders,
                      const QviConfig& config = {}, std::uint64_t seed = 0);

}  // namespace fracvi
