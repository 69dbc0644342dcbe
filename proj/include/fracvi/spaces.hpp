#pragma once

/**
 * @file spaces.hpp
 * @brief Lambda^{s,p} norms, dual data F = f0 - D^s . f, and computable
 * forms of the Poincare, Gagliardo-Nirenberg and embedding inequalities.
 */

#include "fracvi/grid.hpp"
#include "fracvi/spectral.hpp"

#include <string>

namespace fracvi {

/// (||u||_p^p + ||D^s u||_p^p)^{1/p}
double lambda_norm(const ScalarField& u, FracOrder s, double p);

/// The functional <F, v> = int f0 v + int f . D^s v.
class DualDatum {
public:
    DualDatum(ScalarField f0, VectorField f);
    static DualDatum zero(const TorusGrid& grid);
    static DualDatum from_f0(ScalarField f0);
    static DualDatum from_flux(VectorField f);

    const TorusGrid& grid() const noexcept { return f0_.grid(); }
    const ScalarField& f0() const noexcept { return f0_; }
    const VectorField& f() const noexcept { return f_; }
    bool f0_is_zero() const noexcept;
    bool flux_is_zero() const noexcept;

    /// Throws unless f0 vanishes off the mask.
    void require_support(const DomainMask& mask) const;

    DualDatum& operator-=(const DualDatum& other);

private:
    ScalarField f0_;
    VectorField f_;
};

DualDatum operator-(DualDatum a, const DualDatum& b);

/// <F, v>; v must vanish off the mask.
double dual_apply(const DualDatum& F, const ScalarField& v, FracOrder s, const DomainMask& mask);

struct DualNormBound {
    double value = 0.0;
    /// True when `value` is the dual norm itself rather than an upper bound.
    bool exact = false;
    /// Factor C with ||v||_{L^p(Omega)} <= C ||D^s v||_p used for the f0 part,
    /// or zero when it was not needed.
    double poincare_factor = 0.0;
};

/**
 * Upper bound for the norm of F dual to v -> ||D^s v||_p on functions
 * supported in the mask.
 *
 * f = 0 on the full box with p = 2 gives the exact diagonal value. Otherwise
 * the f0 part is bounded by the smaller of ||f0||_{p'} C and ||g||_{p'},
 * where f0 = -D^s . g with g = D^s (-Delta)^{-s} f0. For p = 2 the factor C
 * is the best constant from poincare_best_constant; for p != 2 it is that
 * constant times the discrete norm-equivalence factor between L^2 and L^p,
 * which is certified but grows with the grid. Returns +inf when f0 has
 * content on modes that D^s annihilates and no Poincare bound is available.
 */
DualNormBound dual_norm_upper(const DualDatum& F, FracOrder s, double p, const DomainMask& mask);

struct PoincareReport {
    double s = 0.0;
    double lambda = 0.0;
    double c = 0.0;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;

    static std::string csv_header() { return "s,lambda,c,iters,residual,converged"; }
    std::string csv_row() const;
};

struct PoincareOptions {
    double tol = 1e-10;
    int max_iters = 10000;
};

/// Smallest eigenvalue of w -> mask (-Delta)^s mask on functions supported in
/// the mask, by preconditioned inverse iteration; c = 1/sqrt(lambda).
PoincareReport poincare_best_constant(const DomainMask& mask, FracOrder s, const PoincareOptions& options = {});

/// ||D^s u||_p / (||D^r u||_p^{(t-s)/(t-r)} ||D^t u||_p^{(s-r)/(t-r)})
double gn_residual(const ScalarField& u, double r, double s, double t, double p);

/// ||D^t u||_p / ||D^s u||_p for 0 < t < s <= 1.
double embedding_probe(const ScalarField& u, double s, double t, double p);

struct SobolevExponent {
    enum class Kind { finite, any_finite, infinite };
    Kind kind = Kind::finite;
    /// d p / (d - s p) when kind == finite.
    double value = 0.0;
};

SobolevExponent sobolev_exponent(double p, double s, int d);

/// Hoelder conjugate p/(p-1).
double conjugate_exponent(double p);

}  // namespace fracvi
