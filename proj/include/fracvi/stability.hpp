#pragma once

/**
 * @file stability.hpp
 * @brief Order sweeps s -> sigma of VI solutions and the recovery sequences
 * for obstacle and gradient constraints.
 *
 * The harness measures strong convergence of (u_s, D^s u_s) to
 * (u_sigma, D^sigma u_sigma) and weak convergence of D^s u_s against a fixed
 * battery of band-limited test fields. It certifies recovery (the M1 half of
 * Mosco convergence) and limit consistency only; the weak-closedness half
 * quantifies over all weakly convergent sequences and no finite run checks it.
 */

#include "fracvi/vi_solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fracvi {

enum class ConstraintRule { fixed, obstacle_translated, gradient_riesz_lifted };
enum class ObstacleRecovery { constant, mollified };

struct SweepSpec {
    Coefficients coeffs;
    DualDatum F;
    DomainMask mask;
    double sigma = 0.0;
    std::vector<double> orders;
    ConstraintRule rule = ConstraintRule::fixed;
    /// Constraint at order sigma; the rule derives the order-s sets from it.
    ConstraintSet constraint = Unconstrained{};
    ObstacleRecovery recovery = ObstacleRecovery::constant;
    /// Seed of the weak-pairing battery.
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr int kWeakBatterySize = 8;

struct SweepRow {
    double s = 0.0;
    double err_u = 0.0;
    double err_grad = 0.0;
    std::vector<double> weak;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

struct SweepReport {
    double sigma = 0.0;
    double p = 2.0;
    double solver_tol = 0.0;
    /// Ordered by |s - sigma| descending.
    std::vector<SweepRow> rows;
    ScalarField sigma_solution;
    bool sigma_converged = false;

    static std::string csv_header(int battery = kWeakBatterySize);
    std::string csv() const;
};

/// J unit-L^2 vector fields with Fourier modes |k_j| <= 3, from a fixed seed.
std::vector<VectorField> weak_battery(const TorusGrid& grid, std::uint64_t seed, int count = kWeakBatterySize);

SweepReport sweep_orders(const SweepSpec& spec, const SolverConfig& config = {});

struct ObstacleRecoveryResult {
    ScalarField psi;
    /// (||psi_s - psi_sigma||_p, ||D^s psi_s - D^sigma psi_sigma||_p)
    double err_value = 0.0;
    double err_grad = 0.0;
};

/// constant: psi_s = psi_sigma. mollified: keep the modes |k_j| <= 1/|s - sigma|
/// of psi_sigma, then mask (psi_sigma itself at s = sigma).
ObstacleRecoveryResult obstacle_recovery_sequence(const ScalarField& psi_sigma, double sigma, double s,
                                                  ObstacleRecovery mode, const DomainMask& mask, double p);

/// g_s = I_{sigma-s} g with the positive-kernel potential, clipped at 0.
ScalarField gradient_recovery_bound(const ScalarField& g, double sigma, double s);

struct Verdict {
    bool ok = false;
    std::string summary;
};

/// Strong-error columns non-increasing over the last 4 rows, final row and
/// final weak pairings at most tol_factor * solver tol.
Verdict convergence_verdict(const SweepReport& report, double tol_factor = 10.0);

/// sigma -/+ 2^{-i}, i = first..last, keeping the orders inside [0, 1].
std::vector<double> dyadic_orders(double sigma, int first, int last, bool from_below);

}  // namespace fracvi
