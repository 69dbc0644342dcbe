#pragma once

// Matrix-free Krylov helpers on flat arrays.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fracvi {

using Vec = std::vector<double>;
using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite
/// map. `x` holds the initial guess and receives the solution. An empty
/// preconditioner means the identity.
CgResult conjugate_gradient(const LinearMap& apply, std::span<const double> rhs, std::span<double> x,
                            const LinearMap& precondition, double rel_tol, int max_iters);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += a x
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace fracvi
