#include "fracvi/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace fracvi {

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a)
{
    return std::sqrt(dot(a, a));
}

void axpy(double a, std::span<const double> x, std::span<double> y)
{
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += a * x[i];
}

CgResult conjugate_gradient(const LinearMap& apply, std::span<const double> rhs, std::span<double> x,
                            const LinearMap& precondition, double rel_tol, int max_iters)
{
    const std::size_t n = rhs.size();
    if (x.size() != n)
        throw std::invalid_argument("conjugate_gradient: size mismatch");

    CgResult result;
    const double bnorm = norm2(rhs);
    if (bnorm == 0.0) {
        for (double& v : x)
            v = 0.0;
        result.converged = true;
        return result;
    }

    Vec r(n), z(n), p(n), ap(n);
    apply(x, ap);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = rhs[i] - ap[i];
    double rnorm = norm2(r);
    if (rnorm <= rel_tol * bnorm) {
        result.relative_residual = rnorm / bnorm;
        result.converged = true;
        return result;
    }

    auto prec = [&](std::span<const double> in, std::span<double> out) {
        if (precondition)
            precondition(in, out);
        else
            std::copy(in.begin(), in.end(), out.begin());
    };

    prec(r, z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iters; ++it) {
        apply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            // Breakdown on a semidefinite map: the current iterate is the best we have.
            result.iterations = it;
            result.relative_residual = rnorm / bnorm;
            return result;
        }
        const double alpha = rz / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        rnorm = norm2(r);
        result.iterations = it;
        result.relative_residual = rnorm / bnorm;
        if (rnorm <= rel_tol * bnorm) {
            result.converged = true;
            return result;
        }
        prec(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i)
            p[i] = z[i] + beta * p[i];
    }
    return result;
}

}  // namespace fracvi
