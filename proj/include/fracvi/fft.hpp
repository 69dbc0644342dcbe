#pragma once

// Thin FFTW wrapper. Plans are created once per grid shape behind a mutex
// (the FFTW planner is not thread safe) and executed with the new-array
// interface, which is.

#include "fracvi/grid.hpp"

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace fracvi {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

class FftPlan {
public:
    /// Shared plan pair for the grid's (d, N) shape.
    static std::shared_ptr<const FftPlan> for_grid(const TorusGrid& grid);

    FftPlan(int dim, int points_per_axis);
    ~FftPlan();
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    std::size_t size() const noexcept { return size_; }

    /// Unnormalized forward transform of real data.
    Spectrum forward(std::span<const double> values) const;
    /// Normalized inverse transform (divides by N^d).
    Spectrum inverse(Spectrum spectrum) const;

private:
    std::size_t size_;
    void* forward_ = nullptr;
    void* backward_ = nullptr;
};

/// Real part of an inverse transform. Throws std::logic_error when the
/// imaginary residue exceeds `tolerance` in the root-mean-square sense,
/// which signals a multiplier without conjugate symmetry.
std::vector<double> real_part_checked(const Spectrum& values, double tolerance, const char* what);

}  // namespace fracvi
