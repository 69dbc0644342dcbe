#include "fracvi/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>

namespace fracvi {

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

}  // namespace

FftPlan::FftPlan(int dim, int points_per_axis)
{
    int n[3] = {points_per_axis, points_per_axis, points_per_axis};
    size_ = 1;
    for (int j = 0; j < dim; ++j)
        size_ *= static_cast<std::size_t>(points_per_axis);

    // Planning with FFTW_ESTIMATE does not touch the buffers.
    auto* in = fftw_alloc_complex(size_);
    auto* out = fftw_alloc_complex(size_);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft(dim, n, in, out, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft(dim, n, in, out, FFTW_BACKWARD, flags);
    fftw_free(in);
    fftw_free(out);
    if (forward_ == nullptr || backward_ == nullptr)
        throw std::runtime_error("FFTW planning failed");
}

FftPlan::~FftPlan()
{
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_));
    fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

std::shared_ptr<const FftPlan> FftPlan::for_grid(const TorusGrid& grid)
{
    // The mutex must outlive the cache, whose destructor locks it.
    std::mutex& m = planner_mutex();
    static std::map<std::pair<int, int>, std::shared_ptr<const FftPlan>> cache;
    std::lock_guard<std::mutex> lock(m);
    const auto key = std::make_pair(grid.dim(), grid.points_per_axis());
    auto it = cache.find(key);
    if (it != cache.end())
        return it->second;
    auto plan = std::make_shared<const FftPlan>(grid.dim(), grid.points_per_axis());
    cache.emplace(key, plan);
    return plan;
}

Spectrum FftPlan::forward(std::span<const double> values) const
{
    if (values.size() != size_)
        throw std::invalid_argument("fft: size mismatch");
    Spectrum in(values.begin(), values.end());
    Spectrum out(size_);
    fftw_execute_dft(static_cast<fftw_plan>(forward_), reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

Spectrum FftPlan::inverse(Spectrum spectrum) const
{
    if (spectrum.size() != size_)
        throw std::invalid_argument("fft: size mismatch");
    Spectrum out(size_);
    fftw_execute_dft(static_cast<fftw_plan>(backward_), reinterpret_cast<fftw_complex*>(spectrum.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& v : out)
        v *= scale;
    return out;
}

std::vector<double> real_part_checked(const Spectrum& values, double tolerance, const char* what)
{
    std::vector<double> out(values.size());
    double imag2 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = values[i].real();
        imag2 += values[i].imag() * values[i].imag();
    }
    const double imag_rms = std::sqrt(imag2 / static_cast<double>(values.size()));
    if (imag_rms > tolerance)
        throw std::logic_error(std::string(what) + ": imaginary residue " + std::to_string(imag_rms) +
                               " exceeds the real-output tolerance");
    return out;
}

}  // namespace fracvi
