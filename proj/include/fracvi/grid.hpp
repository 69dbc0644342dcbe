#pragma once

/**
 * @file grid.hpp
 * @brief Periodic computational box, grid functions and domain masks.
 *
 * The whole space is modelled by the periodic box [-L, L)^d sampled at
 * N nodes per axis (node-centred, x_i = -L + i h with h = 2L/N). Every
 * field is stored as a flat row-major array of length N^d; axis 0 is the
 * slowest index. Quadrature norms and inner products carry the cell
 * volume h^d so that they approximate integrals over the box.
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracvi {

/// Node coordinates; unused trailing components are zero.
using Point = std::array<double, 3>;

class TorusGrid {
public:
    TorusGrid(int dim, double half_length, int points_per_axis);

    int dim() const noexcept { return dim_; }
    double half_length() const noexcept { return half_length_; }
    int points_per_axis() const noexcept { return n_; }
    double spacing() const noexcept { return spacing_; }
    std::size_t size() const noexcept { return size_; }
    /// h^d, the quadrature weight of one node.
    double cell_volume() const noexcept { return cell_volume_; }
    /// Side length 2L of the box.
    double box_length() const noexcept { return 2.0 * half_length_; }

    /// Per-axis index of a flat position.
    std::array<int, 3> multi_index(std::size_t flat) const noexcept;
    std::size_t flat_index(const std::array<int, 3>& idx) const noexcept;

    double coordinate(int axis_index) const noexcept { return -half_length_ + spacing_ * axis_index; }
    Point node(std::size_t flat) const noexcept;

    /// Signed frequency k in {-N/2, ..., N/2-1} of an FFT axis position.
    int frequency_index(int i) const noexcept { return i < n_ / 2 ? i : i - n_; }
    /// Angular frequency pi k / L.
    double angular_frequency(int i) const noexcept;

    bool operator==(const TorusGrid& other) const noexcept;
    bool operator!=(const TorusGrid& other) const noexcept { return !(*this == other); }

private:
    int dim_;
    double half_length_;
    int n_;
    double spacing_;
    std::size_t size_;
    double cell_volume_;
};

TorusGrid build_grid(int dim, double half_length, int points_per_axis);

/// Real grid function. Entries are finite.
class ScalarField {
public:
    explicit ScalarField(const TorusGrid& grid);
    ScalarField(const TorusGrid& grid, std::vector<double> values);

    const TorusGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& data() noexcept { return values_; }
    const std::vector<double>& data() const noexcept { return values_; }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    ScalarField& operator+=(const ScalarField& other);
    ScalarField& operator-=(const ScalarField& other);
    ScalarField& operator*=(double c) noexcept;

    /// Throws if any entry is NaN or infinite.
    void check_finite(const char* what) const;

private:
    TorusGrid grid_;
    std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double c, ScalarField a);

/// d real components on a common grid.
class VectorField {
public:
    explicit VectorField(const TorusGrid& grid);
    VectorField(const TorusGrid& grid, std::vector<std::vector<double>> components);

    const TorusGrid& grid() const noexcept { return grid_; }
    int dim() const noexcept { return static_cast<int>(components_.size()); }
    std::size_t size() const noexcept { return grid_.size(); }

    std::span<double> component(int j) noexcept { return components_[static_cast<std::size_t>(j)]; }
    std::span<const double> component(int j) const noexcept { return components_[static_cast<std::size_t>(j)]; }
    std::vector<double>& data(int j) noexcept { return components_[static_cast<std::size_t>(j)]; }
    const std::vector<double>& data(int j) const noexcept { return components_[static_cast<std::size_t>(j)]; }

    /// Euclidean magnitude at node i.
    double magnitude(std::size_t i) const noexcept;

    VectorField& operator+=(const VectorField& other);
    VectorField& operator-=(const VectorField& other);
    VectorField& operator*=(double c) noexcept;

    void check_finite(const char* what) const;

private:
    TorusGrid grid_;
    std::vector<std::vector<double>> components_;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double c, VectorField a);

/// Omega as a set of grid nodes. Nonempty; `is_strict()` tells whether
/// some node of the box lies outside.
class DomainMask {
public:
    DomainMask(const TorusGrid& grid, std::vector<std::uint8_t> inside);

    /// Every node of the box.
    static DomainMask full(const TorusGrid& grid);
    /// Nodes with |x_j - c_j| < r_j on every axis (open box).
    static DomainMask box(const TorusGrid& grid, const Point& center, const Point& half_widths);
    /// Nodes with lower < x < upper (d = 1).
    static DomainMask interval(const TorusGrid& grid, double lower, double upper);
    /// Nodes with |x - c| < r.
    static DomainMask ball(const TorusGrid& grid, const Point& center, double radius);

    const TorusGrid& grid() const noexcept { return grid_; }
    bool inside(std::size_t i) const noexcept { return inside_[i] != 0; }
    std::size_t count() const noexcept { return count_; }
    bool is_strict() const noexcept { return count_ < grid_.size(); }
    /// Throws unless the complement within the box is nonempty.
    void require_strict(const char* what) const;

    /// Measure |Omega_h| = count * h^d.
    double measure() const noexcept { return static_cast<double>(count_) * grid_.cell_volume(); }

private:
    TorusGrid grid_;
    std::vector<std::uint8_t> inside_;
    std::size_t count_ = 0;
};

/// Samples f at every node. Non-finite samples abort with the node location.
template <class Fn>
ScalarField sample(const TorusGrid& grid, Fn&& f)
{
    ScalarField out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point x = grid.node(i);
        const double v = f(x);
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "sample: non-finite value at node " << i << " (x = " << x[0];
            for (int j = 1; j < grid.dim(); ++j)
                msg << ", " << x[static_cast<std::size_t>(j)];
            msg << ")";
            throw std::domain_error(msg.str());
        }
        out[i] = v;
    }
    return out;
}

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

/// Quadrature norm (sum |f_i|^p h^d)^{1/p}; p = inf gives the max norm.
double lp_norm(const ScalarField& f, double p);
/// Same with the pointwise Euclidean magnitude.
double lp_norm_vec(const VectorField& v, double p);
/// h^d-weighted dot product.
double inner(const ScalarField& f, const ScalarField& g);
double inner(const VectorField& f, const VectorField& g);
double inner(std::span<const double> f, std::span<const double> g, double cell_volume);

ScalarField apply_mask(const ScalarField& field, const DomainMask& mask);
void apply_mask_inplace(ScalarField& field, const DomainMask& mask);

/// Pointwise magnitude |V|.
ScalarField magnitude(const VectorField& v);

/// Mean value over the box.
double mean(const ScalarField& f);

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what);

/// CSV with header "index,x1[,x2[,x3]],value" in node order.
void write_field_csv(std::ostream& os, const ScalarField& field);
void write_field_csv(const std::string& path, const ScalarField& field);
/// Reads a field written by write_field_csv back onto `grid`.
ScalarField read_field_csv(const std::string& path, const TorusGrid& grid);

/// Shortest round-trip decimal representation used by every text writer.
std::string format_double(double v);

}  // namespace fracvi
