#include "fracvi/grid.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numbers>

namespace fracvi {

TorusGrid::TorusGrid(int dim, double half_length, int points_per_axis)
    : dim_(dim), half_length_(half_length), n_(points_per_axis)
{
    if (dim < 1 || dim > 3)
        throw std::invalid_argument("grid: dimension must be 1, 2 or 3");
    if (!(half_length > 0.0) || !std::isfinite(half_length))
        throw std::invalid_argument("grid: half length L must be positive");
    if (points_per_axis % 2 != 0)
        throw std::invalid_argument("grid: N must be even");
    if (points_per_axis < 8)
        throw std::invalid_argument("grid: N must be at least 8");

    std::size_t total = 1;
    for (int j = 0; j < dim; ++j) {
        if (total > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(n_))
            throw std::invalid_argument("grid: N^d overflows the address space");
        total *= static_cast<std::size_t>(n_);
    }
    size_ = total;
    spacing_ = 2.0 * half_length_ / n_;
    cell_volume_ = std::pow(spacing_, dim_);
}

std::array<int, 3> TorusGrid::multi_index(std::size_t flat) const noexcept
{
    std::array<int, 3> idx{0, 0, 0};
    const auto n = static_cast<std::size_t>(n_);
    for (int j = dim_ - 1; j >= 0; --j) {
        idx[static_cast<std::size_t>(j)] = static_cast<int>(flat % n);
        flat /= n;
    }
    return idx;
}

std::size_t TorusGrid::flat_index(const std::array<int, 3>& idx) const noexcept
{
    std::size_t flat = 0;
    for (int j = 0; j < dim_; ++j) {
        const int i = ((idx[static_cast<std::size_t>(j)] % n_) + n_) % n_;
        flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
    }
    return flat;
}

Point TorusGrid::node(std::size_t flat) const noexcept
{
    const auto idx = multi_index(flat);
    Point x{0.0, 0.0, 0.0};
    for (int j = 0; j < dim_; ++j)
        x[static_cast<std::size_t>(j)] = coordinate(idx[static_cast<std::size_t>(j)]);
    return x;
}

double TorusGrid::angular_frequency(int i) const noexcept
{
    return std::numbers::pi * frequency_index(i) / half_length_;
}

bool TorusGrid::operator==(const TorusGrid& other) const noexcept
{
    return dim_ == other.dim_ && n_ == other.n_ && half_length_ == other.half_length_;
}

TorusGrid build_grid(int dim, double half_length, int points_per_axis)
{
    return TorusGrid(dim, half_length, points_per_axis);
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what)
{
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(const TorusGrid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

ScalarField::ScalarField(const TorusGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values))
{
    if (values_.size() != grid_.size())
        throw std::invalid_argument("ScalarField: value count does not match grid");
    check_finite("ScalarField");
}

void ScalarField::check_finite(const char* what) const
{
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw std::domain_error(std::string(what) + ": non-finite entry at node " + std::to_string(i));
    }
}

ScalarField& ScalarField::operator+=(const ScalarField& other)
{
    require_same_grid(grid_, other.grid_, "ScalarField +=");
    for (std::size_t i = 0; i < values_.size(); ++i)
        values_[i] += other.values_[i];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other)
{
    require_same_grid(grid_, other.grid_, "ScalarField -=");
    for (std::size_t i = 0; i < values_.size(); ++i)
        values_[i] -= other.values_[i];
    return *this;
}

ScalarField& ScalarField::operator*=(double c) noexcept
{
    for (double& v : values_)
        v *= c;
    return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double c, ScalarField a) { return a *= c; }

// ---------------------------------------------------------------------------

VectorField::VectorField(const TorusGrid& grid)
    : grid_(grid), components_(static_cast<std::size_t>(grid.dim()), std::vector<double>(grid.size(), 0.0))
{
}

VectorField::VectorField(const TorusGrid& grid, std::vector<std::vector<double>> components)
    : grid_(grid), components_(std::move(components))
{
    if (static_cast<int>(components_.size()) != grid_.dim())
        throw std::invalid_argument("VectorField: component count must equal the grid dimension");
    for (const auto& c : components_) {
        if (c.size() != grid_.size())
            throw std::invalid_argument("VectorField: component length does not match grid");
    }
    check_finite("VectorField");
}

double VectorField::magnitude(std::size_t i) const noexcept
{
    double s = 0.0;
    for (const auto& c : components_)
        s += c[i] * c[i];
    return std::sqrt(s);
}

void VectorField::check_finite(const char* what) const
{
    for (std::size_t j = 0; j < components_.size(); ++j) {
        for (std::size_t i = 0; i < components_[j].size(); ++i) {
            if (!std::isfinite(components_[j][i]))
                throw std::domain_error(std::string(what) + ": non-finite entry in component " +
                                        std::to_string(j) + " at node " + std::to_string(i));
        }
    }
}

VectorField& VectorField::operator+=(const VectorField& other)
{
    require_same_grid(grid_, other.grid_, "VectorField +=");
    for (std::size_t j = 0; j < components_.size(); ++j)
        for (std::size_t i = 0; i < components_[j].size(); ++i)
            components_[j][i] += other.components_[j][i];
    return *this;
}

VectorField& VectorField::operator-=(const VectorField& other)
{
    require_same_grid(grid_, other.grid_, "VectorField -=");
    for (std::size_t j = 0; j < components_.size(); ++j)
        for (std::size_t i = 0; i < components_[j].size(); ++i)
            components_[j][i] -= other.components_[j][i];
    return *this;
}

VectorField& VectorField::operator*=(double c) noexcept
{
    for (auto& comp : components_)
        for (double& v : comp)
            v *= c;
    return *this;
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double c, VectorField a) { return a *= c; }

// ---------------------------------------------------------------------------

DomainMask::DomainMask(const TorusGrid& grid, std::vector<std::uint8_t> inside)
    : grid_(grid), inside_(std::move(inside))
{
    if (inside_.size() != grid_.size())
        throw std::invalid_argument("DomainMask: flag count does not match grid");
    count_ = static_cast<std::size_t>(std::count_if(inside_.begin(), inside_.end(), [](std::uint8_t b) { return b != 0; }));
    if (count_ == 0)
        throw std::invalid_argument("DomainMask: Omega contains no grid node");
}

DomainMask DomainMask::full(const TorusGrid& grid)
{
    return DomainMask(grid, std::vector<std::uint8_t>(grid.size(), 1));
}

DomainMask DomainMask::box(const TorusGrid& grid, const Point& center, const Point& half_widths)
{
    std::vector<std::uint8_t> flags(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point x = grid.node(i);
        bool in = true;
        for (int j = 0; j < grid.dim(); ++j) {
            const auto k = static_cast<std::size_t>(j);
            in = in && std::abs(x[k] - center[k]) < half_widths[k];
        }
        flags[i] = in ? 1 : 0;
    }
    return DomainMask(grid, std::move(flags));
}

DomainMask DomainMask::interval(const TorusGrid& grid, double lower, double upper)
{
    if (grid.dim() != 1)
        throw std::invalid_argument("DomainMask::interval: grid must be one-dimensional");
    if (!(lower < upper))
        throw std::invalid_argument("DomainMask::interval: lower must be below upper");
    std::vector<std::uint8_t> flags(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i)[0];
        flags[i] = (x > lower && x < upper) ? 1 : 0;
    }
    return DomainMask(grid, std::move(flags));
}

DomainMask DomainMask::ball(const TorusGrid& grid, const Point& center, double radius)
{
    std::vector<std::uint8_t> flags(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point x = grid.node(i);
        double r2 = 0.0;
        for (int j = 0; j < grid.dim(); ++j) {
            const auto k = static_cast<std::size_t>(j);
            r2 += (x[k] - center[k]) * (x[k] - center[k]);
        }
        flags[i] = r2 < radius * radius ? 1 : 0;
    }
    return DomainMask(grid, std::move(flags));
}

void DomainMask::require_strict(const char* what) const
{
    if (!is_strict())
        throw std::invalid_argument(std::string(what) + ": Omega must be strictly smaller than the box");
}

// ---------------------------------------------------------------------------

namespace {

double lp_accumulate(std::span<const double> magnitudes, double p, double cell_volume)
{
    if (!(p >= 1.0))
        throw std::invalid_argument("lp_norm: p must be at least 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : magnitudes)
            m = std::max(m, std::abs(v));
        return m;
    }
    // Scale by the max entry so large p does not overflow.
    double scale = 0.0;
    for (double v : magnitudes)
        scale = std::max(scale, std::abs(v));
    if (scale == 0.0)
        return 0.0;
    double s = 0.0;
    if (p == 2.0) {
        for (double v : magnitudes) {
            const double t = v / scale;
            s += t * t;
        }
        return scale * std::sqrt(s * cell_volume);
    }
    for (double v : magnitudes)
        s += std::pow(std::abs(v) / scale, p);
    return scale * std::pow(s * cell_volume, 1.0 / p);
}

}  // namespace

double lp_norm(const ScalarField& f, double p)
{
    return lp_accumulate(f.values(), p, f.grid().cell_volume());
}

double lp_norm_vec(const VectorField& v, double p)
{
    if (v.dim() == 1)
        return lp_accumulate(v.component(0), p, v.grid().cell_volume());
    std::vector<double> mags(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        mags[i] = v.magnitude(i);
    return lp_accumulate(mags, p, v.grid().cell_volume());
}

double inner(std::span<const double> f, std::span<const double> g, double cell_volume)
{
    if (f.size() != g.size())
        throw std::invalid_argument("inner: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        s += f[i] * g[i];
    return s * cell_volume;
}

double inner(const ScalarField& f, const ScalarField& g)
{
    require_same_grid(f.grid(), g.grid(), "inner");
    return inner(f.values(), g.values(), f.grid().cell_volume());
}

double inner(const VectorField& f, const VectorField& g)
{
    require_same_grid(f.grid(), g.grid(), "inner");
    double s = 0.0;
    for (int j = 0; j < f.dim(); ++j)
        s += inner(f.component(j), g.component(j), f.grid().cell_volume());
    return s;
}

ScalarField apply_mask(const ScalarField& field, const DomainMask& mask)
{
    ScalarField out = field;
    apply_mask_inplace(out, mask);
    return out;
}

void apply_mask_inplace(ScalarField& field, const DomainMask& mask)
{
    require_same_grid(field.grid(), mask.grid(), "apply_mask");
    for (std::size_t i = 0; i < field.size(); ++i)
        if (!mask.inside(i))
            field[i] = 0.0;
}

ScalarField magnitude(const VectorField& v)
{
    ScalarField out(v.grid());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = v.magnitude(i);
    return out;
}

double mean(const ScalarField& f)
{
    double s = 0.0;
    for (double v : f.values())
        s += v;
    return s / static_cast<double>(f.size());
}

// ---------------------------------------------------------------------------

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_field_csv(std::ostream& os, const ScalarField& field)
{
    const TorusGrid& g = field.grid();
    os << "index";
    for (int j = 0; j < g.dim(); ++j)
        os << ",x" << (j + 1);
    os << ",value\n";
    for (std::size_t i = 0; i < field.size(); ++i) {
        const Point x = g.node(i);
        os << i;
        for (int j = 0; j < g.dim(); ++j)
            os << ',' << format_double(x[static_cast<std::size_t>(j)]);
        os << ',' << format_double(field[i]) << '\n';
    }
}

void write_field_csv(const std::string& path, const ScalarField& field)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot write " + path);
    write_field_csv(os, field);
}

ScalarField read_field_csv(const std::string& path, const TorusGrid& grid)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(is, line);
    std::vector<double> values;
    values.reserve(grid.size());
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto pos = line.rfind(',');
        values.push_back(std::stod(line.substr(pos + 1)));
    }
    if (values.size() != grid.size())
        throw std::runtime_error(path + ": row count does not match grid");
    return ScalarField(grid, std::move(values));
}

}  // namespace fracvi
