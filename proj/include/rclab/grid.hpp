#pragma once

// Cell-centered tensor-product grids on rectangles [0,L_0]x...x[0,L_{d-1}]
// with homogeneous Neumann (zero normal flux) boundaries.
//
// Flattening is row-major with axis 0 slowest: flat index
//   c = sum_a i_a * stride_a,  stride_{d-1} = 1,  stride_a = stride_{a+1} * n_{a+1}.
// Snapshot files rely on this order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rclab/error.hpp"

namespace rclab {

inline constexpr std::size_t kMaxDim = 4;
inline constexpr std::size_t kMinCellsPerAxis = 3;

class TensorGrid {
public:
    TensorGrid(std::vector<std::size_t> cells, std::vector<double> lengths)
        : cells_(std::move(cells)), lengths_(std::move(lengths)) {
        if (cells_.empty() || cells_.size() > kMaxDim) {
            throw InvalidArgument("grid dimension must be in 1..4, got " + std::to_string(cells_.size()));
        }
        if (lengths_.size() != cells_.size()) {
            throw DimensionMismatch("grid: cells and lengths differ in length");
        }
        std::size_t total = 1;
        for (std::size_t a = 0; a < cells_.size(); ++a) {
            if (cells_[a] < kMinCellsPerAxis) {
                throw InvalidArgument("grid: axis " + std::to_string(a) + " needs at least 3 cells");
            }
            if (!(lengths_[a] > 0.0) || !std::isfinite(lengths_[a])) {
                throw InvalidArgument("grid: axis " + std::to_string(a) + " length must be positive and finite");
            }
            if (total > std::numeric_limits<std::size_t>::max() / cells_[a]) {
                throw InvalidArgument("grid: total cell count overflows");
            }
            total *= cells_[a];
        }
        size_ = total;
        spacing_.resize(cells_.size());
        strides_.resize(cells_.size());
        cell_volume_ = 1.0;
        for (std::size_t a = 0; a < cells_.size(); ++a) {
            spacing_[a] = lengths_[a] / static_cast<double>(cells_[a]);
            cell_volume_ *= spacing_[a];
        }
        std::size_t stride = 1;
        for (std::size_t a = cells_.size(); a-- > 0;) {
            strides_[a] = stride;
            stride *= cells_[a];
        }
    }

    /// `dim` axes with `n` cells each on [0, length]^dim.
    static TensorGrid uniform(std::size_t dim, std::size_t n, double length = 1.0) {
        return TensorGrid(std::vector<std::size_t>(dim, n), std::vector<double>(dim, length));
    }

    std::size_t dim() const noexcept { return cells_.size(); }
    std::size_t size() const noexcept { return size_; }
    std::size_t cells(std::size_t axis) const { return cells_.at(axis); }
    double length(std::size_t axis) const { return lengths_.at(axis); }
    double spacing(std::size_t axis) const { return spacing_.at(axis); }
    std::size_t stride(std::size_t axis) const { return strides_.at(axis); }
    const std::vector<std::size_t>& cell_counts() const noexcept { return cells_; }
    const std::vector<double>& lengths() const noexcept { return lengths_; }
    const std::vector<double>& spacings() const noexcept { return spacing_; }
    double cell_volume() const noexcept { return cell_volume_; }
    double measure() const noexcept { return cell_volume_ * static_cast<double>(size_); }

    double min_spacing() const { return *std::min_element(spacing_.begin(), spacing_.end()); }

    std::size_t coordinate(std::size_t flat, std::size_t axis) const {
        return (flat / strides_[axis]) % cells_[axis];
    }

    /// Cell-center coordinate along one axis.
    double center(std::size_t axis, std::size_t index) const {
        return (static_cast<double>(index) + 0.5) * spacing_[axis];
    }

    /// Cell-center point of a flat index, written into `out` (size dim()).
    void center_of(std::size_t flat, std::span<double> out) const {
        for (std::size_t a = 0; a < dim(); ++a) out[a] = center(a, coordinate(flat, a));
    }

    friend bool operator==(const TensorGrid& a, const TensorGrid& b) {
        return a.cells_ == b.cells_ && a.lengths_ == b.lengths_;
    }

private:
    std::vector<std::size_t> cells_;
    std::vector<double> lengths_;
    std::vector<double> spacing_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
    double cell_volume_ = 0.0;
};

using GridPtr = std::shared_ptr<const TensorGrid>;

inline GridPtr make_grid(TensorGrid grid) { return std::make_shared<const TensorGrid>(std::move(grid)); }

/// One value per cell, sampled at cell centers.
class ScalarField {
public:
    ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (!grid_) throw InvalidArgument("field: null grid");
        if (values_.size() != grid_->size()) {
            throw DimensionMismatch("field: " + std::to_string(values_.size()) + " values for a grid of " +
                                    std::to_string(grid_->size()) + " cells");
        }
    }

    ScalarField(GridPtr grid, double constant)
        : ScalarField(grid, std::vector<double>(grid ? grid->size() : 0, constant)) {}

    /// Samples `f(x)` at every cell center; `x` is a span of length dim.
    template <class F>
    static ScalarField sample(GridPtr grid, F&& f) {
        std::vector<double> values(grid->size());
        std::vector<double> x(grid->dim());
        for (std::size_t c = 0; c < values.size(); ++c) {
            grid->center_of(c, x);
            values[c] = f(std::span<const double>(x));
        }
        return ScalarField(std::move(grid), std::move(values));
    }

    const TensorGrid& grid() const noexcept { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    const std::vector<double>& storage() const noexcept { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
    }

    bool same_grid(const ScalarField& other) const { return grid_ == other.grid_ || *grid_ == *other.grid_; }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Fluxes on cell faces. Entry (axis, c) is the flux through the upper face of cell c
/// along `axis`, i.e. the face shared with c + e_axis. Boundary faces carry zero flux:
/// upper-boundary entries are held at zero and the lower boundary is implicit.
class FaceField {
public:
    explicit FaceField(GridPtr grid) : grid_(std::move(grid)) {
        if (!grid_) throw InvalidArgument("face field: null grid");
        flux_.assign(grid_->dim(), std::vector<double>(grid_->size(), 0.0));
    }

    const TensorGrid& grid() const noexcept { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }

    bool is_boundary_face(std::size_t axis, std::size_t cell) const {
        return grid_->coordinate(cell, axis) + 1 == grid_->cells(axis);
    }

    double get(std::size_t axis, std::size_t cell) const { return flux_.at(axis).at(cell); }

    void set(std::size_t axis, std::size_t cell, double value) {
        if (is_boundary_face(axis, cell)) {
            if (value != 0.0) throw InvalidArgument("face field: boundary faces carry zero flux");
            return;
        }
        flux_.at(axis).at(cell) = value;
    }

    std::span<const double> axis_values(std::size_t axis) const { return flux_.at(axis); }

    double max_abs() const {
        double m = 0.0;
        for (const auto& axis : flux_)
            for (double f : axis) m = std::max(m, std::abs(f));
        return m;
    }

private:
    template <class G>
    friend FaceField make_face_field(GridPtr grid, G&& per_face);

    GridPtr grid_;
    std::vector<std::vector<double>> flux_;
};

namespace detail {

/// Calls fn(first, stride, count) once for every grid line parallel to `axis`.
template <class Fn>
void for_each_line(const TensorGrid& g, std::size_t axis, Fn&& fn) {
    const std::size_t n = g.cells(axis);
    const std::size_t inner = g.stride(axis);
    const std::size_t outer = g.size() / (n * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        const std::size_t base = o * n * inner;
        for (std::size_t j = 0; j < inner; ++j) fn(base + j, inner, n);
    }
}

inline void require_finite(const ScalarField& f, const char* op) {
    if (!f.all_finite()) throw NonFiniteValue(std::string(op) + ": non-finite input");
}

inline void require_same_grid(const ScalarField& a, const ScalarField& b, const char* op) {
    if (!a.same_grid(b)) throw DimensionMismatch(std::string(op) + ": fields live on different grids");
}

/// out = Neumann Laplacian of `in` (ghost cells mirror the boundary cell).
inline void apply_laplacian(const TensorGrid& g, std::span<const double> in, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const double inv_h2 = 1.0 / (g.spacing(a) * g.spacing(a));
        for_each_line(g, a, [&](std::size_t first, std::size_t s, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t c = first + i * s;
                const double left = i > 0 ? in[c - s] : in[c];
                const double right = i + 1 < n ? in[c + s] : in[c];
                out[c] += ((right - in[c]) - (in[c] - left)) * inv_h2;
            }
        });
    }
}

/// Neumaier-compensated sum.
inline double compensated_sum(std::span<const double> xs) {
    double sum = 0.0;
    double comp = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

}  // namespace detail

/// Builds a face field from per_face(axis, lower_cell, upper_cell) on interior faces.
template <class G>
FaceField make_face_field(GridPtr grid, G&& per_face) {
    FaceField out(grid);
    const TensorGrid& g = *grid;
    for (std::size_t a = 0; a < g.dim(); ++a) {
        auto& flux = out.flux_[a];
        detail::for_each_line(g, a, [&](std::size_t first, std::size_t s, std::size_t n) {
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const std::size_t c = first + i * s;
                flux[c] = per_face(a, c, c + s);
            }
        });
    }
    return out;
}

/// Midpoint quadrature: cell_volume * sum of values.
inline double integrate(const ScalarField& f) {
    return f.grid().cell_volume() * detail::compensated_sum(f.values());
}

inline ScalarField laplacian_neumann(const ScalarField& f) {
    detail::require_finite(f, "laplacian_neumann");
    std::vector<double> out(f.size());
    detail::apply_laplacian(f.grid(), f.values(), out);
    return ScalarField(f.grid_ptr(), std::move(out));
}

/// Face-normal differences (f_{i+1} - f_i) / h on interior faces; zero on boundary faces.
inline FaceField face_differences(const ScalarField& f) {
    detail::require_finite(f, "face_differences");
    const auto vals = f.values();
    const TensorGrid& g = f.grid();
    return make_face_field(f.grid_ptr(), [&](std::size_t a, std::size_t lo, std::size_t hi) {
        return (vals[hi] - vals[lo]) / g.spacing(a);
    });
}

/// Per-cell sum over axes of (upper-face flux - lower-face flux) / h.
inline ScalarField divergence_of_flux(const FaceField& flux) {
    const TensorGrid& g = flux.grid();
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const auto faces = flux.axis_values(a);
        const double inv_h = 1.0 / g.spacing(a);
        detail::for_each_line(g, a, [&](std::size_t first, std::size_t s, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t c = first + i * s;
                const double upper = i + 1 < n ? faces[c] : 0.0;
                const double lower = i > 0 ? faces[c - s] : 0.0;
                out[c] += (upper - lower) * inv_h;
            }
        });
    }
    return ScalarField(flux.grid_ptr(), std::move(out));
}

inline ScalarField divergence_of_flux(const FaceField& flux, const TensorGrid& expected) {
    if (!(flux.grid() == expected)) throw DimensionMismatch("divergence_of_flux: flux grid mismatch");
    return divergence_of_flux(flux);
}

/// Central differences; the mirrored ghost value at the boundary makes the boundary
/// face's contribution vanish, so g_0 = (f_1 - f_0) / (2h).
inline std::vector<ScalarField> gradient_centered(const ScalarField& f) {
    detail::require_finite(f, "gradient_centered");
    const TensorGrid& g = f.grid();
    const auto in = f.values();
    std::vector<ScalarField> out;
    out.reserve(g.dim());
    for (std::size_t a = 0; a < g.dim(); ++a) {
        std::vector<double> d(g.size());
        const double inv_2h = 0.5 / g.spacing(a);
        detail::for_each_line(g, a, [&](std::size_t first, std::size_t s, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t c = first + i * s;
                const double left = i > 0 ? in[c - s] : in[c];
                const double right = i + 1 < n ? in[c + s] : in[c];
                d[c] = (right - left) * inv_2h;
            }
        });
        out.emplace_back(f.grid_ptr(), std::move(d));
    }
    return out;
}

}  // namespace rclab
