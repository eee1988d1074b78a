#pragma once

// Dense m x n scalar fields and the discrete operators built on them.
//
// Index convention: (i, j) with i the row (x direction) and j the column
// (y direction). Out-of-grid values are defined by replication of the
// nearest in-grid value, for every operator in this header.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adaseg/error.hpp"

namespace adaseg {

template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;

    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {
        if (rows == 0 || cols == 0)
            throw DimensionError("grid dimensions must be positive, got " + std::to_string(rows) +
                                 "x" + std::to_string(cols));
    }

    Grid(std::size_t rows, std::size_t cols, std::vector<T> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (rows == 0 || cols == 0)
            throw DimensionError("grid dimensions must be positive");
        if (values_.size() != rows * cols)
            throw DimensionError("value count " + std::to_string(values_.size()) +
                                 " does not match " + std::to_string(rows) + "x" +
                                 std::to_string(cols));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    T& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const noexcept {
        return values_[i * cols_ + j];
    }

    /// Value at (i, j) with replicated boundary: indices are clamped into the grid.
    const T& at_replicated(std::ptrdiff_t i, std::ptrdiff_t j) const noexcept {
        const auto ci = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(rows_) - 1);
        const auto cj = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(cols_) - 1);
        return values_[static_cast<std::size_t>(ci) * cols_ + static_cast<std::size_t>(cj)];
    }

    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }

    auto begin() noexcept { return values_.begin(); }
    auto end() noexcept { return values_.end(); }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    bool same_shape(const Grid& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return rows_ == other.rows() && cols_ == other.cols();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> values_;
};

using ImageGrid = Grid<double>;
/// Binary field; 1 marks foreground.
using Mask = Grid<std::uint8_t>;

template <typename T, typename U>
void require_same_shape(const Grid<T>& a, const Grid<U>& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                             "x" + std::to_string(b.cols()));
}

/// Throws ParameterError unless every value lies in [0, 1].
inline void require_unit_range(const ImageGrid& u, const char* what) {
    for (double v : u)
        if (!(v >= 0.0 && v <= 1.0))
            throw ParameterError(std::string(what) + ": values must lie in [0, 1]");
}

inline bool all_finite(const ImageGrid& u) noexcept {
    return std::all_of(u.begin(), u.end(), [](double v) { return std::isfinite(v); });
}

/// Square convolution kernel with odd side length.
class Kernel {
public:
    Kernel(std::size_t size, std::vector<double> weights) : size_(size), weights_(std::move(weights)) {
        if (size == 0 || size % 2 == 0)
            throw ParameterError("kernel size must be odd and positive, got " + std::to_string(size));
        if (weights_.size() != size * size)
            throw DimensionError("kernel weight count does not match size");
    }

    static Kernel identity() { return Kernel(1, {1.0}); }

    std::size_t size() const noexcept { return size_; }
    std::ptrdiff_t radius() const noexcept { return static_cast<std::ptrdiff_t>(size_ / 2); }

    /// Weight at offset (a, b), both in [-radius, radius].
    double operator()(std::ptrdiff_t a, std::ptrdiff_t b) const noexcept {
        const auto r = radius();
        return weights_[static_cast<std::size_t>((a + r) * static_cast<std::ptrdiff_t>(size_) + (b + r))];
    }

    std::span<const double> weights() const noexcept { return weights_; }

    double sum() const noexcept {
        double s = 0.0;
        for (double w : weights_) s += w;
        return s;
    }

private:
    std::size_t size_;
    std::vector<double> weights_;
};

/// Forward difference along rows; zero on the last row.
inline ImageGrid forward_diff_x(const ImageGrid& u) {
    ImageGrid out(u.rows(), u.cols(), 0.0);
    for (std::size_t i = 0; i + 1 < u.rows(); ++i)
        for (std::size_t j = 0; j < u.cols(); ++j) out(i, j) = u(i + 1, j) - u(i, j);
    return out;
}

/// Forward difference along columns; zero on the last column.
inline ImageGrid forward_diff_y(const ImageGrid& u) {
    ImageGrid out(u.rows(), u.cols(), 0.0);
    for (std::size_t i = 0; i < u.rows(); ++i)
        for (std::size_t j = 0; j + 1 < u.cols(); ++j) out(i, j) = u(i, j + 1) - u(i, j);
    return out;
}

inline ImageGrid gradient_magnitude(const ImageGrid& u) {
    const ImageGrid gx = forward_diff_x(u);
    const ImageGrid gy = forward_diff_y(u);
    ImageGrid out(u.rows(), u.cols());
    for (std::size_t k = 0; k < out.size(); ++k)
        out.values()[k] = std::hypot(gx.values()[k], gy.values()[k]);
    return out;
}

/// Negative adjoint of the forward-difference pair: -Dx^T px - Dy^T py.
///
/// With this definition <Dx u, px> + <Dy u, py> = -<u, div(px, py)> exactly.
inline ImageGrid divergence_adjoint(const ImageGrid& px, const ImageGrid& py) {
    require_same_shape(px, py, "divergence_adjoint");
    const std::size_t m = px.rows();
    const std::size_t n = px.cols();
    ImageGrid out(m, n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            if (i + 1 < m) v += px(i, j);
            if (i > 0) v -= px(i - 1, j);
            if (j + 1 < n) v += py(i, j);
            if (j > 0) v -= py(i, j - 1);
            out(i, j) = v;
        }
    }
    return out;
}

/// 5-point Laplacian with replicated neighbours. Equals
/// divergence_adjoint(forward_diff_x(u), forward_diff_y(u)).
inline ImageGrid laplacian(const ImageGrid& u) {
    const std::size_t m = u.rows();
    const std::size_t n = u.cols();
    ImageGrid out(m, n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double c = u(i, j);
            double v = 0.0;
            // A replicated neighbour equals the centre and contributes nothing.
            if (i > 0) v += u(i - 1, j) - c;
            if (i + 1 < m) v += u(i + 1, j) - c;
            if (j > 0) v += u(i, j - 1) - c;
            if (j + 1 < n) v += u(i, j + 1) - c;
            out(i, j) = v;
        }
    }
    return out;
}

/// Correlation-form convolution with replicated boundary. For the symmetric
/// kernels used here correlation and convolution coincide.
inline ImageGrid convolve(const ImageGrid& u, const Kernel& k) {
    const auto r = k.radius();
    ImageGrid out(u.rows(), u.cols(), 0.0);
    for (std::size_t i = 0; i < u.rows(); ++i) {
        for (std::size_t j = 0; j < u.cols(); ++j) {
            double acc = 0.0;
            for (std::ptrdiff_t a = -r; a <= r; ++a)
                for (std::ptrdiff_t b = -r; b <= r; ++b)
                    acc += k(a, b) * u.at_replicated(static_cast<std::ptrdiff_t>(i) + a,
                                                     static_cast<std::ptrdiff_t>(j) + b);
            out(i, j) = acc;
        }
    }
    return out;
}

inline ImageGrid project_unit_interval(ImageGrid u) {
    for (double& v : u) v = std::clamp(v, 0.0, 1.0);
    return u;
}

inline double inner_product(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "inner_product");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a.values()[k] * b.values()[k];
    return s;
}

/// (1/mn) * sum of squared pointwise differences.
inline double mean_squared_difference(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "mean_squared_difference");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a.values()[k] - b.values()[k];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

} // namespace adaseg
