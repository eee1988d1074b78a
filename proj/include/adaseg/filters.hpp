#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "adaseg/grid.hpp"

namespace adaseg {

namespace detail {

inline void require_odd_window(std::size_t window, const char* what) {
    if (window == 0 || window % 2 == 0)
        throw ParameterError(std::string(what) + ": window must be odd and positive, got " +
                             std::to_string(window));
}

} // namespace detail

/// Rotationally symmetric Gaussian, normalized to unit sum.
inline Kernel gaussian_kernel(std::size_t size, double sigma) {
    detail::require_odd_window(size, "gaussian_kernel");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw ParameterError("gaussian_kernel: sigma must be positive");
    const auto r = static_cast<std::ptrdiff_t>(size / 2);
    std::vector<double> w;
    w.reserve(size * size);
    double total = 0.0;
    for (std::ptrdiff_t a = -r; a <= r; ++a) {
        for (std::ptrdiff_t b = -r; b <= r; ++b) {
            const double v = std::exp(-static_cast<double>(a * a + b * b) / (2.0 * sigma * sigma));
            w.push_back(v);
            total += v;
        }
    }
    for (double& v : w) v /= total;
    return Kernel(size, std::move(w));
}

inline Kernel mean_kernel(std::size_t size) {
    detail::require_odd_window(size, "mean_kernel");
    const double v = 1.0 / static_cast<double>(size * size);
    return Kernel(size, std::vector<double>(size * size, v));
}

/// Arithmetic mean over a window x window neighbourhood.
inline ImageGrid mean_filter(const ImageGrid& u, std::size_t window) {
    detail::require_odd_window(window, "mean_filter");
    const auto r = static_cast<std::ptrdiff_t>(window / 2);
    const double count = static_cast<double>(window * window);
    ImageGrid out(u.rows(), u.cols());
    for (std::size_t i = 0; i < u.rows(); ++i) {
        for (std::size_t j = 0; j < u.cols(); ++j) {
            double acc = 0.0;
            for (std::ptrdiff_t a = -r; a <= r; ++a)
                for (std::ptrdiff_t b = -r; b <= r; ++b)
                    acc += u.at_replicated(static_cast<std::ptrdiff_t>(i) + a,
                                           static_cast<std::ptrdiff_t>(j) + b);
            out(i, j) = acc / count;
        }
    }
    return out;
}

/// Exact median over a window x window neighbourhood (odd sample count).
inline ImageGrid median_filter(const ImageGrid& u, std::size_t window) {
    detail::require_odd_window(window, "median_filter");
    const auto r = static_cast<std::ptrdiff_t>(window / 2);
    std::vector<double> buf(window * window);
    const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
    ImageGrid out(u.rows(), u.cols());
    for (std::size_t i = 0; i < u.rows(); ++i) {
        for (std::size_t j = 0; j < u.cols(); ++j) {
            std::size_t k = 0;
            for (std::ptrdiff_t a = -r; a <= r; ++a)
                for (std::ptrdiff_t b = -r; b <= r; ++b)
                    buf[k++] = u.at_replicated(static_cast<std::ptrdiff_t>(i) + a,
                                               static_cast<std::ptrdiff_t>(j) + b);
            std::nth_element(buf.begin(), mid, buf.end());
            out(i, j) = *mid;
        }
    }
    return out;
}

} // namespace adaseg
