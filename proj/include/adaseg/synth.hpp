#pragma once

// Synthetic two-phase images with exact ground truth.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "adaseg/grid.hpp"

namespace adaseg {

enum class SynthShape { Disk, Square, TwoBlobs, Checker };

inline std::optional<SynthShape> parse_synth_shape(std::string_view s) {
    if (s == "disk") return SynthShape::Disk;
    if (s == "square") return SynthShape::Square;
    if (s == "two-blobs") return SynthShape::TwoBlobs;
    if (s == "checker") return SynthShape::Checker;
    return std::nullopt;
}

struct SynthSpec {
    SynthShape shape = SynthShape::Disk;
    std::size_t rows = 64;
    std::size_t cols = 64;
    double fg = 0.8;
    double bg = 0.2;
    std::uint64_t seed = 0;
    /// Disk radius; defaults to min(rows, cols) / 4.
    std::optional<double> radius;
};

struct SynthImage {
    ImageGrid image;
    Mask truth;
};

namespace detail {

inline void stamp_disk(Mask& m, double ci, double cj, double radius) {
    const double r2 = radius * radius;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double di = static_cast<double>(i) - ci;
            const double dj = static_cast<double>(j) - cj;
            if (di * di + dj * dj <= r2) m(i, j) = 1;
        }
    }
}

} // namespace detail

/// Foreground pixels take `fg`, background `bg`. The seed only moves the
/// blob centres of TwoBlobs; the other shapes are fully determined by size.
inline SynthImage make_synthetic(const SynthSpec& spec) {
    if (spec.rows == 0 || spec.cols == 0) throw ParameterError("synthetic size must be positive");
    if (!(spec.fg >= 0.0 && spec.fg <= 1.0 && spec.bg >= 0.0 && spec.bg <= 1.0))
        throw ParameterError("fg and bg intensities must lie in [0, 1]");
    const double m = static_cast<double>(spec.rows);
    const double n = static_cast<double>(spec.cols);
    const double short_side = std::min(m, n);
    Mask truth(spec.rows, spec.cols, 0);

    switch (spec.shape) {
    case SynthShape::Disk: {
        const double r = spec.radius.value_or(short_side / 4.0);
        if (!(r > 0.0)) throw ParameterError("disk radius must be positive");
        detail::stamp_disk(truth, (m - 1.0) / 2.0, (n - 1.0) / 2.0, r);
        break;
    }
    case SynthShape::Square: {
        const auto side = std::max<std::size_t>(1, static_cast<std::size_t>(short_side / 2.0));
        const std::size_t i0 = (spec.rows - side) / 2;
        const std::size_t j0 = (spec.cols - side) / 2;
        for (std::size_t i = i0; i < i0 + side; ++i)
            for (std::size_t j = j0; j < j0 + side; ++j) truth(i, j) = 1;
        break;
    }
    case SynthShape::TwoBlobs: {
        const double r = short_side / 6.0;
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> jitter(-short_side / 16.0, short_side / 16.0);
        detail::stamp_disk(truth, m * 0.3 + jitter(rng), n * 0.3 + jitter(rng), r);
        detail::stamp_disk(truth, m * 0.7 + jitter(rng), n * 0.7 + jitter(rng), r);
        break;
    }
    case SynthShape::Checker: {
        const auto block = std::max<std::size_t>(1, static_cast<std::size_t>(short_side / 8.0));
        for (std::size_t i = 0; i < spec.rows; ++i)
            for (std::size_t j = 0; j < spec.cols; ++j) truth(i, j) = ((i / block) + (j / block)) % 2;
        break;
    }
    }

    ImageGrid image(spec.rows, spec.cols);
    for (std::size_t p = 0; p < image.size(); ++p)
        image.values()[p] = truth.values()[p] ? spec.fg : spec.bg;
    return {std::move(image), std::move(truth)};
}

} // namespace adaseg
