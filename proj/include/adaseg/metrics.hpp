#pragma once

#include <cstddef>

#include "adaseg/grid.hpp"

namespace adaseg {

struct Overlap {
    double dice = 1.0;
    double jaccard = 1.0;
};

/// Dice and Jaccard overlap of two masks; both empty counts as perfect agreement.
inline Overlap dice_jaccard(const Mask& pred, const Mask& truth) {
    require_same_shape(pred, truth, "dice_jaccard");
    std::size_t a = 0, b = 0, both = 0;
    for (std::size_t p = 0; p < pred.size(); ++p) {
        const bool x = pred.values()[p] != 0;
        const bool y = truth.values()[p] != 0;
        a += x;
        b += y;
        both += x && y;
    }
    if (a + b == 0) return {};
    const double inter = static_cast<double>(both);
    return {2.0 * inter / static_cast<double>(a + b),
            inter / static_cast<double>(a + b - both)};
}

/// Fraction of pixels where the masks agree.
inline double pixel_agreement(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "pixel_agreement");
    std::size_t same = 0;
    for (std::size_t p = 0; p < a.size(); ++p) same += (a.values()[p] != 0) == (b.values()[p] != 0);
    return static_cast<double>(same) / static_cast<double>(a.size());
}

} // namespace adaseg
