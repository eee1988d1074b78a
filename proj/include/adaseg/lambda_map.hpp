#pragma once

// Per-pixel regularization weights and the rules that build them.
//
// Every rule maps an indicator field into [lambda_min, lambda_max]:
//   ctd: indicator is the relative reduction rate of local total variation
//   mm:  indicator is the mean/median weight field
//   thr: log-linear in the current relaxed indicator u
// The constant rule reproduces the uniform-weight model.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "adaseg/filters.hpp"
#include "adaseg/grid.hpp"

namespace adaseg {

/// Weight bounds with 0 < min < max < inf.
struct Bounds {
    double min;
    double max;

    void validate() const {
        if (!(min > 0.0) || !(max > min) || !std::isfinite(max))
            throw ParameterError("lambda bounds must satisfy 0 < lambda_min < lambda_max < inf");
    }
};

class LambdaMap {
public:
    explicit LambdaMap(ImageGrid weights) : weights_(std::move(weights)) {
        for (double v : weights_)
            if (!(v > 0.0) || !std::isfinite(v))
                throw ParameterError("lambda map entries must be positive and finite");
    }

    static LambdaMap uniform(std::size_t rows, std::size_t cols, double lambda) {
        return LambdaMap(ImageGrid(rows, cols, lambda));
    }

    const ImageGrid& grid() const noexcept { return weights_; }
    std::size_t rows() const noexcept { return weights_.rows(); }
    std::size_t cols() const noexcept { return weights_.cols(); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return weights_(i, j); }

    double min() const { return *std::min_element(weights_.begin(), weights_.end()); }
    double max() const { return *std::max_element(weights_.begin(), weights_.end()); }

    friend bool operator==(const LambdaMap&, const LambdaMap&) = default;

private:
    ImageGrid weights_;
};

struct ConstantRule {
    double lambda;
};

struct CtdRule {
    double sigma = 2.0;
    std::size_t kernel_size = 3;
};

struct MmRule {
    std::size_t mean_window = 3;
    std::size_t median_window = 7;
    double threshold = 0.5;
};

struct ThrRule {};

class Strategy {
public:
    using Rule = std::variant<ConstantRule, CtdRule, MmRule, ThrRule>;

    static Strategy constant(double lambda, std::optional<Bounds> bounds = std::nullopt) {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ParameterError("constant lambda must be positive and finite");
        if (bounds) {
            bounds->validate();
            if (lambda < bounds->min || lambda > bounds->max)
                throw ParameterError("constant lambda lies outside [lambda_min, lambda_max]");
        }
        return Strategy(ConstantRule{lambda}, bounds);
    }

    static Strategy ctd(Bounds bounds, CtdRule rule = {}) {
        bounds.validate();
        detail::require_odd_window(rule.kernel_size, "ctd");
        if (!(rule.sigma > 0.0)) throw ParameterError("ctd: sigma must be positive");
        return Strategy(rule, bounds);
    }

    static Strategy mm(Bounds bounds, MmRule rule = {}) {
        bounds.validate();
        detail::require_odd_window(rule.mean_window, "mm mean");
        detail::require_odd_window(rule.median_window, "mm median");
        if (!(rule.threshold > 0.0) || rule.threshold > 1.0)
            throw ParameterError("mm: threshold t must lie in (0, 1]");
        return Strategy(rule, bounds);
    }

    static Strategy thr(Bounds bounds) {
        bounds.validate();
        return Strategy(ThrRule{}, bounds);
    }

    const Rule& rule() const noexcept { return rule_; }
    const std::optional<Bounds>& bounds() const noexcept { return bounds_; }

    /// Bounds of an adaptive rule; throws for a constant rule without bounds.
    const Bounds& required_bounds() const {
        if (!bounds_) throw ParameterError("strategy has no lambda bounds");
        return *bounds_;
    }

    /// The only rule whose map follows the evolving u.
    bool depends_on_iterate() const noexcept { return std::holds_alternative<ThrRule>(rule_); }

    std::string_view name() const noexcept {
        switch (rule_.index()) {
        case 0: return "cen";
        case 1: return "ctd";
        case 2: return "mm";
        default: return "thr";
        }
    }

private:
    Strategy(Rule rule, std::optional<Bounds> bounds) : rule_(rule), bounds_(bounds) {}

    Rule rule_;
    std::optional<Bounds> bounds_;
};

/// Filtered gradient magnitude: L * |grad u|.
inline ImageGrid local_total_variation(const ImageGrid& u, const Kernel& k) {
    return convolve(gradient_magnitude(u), k);
}

inline constexpr double kLtvEpsilon = 1e-12;

/// Relative drop of local total variation under one more low-pass pass,
/// clamped to [0, 1]. Pixels with LTV below kLtvEpsilon count as cartoon (0).
inline ImageGrid relative_reduction_rate(const ImageGrid& u, const Kernel& k) {
    const ImageGrid ltv = local_total_variation(u, k);
    const ImageGrid ltv_smooth = local_total_variation(convolve(u, k), k);
    ImageGrid rho(u.rows(), u.cols(), 0.0);
    for (std::size_t p = 0; p < rho.size(); ++p) {
        const double base = ltv.values()[p];
        if (base < kLtvEpsilon) continue;
        rho.values()[p] = std::clamp((base - ltv_smooth.values()[p]) / base, 0.0, 1.0);
    }
    return rho;
}

/// max{lambda_min/lambda_max, 1 - indicator} * lambda_max, clamped into the bounds.
/// Shared by the ctd (indicator = rho) and mm (indicator = omega) rules.
inline LambdaMap lambda_from_indicator(const ImageGrid& indicator, const Bounds& bounds) {
    bounds.validate();
    const double floor_ratio = bounds.min / bounds.max;
    ImageGrid out(indicator.rows(), indicator.cols());
    for (std::size_t p = 0; p < out.size(); ++p) {
        const double v = std::max(floor_ratio, 1.0 - indicator.values()[p]) * bounds.max;
        out.values()[p] = std::clamp(v, bounds.min, bounds.max);
    }
    return LambdaMap(std::move(out));
}

inline LambdaMap lambda_ctd(const ImageGrid& ubar, const Bounds& bounds, const CtdRule& rule = {}) {
    bounds.validate();
    const Kernel k = gaussian_kernel(rule.kernel_size, rule.sigma);
    return lambda_from_indicator(relative_reduction_rate(ubar, k), bounds);
}

/// omega = |u - mean(u)| where mean and median agree to within t, 1 elsewhere.
inline ImageGrid mm_weights(const ImageGrid& ubar, std::size_t mean_window,
                            std::size_t median_window, double threshold) {
    if (!(threshold > 0.0)) throw ParameterError("mm_weights: threshold t must be positive");
    const ImageGrid mean = mean_filter(ubar, mean_window);
    const ImageGrid median = median_filter(ubar, median_window);
    ImageGrid omega(ubar.rows(), ubar.cols());
    for (std::size_t p = 0; p < omega.size(); ++p) {
        const double m = mean.values()[p];
        omega.values()[p] = std::abs(m - median.values()[p]) < threshold
                                ? std::abs(ubar.values()[p] - m)
                                : 1.0;
    }
    return omega;
}

inline LambdaMap lambda_mm(const ImageGrid& ubar, const Bounds& bounds, const MmRule& rule = {}) {
    bounds.validate();
    return lambda_from_indicator(
        mm_weights(ubar, rule.mean_window, rule.median_window, rule.threshold), bounds);
}

/// 10^eta with eta = emax - (1 - u)(emax - emin); exact at u = 0 and u = 1.
inline LambdaMap lambda_thr(const ImageGrid& u, const Bounds& bounds) {
    bounds.validate();
    const double emax = std::log10(bounds.max);
    const double emin = std::log10(bounds.min);
    ImageGrid out(u.rows(), u.cols());
    for (std::size_t p = 0; p < out.size(); ++p) {
        const double v = u.values()[p];
        double lam;
        if (v <= 0.0)
            lam = bounds.min;
        else if (v >= 1.0)
            lam = bounds.max;
        else
            lam = std::clamp(std::pow(10.0, emax - (1.0 - v) * (emax - emin)), bounds.min,
                             bounds.max);
        out.values()[p] = lam;
    }
    return LambdaMap(std::move(out));
}

/// Unscaled map for a strategy evaluated at `field` (ubar initially; the
/// current iterate for thr).
inline LambdaMap build_lambda_map(const Strategy& s, const ImageGrid& field) {
    return std::visit(
        [&](const auto& rule) -> LambdaMap {
            using R = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<R, ConstantRule>)
                return LambdaMap::uniform(field.rows(), field.cols(), rule.lambda);
            else if constexpr (std::is_same_v<R, CtdRule>)
                return lambda_ctd(field, s.required_bounds(), rule);
            else if constexpr (std::is_same_v<R, MmRule>)
                return lambda_mm(field, s.required_bounds(), rule);
            else
                return lambda_thr(field, s.required_bounds());
        },
        s.rule());
}

inline constexpr double kSpreadEpsilon = 1e-12;

/// max s - min s over the grid, s = (c1 - ubar)^2 - (c2 - ubar)^2.
inline double fidelity_spread(const ImageGrid& ubar, double c1, double c2) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : ubar) {
        const double s = (c1 - v) * (c1 - v) - (c2 - v) * (c2 - v);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    return hi - lo;
}

/// Divides every weight by the fidelity spread.
inline LambdaMap scale_lambda_map(const LambdaMap& lam, double s_range) {
    if (!(s_range > kSpreadEpsilon) || !std::isfinite(s_range))
        throw DegenerateImageError(
            "fidelity spread is zero: the image has no two-phase contrast to segment");
    ImageGrid out = lam.grid();
    for (double& v : out) v /= s_range;
    return LambdaMap(std::move(out));
}

} // namespace adaseg
