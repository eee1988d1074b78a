#pragma once

// Alternating minimization for the two-phase model with per-pixel weights:
// closed-form region means, then one split Bregman pass on u.
//
// The u-subproblem minimized at outer step k is
//
//   Q(u) = <r, u> + mu/2 |d - Dx u - b|^2 (both directions)
//          + mu*kappa/2 |u - u^{k-1}|^2
//
// whose optimality system is
//
//   (-laplacian + kappa) u = -r/mu - div(d - b) + kappa u^{k-1}.
//
// kappa (SolverConfig::prox_weight) makes the system strictly diagonally
// dominant; without it the Neumann Laplacian is singular.
//
// By default every Gauss-Seidel update is clamped to [0, 1] (projected
// Gauss-Seidel), which solves the box-constrained subproblem itself.
// Projecting only once after the sweeps leaves a biased fixed point that
// drops the object boundary on the low-index sides.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adaseg/format.hpp"
#include "adaseg/grid.hpp"
#include "adaseg/lambda_map.hpp"

namespace adaseg {

enum class LambdaScaling {
    /// Divide weights by max s - min s at the initial region means.
    FidelitySpread,
    None,
};

struct SolverConfig {
    double mu = 1e3;
    /// Outer tolerance on successive differences of diff^k.
    double tol = 1e-6;
    int maxit = 30;
    /// Stop GS once msd^l / msd^1 <= tol_gs.
    double tol_gs = 1e-2;
    int maxit_gs = 50;
    /// Foreground threshold on the final u.
    double alpha = 0.5;
    double prox_weight = 1e-2;
    /// Clamp each GS update to [0, 1]; false projects once after the sweeps.
    bool project_each_update = true;
    LambdaScaling scaling = LambdaScaling::FidelitySpread;

    void validate() const {
        auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        if (!positive(mu)) throw ParameterError("mu must be positive");
        if (!positive(tol)) throw ParameterError("tol must be positive");
        if (maxit < 1) throw ParameterError("maxit must be at least 1");
        if (!positive(tol_gs)) throw ParameterError("tol_gs must be positive");
        if (maxit_gs < 1) throw ParameterError("maxit_gs must be at least 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
        if (!positive(prox_weight)) throw ParameterError("prox_weight must be positive");
    }
};

inline constexpr double kDenominatorEpsilon = 1e-12;

struct RegionMeans {
    double c1 = 0.0;
    double c2 = 0.0;
    /// Set when the weighted denominator vanished and the global mean was used.
    bool c1_fallback = false;
    bool c2_fallback = false;
};

/// Weighted foreground/background means that zero the fidelity's partial
/// derivatives in c1 and c2.
inline RegionMeans update_region_means(const ImageGrid& u, const ImageGrid& ubar,
                                       const LambdaMap& lam) {
    require_same_shape(u, ubar, "update_region_means");
    require_same_shape(u, lam.grid(), "update_region_means");
    double n1 = 0.0, d1 = 0.0, n2 = 0.0, d2 = 0.0, total = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        const double w = lam.grid().values()[p];
        const double f = ubar.values()[p];
        const double v = u.values()[p];
        n1 += w * f * v;
        d1 += w * v;
        n2 += w * f * (1.0 - v);
        d2 += w * (1.0 - v);
        total += f;
    }
    const double global = total / static_cast<double>(u.size());
    RegionMeans out;
    if (d1 > kDenominatorEpsilon) {
        out.c1 = n1 / d1;
    } else {
        out.c1 = global;
        out.c1_fallback = true;
    }
    if (d2 > kDenominatorEpsilon) {
        out.c2 = n2 / d2;
    } else {
        out.c2 = global;
        out.c2_fallback = true;
    }
    return out;
}

/// r = lambda * ((c1 - ubar)^2 - (c2 - ubar)^2). Negative where ubar is closer to c1.
inline ImageGrid fidelity_residual(const ImageGrid& ubar, const LambdaMap& lam, double c1,
                                   double c2) {
    require_same_shape(ubar, lam.grid(), "fidelity_residual");
    ImageGrid r(ubar.rows(), ubar.cols());
    for (std::size_t p = 0; p < r.size(); ++p) {
        const double f = ubar.values()[p];
        r.values()[p] = lam.grid().values()[p] * ((c1 - f) * (c1 - f) - (c2 - f) * (c2 - f));
    }
    return r;
}

/// Soft threshold sign(v) * max(|v| - gamma, 0).
inline double shrink(double v, double gamma) noexcept {
    if (v > gamma) return v - gamma;
    if (v < -gamma) return v + gamma;
    return 0.0;
}

inline ImageGrid shrink(ImageGrid v, double gamma) {
    if (!(gamma > 0.0)) throw ParameterError("shrink: gamma must be positive");
    for (double& x : v) x = shrink(x, gamma);
    return v;
}

/// Anisotropic TV plus the weighted region fidelity.
inline double energy(const ImageGrid& u, const ImageGrid& ubar, const LambdaMap& lam, double c1,
                     double c2) {
    require_same_shape(u, ubar, "energy");
    require_same_shape(u, lam.grid(), "energy");
    const ImageGrid gx = forward_diff_x(u);
    const ImageGrid gy = forward_diff_y(u);
    double tv = 0.0;
    double fid = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        tv += std::abs(gx.values()[p]) + std::abs(gy.values()[p]);
        const double f = ubar.values()[p];
        const double v = u.values()[p];
        fid += lam.grid().values()[p] * ((c1 - f) * (c1 - f) * v + (c2 - f) * (c2 - f) * (1.0 - v));
    }
    return tv + fid;
}

struct IterationRecord {
    int k = 0;
    double diff = 0.0;
    int gs_iterations = 0;
    double c1 = 0.0;
    double c2 = 0.0;
    /// |Dx u - dx| and |Dy u - dy| (Euclidean) after the step.
    double gap_x = 0.0;
    double gap_y = 0.0;
};

struct SolverState {
    ImageGrid u;
    ImageGrid dx, dy, bx, by;
    /// Unscaled weights in [lambda_min, lambda_max] and the scaled map the
    /// fidelity actually uses.
    LambdaMap raw_lambda;
    LambdaMap lambda;
    double c1 = 0.0;
    double c2 = 0.0;
    int k = 0;
    std::vector<IterationRecord> history;
    std::vector<std::string> warnings;

    std::vector<double> diff_history() const {
        std::vector<double> out;
        out.reserve(history.size());
        for (const auto& h : history) out.push_back(h.diff);
        return out;
    }

    std::vector<int> gs_counts() const {
        std::vector<int> out;
        out.reserve(history.size());
        for (const auto& h : history) out.push_back(h.gs_iterations);
        return out;
    }
};

/// Fixed inputs of one segmentation run.
struct Problem {
    ImageGrid ubar;
    Strategy strategy;
    /// Divisor applied to every weight map (1 when scaling is disabled).
    double scale = 1.0;
};

/// Initial spread of s = (c1 - ubar)^2 - (c2 - ubar)^2 with c1, c2 the
/// unweighted region means at u = ubar.
inline double initial_fidelity_spread(const ImageGrid& ubar) {
    const RegionMeans c =
        update_region_means(ubar, ubar, LambdaMap::uniform(ubar.rows(), ubar.cols(), 1.0));
    return fidelity_spread(ubar, c.c1, c.c2);
}

inline Problem make_problem(ImageGrid ubar, Strategy strategy, const SolverConfig& cfg) {
    cfg.validate();
    require_unit_range(ubar, "segment");
    const double spread = initial_fidelity_spread(ubar);
    if (!(spread > kSpreadEpsilon))
        throw DegenerateImageError("image is constant: no two-phase contrast to segment");
    const double scale = cfg.scaling == LambdaScaling::FidelitySpread ? spread : 1.0;
    return Problem{std::move(ubar), std::move(strategy), scale};
}

inline SolverState initial_state(const Problem& problem) {
    const ImageGrid& ubar = problem.ubar;
    LambdaMap raw = build_lambda_map(problem.strategy, ubar);
    LambdaMap scaled = scale_lambda_map(raw, problem.scale);
    ImageGrid zero(ubar.rows(), ubar.cols(), 0.0);
    return SolverState{ubar, zero, zero, zero, zero, std::move(raw), std::move(scaled), 0.0, 0.0, 0, {}, {}};
}

struct GsResult {
    ImageGrid u;
    int iterations = 0;
};

enum class GsMode {
    /// Plain GS on the linear optimality system.
    Linear,
    /// Each update clamped to [0, 1].
    Projected,
};

/// Gauss-Seidel on the u-subproblem, warm-started and centred at state.u,
/// with lexicographic in-place sweeps.
inline GsResult gauss_seidel_u(const SolverState& state, const ImageGrid& r,
                               const SolverConfig& cfg, GsMode mode) {
    const ImageGrid& prev = state.u;
    require_same_shape(prev, r, "gauss_seidel_u");
    const std::size_t m = prev.rows();
    const std::size_t n = prev.cols();
    const double kappa = cfg.prox_weight;

    ImageGrid px = state.dx, py = state.dy;
    for (std::size_t p = 0; p < px.size(); ++p) {
        px.values()[p] -= state.bx.values()[p];
        py.values()[p] -= state.by.values()[p];
    }
    const ImageGrid div = divergence_adjoint(px, py);
    ImageGrid rhs(m, n);
    for (std::size_t p = 0; p < rhs.size(); ++p)
        rhs.values()[p] = -r.values()[p] / cfg.mu - div.values()[p] + kappa * prev.values()[p];

    GsResult out{prev, 0};
    ImageGrid& u = out.u;
    double msd_first = 0.0;
    for (int sweep = 1; sweep <= cfg.maxit_gs; ++sweep) {
        double sq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double nb = 0.0;
                double degree = 0.0;
                if (i > 0) nb += u(i - 1, j), degree += 1.0;
                if (i + 1 < m) nb += u(i + 1, j), degree += 1.0;
                if (j > 0) nb += u(i, j - 1), degree += 1.0;
                if (j + 1 < n) nb += u(i, j + 1), degree += 1.0;
                double next = (nb + rhs(i, j)) / (degree + kappa);
                if (mode == GsMode::Projected) next = std::clamp(next, 0.0, 1.0);
                const double step = next - u(i, j);
                sq += step * step;
                u(i, j) = next;
            }
        }
        out.iterations = sweep;
        const double msd = sq / static_cast<double>(u.size());
        if (sweep == 1) {
            msd_first = msd;
            if (msd_first == 0.0) break;
        }
        if (msd <= cfg.tol_gs * msd_first) break;
    }
    return out;
}

/// GS solve followed by projection onto [0, 1].
inline GsResult solve_u_subproblem(const SolverState& state, const ImageGrid& r,
                                   const SolverConfig& cfg) {
    GsResult res = gauss_seidel_u(state, r, cfg,
                                  cfg.project_each_update ? GsMode::Projected : GsMode::Linear);
    res.u = project_unit_interval(std::move(res.u));
    return res;
}

/// One outer iteration: weights (thr only), region means, u, d, b.
inline void bregman_step(SolverState& s, const Problem& problem, const SolverConfig& cfg) {
    const int k = s.k + 1;
    if (problem.strategy.depends_on_iterate()) {
        s.raw_lambda = build_lambda_map(problem.strategy, s.u);
        s.lambda = scale_lambda_map(s.raw_lambda, problem.scale);
    }

    const RegionMeans c = update_region_means(s.u, problem.ubar, s.lambda);
    if (c.c1_fallback)
        s.warnings.push_back("iteration " + std::to_string(k) +
                             ": foreground weight vanished, c1 set to the global mean");
    if (c.c2_fallback)
        s.warnings.push_back("iteration " + std::to_string(k) +
                             ": background weight vanished, c2 set to the global mean");
    s.c1 = c.c1;
    s.c2 = c.c2;

    const ImageGrid r = fidelity_residual(problem.ubar, s.lambda, c.c1, c.c2);
    GsResult gs = solve_u_subproblem(s, r, cfg);

    const ImageGrid gx = forward_diff_x(gs.u);
    const ImageGrid gy = forward_diff_y(gs.u);
    const double gamma = 1.0 / cfg.mu;
    double gap_x = 0.0, gap_y = 0.0;
    for (std::size_t p = 0; p < gx.size(); ++p) {
        const double gxp = gx.values()[p];
        const double gyp = gy.values()[p];
        const double dxp = shrink(gxp + s.bx.values()[p], gamma);
        const double dyp = shrink(gyp + s.by.values()[p], gamma);
        s.dx.values()[p] = dxp;
        s.dy.values()[p] = dyp;
        s.bx.values()[p] += gxp - dxp;
        s.by.values()[p] += gyp - dyp;
        gap_x += (gxp - dxp) * (gxp - dxp);
        gap_y += (gyp - dyp) * (gyp - dyp);
    }

    const double diff = mean_squared_difference(gs.u, s.u);
    s.u = std::move(gs.u);
    s.k = k;
    s.history.push_back(
        IterationRecord{k, diff, gs.iterations, c.c1, c.c2, std::sqrt(gap_x), std::sqrt(gap_y)});
}

/// True once |diff^k - diff^{k-1}| <= tol (k >= 2) or k >= maxit.
inline bool outer_stopped(std::span<const double> diff_history, int k, const SolverConfig& cfg) {
    if (k >= cfg.maxit) return true;
    if (k < 2 || diff_history.size() < 2) return false;
    const double last = diff_history[diff_history.size() - 1];
    const double before = diff_history[diff_history.size() - 2];
    return std::abs(last - before) <= cfg.tol;
}

inline Mask threshold(const ImageGrid& u, double alpha) {
    Mask out(u.rows(), u.cols(), 0);
    for (std::size_t p = 0; p < u.size(); ++p) out.values()[p] = u.values()[p] > alpha ? 1 : 0;
    return out;
}

struct SegmentationResult {
    ImageGrid u_final;
    Mask mask;
    double c1 = 0.0;
    double c2 = 0.0;
    int outer_iterations = 0;
    double mean_gs_iterations = 0.0;
    bool converged = false;
    /// Unscaled weights of the last iteration.
    LambdaMap raw_lambda;
    double scale = 1.0;
    std::vector<IterationRecord> history;
    std::vector<std::string> warnings;
};

using StepObserver = std::function<void(const SolverState&)>;

inline SegmentationResult segment(const Problem& problem, const SolverConfig& cfg,
                                  const StepObserver& observer = {}) {
    cfg.validate();
    SolverState s = initial_state(problem);
    bool converged = false;
    std::vector<double> diffs;
    for (;;) {
        bregman_step(s, problem, cfg);
        if (observer) observer(s);
        diffs.push_back(s.history.back().diff);
        if (s.k >= 2 && std::abs(diffs[diffs.size() - 1] - diffs[diffs.size() - 2]) <= cfg.tol)
            converged = true;
        if (outer_stopped(diffs, s.k, cfg)) break;
    }

    double gs_total = 0.0;
    for (const auto& h : s.history) gs_total += h.gs_iterations;
    SegmentationResult out{s.u,
                           threshold(s.u, cfg.alpha),
                           s.c1,
                           s.c2,
                           s.k,
                           gs_total / static_cast<double>(s.history.size()),
                           converged,
                           s.raw_lambda,
                           problem.scale,
                           std::move(s.history),
                           std::move(s.warnings)};
    return out;
}

/// Runs the full method on `ubar` (values in [0, 1]).
inline SegmentationResult segment(const ImageGrid& ubar, const Strategy& strategy,
                                  const SolverConfig& cfg, const StepObserver& observer = {}) {
    return segment(make_problem(ubar, strategy, cfg), cfg, observer);
}

/// Plain-text convergence table, one row per outer iteration.
inline void write_trace(std::ostream& os, std::span<const IterationRecord> history) {
    os << "k diff gs_iters c1 c2\n";
    for (const auto& h : history)
        os << h.k << ' ' << format_double(h.diff) << ' ' << h.gs_iterations << ' '
           << format_double(h.c1) << ' ' << format_double(h.c2) << '\n';
}

} // namespace adaseg
