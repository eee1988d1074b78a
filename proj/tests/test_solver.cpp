#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "adaseg/metrics.hpp"
#include "adaseg/solver.hpp"
#include "adaseg/synth.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace adaseg;
using adaseg::testing::from_rows;
using adaseg::testing::max_abs_diff;
using adaseg::testing::random_grid;

namespace {

SolverState random_state(std::mt19937_64& rng, std::size_t m, std::size_t n) {
    const ImageGrid u = random_grid(rng, m, n);
    return SolverState{u,
                       random_grid(rng, m, n, -0.5, 0.5),
                       random_grid(rng, m, n, -0.5, 0.5),
                       random_grid(rng, m, n, -0.5, 0.5),
                       random_grid(rng, m, n, -0.5, 0.5),
                       LambdaMap::uniform(m, n, 1.0),
                       LambdaMap::uniform(m, n, 1.0),
                       0.0,
                       0.0,
                       0,
                       {},
                       {}};
}

SynthImage disk(std::size_t size = 64) {
    SynthSpec spec;
    spec.rows = spec.cols = size;
    return make_synthetic(spec);
}

} // namespace

TEST(SolverConfig, Validation) {
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    c.alpha = 1.0;
    EXPECT_THROW(c.validate(), ParameterError);
    c = {};
    c.mu = 0.0;
    EXPECT_THROW(c.validate(), ParameterError);
    c = {};
    c.maxit_gs = 0;
    EXPECT_THROW(c.validate(), ParameterError);
}

TEST(RegionMeans, ConstantImage) {
    const ImageGrid u(4, 4, 0.5);
    std::mt19937_64 rng(1);
    const RegionMeans c = update_region_means(u, u, LambdaMap(random_grid(rng, 4, 4, 1, 5)));
    EXPECT_NEAR(c.c1, 0.5, 1e-15);
    EXPECT_NEAR(c.c2, 0.5, 1e-15);
}

TEST(RegionMeans, BinaryIndicatorGivesPlainMeans) {
    const ImageGrid ubar = from_rows({{0.1, 0.3}, {0.8, 0.6}});
    const ImageGrid u = from_rows({{0, 0}, {1, 1}});
    const RegionMeans c = update_region_means(u, ubar, LambdaMap::uniform(2, 2, 3.0));
    EXPECT_NEAR(c.c1, 0.7, 1e-15);
    EXPECT_NEAR(c.c2, 0.2, 1e-15);
    EXPECT_FALSE(c.c1_fallback);
}

TEST(RegionMeans, FallbackToGlobalMean) {
    const ImageGrid ubar = from_rows({{0.1, 0.3}, {0.8, 0.6}});
    const RegionMeans c = update_region_means(ImageGrid(2, 2, 0.0), ubar, LambdaMap::uniform(2, 2, 1.0));
    EXPECT_TRUE(c.c1_fallback);
    EXPECT_FALSE(c.c2_fallback);
    EXPECT_NEAR(c.c1, 0.45, 1e-15);
}

TEST(RegionMeans, ZeroFiniteDifferencePartials) {
    std::mt19937_64 rng(2);
    const double h = 1e-5;
    for (int t = 0; t < 20; ++t) {
        const ImageGrid u = random_grid(rng, 6, 6);
        const ImageGrid ubar = random_grid(rng, 6, 6);
        const ImageGrid lam = random_grid(rng, 6, 6, 0.5, 3.0);
        const RegionMeans c = update_region_means(u, ubar, LambdaMap(lam));
        const long double c1 = c.c1, c2 = c.c2;
        const long double d1 =
            (oracle::fidelity(u, ubar, lam, c1 + h, c2) - oracle::fidelity(u, ubar, lam, c1 - h, c2)) /
            (2 * h);
        const long double d2 =
            (oracle::fidelity(u, ubar, lam, c1, c2 + h) - oracle::fidelity(u, ubar, lam, c1, c2 - h)) /
            (2 * h);
        EXPECT_LE(std::abs(static_cast<double>(d1)), 1e-8);
        EXPECT_LE(std::abs(static_cast<double>(d2)), 1e-8);
        EXPECT_GE(c.c1, *std::min_element(ubar.begin(), ubar.end()));
        EXPECT_LE(c.c1, *std::max_element(ubar.begin(), ubar.end()));
    }
}

TEST(RegionMeans, AgreeWithGoldenSection) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const ImageGrid u = random_grid(rng, 5, 7);
        const ImageGrid ubar = random_grid(rng, 5, 7);
        const ImageGrid lam = random_grid(rng, 5, 7, 0.5, 3.0);
        const RegionMeans c = update_region_means(u, ubar, LambdaMap(lam));
        const long double g1 = oracle::golden_section(
            [&](long double x) { return oracle::fidelity(u, ubar, lam, x, c.c2); }, 0.0L, 1.0L);
        const long double g2 = oracle::golden_section(
            [&](long double x) { return oracle::fidelity(u, ubar, lam, c.c1, x); }, 0.0L, 1.0L);
        EXPECT_NEAR(c.c1, static_cast<double>(g1), 1e-8);
        EXPECT_NEAR(c.c2, static_cast<double>(g2), 1e-8);
    }
}

TEST(FidelityResidual, Examples) {
    std::mt19937_64 rng(4);
    const ImageGrid ubar = random_grid(rng, 3, 3);
    for (double v : fidelity_residual(ubar, LambdaMap::uniform(3, 3, 2.0), 0.4, 0.4)) EXPECT_EQ(v, 0.0);
    EXPECT_NEAR(fidelity_residual(ImageGrid(1, 1, 0.5), LambdaMap::uniform(1, 1, 5.0), 0.1, 0.9)(0, 0),
                0.0, 1e-15);
    EXPECT_NEAR(fidelity_residual(ImageGrid(1, 1, 0.2), LambdaMap::uniform(1, 1, 2.0), 0.1, 0.9)(0, 0),
                -0.96, 1e-15);
}

TEST(Shrink, Examples) {
    EXPECT_EQ(shrink(0.0, 0.3), 0.0);
    EXPECT_EQ(shrink(2.0, 0.5), 1.5);
    EXPECT_EQ(shrink(-2.0, 0.5), -1.5);
    EXPECT_THROW(shrink(ImageGrid(2, 2), 0.0), ParameterError);
}

TEST(Shrink, MatchesScalarReferenceAndDeadZone) {
    for (int a = -40; a <= 40; ++a)
        for (int g = 1; g <= 20; ++g) {
            const double v = a * 0.05, gamma = g * 0.05;
            const double ref = std::abs(v) <= gamma ? 0.0 : (v > 0 ? v - gamma : v + gamma);
            EXPECT_NEAR(shrink(v, gamma), ref, 1e-15);
        }
}

TEST(Shrink, UniqueMinimizerAgainstSampling) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dv(-3, 3), dg(0.01, 2), dz(-1e-2, 1e-2);
    for (int t = 0; t < 200; ++t) {
        const double v = dv(rng), gamma = dg(rng);
        const double z = shrink(v, gamma);
        const double best = gamma * std::abs(z) + 0.5 * (z - v) * (z - v);
        for (int s = 0; s < 20; ++s) {
            const double w = z + dz(rng);
            EXPECT_GT(gamma * std::abs(w) + 0.5 * (w - v) * (w - v), best - 1e-15);
        }
    }
}

TEST(OuterStopped, Examples) {
    SolverConfig cfg;
    const std::vector<double> flat{0.0, 0.0};
    EXPECT_TRUE(outer_stopped(flat, 2, cfg));
    const std::vector<double> moving{1e-3, 9e-4};
    EXPECT_FALSE(outer_stopped(moving, 2, cfg));
    EXPECT_TRUE(outer_stopped(moving, cfg.maxit, cfg));
    const std::vector<double> one{0.5};
    EXPECT_FALSE(outer_stopped(one, 1, cfg));
}

TEST(GaussSeidel, ConstantWarmStartIsFixed) {
    const ImageGrid zero(5, 5, 0.0);
    SolverState s{ImageGrid(5, 5, 0.37), zero, zero, zero, zero,
                  LambdaMap::uniform(5, 5, 1), LambdaMap::uniform(5, 5, 1), 0, 0, 0, {}, {}};
    SolverConfig cfg;
    const GsResult res = solve_u_subproblem(s, zero, cfg);
    EXPECT_LE(max_abs_diff(res.u, s.u), 1e-15);
}

TEST(GaussSeidel, LinearLimitMatchesDenseSolve) {
    std::mt19937_64 rng(6);
    SolverConfig cfg;
    cfg.mu = 10.0;
    cfg.tol_gs = 1e-300;
    cfg.maxit_gs = 20000;
    const SolverState s = random_state(rng, 4, 4);
    const ImageGrid r = random_grid(rng, 4, 4, -5, 5);
    const GsResult res = gauss_seidel_u(s, r, cfg, GsMode::Linear);
    const oracle::LinearSystem sys = oracle::assemble(s, r, cfg.mu, cfg.prox_weight);
    const Eigen::VectorXd direct = oracle::dense_solve(sys);
    EXPECT_LE((oracle::vec(res.u) - direct).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LE((sys.a * oracle::vec(res.u) - sys.b).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GaussSeidel, UnclampedSolutionBeatsRandomCandidates) {
    std::mt19937_64 rng(7);
    SolverConfig cfg;
    cfg.mu = 10.0;
    const SolverState s = random_state(rng, 5, 5);
    const ImageGrid r = random_grid(rng, 5, 5, -5, 5);
    const Eigen::VectorXd x = oracle::dense_solve(oracle::assemble(s, r, cfg.mu, cfg.prox_weight));
    const double q = oracle::subproblem_objective(oracle::unvec(x, 5, 5), s, r, cfg.mu, cfg.prox_weight);
    for (int t = 0; t < 100; ++t) {
        const ImageGrid cand = random_grid(rng, 5, 5);
        EXPECT_LT(q, oracle::subproblem_objective(cand, s, r, cfg.mu, cfg.prox_weight));
    }
}

TEST(GaussSeidel, ProjectedStaysFeasibleAndBeatsCandidates) {
    std::mt19937_64 rng(8);
    SolverConfig cfg;
    cfg.mu = 10.0;
    cfg.tol_gs = 1e-300;
    cfg.maxit_gs = 5000;
    const SolverState s = random_state(rng, 5, 5);
    const ImageGrid r = random_grid(rng, 5, 5, -50, 50);
    const GsResult res = gauss_seidel_u(s, r, cfg, GsMode::Projected);
    for (double v : res.u) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    const double q = oracle::subproblem_objective(res.u, s, r, cfg.mu, cfg.prox_weight);
    for (int t = 0; t < 100; ++t)
        EXPECT_LE(q, oracle::subproblem_objective(random_grid(rng, 5, 5), s, r, cfg.mu, cfg.prox_weight));
}

TEST(GaussSeidel, StopsAtIterationCap) {
    std::mt19937_64 rng(9);
    SolverConfig cfg;
    cfg.tol_gs = 1e-300;
    cfg.maxit_gs = 3;
    const SolverState s = random_state(rng, 6, 6);
    EXPECT_EQ(gauss_seidel_u(s, random_grid(rng, 6, 6), cfg, GsMode::Linear).iterations, 3);
}

TEST(BregmanStep, BinaryImageKeepsPhaseMeans) {
    SynthSpec spec;
    spec.rows = spec.cols = 16;
    spec.fg = 1.0;
    spec.bg = 0.0;
    SolverConfig cfg;
    const Problem problem = make_problem(make_synthetic(spec).image, Strategy::constant(1000), cfg);
    SolverState s = initial_state(problem);
    bregman_step(s, problem, cfg);
    EXPECT_EQ(s.k, 1);
    EXPECT_EQ(s.c1, 1.0);
    EXPECT_EQ(s.c2, 0.0);
    for (double v : s.u) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    ASSERT_EQ(s.history.size(), 1u);
    EXPECT_TRUE(std::isfinite(s.history[0].gap_x));
}

TEST(BregmanStep, ConstraintGapShrinks) {
    std::mt19937_64 rng(10);
    SynthSpec spec;
    spec.rows = spec.cols = 16;
    ImageGrid u = make_synthetic(spec).image;
    std::normal_distribution<double> noise(0.0, 0.05);
    for (double& v : u) v = std::clamp(v + noise(rng), 0.0, 1.0);
    SolverConfig cfg;
    const Problem problem = make_problem(u, Strategy::constant(1000), cfg);
    SolverState s = initial_state(problem);
    for (int k = 0; k < 10; ++k) bregman_step(s, problem, cfg);
    EXPECT_LT(s.history[9].gap_x, s.history[0].gap_x);
    EXPECT_LT(s.history[9].gap_y, s.history[0].gap_y);
}

TEST(BregmanStep, ThrRefreshesWeightsFromPreviousIterate) {
    std::mt19937_64 rng(11);
    SolverConfig cfg;
    const Bounds b{170, 800};
    const Problem problem = make_problem(random_grid(rng, 12, 12), Strategy::thr(b), cfg);
    SolverState s = initial_state(problem);
    for (int k = 0; k < 4; ++k) {
        const ImageGrid prev = s.u;
        bregman_step(s, problem, cfg);
        EXPECT_EQ(s.raw_lambda, lambda_thr(prev, b));
    }
}

TEST(Segment, DegenerateAndInvalidInputs) {
    EXPECT_THROW(segment(ImageGrid(8, 8, 0.5), Strategy::constant(100), SolverConfig{}),
                 DegenerateImageError);
    SolverConfig bad;
    bad.tol = -1;
    EXPECT_THROW(segment(disk(8).image, Strategy::constant(100), bad), ParameterError);
    EXPECT_THROW(segment(from_rows({{0.0, 1.5}}), Strategy::constant(100), SolverConfig{}),
                 ParameterError);
}

TEST(Segment, NoiselessDiskIsRecovered) {
    const SynthImage img = disk();
    const SegmentationResult res = segment(img.image, Strategy::constant(700), SolverConfig{});
    EXPECT_GE(dice_jaccard(res.mask, img.truth).dice, 0.99);
    EXPECT_LE(res.outer_iterations, 30);
    EXPECT_EQ(res.mask, threshold(res.u_final, 0.5));
    double mean = 0.0;
    for (const auto& h : res.history) mean += h.gs_iterations;
    EXPECT_DOUBLE_EQ(res.mean_gs_iterations, mean / static_cast<double>(res.history.size()));
}

TEST(Segment, AlphaInsensitiveOnConvergedResult) {
    const SynthImage img = disk();
    const SegmentationResult res = segment(img.image, Strategy::constant(700), SolverConfig{});
    EXPECT_GE(pixel_agreement(threshold(res.u_final, 0.4), threshold(res.u_final, 0.6)), 0.99);
}

TEST(Segment, IteratesStayFeasible) {
    std::mt19937_64 rng(12);
    const ImageGrid u = random_grid(rng, 16, 16);
    segment(u, Strategy::mm(Bounds{100, 1000}), SolverConfig{}, [](const SolverState& s) {
        for (double v : s.u) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
    });
}

TEST(Segment, DeterministicAcrossRuns) {
    std::mt19937_64 rng(13);
    const ImageGrid u = random_grid(rng, 20, 20);
    const Strategy s = Strategy::ctd(Bounds{200, 5000});
    const SegmentationResult a = segment(u, s, SolverConfig{});
    const SegmentationResult b = segment(u, s, SolverConfig{});
    EXPECT_EQ(a.u_final, b.u_final);
    EXPECT_EQ(a.outer_iterations, b.outer_iterations);
}

TEST(Segment, CenMatchesHandInlinedReference) {
    SynthSpec spec;
    spec.rows = spec.cols = 16;
    std::mt19937_64 rng(14);
    ImageGrid u = make_synthetic(spec).image;
    std::normal_distribution<double> noise(0.0, 0.1);
    for (double& v : u) v = std::clamp(v + noise(rng), 0.0, 1.0);
    const SolverConfig cfg;
    std::vector<ImageGrid> iterates;
    segment(u, Strategy::constant(700), cfg, [&](const SolverState& s) { iterates.push_back(s.u); });
    const oracle::UniformRun ref = oracle::uniform_reference(u, 700, cfg);
    ASSERT_EQ(iterates.size(), ref.iterates.size());
    for (std::size_t k = 0; k < iterates.size(); ++k)
        EXPECT_LE(max_abs_diff(iterates[k], ImageGrid(16, 16, ref.iterates[k])), 1e-12) << k;
}

TEST(Energy, MidpointConvexity) {
    std::mt19937_64 rng(15);
    for (int t = 0; t < 100; ++t) {
        const ImageGrid ubar = random_grid(rng, 6, 6);
        const LambdaMap lam(random_grid(rng, 6, 6, 0.1, 10));
        const ImageGrid u = random_grid(rng, 6, 6), v = random_grid(rng, 6, 6);
        ImageGrid mid(6, 6);
        for (std::size_t p = 0; p < mid.size(); ++p)
            mid.values()[p] = 0.5 * (u.values()[p] + v.values()[p]);
        const double lhs = energy(mid, ubar, lam, 0.7, 0.2);
        const double rhs = 0.5 * (energy(u, ubar, lam, 0.7, 0.2) + energy(v, ubar, lam, 0.7, 0.2));
        EXPECT_LE(lhs, rhs + 1e-10);
    }
}

TEST(Trace, OneRowPerIteration) {
    const SegmentationResult res = segment(disk(16).image, Strategy::constant(700), SolverConfig{});
    std::ostringstream os;
    write_trace(os, res.history);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "k diff gs_iters c1 c2");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, res.outer_iterations);
}
