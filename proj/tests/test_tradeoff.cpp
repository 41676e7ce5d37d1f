#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "molcomm/gradient.hpp"
#include "molcomm/tradeoff.hpp"

using namespace molcomm;

namespace
{
struct Fixture
{
    AnalyticBerModel model{ChannelParams{}, 4, {ThresholdMode::fractional, 0.5}};
    std::vector<double> grid = uniform_grid(1e3, 1e5, 101);
    NormalizationContext ctx = NormalizationContext::from_grid(model, grid);
};

Fixture const& fixture()
{
    static Fixture const f;
    return f;
}

OptimizerConfig reference_optimizer()
{
    return {1e6, 10000, 1e-9, 1e3};
}

// Toy quadratic objective with a known minimizer, for optimizer mechanics
struct Parabola
{
    double center;
    double value(double x) const { return 1.0 + 1e-9 * (x - center) * (x - center); }
    double derivative(double x) const { return 2e-9 * (x - center); }
};
}  // namespace

TEST(Normalize, MapsOntoUnitInterval)
{
    std::vector<double> const v{1000, 5500, 10000};
    auto const s = normalize_series(v);
    EXPECT_DOUBLE_EQ(s.values[0], 0.0);
    EXPECT_DOUBLE_EQ(s.values[1], 0.5);
    EXPECT_DOUBLE_EQ(s.values[2], 1.0);
    EXPECT_EQ(s.min, 1000);
    EXPECT_EQ(s.max, 10000);
}

TEST(Normalize, DegenerateInputs)
{
    std::vector<double> const flat{3, 3, 3};
    EXPECT_THROW(normalize_series(flat), NumericalError);
    std::vector<double> const single{3};
    EXPECT_THROW(normalize_series(single), ContractViolation);
    EXPECT_THROW(NormalizationContext(1, 2, 0.1, 0.1), NumericalError);
}

TEST(Grid, EndpointsExact)
{
    auto const g = uniform_grid(1e3, 1e5, 101);
    ASSERT_EQ(g.size(), 101u);
    EXPECT_EQ(g.front(), 1e3);
    EXPECT_EQ(g.back(), 1e5);
    EXPECT_DOUBLE_EQ(g[1], 1990.0);
    EXPECT_THROW(uniform_grid(1, 1, 5), ConfigError);
}

TEST(Weights, Renormalized)
{
    BalanceWeights const w(3, 1);
    EXPECT_DOUBLE_EQ(w.molecules(), 0.75);
    EXPECT_DOUBLE_EQ(w.error_rate(), 0.25);
    EXPECT_THROW(BalanceWeights(0, 0), ConfigError);
    EXPECT_THROW(BalanceWeights(-1, 2), ConfigError);
}

TEST(Balance, MoleculeOnlySlopeIsConstant)
{
    auto const& f = fixture();
    BalanceWeights const w(1, 0);
    for (double n : {1e3, 2e4, 9e4})
    {
        auto const pt = balance_value_and_gradient(n, f.ctx, w, f.model);
        EXPECT_NEAR(pt.slope, 1.0 / 99000, 1e-20);
        EXPECT_DOUBLE_EQ(pt.value, (n - 1e3) / 99000);
    }
}

TEST(Balance, ClampsOutsideRange)
{
    auto const& f = fixture();
    BalanceWeights const w(0.5, 0.5);
    auto const pt = balance_value_and_gradient(5e5, f.ctx, w, f.model);
    EXPECT_TRUE(pt.clamped);
    EXPECT_EQ(pt.n_m, 1e5);
    EXPECT_FALSE(balance_value_and_gradient(5e4, f.ctx, w, f.model).clamped);
}

TEST(Balance, SingleInteriorMinimumOnGrid)
{
    auto const& f = fixture();
    BalanceWeights const w(0.5, 0.5);
    std::vector<double> values;
    for (double n : f.grid)
    {
        values.push_back(balance_value_and_gradient(n, f.ctx, w, f.model).value);
    }
    // Strictly decreasing up to one turning point, then strictly increasing
    std::size_t turn = 0;
    while (turn + 1 < values.size() && values[turn + 1] < values[turn])
    {
        ++turn;
    }
    EXPECT_GT(turn, 0u);
    EXPECT_LT(turn, values.size() - 1);
    for (std::size_t i = turn + 1; i < values.size(); ++i)
    {
        EXPECT_GT(values[i], values[i - 1]) << i;
    }
    EXPECT_NEAR(values.front(), 0.5, 1e-12);
    EXPECT_NEAR(values.back(), 0.5, 1e-12);
}

TEST(GridOracle, ReferenceArgmin)
{
    auto const& f = fixture();
    for (auto [wn, wp] : {std::pair{0.3, 0.7}, {0.5, 0.5}, {0.7, 0.3}})
    {
        auto const best
            = grid_search_oracle(f.grid, f.ctx, BalanceWeights(wn, wp), f.model);
        EXPECT_EQ(best.n_m, 2980) << wn;
        EXPECT_EQ(best.index, 2u);
    }
}

TEST(GridOracle, Guards)
{
    auto const& f = fixture();
    BalanceWeights const w(0.5, 0.5);
    auto const coarse = uniform_grid(1e3, 1e5, 10);
    EXPECT_THROW(grid_search_oracle(coarse, f.ctx, w, f.model), ContractViolation);
    auto unsorted = f.grid;
    std::swap(unsorted[3], unsorted[4]);
    EXPECT_THROW(grid_search_oracle(unsorted, f.ctx, w, f.model),
                 ContractViolation);
}

TEST(Optimizer, ExtremeWeightsHitBounds)
{
    auto const& f = fixture();
    auto cfg = reference_optimizer();

    cfg.initial_n_m = 5e4;
    auto const cheap = optimize_tradeoff(cfg, f.ctx, BalanceWeights(1, 0), f.model);
    EXPECT_TRUE(cheap.converged);
    EXPECT_EQ(cheap.n_star, 1e3);
    EXPECT_EQ(
        grid_search_oracle(f.grid, f.ctx, BalanceWeights(1, 0), f.model).n_m, 1e3);

    cfg.initial_n_m = 1e3;
    auto const reliable
        = optimize_tradeoff(cfg, f.ctx, BalanceWeights(0, 1), f.model);
    EXPECT_TRUE(reliable.converged);
    EXPECT_EQ(reliable.n_star, 1e5);
    EXPECT_EQ(reliable.n_star_rounded, 1e5);
}

TEST(Optimizer, AgreesWithGridOracle)
{
    auto const& f = fixture();
    double const spacing = f.grid[1] - f.grid[0];
    for (auto [wn, wp] : {std::pair{0.3, 0.7}, {0.5, 0.5}, {0.7, 0.3}})
    {
        BalanceWeights const w(wn, wp);
        auto const r = optimize_tradeoff(reference_optimizer(), f.ctx, w, f.model);
        auto const best = grid_search_oracle(f.grid, f.ctx, w, f.model);
        EXPECT_TRUE(r.converged) << wn;
        EXPECT_LE(std::abs(r.n_star - best.n_m), spacing) << wn;
        EXPECT_LE(r.f_star, best.value + 1e-12) << wn;
        EXPECT_EQ(r.n_star_rounded, std::round(r.n_star));
    }
}

TEST(Optimizer, InteriorOptimumIsStationary)
{
    auto const& f = fixture();
    BalanceWeights const w(0.5, 0.5);
    auto const r = optimize_tradeoff(reference_optimizer(), f.ctx, w, f.model);
    ASSERT_TRUE(r.converged);
    auto const pt = balance_value_and_gradient(r.n_star, f.ctx, w, f.model);
    // Slope measured in normalized units (per full n_m range)
    EXPECT_LT(std::abs(pt.slope) * 99000, 1e-3);
    EXPECT_DOUBLE_EQ(pt.value, r.f_star);
    EXPECT_DOUBLE_EQ(pt.p_error, r.p_e_star);
}

TEST(Optimizer, MoleculeWeightTrend)
{
    auto const& f = fixture();
    double prev_n = INFINITY;
    double prev_pe = 0;
    for (double wn = 0.1; wn < 0.95; wn += 0.1)
    {
        auto const r = optimize_tradeoff(
            reference_optimizer(), f.ctx, BalanceWeights(wn, 1 - wn), f.model);
        ASSERT_TRUE(r.converged) << wn;
        EXPECT_LE(r.n_star, prev_n * (1 + 1e-9)) << wn;
        EXPECT_GE(r.p_e_star, prev_pe * (1 - 1e-9)) << wn;
        prev_n = r.n_star;
        prev_pe = r.p_e_star;
    }
}

TEST(Optimizer, OversizedStepIsHalvedAndTraceDescends)
{
    auto const& f = fixture();
    auto cfg = reference_optimizer();
    cfg.learning_rate = 1e12;
    auto const r = optimize_tradeoff(cfg, f.ctx, BalanceWeights(0.5, 0.5), f.model);
    EXPECT_TRUE(r.converged);
    int halvings = 0;
    for (std::size_t i = 1; i < r.trace.size(); ++i)
    {
        halvings += r.trace[i].event == StepEvent::halved;
        EXPECT_LE(r.trace[i].value, r.trace[i - 1].value);
    }
    EXPECT_GT(halvings, 0);
    EXPECT_EQ(r.trace.front().event, StepEvent::start);
}

TEST(Optimizer, QuadraticMinimizer)
{
    NormalizationContext const ctx(0, 1e4, 0.0, 1.0);
    BalanceWeights const w(0, 1);
    OptimizerConfig cfg{1e8, 10000, 1e-12, 100};
    auto const r = optimize_tradeoff(cfg, ctx, w, Parabola{3700});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.n_star, 3700, 1.0);
    EXPECT_EQ(r.n_star_rounded, 3700);
}

TEST(Optimizer, IterationBudgetExhausted)
{
    auto const& f = fixture();
    auto cfg = reference_optimizer();
    cfg.max_iterations = 1;
    auto const r = optimize_tradeoff(cfg, f.ctx, BalanceWeights(0.5, 0.5), f.model);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 1);
}

TEST(Optimizer, ConfigValidation)
{
    auto const& f = fixture();
    BalanceWeights const w(0.5, 0.5);
    auto cfg = reference_optimizer();
    cfg.initial_n_m = 10;
    EXPECT_THROW(optimize_tradeoff(cfg, f.ctx, w, f.model), ConfigError);
    cfg = reference_optimizer();
    cfg.learning_rate = 0;
    EXPECT_THROW(optimize_tradeoff(cfg, f.ctx, w, f.model), ConfigError);
    cfg = reference_optimizer();
    cfg.tolerance = -1;
    EXPECT_THROW(optimize_tradeoff(cfg, f.ctx, w, f.model), ConfigError);
}

TEST(Optimizer, Deterministic)
{
    auto const& f = fixture();
    BalanceWeights const w(0.3, 0.7);
    auto const a = optimize_tradeoff(reference_optimizer(), f.ctx, w, f.model);
    auto const b = optimize_tradeoff(reference_optimizer(), f.ctx, w, f.model);
    EXPECT_EQ(a.n_star, b.n_star);
    EXPECT_EQ(a.trace.size(), b.trace.size());
}
