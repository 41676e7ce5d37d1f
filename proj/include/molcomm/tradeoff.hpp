#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace molcomm
{
//---------------------------------------------------------------------------//
//! A scalar function of n_m with an analytic derivative.
template<class M>
concept DifferentiableObjective = requires(M const& m, double x) {
    { m.value(x) } -> std::convertible_to<double>;
    { m.derivative(x) } -> std::convertible_to<double>;
};

//---------------------------------------------------------------------------//
// NORMALIZATION
//---------------------------------------------------------------------------//
struct NormalizedSeries
{
    std::vector<double> values;
    double min = 0;
    double max = 0;
};

//! Min-max normalization of a series onto [0, 1].
inline NormalizedSeries normalize_series(std::span<double const> values)
{
    if (values.size() < 2)
    {
        throw ContractViolation("normalize_series needs at least two values");
    }
    auto const [lo, hi] = std::minmax_element(values.begin(), values.end());
    NormalizedSeries out{{}, *lo, *hi};
    if (!(out.max > out.min))
    {
        throw NumericalError("degenerate normalization: constant series");
    }
    double const range = out.max - out.min;
    out.values.reserve(values.size());
    for (double v : values)
    {
        out.values.push_back((v - out.min) / range);
    }
    return out;
}

//! Evenly spaced points from lo to hi inclusive; the endpoints are exact.
inline std::vector<double> uniform_grid(double lo, double hi, int points)
{
    if (points < 2 || !(hi > lo))
    {
        throw ConfigError("grid needs at least 2 points and lo < hi");
    }
    std::vector<double> grid(points);
    double const step = (hi - lo) / (points - 1);
    for (int i = 0; i < points; ++i)
    {
        grid[i] = lo + i * step;
    }
    grid.back() = hi;
    return grid;
}

/*!
 * Extrema of n_m and P_e over a precomputed grid.
 *
 * Frozen before descent so that the normalized balance function and its
 * derivative refer to one fixed scale.
 */
class NormalizationContext
{
  public:
    NormalizationContext(double n_min, double n_max, double pe_min, double pe_max)
        : n_min_(n_min), n_max_(n_max), pe_min_(pe_min), pe_max_(pe_max)
    {
        detail::require<ConfigError>(n_min < n_max, "n_min must be < n_max");
        detail::require<NumericalError>(
            pe_min < pe_max, "degenerate normalization: constant P_e on grid");
    }

    template<DifferentiableObjective M>
    static NormalizationContext
    from_grid(M const& model, std::span<double const> grid)
    {
        if (grid.size() < 2)
        {
            throw ContractViolation("normalization grid needs >= 2 points");
        }
        std::vector<double> pe;
        pe.reserve(grid.size());
        for (double n : grid)
        {
            pe.push_back(model.value(n));
        }
        auto const [lo, hi] = std::minmax_element(pe.begin(), pe.end());
        return {grid.front(), grid.back(), *lo, *hi};
    }

    double n_min() const { return n_min_; }
    double n_max() const { return n_max_; }
    double pe_min() const { return pe_min_; }
    double pe_max() const { return pe_max_; }

    double n_hat(double n) const { return (n - n_min_) / (n_max_ - n_min_); }
    double p_hat(double p) const { return (p - pe_min_) / (pe_max_ - pe_min_); }

  private:
    double n_min_;
    double n_max_;
    double pe_min_;
    double pe_max_;
};

//---------------------------------------------------------------------------//
// BALANCE FUNCTION
//---------------------------------------------------------------------------//
//! Non-negative weights, stored rescaled to sum to one.
class BalanceWeights
{
  public:
    BalanceWeights(double w_n, double w_p)
    {
        detail::require<ConfigError>(
            std::isfinite(w_n) && std::isfinite(w_p) && w_n >= 0 && w_p >= 0,
            "balance weights must be finite and non-negative");
        detail::require<ConfigError>(w_n + w_p > 0,
                                     "balance weights must not both be zero");
        w_n_ = w_n / (w_n + w_p);
        w_p_ = w_p / (w_n + w_p);
    }

    double molecules() const { return w_n_; }
    double error_rate() const { return w_p_; }

  private:
    double w_n_;
    double w_p_;
};

struct BalancePoint
{
    double n_m = 0;
    double p_error = 0;
    double value = 0;
    double slope = 0;  //!< d f / d n_m
    bool clamped = false;  //!< requested n_m lay outside [n_min, n_max]
};

/*!
 * Weighted sum of normalized molecule count and normalized error rate,
 * with its derivative in n_m.
 */
template<DifferentiableObjective M>
BalancePoint balance_value_and_gradient(double n_m,
                                        NormalizationContext const& ctx,
                                        BalanceWeights const& w,
                                        M const& model)
{
    BalancePoint pt;
    pt.n_m = std::clamp(n_m, ctx.n_min(), ctx.n_max());
    pt.clamped = (pt.n_m != n_m);
    pt.p_error = model.value(pt.n_m);
    pt.value = w.molecules() * ctx.n_hat(pt.n_m)
               + w.error_rate() * ctx.p_hat(pt.p_error);
    pt.slope = w.molecules() / (ctx.n_max() - ctx.n_min())
               + w.error_rate() / (ctx.pe_max() - ctx.pe_min())
                     * model.derivative(pt.n_m);
    return pt;
}

//---------------------------------------------------------------------------//
// OPTIMIZERS
//---------------------------------------------------------------------------//
struct OptimizerConfig
{
    double learning_rate = 1e6;  //!< molecules per unit of df/dn_m
    int max_iterations = 10000;
    double tolerance = 1e-9;
    double initial_n_m = 1000;
};

enum class StepEvent
{
    start,
    step,
    bound,  //!< accepted step that was clamped onto a bound
    halved,  //!< uphill step rejected, learning rate halved
};

inline char const* to_string(StepEvent e)
{
    switch (e)
    {
        case StepEvent::start:
            return "start";
        case StepEvent::step:
            return "step";
        case StepEvent::bound:
            return "bound";
        case StepEvent::halved:
            return "halved";
    }
    return "?";
}

struct TraceEntry
{
    int iteration;
    double n_m;
    double value;
    double learning_rate;
    StepEvent event;
};

struct TradeoffResult
{
    double n_star = 0;
    double n_star_rounded = 0;
    double p_e_star = 0;
    double f_star = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<TraceEntry> trace;
};

namespace detail
{
inline void validate(OptimizerConfig const& cfg, NormalizationContext const& ctx)
{
    require<ConfigError>(cfg.learning_rate > 0, "learning_rate must be > 0");
    require<ConfigError>(cfg.max_iterations >= 1, "max_iterations must be >= 1");
    require<ConfigError>(cfg.tolerance > 0, "tolerance must be > 0");
    require<ConfigError>(cfg.initial_n_m >= ctx.n_min()
                             && cfg.initial_n_m <= ctx.n_max(),
                         "initial n_m must lie in [nm_min, nm_max]");
}
}  // namespace detail

/*!
 * Projected gradient descent on the balance function over n_m.
 *
 * Each iteration proposes n <- clamp(n - lr * df/dn). A proposal that raises
 * f (or moves n_m without lowering it) is rejected and the learning rate halved; an accepted one grows the rate
 * by \c growth so that long flat tails (one weight near zero) are still
 * crossed. Convergence requires both the change in f and the normalized
 * change in n_m to fall below the tolerance, or two consecutive accepted
 * steps that land on the same bound.
 */
template<DifferentiableObjective M>
TradeoffResult optimize_tradeoff(OptimizerConfig const& cfg,
                                 NormalizationContext const& ctx,
                                 BalanceWeights const& w,
                                 M const& model)
{
    constexpr double growth = 2.0;
    detail::validate(cfg, ctx);

    TradeoffResult result;
    double lr = cfg.learning_rate;
    auto current = balance_value_and_gradient(cfg.initial_n_m, ctx, w, model);
    result.trace.push_back({0, current.n_m, current.value, lr, StepEvent::start});

    int bound_hits = 0;
    int it = 1;
    for (; it <= cfg.max_iterations; ++it)
    {
        if (!std::isfinite(current.slope) || !std::isfinite(current.value))
        {
            throw NumericalError("non-finite balance gradient at n_m = "
                                 + std::to_string(current.n_m));
        }
        double const proposal = current.n_m - lr * current.slope;
        auto next = balance_value_and_gradient(proposal, ctx, w, model);
        // Ties that move n_m are treated as uphill so equal-valued points
        // cannot be visited in a cycle
        bool const uphill = next.value > current.value
                            || (next.value == current.value
                                && next.n_m != current.n_m);
        if (uphill)
        {
            lr /= 2;
            result.trace.push_back(
                {it, current.n_m, current.value, lr, StepEvent::halved});
            bound_hits = 0;
            continue;
        }

        double const df = std::abs(next.value - current.value);
        double const dn = std::abs(next.n_m - current.n_m)
                          / (ctx.n_max() - ctx.n_min());
        bool const on_bound = next.clamped
                              || next.n_m == ctx.n_min()
                              || next.n_m == ctx.n_max();
        if (!on_bound)
        {
            bound_hits = 0;
        }
        else
        {
            bound_hits = (bound_hits > 0 && next.n_m == current.n_m)
                             ? bound_hits + 1
                             : 1;
        }
        current = next;
        result.trace.push_back({it,
                                current.n_m,
                                current.value,
                                lr,
                                on_bound ? StepEvent::bound : StepEvent::step});
        if (bound_hits >= 2 || (df < cfg.tolerance && dn < cfg.tolerance))
        {
            result.converged = true;
            break;
        }
        lr *= growth;
    }

    result.iterations = std::min(it, cfg.max_iterations);
    result.n_star = current.n_m;
    result.n_star_rounded
        = std::clamp(std::round(current.n_m), ctx.n_min(), ctx.n_max());
    result.p_e_star = current.p_error;
    result.f_star = current.value;
    return result;
}

struct GridOptimum
{
    double n_m = 0;
    double value = 0;
    std::size_t index = 0;
};

//! Exhaustive argmin of the balance function over a sorted grid.
template<DifferentiableObjective M>
GridOptimum grid_search_oracle(std::span<double const> grid,
                               NormalizationContext const& ctx,
                               BalanceWeights const& w,
                               M const& model)
{
    if (grid.size() < 11)
    {
        throw ContractViolation("grid_search_oracle: need at least 11 points");
    }
    if (!std::is_sorted(grid.begin(), grid.end()))
    {
        throw ContractViolation("grid_search_oracle: grid must be sorted");
    }
    GridOptimum best;
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        double const f = balance_value_and_gradient(grid[i], ctx, w, model).value;
        // Strict comparison keeps the smallest n_m on ties
        if (i == 0 || f < best.value)
        {
            best = {grid[i], f, i};
        }
    }
    return best;
}

}  // namespace molcomm
