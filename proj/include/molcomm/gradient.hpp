#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>

#include "channel.hpp"
#include "detection.hpp"
#include "errors.hpp"

namespace molcomm
{
//! Derivatives of one pattern's (mu, sigma) with respect to n_m.
struct StatsGradient
{
    double d_mean = 0;
    double d_sigma = 0;
    bool degenerate = false;
};

struct BerGradient
{
    double d_miss = 0;
    double d_false_alarm = 0;
    double d_error = 0;
};

/*!
 * d mu / d n_m and d sigma / d n_m for one ISI pattern.
 *
 * mu is linear in n_m and sigma = sqrt(mu / V_R), so
 * d sigma = (d mu / V_R) / (2 sigma). A degenerate (all-silent) pattern has
 * no sigma derivative and reports zero with the flag set.
 */
inline StatsGradient stats_gradients(TapVector const& taps,
                                     double n_m,
                                     IsiPattern const& pattern,
                                     Hypothesis hyp,
                                     double volume)
{
    detail::check_pattern(taps, pattern);
    double const per_molecule = detail::mean_per_molecule(taps, pattern, hyp);
    StatsGradient g;
    g.d_mean = per_molecule;
    double const sigma = std::sqrt(n_m * per_molecule / volume);
    if (sigma == 0)
    {
        g.degenerate = true;
        return g;
    }
    g.d_sigma = per_molecule / volume / (2 * sigma);
    return g;
}

namespace detail
{
/*!
 * d z / d n_m for z = (C - mu) / sigma, with C, mu, sigma all functions of
 * n_m.
 */
inline double standardized_slope(double threshold,
                                 double threshold_slope,
                                 HypothesisStats const& s,
                                 StatsGradient const& g)
{
    double const sigma = std::sqrt(s.variance);
    return (-g.d_mean * sigma - (threshold - s.mean) * g.d_sigma
            + threshold_slope * sigma)
           / s.variance;
}
}  // namespace detail

/*!
 * Analytic derivatives of P_M, P_FA and P_e with respect to n_m.
 *
 * Uses dQ/dz = -phi(z). In fractional mode the threshold itself scales with
 * n_m and contributes alpha * h(t_p) to dz/dn_m. Degenerate patterns decide
 * deterministically and contribute nothing.
 */
inline BerGradient error_prob_gradients(TapVector const& taps,
                                        LinkConfig const& link,
                                        double volume)
{
    detail::check_link(taps, link);
    double const threshold
        = resolve_threshold(link.threshold, link.n_m, taps.main_tap());
    double const slope = threshold_slope(link.threshold, taps.main_tap());

    std::uint32_t const count = std::uint32_t{1} << link.memory_length;
    double d_miss = 0;
    double d_false_alarm = 0;
    for (std::uint32_t bits = 0; bits < count; ++bits)
    {
        IsiPattern const pattern{bits, link.memory_length};
        for (auto hyp : {Hypothesis::bit1, Hypothesis::bit0})
        {
            auto const s = hypothesis_stats(taps, link.n_m, pattern, hyp, volume);
            if (s.degenerate)
            {
                continue;
            }
            auto const g = stats_gradients(taps, link.n_m, pattern, hyp, volume);
            double const z = (threshold - s.mean) / std::sqrt(s.variance);
            double const dz = detail::standardized_slope(threshold, slope, s, g);
            // Miss term is Q(-z), false-alarm term is Q(z)
            if (hyp == Hypothesis::bit1)
            {
                d_miss += normal_pdf(z) * dz;
            }
            else
            {
                d_false_alarm -= normal_pdf(z) * dz;
            }
        }
    }
    BerGradient r;
    r.d_miss = d_miss / count;
    r.d_false_alarm = d_false_alarm / count;
    r.d_error = (r.d_miss + r.d_false_alarm) / 2;
    return r;
}

//---------------------------------------------------------------------------//
/*!
 * Central difference (f(x+h) - f(x-h)) / 2h with h = relative_step * |x|.
 */
template<class F>
double central_difference(F&& f, double x, double relative_step)
{
    if (!(relative_step > 1e-8 && relative_step < 1e-2))
    {
        throw ContractViolation("relative_step must lie in (1e-8, 1e-2)");
    }
    double const h = relative_step * std::abs(x);
    if (!(h > 0))
    {
        throw ContractViolation("finite difference around zero");
    }
    double const hi = f(x + h);
    double const lo = f(x - h);
    if (!std::isfinite(hi) || !std::isfinite(lo))
    {
        throw NumericalError("non-finite function value in finite difference");
    }
    return (hi - lo) / (2 * h);
}

//! Relative error between an analytic derivative and the central difference.
template<class F>
double finite_difference_check(F&& f,
                               double analytic,
                               double x,
                               double relative_step)
{
    double const numeric = central_difference(f, x, relative_step);
    return std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-300);
}

//---------------------------------------------------------------------------//
/*!
 * P_e(n_m) and its derivative for a fixed channel and threshold rule.
 *
 * This is the evaluator the tradeoff optimizer descends on.
 */
class AnalyticBerModel
{
  public:
    AnalyticBerModel(ChannelParams const& params,
                     int memory_length,
                     ThresholdSpec threshold)
        : taps_(channel_taps(params, memory_length))
        , volume_(receiver_volume(params))
        , memory_length_(memory_length)
        , threshold_(threshold)
    {
        validate(threshold_);
    }

    LinkConfig link(double n_m) const
    {
        return {n_m, memory_length_, threshold_};
    }

    BerResult evaluate(double n_m) const
    {
        return error_probabilities(taps_, link(n_m), volume_);
    }

    BerGradient gradient(double n_m) const
    {
        return error_prob_gradients(taps_, link(n_m), volume_);
    }

    double value(double n_m) const { return evaluate(n_m).p_error; }
    double derivative(double n_m) const { return gradient(n_m).d_error; }

    TapVector const& taps() const { return taps_; }
    double volume() const { return volume_; }

  private:
    TapVector taps_;
    double volume_;
    int memory_length_;
    ThresholdSpec threshold_;
};

}  // namespace molcomm
