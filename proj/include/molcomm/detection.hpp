#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "channel.hpp"
#include "errors.hpp"

namespace molcomm
{
//---------------------------------------------------------------------------//
// TYPES
//---------------------------------------------------------------------------//
enum class ThresholdMode
{
    absolute,  //!< value is a concentration, 1/m^3
    fractional,  //!< value is alpha in (0, 1); threshold = alpha n_m h(t_p)
};

struct ThresholdSpec
{
    ThresholdMode mode = ThresholdMode::fractional;
    double value = 0.5;
};

/*!
 * Per-bit OOK link setup. n_m stays real-valued so that the optimizer can
 * move it continuously.
 */
struct LinkConfig
{
    double n_m = 1000;
    int memory_length = 4;
    ThresholdSpec threshold;
};

enum class Hypothesis
{
    bit0,  //!< nothing released in the current interval
    bit1,  //!< n_m molecules released in the current interval
};

/*!
 * Bits sent in the L preceding intervals. Bit (j-1) of \c bits is the bit
 * sent j intervals ago and multiplies taps[j].
 */
struct IsiPattern
{
    std::uint32_t bits = 0;
    int length = 0;

    bool at_lag(int lag) const { return (bits >> (lag - 1)) & 1u; }
};

struct HypothesisStats
{
    double mean = 0;  //!< 1/m^3
    double variance = 0;  //!< 1/m^6
    bool degenerate = false;  //!< variance is exactly zero
};

struct BerResult
{
    double p_miss = 0;
    double p_false_alarm = 0;
    double p_error = 0;
};

//! Largest ISI memory accepted by pattern enumeration (2^24 patterns).
inline constexpr int max_enumerated_memory = 24;

//---------------------------------------------------------------------------//
// FUNCTIONS
//---------------------------------------------------------------------------//
/*!
 * Standard normal tail probability Q(x) = P(Z > x).
 *
 * Evaluated through erfc so that both tails keep full relative precision;
 * 1 - Phi(x) would cancel catastrophically for x > ~8.
 */
inline double q_function(double x)
{
    if (std::isnan(x))
    {
        throw DomainError("q_function: NaN argument");
    }
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

//! Standard normal density, -dQ/dx.
inline double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi);
}

inline void validate(ThresholdSpec const& spec)
{
    detail::require<ConfigError>(std::isfinite(spec.value) && spec.value > 0,
                                 "threshold value must be positive");
    if (spec.mode == ThresholdMode::fractional)
    {
        detail::require<ConfigError>(spec.value < 1,
                                     "fractional threshold must be below 1");
    }
}

/*!
 * Decision threshold C_Thr in concentration units.
 *
 * The result must lie strictly between zero and the noiseless peak
 * n_m * main_tap, otherwise a transmitted one could never be detected.
 */
inline double
resolve_threshold(ThresholdSpec const& spec, double n_m, double main_tap)
{
    validate(spec);
    double const threshold = spec.mode == ThresholdMode::absolute
                                 ? spec.value
                                 : spec.value * n_m * main_tap;
    double const c_max = n_m * main_tap;
    if (!(threshold < c_max))
    {
        throw ConfigError("threshold " + std::to_string(threshold)
                          + " must be below the peak concentration "
                          + std::to_string(c_max));
    }
    return threshold;
}

//! Derivative of the resolved threshold with respect to n_m.
inline double threshold_slope(ThresholdSpec const& spec, double main_tap)
{
    return spec.mode == ThresholdMode::absolute ? 0.0 : spec.value * main_tap;
}

namespace detail
{
//! Sum of taps[j] over the lags set in the pattern, fixed order j = 1..L.
inline double isi_tap_sum(TapVector const& taps, IsiPattern const& pattern)
{
    double sum = 0;
    for (int lag = 1; lag <= pattern.length; ++lag)
    {
        if (pattern.at_lag(lag))
        {
            sum += taps.taps[lag];
        }
    }
    return sum;
}

//! Per-molecule mean contribution: taps[0]*[H1] + sum of ISI taps.
inline double mean_per_molecule(TapVector const& taps,
                                IsiPattern const& pattern,
                                Hypothesis hyp)
{
    double const isi = isi_tap_sum(taps, pattern);
    return hyp == Hypothesis::bit1 ? taps.taps[0] + isi : isi;
}

inline void check_pattern(TapVector const& taps, IsiPattern const& pattern)
{
    if (pattern.length < 0
        || static_cast<std::size_t>(pattern.length) > taps.memory_length())
    {
        throw ContractViolation("ISI pattern length " + std::to_string(
                                    pattern.length)
                                + " does not fit the tap vector");
    }
}

inline void check_link(TapVector const& taps, LinkConfig const& link)
{
    if (!(link.n_m > 0) || !std::isfinite(link.n_m))
    {
        throw ConfigError("molecule count must be positive");
    }
    if (link.memory_length < 0)
    {
        throw ConfigError("memory_length must be non-negative");
    }
    if (link.memory_length > max_enumerated_memory)
    {
        throw ConfigError("memory_length above "
                          + std::to_string(max_enumerated_memory)
                          + " refused: 2^L pattern enumeration");
    }
    if (static_cast<std::size_t>(link.memory_length) > taps.memory_length())
    {
        throw ContractViolation("tap vector shorter than memory_length");
    }
}

/*!
 * Probability that an observation with the given statistics lands at or
 * above the threshold. A zero-variance observation decides
 * deterministically.
 */
inline double prob_at_or_above(double threshold, HypothesisStats const& s)
{
    if (s.degenerate)
    {
        return s.mean >= threshold ? 1.0 : 0.0;
    }
    return q_function((threshold - s.mean) / std::sqrt(s.variance));
}

//! Complement of prob_at_or_above, evaluated on the opposite tail.
inline double prob_below(double threshold, HypothesisStats const& s)
{
    if (s.degenerate)
    {
        return s.mean >= threshold ? 0.0 : 1.0;
    }
    return q_function((s.mean - threshold) / std::sqrt(s.variance));
}
}  // namespace detail

/*!
 * Mean and variance of the sampled concentration for one ISI pattern.
 *
 * The mean sums every molecule burst still in flight; the counting-noise
 * variance is that mean divided by the receiver volume.
 */
inline HypothesisStats hypothesis_stats(TapVector const& taps,
                                        double n_m,
                                        IsiPattern const& pattern,
                                        Hypothesis hyp,
                                        double volume)
{
    detail::check_pattern(taps, pattern);
    HypothesisStats s;
    s.mean = hyp == Hypothesis::bit1 ? n_m * taps.taps[0] : 0.0;
    for (int lag = 1; lag <= pattern.length; ++lag)
    {
        if (pattern.at_lag(lag))
        {
            s.mean += n_m * taps.taps[lag];
        }
    }
    s.variance = s.mean / volume;
    s.degenerate = (s.variance == 0);
    return s;
}

/*!
 * Miss, false-alarm and average error probability with equiprobable bits.
 *
 * Every one of the 2^L ISI patterns is enumerated with weight 2^-L. The miss
 * probability is accumulated as the mean of P(y < C | H1) rather than
 * 1 - mean P(y >= C | H1) so that tiny values are not lost to cancellation.
 */
inline BerResult error_probabilities(TapVector const& taps,
                                     LinkConfig const& link,
                                     double volume)
{
    detail::check_link(taps, link);
    double const threshold
        = resolve_threshold(link.threshold, link.n_m, taps.main_tap());

    std::uint32_t const count = std::uint32_t{1} << link.memory_length;
    double miss = 0;
    double false_alarm = 0;
    for (std::uint32_t bits = 0; bits < count; ++bits)
    {
        IsiPattern const pattern{bits, link.memory_length};
        miss += detail::prob_below(
            threshold,
            hypothesis_stats(taps, link.n_m, pattern, Hypothesis::bit1, volume));
        false_alarm += detail::prob_at_or_above(
            threshold,
            hypothesis_stats(taps, link.n_m, pattern, Hypothesis::bit0, volume));
    }
    BerResult r;
    r.p_miss = miss / count;
    r.p_false_alarm = false_alarm / count;
    r.p_error = (r.p_miss + r.p_false_alarm) / 2;
    return r;
}

//! Convenience overload: taps and volume derived from the channel.
inline BerResult error_probabilities(ChannelParams const& params,
                                     LinkConfig const& link)
{
    return error_probabilities(channel_taps(params, link.memory_length),
                               link,
                               receiver_volume(params));
}

}  // namespace molcomm
