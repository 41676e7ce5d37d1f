#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iterator>
#include <limits>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "channel.hpp"
#include "detection.hpp"
#include "errors.hpp"

namespace molcomm
{
//---------------------------------------------------------------------------//
// TYPES
//---------------------------------------------------------------------------//
struct MonteCarloConfig
{
    std::uint64_t bit_count = 1'000'000;
    std::uint64_t seed = 1;
    std::uint64_t chunk_size = 65536;
    unsigned threads = 0;  //!< 0 = hardware concurrency
};

struct ParticleSimConfig
{
    std::uint64_t molecule_count = 100'000;
    double time_step = 100e-6;  //!< s
    double horizon = 0.05;  //!< s
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

//! Simulated error rate with a 95% Wilson score interval.
struct BerEstimate
{
    double p_hat = 0;
    double half_width_95 = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::uint64_t errors_observed = 0;
    std::uint64_t bits = 0;

    bool contains(double p) const { return ci_low <= p && p <= ci_high; }
};

struct ParticleSample
{
    double time;  //!< s
    std::uint64_t observed_count;
    double expected_count;
    double relative_deviation;  //!< (observed - expected) / expected
};

//---------------------------------------------------------------------------//
// HELPERS
//---------------------------------------------------------------------------//
namespace detail
{
//! SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

//! Independent stream key for (seed, purpose, index).
constexpr std::uint64_t
stream_key(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index)
{
    return mix64(mix64(seed ^ mix64(purpose)) ^ index);
}

inline unsigned resolve_threads(unsigned requested)
{
    if (requested != 0)
    {
        return requested;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/*!
 * Run body(task) for task in [0, tasks) on a small worker pool.
 *
 * Tasks are claimed dynamically; callers write results into per-task slots
 * so that the reduction order never depends on scheduling.
 */
template<class F>
void parallel_tasks(std::uint64_t tasks, unsigned threads, F&& body)
{
    unsigned const workers = static_cast<unsigned>(
        std::min<std::uint64_t>(resolve_threads(threads), tasks));
    if (workers <= 1)
    {
        for (std::uint64_t t = 0; t < tasks; ++t)
        {
            body(t);
        }
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
        {
            pool.emplace_back([&, w] {
                try
                {
                    for (auto t = next++; t < tasks; t = next++)
                    {
                        body(t);
                    }
                }
                catch (...)
                {
                    errors[w] = std::current_exception();
                    next = tasks;
                }
            });
        }
    }
    for (auto const& e : errors)
    {
        if (e)
        {
            std::rethrow_exception(e);
        }
    }
}

inline constexpr std::uint64_t bit_stream = 1;
inline constexpr std::uint64_t noise_stream = 2;
inline constexpr std::uint64_t walker_stream = 3;
}  // namespace detail

/*!
 * 95% Wilson score interval for a binomial proportion.
 */
inline BerEstimate wilson_estimate(std::uint64_t errors, std::uint64_t trials)
{
    if (trials == 0 || errors > trials)
    {
        throw ContractViolation("wilson_estimate: invalid counts");
    }
    constexpr double z = 1.959963984540054;
    double const n = static_cast<double>(trials);
    double const p = errors / n;
    double const z2n = z * z / n;
    double const centre = (p + z2n / 2) / (1 + z2n);
    double const half = z / (1 + z2n)
                        * std::sqrt(p * (1 - p) / n + z2n / (4 * n));
    BerEstimate e;
    e.p_hat = p;
    e.ci_low = std::max(0.0, centre - half);
    e.ci_high = std::min(1.0, centre + half);
    e.half_width_95 = half;
    e.errors_observed = errors;
    e.bits = trials;
    return e;
}

//---------------------------------------------------------------------------//
// LINK MONTE CARLO
//---------------------------------------------------------------------------//
/*!
 * Simulate an OOK bit stream through the ISI channel and count decision
 * errors.
 *
 * Bits are equiprobable and keyed by stream index, so any bit's ISI history
 * is available to whichever chunk needs it. For every bit the current and L
 * past releases each add an independent Gaussian of mean n_m taps[j] and
 * variance n_m taps[j] / V_R. The summed concentration is clamped at zero
 * and compared against the threshold. L warm-up bits precede the counted
 * bits so the first counted bit already sees a random ISI history.
 */
inline BerEstimate simulate_link_ber(ChannelParams const& params,
                                     LinkConfig const& link,
                                     MonteCarloConfig const& mc)
{
    detail::require<ConfigError>(mc.bit_count >= 10'000,
                                 "bit_count must be at least 1e4");
    detail::require<ConfigError>(mc.chunk_size >= 1, "chunk_size must be >= 1");
    auto const taps = channel_taps(params, link.memory_length);
    detail::check_link(taps, link);
    std::uint64_t const memory = link.memory_length;
    detail::require<ConfigError>(
        mc.bit_count <= std::numeric_limits<std::uint64_t>::max() - memory,
        "bit_count overflows the bit index");

    double const volume = receiver_volume(params);
    double const threshold
        = resolve_threshold(link.threshold, link.n_m, taps.main_tap());
    std::vector<double> means(taps.taps.size());
    std::vector<double> sigmas(taps.taps.size());
    for (std::size_t j = 0; j < means.size(); ++j)
    {
        means[j] = link.n_m * taps.taps[j];
        sigmas[j] = std::sqrt(means[j] / volume);
    }

    auto bit_at = [seed = mc.seed](std::uint64_t index) -> bool {
        return detail::stream_key(seed, detail::bit_stream, index) >> 63;
    };

    std::uint64_t const chunks = (mc.bit_count + mc.chunk_size - 1)
                                 / mc.chunk_size;
    std::vector<std::uint64_t> chunk_errors(chunks, 0);
    detail::parallel_tasks(chunks, mc.threads, [&](std::uint64_t c) {
        std::mt19937_64 rng(
            detail::stream_key(mc.seed, detail::noise_stream, c));
        std::normal_distribution<double> unit_normal;
        std::uint64_t const begin = c * mc.chunk_size;
        std::uint64_t const end = std::min(begin + mc.chunk_size, mc.bit_count);
        std::uint64_t errors = 0;
        for (std::uint64_t k = begin; k < end; ++k)
        {
            std::uint64_t const index = k + memory;
            double y = 0;
            for (std::uint64_t j = 0; j <= memory; ++j)
            {
                if (bit_at(index - j))
                {
                    y += means[j] + sigmas[j] * unit_normal(rng);
                }
            }
            if (!std::isfinite(y))
            {
                throw NumericalError("non-finite concentration draw");
            }
            y = std::max(y, 0.0);
            bool const decoded = y >= threshold;
            errors += (decoded != bit_at(index));
        }
        chunk_errors[c] = errors;
    });

    std::uint64_t total = 0;
    for (auto e : chunk_errors)
    {
        total += e;
    }
    return wilson_estimate(total, mc.bit_count);
}

//---------------------------------------------------------------------------//
// BROWNIAN PARTICLES
//---------------------------------------------------------------------------//
/*!
 * Release molecule_count walkers at the origin and count how many sit
 * inside the receiver sphere at each sample time.
 *
 * Each axis moves by Normal(0, 2 D dt) per step; the last step before a
 * sample time is shortened so samples land exactly on the requested times.
 * Walkers are never absorbed. Expected counts come from the point
 * concentration times the receiver volume.
 */
inline std::vector<ParticleSample>
brownian_validate(ChannelParams const& params,
                  ParticleSimConfig const& sim,
                  std::span<double const> sample_times)
{
    validate(params);
    detail::require<ConfigError>(sim.time_step > 0
                                     && sim.time_step <= peak_time(params) / 50,
                                 "time_step must not exceed peak_time / 50");
    detail::require<ConfigError>(sim.molecule_count >= 10'000,
                                 "molecule_count must be at least 1e4");
    detail::require<ConfigError>(!sample_times.empty(), "no sample times");
    for (double t : sample_times)
    {
        detail::require<ConfigError>(t > 0 && t <= sim.horizon,
                                     "sample times must lie in (0, horizon]");
    }
    detail::require<ConfigError>(
        std::is_sorted(sample_times.begin(), sample_times.end()),
        "sample times must be sorted");

    double const r2 = params.receiver_radius * params.receiver_radius;
    double const d = params.distance;
    double const two_d = 2 * params.diffusion_coefficient;

    constexpr std::uint64_t block = 1024;
    std::uint64_t const blocks = (sim.molecule_count + block - 1) / block;
    std::size_t const samples = sample_times.size();
    std::vector<std::uint64_t> counts(blocks * samples, 0);

    detail::parallel_tasks(blocks, sim.threads, [&](std::uint64_t b) {
        std::span<std::uint64_t> local(counts.data() + b * samples, samples);
        std::uint64_t const end
            = std::min((b + 1) * block, sim.molecule_count);
        for (std::uint64_t walker = b * block; walker < end; ++walker)
        {
            std::mt19937_64 rng(
                detail::stream_key(sim.seed, detail::walker_stream, walker));
            std::normal_distribution<double> unit_normal;
            double x = 0, y = 0, z = 0, now = 0;
            for (std::size_t s = 0; s < samples; ++s)
            {
                while (now < sample_times[s])
                {
                    double const dt = std::min(sim.time_step,
                                               sample_times[s] - now);
                    double const sd = std::sqrt(two_d * dt);
                    x += sd * unit_normal(rng);
                    y += sd * unit_normal(rng);
                    z += sd * unit_normal(rng);
                    now = (dt == sim.time_step) ? now + dt : sample_times[s];
                }
                double const dx = x - d;
                if (dx * dx + y * y + z * z <= r2)
                {
                    ++local[s];
                }
            }
        }
    });

    double const volume = receiver_volume(params);
    std::vector<ParticleSample> out;
    out.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s)
    {
        std::uint64_t observed = 0;
        for (std::uint64_t b = 0; b < blocks; ++b)
        {
            observed += counts[b * samples + s];
        }
        double const expected = sim.molecule_count
                                * impulse_response(params, sample_times[s])
                                * volume;
        out.push_back({sample_times[s],
                       observed,
                       expected,
                       (observed - expected) / expected});
    }
    return out;
}

/*!
 * Time at which the observed count peaks.
 *
 * Counts at neighbouring times share walkers, so their noise is correlated
 * over roughly r^2/D and the raw argmax wanders along the flat top. Instead,
 * a least-squares parabola is fitted to the contiguous run of samples around
 * the largest count whose counts reach \c top_fraction of it, and its vertex
 * is returned. With fewer than three such samples or a non-concave fit the
 * raw argmax (earliest on ties) is returned.
 */
inline double empirical_peak_time(std::span<ParticleSample const> samples,
                                  double top_fraction = 0.9)
{
    if (samples.empty())
    {
        throw ContractViolation("empirical_peak_time: no samples");
    }
    auto const peak
        = std::max_element(samples.begin(),
                           samples.end(),
                           [](auto const& a, auto const& b) {
                               return a.observed_count < b.observed_count;
                           });
    double const cutoff = top_fraction * peak->observed_count;
    auto lo = peak;
    while (lo != samples.begin() && std::prev(lo)->observed_count >= cutoff)
    {
        --lo;
    }
    auto hi = std::next(peak);
    while (hi != samples.end() && hi->observed_count >= cutoff)
    {
        ++hi;
    }
    if (std::distance(lo, hi) < 3)
    {
        return peak->time;
    }

    // Normal equations for c = a0 + a1 u + a2 u^2, u = (t - t_peak) / scale
    double const scale = std::prev(hi)->time - lo->time;
    double s[5] = {0, 0, 0, 0, 0};
    double r[3] = {0, 0, 0};
    for (auto it = lo; it != hi; ++it)
    {
        double const u = (it->time - peak->time) / scale;
        double const c = static_cast<double>(it->observed_count);
        double pw = 1;
        for (int k = 0; k < 5; ++k)
        {
            s[k] += pw;
            if (k < 3)
            {
                r[k] += pw * c;
            }
            pw *= u;
        }
    }
    auto det3 = [](double a, double b, double c,
                   double d, double e, double f,
                   double g, double h, double i) {
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
    };
    double const det = det3(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
    double const a1
        = det3(s[0], r[0], s[2], s[1], r[1], s[3], s[2], r[2], s[4]) / det;
    double const a2
        = det3(s[0], s[1], r[0], s[1], s[2], r[1], s[2], s[3], r[2]) / det;
    if (!std::isfinite(a1) || !std::isfinite(a2) || !(a2 < 0))
    {
        return peak->time;
    }
    double const vertex = peak->time - scale * a1 / (2 * a2);
    return std::clamp(vertex, lo->time, std::prev(hi)->time);
}

}  // namespace molcomm
