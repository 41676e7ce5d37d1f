#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace molcomm
{
//---------------------------------------------------------------------------//
/*!
 * Geometry and diffusion constants of a point-transmitter / passive
 * spherical receiver link in an unbounded 3D medium. SI units.
 */
struct ChannelParams
{
    double diffusion_coefficient = 1e-9;  //!< m^2/s
    double distance = 10e-6;  //!< transmitter to receiver centre, m
    double receiver_radius = 4e-6;  //!< m
    double bit_interval = 1.0;  //!< s
};

//! Time of the concentration maximum, d^2 / (6 D).
inline double peak_time(ChannelParams const& p)
{
    return p.distance * p.distance / (6 * p.diffusion_coefficient);
}

//! Volume of the passive observation sphere, (4/3) pi r^3.
inline double receiver_volume(ChannelParams const& p)
{
    return 4.0 / 3.0 * std::numbers::pi * std::pow(p.receiver_radius, 3);
}

//! Throws ConfigError unless the parameters describe a usable link.
inline void validate(ChannelParams const& p)
{
    using detail::require;
    auto finite_pos = [](double v) { return std::isfinite(v) && v > 0; };
    require<ConfigError>(finite_pos(p.diffusion_coefficient),
                         "diffusion_coefficient must be positive");
    require<ConfigError>(finite_pos(p.distance), "distance must be positive");
    require<ConfigError>(finite_pos(p.receiver_radius),
                         "receiver_radius must be positive");
    require<ConfigError>(finite_pos(p.bit_interval),
                         "bit_interval must be positive");
    require<ConfigError>(p.receiver_radius < p.distance,
                         "receiver_radius must be smaller than distance");
    require<ConfigError>(p.bit_interval > peak_time(p),
                         "bit_interval must exceed the peak time d^2/(6D)");
}

//---------------------------------------------------------------------------//
/*!
 * Concentration at the receiver centre per released molecule, t seconds
 * after an impulsive release (free 3D diffusion Green's function).
 */
inline double impulse_response(ChannelParams const& p, double t)
{
    if (!(t > 0) || !std::isfinite(t))
    {
        throw DomainError("impulse_response: time must be positive");
    }
    double const four_dt = 4 * p.diffusion_coefficient * t;
    return std::pow(std::numbers::pi * four_dt, -1.5)
           * std::exp(-p.distance * p.distance / four_dt);
}

struct PeakMetrics
{
    double peak_time;  //!< s
    double peak_concentration;  //!< 1/m^3
};

/*!
 * Peak time and the peak concentration reached by n_m molecules.
 *
 * The closed form c_max = n_m / d^3 * (3 / (2 pi e))^{3/2} is the impulse
 * response evaluated at t_p.
 */
inline PeakMetrics peak_metrics(ChannelParams const& p, double n_m)
{
    if (!(n_m >= 0))
    {
        throw DomainError("peak_metrics: molecule count must be non-negative");
    }
    double const shape = std::pow(3 / (2 * std::numbers::pi * std::numbers::e),
                                  1.5);
    return {peak_time(p), n_m / std::pow(p.distance, 3) * shape};
}

//---------------------------------------------------------------------------//
/*!
 * Channel response sampled once per bit at the peak offset.
 *
 * taps[0] is the current-bit response h(t_p); taps[j] for j >= 1 is the
 * residue of a release j bit intervals earlier.
 */
struct TapVector
{
    std::vector<double> taps;
    double sample_offset = 0;  //!< t_p, s

    std::size_t memory_length() const { return taps.size() - 1; }
    double main_tap() const { return taps.front(); }
};

inline TapVector channel_taps(ChannelParams const& p, int memory_length)
{
    validate(p);
    if (memory_length < 0)
    {
        throw ContractViolation("channel_taps: memory length must be >= 0");
    }
    TapVector result;
    result.sample_offset = peak_time(p);
    result.taps.reserve(memory_length + 1);
    for (int j = 0; j <= memory_length; ++j)
    {
        result.taps.push_back(
            impulse_response(p, j * p.bit_interval + result.sample_offset));
    }
    return result;
}

//---------------------------------------------------------------------------//
struct Snr
{
    double linear;
    double db;
};

/*!
 * SNR y^2 / sigma_n^2 = n_m V_R h(t) of a noiseless sample at sampling_time
 * against counting noise of variance y / V_R.
 */
inline Snr snr(ChannelParams const& p, double n_m, double sampling_time)
{
    if (n_m == 0)
    {
        throw NoSignalError();
    }
    if (!(n_m > 0))
    {
        throw DomainError("snr: molecule count must be positive");
    }
    double const linear = n_m * receiver_volume(p)
                          * impulse_response(p, sampling_time);
    return {linear, 10 * std::log10(linear)};
}

inline Snr snr(ChannelParams const& p, double n_m)
{
    return snr(p, n_m, peak_time(p));
}

}  // namespace molcomm
