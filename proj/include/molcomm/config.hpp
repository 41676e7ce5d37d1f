#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "detection.hpp"
#include "errors.hpp"
#include "simulate.hpp"
#include "tradeoff.hpp"

namespace molcomm
{
//---------------------------------------------------------------------------//
/*!
 * Everything a CLI run needs. Defaults reproduce the reference link
 * (D = 1e-9 m^2/s, d = 10 um, r = 4 um, T_b = 1 s, dt = 100 us, L = 4);
 * the threshold rule and the balance weights have no defaults.
 */
struct RunConfig
{
    ChannelParams channel;
    std::vector<double> distances;  //!< SNR sweep distances; defaults to {d}
    int memory_length = 4;
    ThresholdSpec threshold;
    std::vector<std::pair<double, double>> weights;  //!< (w_n, w_p) pairs

    double nm_min = 1e3;
    double nm_max = 1e5;
    int grid_points = 101;

    OptimizerConfig optimizer;
    MonteCarloConfig monte_carlo;
    ParticleSimConfig particles;

    double validate_nm = 1e4;  //!< molecule count for the Monte Carlo check
    double fd_relative_step = 1e-6;
    std::string output;

    std::vector<double> grid() const
    {
        return uniform_grid(nm_min, nm_max, grid_points);
    }

    LinkConfig link(double n_m) const
    {
        return {n_m, memory_length, threshold};
    }
};

namespace detail
{
inline std::string_view trim(std::string_view s)
{
    auto const first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
    {
        return {};
    }
    auto const last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct ConfigEntry
{
    std::string value;
    int line;
};

class ConfigReader
{
  public:
    ConfigReader(std::map<std::string, ConfigEntry> entries, std::string source)
        : entries_(std::move(entries)), source_(std::move(source))
    {
    }

    [[noreturn]] void fail(std::string const& key, std::string const& msg) const
    {
        auto it = entries_.find(key);
        std::string where = source_;
        if (it != entries_.end())
        {
            where += ":" + std::to_string(it->second.line);
        }
        throw ConfigError(where + ": key '" + key + "': " + msg);
    }

    bool has(std::string const& key) const { return entries_.count(key) != 0; }

    std::string const& raw(std::string const& key) const
    {
        auto it = entries_.find(key);
        if (it == entries_.end())
        {
            throw ConfigError(source_ + ": missing required key '" + key + "'");
        }
        used_.insert(key);
        return it->second.value;
    }

    double parse_number(std::string const& key, std::string_view text) const
    {
        text = trim(text);
        double v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size()
            || !std::isfinite(v))
        {
            fail(key, "'" + std::string(text) + "' is not a finite number");
        }
        return v;
    }

    double number(std::string const& key) const
    {
        return parse_number(key, raw(key));
    }

    double number(std::string const& key, double fallback) const
    {
        return has(key) ? number(key) : fallback;
    }

    std::int64_t integer(std::string const& key, std::int64_t fallback) const
    {
        if (!has(key))
        {
            return fallback;
        }
        double const v = number(key);
        if (v != std::floor(v) || std::abs(v) > 9e15)
        {
            fail(key, "expected an integer");
        }
        return static_cast<std::int64_t>(v);
    }

    std::uint64_t unsigned_integer(std::string const& key,
                                   std::uint64_t fallback) const
    {
        if (!has(key))
        {
            return fallback;
        }
        std::string_view text = trim(raw(key));
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec == std::errc{} && ptr == text.data() + text.size())
        {
            return v;
        }
        // Accept scientific notation for integral values such as 1e6
        std::int64_t const i = integer(key, 0);
        if (i < 0)
        {
            fail(key, "expected a non-negative integer");
        }
        return static_cast<std::uint64_t>(i);
    }

    std::vector<double> list(std::string const& key) const
    {
        std::vector<double> out;
        std::string_view rest = raw(key);
        while (true)
        {
            auto comma = rest.find(',');
            out.push_back(parse_number(key, rest.substr(0, comma)));
            if (comma == std::string_view::npos)
            {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        return out;
    }

    void reject_unknown() const
    {
        for (auto const& [key, entry] : entries_)
        {
            if (!used_.count(key))
            {
                throw ConfigError(source_ + ":" + std::to_string(entry.line)
                                  + ": unknown key '" + key + "'");
            }
        }
    }

  private:
    std::map<std::string, ConfigEntry> entries_;
    std::string source_;
    mutable std::set<std::string> used_;
};

inline std::map<std::string, ConfigEntry>
tokenize_config(std::istream& in, std::string const& source)
{
    std::map<std::string, ConfigEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        std::string_view text = line;
        if (auto hash = text.find('#'); hash != std::string_view::npos)
        {
            text = text.substr(0, hash);
        }
        text = trim(text);
        if (text.empty())
        {
            continue;
        }
        auto const eq = text.find('=');
        std::string const here = source + ":" + std::to_string(lineno);
        if (eq == std::string_view::npos)
        {
            throw ConfigError(here + ": expected 'key = value'");
        }
        std::string key(trim(text.substr(0, eq)));
        std::string value(trim(text.substr(eq + 1)));
        if (key.empty() || value.empty())
        {
            throw ConfigError(here + ": empty key or value");
        }
        if (entries.count(key))
        {
            throw ConfigError(here + ": duplicate key '" + key + "'");
        }
        entries.emplace(std::move(key), ConfigEntry{std::move(value), lineno});
    }
    return entries;
}
}  // namespace detail

/*!
 * Parse and validate a flat "key = value" configuration.
 *
 * '#' starts a comment. Lists (distances, weight_n, weight_p) are comma
 * separated. All values are SI base units.
 */
inline RunConfig parse_config(std::istream& in, std::string const& source)
{
    detail::ConfigReader cfg(detail::tokenize_config(in, source), source);
    RunConfig rc;

    auto& ch = rc.channel;
    ch.diffusion_coefficient
        = cfg.number("diffusion_coefficient", ch.diffusion_coefficient);
    ch.distance = cfg.number("distance", ch.distance);
    ch.receiver_radius = cfg.number("receiver_radius", ch.receiver_radius);
    ch.bit_interval = cfg.number("bit_interval", ch.bit_interval);
    try
    {
        validate(ch);
    }
    catch (ConfigError const& e)
    {
        throw ConfigError(source + ": " + e.what());
    }

    rc.distances = cfg.has("distances") ? cfg.list("distances")
                                        : std::vector<double>{ch.distance};
    for (double d : rc.distances)
    {
        ChannelParams alt = ch;
        alt.distance = d;
        try
        {
            validate(alt);
        }
        catch (ConfigError const& e)
        {
            cfg.fail("distances", e.what());
        }
    }

    rc.memory_length = static_cast<int>(cfg.integer("memory_length", 4));
    if (rc.memory_length < 0 || rc.memory_length > max_enumerated_memory)
    {
        cfg.fail("memory_length",
                 "must lie in [0, " + std::to_string(max_enumerated_memory)
                     + "]");
    }

    std::string const& mode = cfg.raw("threshold_mode");
    if (mode == "absolute")
    {
        rc.threshold.mode = ThresholdMode::absolute;
    }
    else if (mode == "fractional")
    {
        rc.threshold.mode = ThresholdMode::fractional;
    }
    else
    {
        cfg.fail("threshold_mode", "expected 'absolute' or 'fractional'");
    }
    rc.threshold.value = cfg.number("threshold_value");
    try
    {
        validate(rc.threshold);
    }
    catch (ConfigError const& e)
    {
        cfg.fail("threshold_value", e.what());
    }

    auto const w_n = cfg.list("weight_n");
    auto const w_p = cfg.list("weight_p");
    if (w_n.size() != w_p.size())
    {
        cfg.fail("weight_p", "must list as many values as weight_n");
    }
    for (std::size_t i = 0; i < w_n.size(); ++i)
    {
        try
        {
            BalanceWeights{w_n[i], w_p[i]};
        }
        catch (ConfigError const& e)
        {
            cfg.fail("weight_n", e.what());
        }
        rc.weights.emplace_back(w_n[i], w_p[i]);
    }

    rc.nm_min = cfg.number("nm_min", rc.nm_min);
    rc.nm_max = cfg.number("nm_max", rc.nm_max);
    if (!(rc.nm_min > 0))
    {
        cfg.fail("nm_min", "must be positive");
    }
    if (!(rc.nm_max > rc.nm_min))
    {
        cfg.fail("nm_max", "must exceed nm_min");
    }
    rc.grid_points = static_cast<int>(cfg.integer("grid_points", 101));
    if (rc.grid_points < 11)
    {
        cfg.fail("grid_points", "must be at least 11");
    }

    auto& opt = rc.optimizer;
    opt.learning_rate = cfg.number("learning_rate", opt.learning_rate);
    opt.max_iterations
        = static_cast<int>(cfg.integer("max_iterations", opt.max_iterations));
    opt.tolerance = cfg.number("tolerance", opt.tolerance);
    opt.initial_n_m = cfg.number("initial_nm", rc.nm_min);
    if (!(opt.learning_rate > 0))
    {
        cfg.fail("learning_rate", "must be positive");
    }
    if (opt.max_iterations < 1)
    {
        cfg.fail("max_iterations", "must be at least 1");
    }
    if (!(opt.tolerance > 0))
    {
        cfg.fail("tolerance", "must be positive");
    }
    if (opt.initial_n_m < rc.nm_min || opt.initial_n_m > rc.nm_max)
    {
        cfg.fail("initial_nm", "must lie in [nm_min, nm_max]");
    }

    std::uint64_t const seed = cfg.unsigned_integer("seed", 1);
    unsigned const threads
        = static_cast<unsigned>(cfg.unsigned_integer("threads", 0));

    auto& mc = rc.monte_carlo;
    mc.seed = seed;
    mc.threads = threads;
    mc.bit_count = cfg.unsigned_integer("bit_count", mc.bit_count);
    mc.chunk_size = cfg.unsigned_integer("chunk_size", mc.chunk_size);
    if (mc.bit_count < 10'000)
    {
        cfg.fail("bit_count", "must be at least 1e4");
    }
    if (mc.chunk_size < 1)
    {
        cfg.fail("chunk_size", "must be at least 1");
    }

    auto& ps = rc.particles;
    ps.seed = seed;
    ps.threads = threads;
    ps.time_step = cfg.number("delta_t", ps.time_step);
    ps.molecule_count = cfg.unsigned_integer("molecule_count", ps.molecule_count);
    ps.horizon = cfg.number("horizon", 2 * peak_time(ch));
    if (!(ps.time_step > 0 && ps.time_step <= peak_time(ch) / 50))
    {
        cfg.fail("delta_t", "must lie in (0, peak_time / 50]");
    }
    if (ps.molecule_count < 10'000)
    {
        cfg.fail("molecule_count", "must be at least 1e4");
    }
    if (!(ps.horizon >= peak_time(ch)))
    {
        cfg.fail("horizon", "must reach the peak time");
    }

    rc.validate_nm = cfg.number("validate_nm", rc.validate_nm);
    if (!(rc.validate_nm > 0))
    {
        cfg.fail("validate_nm", "must be positive");
    }
    rc.fd_relative_step = cfg.number("fd_relative_step", rc.fd_relative_step);
    if (!(rc.fd_relative_step > 1e-8 && rc.fd_relative_step < 1e-2))
    {
        cfg.fail("fd_relative_step", "must lie in (1e-8, 1e-2)");
    }
    if (cfg.has("output"))
    {
        rc.output = cfg.raw("output");
    }

    cfg.reject_unknown();
    return rc;
}

inline RunConfig load_config(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw ConfigError(path + ": cannot open configuration file");
    }
    return parse_config(in, path);
}

}  // namespace molcomm
