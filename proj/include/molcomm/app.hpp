#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "channel.hpp"
#include "config.hpp"
#include "detection.hpp"
#include "errors.hpp"
#include "gradient.hpp"
#include "simulate.hpp"
#include "tradeoff.hpp"

namespace molcomm
{
namespace exit_code
{
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int not_converged = 2;
inline constexpr int validation_failed = 3;
}  // namespace exit_code

//---------------------------------------------------------------------------//
/*!
 * CSV writer that only publishes the file on commit().
 *
 * Rows go to "<path>.partial"; commit() renames it into place. Destroying
 * an uncommitted writer deletes the partial file.
 */
class CsvFile
{
  public:
    CsvFile(std::filesystem::path path, std::string_view header)
        : path_(std::move(path)), partial_(path_)
    {
        partial_ += ".partial";
        out_.open(partial_, std::ios::binary | std::ios::trunc);
        if (!out_)
        {
            throw ConfigError("cannot write " + partial_.string());
        }
        out_ << header << '\n';
    }

    CsvFile(CsvFile const&) = delete;
    CsvFile& operator=(CsvFile const&) = delete;

    ~CsvFile()
    {
        if (!committed_)
        {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(partial_, ec);
        }
    }

    //! Scientific notation with 17 significant digits (round-trip exact).
    static std::string format(double v)
    {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.16e", v);
        return buf;
    }

    template<class... Ts>
    void row(Ts const&... fields)
    {
        bool first = true;
        auto put = [&](auto const& f) {
            if (!first)
            {
                out_ << ',';
            }
            first = false;
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_floating_point_v<T>)
            {
                out_ << format(f);
            }
            else
            {
                out_ << f;
            }
        };
        (put(fields), ...);
        out_ << '\n';
    }

    void commit()
    {
        out_.close();
        if (!out_)
        {
            throw NumericalError("failed writing " + partial_.string());
        }
        std::filesystem::rename(partial_, path_);
        committed_ = true;
    }

  private:
    std::filesystem::path path_;
    std::filesystem::path partial_;
    std::ofstream out_;
    bool committed_ = false;
};

//---------------------------------------------------------------------------//
// SWEEPS
//---------------------------------------------------------------------------//
enum class SweepKind
{
    snr,
    ber,
    ber_no_isi,
    balance,
};

inline SweepKind parse_sweep_kind(std::string_view s)
{
    if (s == "snr")
        return SweepKind::snr;
    if (s == "ber")
        return SweepKind::ber;
    if (s == "ber-no-isi")
        return SweepKind::ber_no_isi;
    if (s == "balance")
        return SweepKind::balance;
    throw ConfigError("unknown sweep kind '" + std::string(s)
                      + "' (snr | ber | ber-no-isi | balance)");
}

/*!
 * Evaluate one parameter sweep over the configured n_m grid and write it
 * as CSV.
 *
 * Columns:
 *  - snr:        distance,n_m,snr_linear,snr_db (one block per distance)
 *  - ber:        n_m,p_miss,p_false_alarm,p_error
 *  - ber-no-isi: same as ber with L = 0
 *  - balance:    weight_n,weight_p,n_m,p_error,n_hat,p_hat,f (one block per
 *                weight pair)
 */
inline void run_sweep(SweepKind kind,
                      RunConfig const& cfg,
                      std::filesystem::path const& out_path)
{
    auto const grid = cfg.grid();
    switch (kind)
    {
        case SweepKind::snr: {
            CsvFile csv(out_path, "distance,n_m,snr_linear,snr_db");
            for (double d : cfg.distances)
            {
                ChannelParams p = cfg.channel;
                p.distance = d;
                validate(p);
                for (double n : grid)
                {
                    auto const s = snr(p, n);
                    csv.row(d, n, s.linear, s.db);
                }
            }
            csv.commit();
            return;
        }
        case SweepKind::ber:
        case SweepKind::ber_no_isi: {
            int const memory = kind == SweepKind::ber ? cfg.memory_length : 0;
            AnalyticBerModel const model(cfg.channel, memory, cfg.threshold);
            CsvFile csv(out_path, "n_m,p_miss,p_false_alarm,p_error");
            for (double n : grid)
            {
                auto const r = model.evaluate(n);
                csv.row(n, r.p_miss, r.p_false_alarm, r.p_error);
            }
            csv.commit();
            return;
        }
        case SweepKind::balance: {
            AnalyticBerModel const model(
                cfg.channel, cfg.memory_length, cfg.threshold);
            auto const ctx = NormalizationContext::from_grid(model, grid);
            CsvFile csv(out_path, "weight_n,weight_p,n_m,p_error,n_hat,p_hat,f");
            for (auto const& [w_n, w_p] : cfg.weights)
            {
                BalanceWeights const w(w_n, w_p);
                for (double n : grid)
                {
                    auto const pt = balance_value_and_gradient(n, ctx, w, model);
                    csv.row(w.molecules(),
                            w.error_rate(),
                            n,
                            pt.p_error,
                            ctx.n_hat(n),
                            ctx.p_hat(pt.p_error),
                            pt.value);
                }
            }
            csv.commit();
            return;
        }
    }
}

//---------------------------------------------------------------------------//
// OPTIMIZE
//---------------------------------------------------------------------------//
/*!
 * Run the balance-function descent for every configured weight pair.
 *
 * Prints one report block per pair and writes the iteration trace as CSV
 * (weight_n,weight_p,iteration,n_m,f,learning_rate,event). Returns
 * exit_code::ok only if every descent converged; the trace is written
 * either way.
 */
inline int run_optimize(RunConfig const& cfg,
                        std::filesystem::path const& trace_path,
                        std::ostream& report)
{
    AnalyticBerModel const model(cfg.channel, cfg.memory_length, cfg.threshold);
    auto const grid = cfg.grid();
    auto const ctx = NormalizationContext::from_grid(model, grid);

    CsvFile csv(trace_path,
                "weight_n,weight_p,iteration,n_m,f,learning_rate,event");
    bool all_converged = true;
    for (auto const& [w_n, w_p] : cfg.weights)
    {
        BalanceWeights const w(w_n, w_p);
        auto const result = optimize_tradeoff(cfg.optimizer, ctx, w, model);
        auto const oracle = grid_search_oracle(grid, ctx, w, model);
        for (auto const& t : result.trace)
        {
            csv.row(w.molecules(),
                    w.error_rate(),
                    t.iteration,
                    t.n_m,
                    t.value,
                    t.learning_rate,
                    to_string(t.event));
        }
        all_converged = all_converged && result.converged;

        report << "weights        w_n=" << CsvFile::format(w.molecules())
               << " w_p=" << CsvFile::format(w.error_rate()) << '\n'
               << "  n_star       " << CsvFile::format(result.n_star) << '\n'
               << "  n_star (int) " << CsvFile::format(result.n_star_rounded)
               << '\n'
               << "  P_e(n_star)  " << CsvFile::format(result.p_e_star) << '\n'
               << "  f_star       " << CsvFile::format(result.f_star) << '\n'
               << "  iterations   " << result.iterations << '\n'
               << "  converged    " << (result.converged ? "yes" : "no") << '\n'
               << "  grid argmin  " << CsvFile::format(oracle.n_m) << '\n';
    }
    csv.commit();
    return all_converged ? exit_code::ok : exit_code::not_converged;
}

//---------------------------------------------------------------------------//
// VALIDATE
//---------------------------------------------------------------------------//
enum class ValidateKind
{
    gradient,
    montecarlo,
    channel,
};

inline ValidateKind parse_validate_kind(std::string_view s)
{
    if (s == "gradient")
        return ValidateKind::gradient;
    if (s == "montecarlo")
        return ValidateKind::montecarlo;
    if (s == "channel")
        return ValidateKind::channel;
    throw ConfigError("unknown validation kind '" + std::string(s)
                      + "' (gradient | montecarlo | channel)");
}

//! Acceptance limits applied by run_validate.
namespace validation_limits
{
inline constexpr double gradient_relative_error = 1e-6;
inline constexpr double particle_peak_deviation = 0.15;
inline constexpr double particle_peak_time_fraction = 0.20;
}  // namespace validation_limits

/*!
 * Cross-check the analytic model against an independent route and report
 * pass/fail. An empty out_path skips the CSV.
 */
inline int run_validate(ValidateKind kind,
                        RunConfig const& cfg,
                        std::filesystem::path const& out_path,
                        std::ostream& report)
{
    bool pass = false;
    switch (kind)
    {
        case ValidateKind::gradient: {
            AnalyticBerModel const model(
                cfg.channel, cfg.memory_length, cfg.threshold);
            auto pe = [&](double n) { return model.value(n); };
            std::optional<CsvFile> csv;
            if (!out_path.empty())
            {
                csv.emplace(out_path, "n_m,analytic,central_difference,relative_error");
            }
            double worst = 0;
            for (double n : cfg.grid())
            {
                double const analytic = model.derivative(n);
                double const numeric
                    = central_difference(pe, n, cfg.fd_relative_step);
                double const rel = finite_difference_check(
                    pe, analytic, n, cfg.fd_relative_step);
                worst = std::max(worst, rel);
                if (csv)
                {
                    csv->row(n, analytic, numeric, rel);
                }
            }
            if (csv)
            {
                csv->commit();
            }
            pass = worst < validation_limits::gradient_relative_error;
            report << "gradient: max relative error " << CsvFile::format(worst)
                   << " (limit "
                   << CsvFile::format(validation_limits::gradient_relative_error)
                   << ")\n";
            break;
        }
        case ValidateKind::montecarlo: {
            auto const link = cfg.link(cfg.validate_nm);
            double const analytic
                = error_probabilities(cfg.channel, link).p_error;
            auto const est
                = simulate_link_ber(cfg.channel, link, cfg.monte_carlo);
            pass = est.contains(analytic);
            if (!out_path.empty())
            {
                CsvFile csv(out_path,
                            "n_m,p_analytic,p_hat,ci_low,ci_high,errors,bits");
                csv.row(cfg.validate_nm,
                        analytic,
                        est.p_hat,
                        est.ci_low,
                        est.ci_high,
                        est.errors_observed,
                        est.bits);
                csv.commit();
            }
            report << "montecarlo: analytic P_e " << CsvFile::format(analytic)
                   << ", simulated " << CsvFile::format(est.p_hat) << " ("
                   << est.errors_observed << "/" << est.bits
                   << "), 95% CI [" << CsvFile::format(est.ci_low) << ", "
                   << CsvFile::format(est.ci_high) << "]\n";
            break;
        }
        case ValidateKind::channel: {
            double const t_p = peak_time(cfg.channel);
            double const dt = cfg.particles.time_step;
            std::vector<double> times;
            for (int i = 1; i * dt <= cfg.particles.horizon; ++i)
            {
                times.push_back(i * dt);
            }
            times.push_back(t_p);
            std::sort(times.begin(), times.end());
            times.erase(std::unique(times.begin(), times.end()), times.end());

            auto const samples
                = brownian_validate(cfg.channel, cfg.particles, times);
            auto const at_peak
                = std::find_if(samples.begin(), samples.end(), [&](auto& s) {
                      return s.time == t_p;
                  });
            double const t_emp = empirical_peak_time(samples);
            double const time_err = std::abs(t_emp - t_p) / t_p;
            pass = std::abs(at_peak->relative_deviation)
                       < validation_limits::particle_peak_deviation
                   && time_err < validation_limits::particle_peak_time_fraction;
            if (!out_path.empty())
            {
                CsvFile csv(out_path,
                            "t,observed_count,expected_count,relative_deviation");
                for (auto const& s : samples)
                {
                    csv.row(s.time,
                            s.observed_count,
                            s.expected_count,
                            s.relative_deviation);
                }
                csv.commit();
            }
            report << "channel: at t_p observed " << at_peak->observed_count
                   << ", expected " << CsvFile::format(at_peak->expected_count)
                   << ", deviation "
                   << CsvFile::format(at_peak->relative_deviation)
                   << "; empirical peak " << CsvFile::format(t_emp)
                   << " s vs t_p " << CsvFile::format(t_p) << " s\n";
            break;
        }
    }
    report << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? exit_code::ok : exit_code::validation_failed;
}

}  // namespace molcomm
