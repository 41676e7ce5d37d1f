// Command-line front end: sweep, optimize, validate.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "molcomm/app.hpp"

namespace
{
struct CommonOptions
{
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool out_required)
{
    cmd->add_option("--config", opts.config, "Configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    auto* out = cmd->add_option("--out", opts.out, "Output CSV path");
    if (out_required)
    {
        out->required();
    }
    cmd->add_option("--seed", opts.seed, "Override the configured seed");
}

molcomm::RunConfig load(CommonOptions const& opts)
{
    auto cfg = molcomm::load_config(opts.config);
    if (opts.seed)
    {
        cfg.monte_carlo.seed = *opts.seed;
        cfg.particles.seed = *opts.seed;
    }
    if (opts.out.empty())
    {
        return cfg;
    }
    cfg.output = opts.out;
    return cfg;
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Molecular-communication BER and molecule-budget tradeoff"};
    app.require_subcommand(1);

    CommonOptions sweep_opts;
    std::string sweep_kind;
    auto* sweep = app.add_subcommand("sweep", "Write a parameter sweep as CSV");
    add_common(sweep, sweep_opts, false);
    sweep->add_option("--kind", sweep_kind, "snr | ber | ber-no-isi | balance")
        ->required();

    CommonOptions opt_opts;
    auto* optimize = app.add_subcommand(
        "optimize", "Find the molecule count minimizing the balance function");
    add_common(optimize, opt_opts, false);

    CommonOptions val_opts;
    std::string val_kind;
    auto* validate = app.add_subcommand(
        "validate", "Cross-check the analytic model against an oracle");
    add_common(validate, val_opts, false);
    validate->add_option("--kind", val_kind, "gradient | montecarlo | channel")
        ->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int const code = app.exit(e);
        return code == 0 ? 0 : molcomm::exit_code::usage;
    }

    try
    {
        if (*sweep)
        {
            auto const cfg = load(sweep_opts);
            if (cfg.output.empty())
            {
                throw molcomm::ConfigError("no output path (--out or 'output')");
            }
            molcomm::run_sweep(
                molcomm::parse_sweep_kind(sweep_kind), cfg, cfg.output);
            return molcomm::exit_code::ok;
        }
        if (*optimize)
        {
            auto const cfg = load(opt_opts);
            if (cfg.output.empty())
            {
                throw molcomm::ConfigError("no output path (--out or 'output')");
            }
            return molcomm::run_optimize(cfg, cfg.output, std::cout);
        }
        auto const cfg = load(val_opts);
        return molcomm::run_validate(
            molcomm::parse_validate_kind(val_kind), cfg, cfg.output, std::cout);
    }
    catch (molcomm::ConfigError const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return molcomm::exit_code::usage;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return molcomm::exit_code::usage;
    }
}
