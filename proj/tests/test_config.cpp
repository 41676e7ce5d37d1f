#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "molcomm/config.hpp"

using namespace molcomm;

namespace
{
std::string const minimal = R"(
threshold_mode = fractional
threshold_value = 0.5
weight_n = 0.5
weight_p = 0.5
)";

RunConfig parse(std::string const& text)
{
    std::istringstream in(text);
    return parse_config(in, "test.cfg");
}

// Parse and return the error message (empty if parsing succeeded)
std::string error_of(std::string const& text)
{
    try
    {
        parse(text);
    }
    catch (ConfigError const& e)
    {
        return e.what();
    }
    return {};
}

bool contains(std::string const& haystack, std::string const& needle)
{
    return haystack.find(needle) != std::string::npos;
}
}  // namespace

TEST(Config, ReferenceFile)
{
    auto const rc = load_config(MOLCOMM_SOURCE_DIR "/configs/reference.cfg");
    EXPECT_EQ(rc.channel.diffusion_coefficient, 1e-9);
    EXPECT_EQ(rc.channel.distance, 10e-6);
    EXPECT_EQ(rc.channel.receiver_radius, 4e-6);
    EXPECT_EQ(rc.channel.bit_interval, 1.0);
    EXPECT_EQ(rc.memory_length, 4);
    EXPECT_EQ(rc.threshold.mode, ThresholdMode::fractional);
    EXPECT_EQ(rc.threshold.value, 0.5);
    ASSERT_EQ(rc.weights.size(), 3u);
    EXPECT_EQ(rc.weights[0], (std::pair{0.3, 0.7}));
    EXPECT_EQ(rc.distances.size(), 3u);
    EXPECT_EQ(rc.grid().size(), 101u);
    EXPECT_EQ(rc.monte_carlo.bit_count, 1'000'000u);
    EXPECT_EQ(rc.monte_carlo.seed, 20240601u);
    EXPECT_EQ(rc.particles.seed, 20240601u);
    EXPECT_EQ(rc.particles.time_step, 100e-6);
}

TEST(Config, DefaultsAndIntegerNotation)
{
    auto const rc = parse(minimal + "bit_count = 2e5\nmax_iterations = 1e3\n");
    EXPECT_EQ(rc.monte_carlo.bit_count, 200'000u);
    EXPECT_EQ(rc.optimizer.max_iterations, 1000);
    EXPECT_EQ(rc.optimizer.initial_n_m, rc.nm_min);
    EXPECT_EQ(rc.distances, std::vector<double>{10e-6});
    EXPECT_DOUBLE_EQ(rc.particles.horizon, 2 * peak_time(rc.channel));
    EXPECT_EQ(rc.fd_relative_step, 1e-6);
    EXPECT_TRUE(rc.output.empty());
}

TEST(Config, MissingThresholdRuleNamesKey)
{
    auto const msg = error_of("weight_n = 1\nweight_p = 1\nthreshold_value = 0.5\n");
    EXPECT_TRUE(contains(msg, "threshold_mode")) << msg;
    auto const no_weights = error_of("threshold_mode = fractional\nthreshold_value = 0.5\n");
    EXPECT_TRUE(contains(no_weights, "weight_n")) << no_weights;
}

TEST(Config, ReceiverLargerThanDistance)
{
    auto const msg = error_of(minimal + "receiver_radius = 12e-6\n");
    EXPECT_FALSE(msg.empty());
}

TEST(Config, ErrorsCarryLineNumbers)
{
    auto const unknown = error_of(minimal + "recever_radius = 1e-6\n");
    EXPECT_TRUE(contains(unknown, "test.cfg:6")) << unknown;
    EXPECT_TRUE(contains(unknown, "recever_radius")) << unknown;

    auto const dup = error_of(minimal + "distance = 1e-5\ndistance = 2e-5\n");
    EXPECT_TRUE(contains(dup, "test.cfg:7")) << dup;
    EXPECT_TRUE(contains(dup, "duplicate")) << dup;

    auto const bad = error_of(minimal + "learning_rate = fast\n");
    EXPECT_TRUE(contains(bad, "test.cfg:6")) << bad;
    EXPECT_TRUE(contains(bad, "learning_rate")) << bad;

    auto const syntax = error_of(minimal + "just words\n");
    EXPECT_TRUE(contains(syntax, "test.cfg:6")) << syntax;
}

TEST(Config, RangeChecks)
{
    auto const alpha = error_of(
        "threshold_mode = fractional\nthreshold_value = 1.5\n"
        "weight_n = 1\nweight_p = 1\n");
    EXPECT_TRUE(contains(alpha, "threshold_value")) << alpha;
    auto const weight = error_of(
        "threshold_mode = fractional\nthreshold_value = 0.5\n"
        "weight_n = -1\nweight_p = 1\n");
    EXPECT_TRUE(contains(weight, "weight")) << weight;
    EXPECT_FALSE(contains(weight, "duplicate")) << weight;
    EXPECT_FALSE(error_of(minimal + "memory_length = -1\n").empty());
    EXPECT_FALSE(error_of(minimal + "memory_length = 2.5\n").empty());
    EXPECT_FALSE(error_of(minimal + "grid_points = 5\n").empty());
    EXPECT_FALSE(error_of(minimal + "nm_max = 500\n").empty());
    EXPECT_FALSE(error_of(minimal + "bit_count = 100\n").empty());
    EXPECT_FALSE(error_of(minimal + "delta_t = 1e-3\n").empty());
    EXPECT_FALSE(error_of(minimal + "initial_nm = 1e7\n").empty());
    EXPECT_FALSE(error_of(minimal + "fd_relative_step = 0.5\n").empty());
    auto const mismatch = error_of(
        "threshold_mode = absolute\nthreshold_value = 1e16\n"
        "weight_n = 0.1, 0.2\nweight_p = 0.9\n");
    EXPECT_TRUE(contains(mismatch, "weight_p")) << mismatch;
}

TEST(Config, CommentsAndWhitespace)
{
    auto const rc = parse("# header\n\n  threshold_mode=absolute   # inline\n"
                          "threshold_value = 2e16\nweight_n=1\nweight_p = 0 \n"
                          "distances = 1e-5 , 2e-5\n");
    EXPECT_EQ(rc.threshold.mode, ThresholdMode::absolute);
    EXPECT_EQ(rc.threshold.value, 2e16);
    EXPECT_EQ(rc.distances, (std::vector<double>{1e-5, 2e-5}));
}

TEST(Config, MissingFile)
{
    EXPECT_THROW(load_config("/nonexistent/none.cfg"), ConfigError);
}
