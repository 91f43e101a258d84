#include <doctest.h>

#include <filesystem>

#include "proact/app/config.hpp"

using namespace proact;
using namespace proact::app;

TEST_CASE("defaults carry the reference values") {
    Config c = Config::parse("");
    CHECK(c.flow.window == 150);
    CHECK(c.flow.overlap == 30);
    CHECK(c.flow.steps == 50);
    CHECK(c.train.base.dropout_p == 0.2);
    CHECK(c.train.base.learning_rate == 1e-4);
    CHECK(c.cognitive.loop.t_c == 3.0);
    CHECK(c.cognitive.loop.threshold == 4);
    CHECK(c.locomotion.cycle_period == 1.0);
    CHECK(c.network.frame_width == 21);
}

TEST_CASE("sections override defaults and typos are rejected") {
    Config c = Config::parse("[flow]\nsteps = 8\n[skeleton]\npreset = robot23\n[cognitive]\nthreshold = 3\n");
    CHECK(c.flow.steps == 8);
    CHECK(c.network.frame_width == 23 * 3 + 6);
    CHECK(c.cognitive.loop.threshold == 3);
    CHECK_THROWS_AS(Config::parse("[flow]\nstepz = 8\n"), std::invalid_argument);
    CHECK_THROWS_AS(Config::parse("[flw]\nsteps = 8\n"), std::invalid_argument);
    CHECK_THROWS_AS(Config::parse("[flow]\nsteps = eight\n"), std::invalid_argument);
    CHECK_THROWS_AS(Config::parse("[flow]\noverlap = 150\n"), std::invalid_argument);
    CHECK_THROWS_AS(Config::parse("[locomotion]\ncycle_period = 0.5\n"), std::invalid_argument);
}

TEST_CASE("to_ini round trips") {
    Config c = Config::parse("[train]\nlearning_rate = 3e-4\n[eval]\nsigma = 2.5\n");
    Config back = Config::parse(c.to_ini());
    CHECK(back.to_ini() == c.to_ini());
    CHECK(back.train.base.learning_rate == 3e-4);
    CHECK(back.eval.sigma == 2.5);
}

TEST_CASE("the shipped default config parses to the built-in defaults") {
    const auto path = std::string(PROACT_ASSET_DIR) + "/../configs/default.ini";
    REQUIRE(std::filesystem::exists(path));
    CHECK(Config::load(path).to_ini() == Config::parse("").to_ini());
}
