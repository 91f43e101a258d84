#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "proact/core/errors.hpp"
#include "proact/locomotion/sim.hpp"

using namespace proact;
using namespace proact::locomotion;

namespace {

LocomotionCommand forward(double v, double d) {
    LocomotionCommand c;
    c.v_x = v;
    c.duration = d;
    return c;
}

}  // namespace

TEST_CASE("durations snap to the nearest whole cycle with a one cycle floor") {
    CHECK(snap_duration(2.4) == 2.0);
    CHECK(snap_duration(0.2) == 1.0);
    CHECK(snap_duration(0.0) == 1.0);
    CHECK(snap_duration(2.6) == 3.0);
    CHECK(snap_duration(3.0) == 3.0);

    LocomotionSim sim;
    CHECK(sim.enqueue(forward(0.3, 2.4)).duration == 2.0);
    CHECK(sim.enqueue(forward(0.3, 0.2)).duration == 1.0);
}

TEST_CASE("out of range commands are rejected with the violated bound") {
    CHECK_THROWS_AS(to_command({"turn", "left", 200.0}), RangeViolation);
    try {
        to_command({"move", "forward", 1.6});
        FAIL("expected rejection");
    } catch (const RangeViolation& e) {
        CHECK(e.bound == 1.5);
        CHECK(e.value == 1.6);
    }
    CHECK_NOTHROW(to_command({"turn", "right", 180.0}));
    CHECK_NOTHROW(to_command({"move", "backward", 1.5}));
    CHECK_THROWS_AS(to_command({"jump", "up", 1.0}), std::invalid_argument);

    LocomotionSim sim;
    CHECK_THROWS_AS(sim.enqueue(forward(0.3, 6.0)), RangeViolation);  // 1.8 m
    LocomotionCommand spin;
    spin.omega_z = std::numbers::pi / 6;
    spin.duration = 7.0;  // 210 deg
    CHECK_THROWS_AS(sim.enqueue(spin), RangeViolation);
    CHECK(sim.idle());
}

TEST_CASE("planner moves convert at the reference speeds") {
    auto turn = to_command({"turn", "left", 90.0});
    CHECK(turn.omega_z == doctest::Approx(std::numbers::pi / 6));
    CHECK(turn.duration == doctest::Approx(3.0));
    auto back = to_command({"move", "backward", 0.6});
    CHECK(back.v_x == doctest::Approx(-0.3));
    CHECK(back.duration == doctest::Approx(2.0));
    auto side = to_command({"move", "right", 0.3});
    CHECK(side.v_y == doctest::Approx(-0.3));
}

TEST_CASE("constant commands integrate to the arithmetic result") {
    LocomotionSim sim;
    sim.enqueue(forward(0.3, 2.0));
    for (int i = 0; i < 300; ++i) sim.step(0.01);
    CHECK(sim.pose().x == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(std::abs(sim.pose().y) < 1e-12);

    LocomotionSim turn;
    LocomotionCommand c;
    c.omega_z = std::numbers::pi / 6;
    c.duration = 3.0;
    turn.enqueue(c);
    for (int i = 0; i < 40; ++i) turn.step(0.1);
    CHECK(turn.pose().theta == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
}

TEST_CASE("pose integration matches the closed form regardless of step size") {
    LocomotionCommand c;
    c.v_x = 0.25;
    c.v_y = -0.1;
    c.omega_z = 0.4;
    c.duration = 3.0;
    const PlanarPose start{0.2, -0.3, 2.9};
    const PlanarPose exact = integrate(start, c, 3.0);
    for (double dt : {0.5, 0.01, 0.37}) {
        PlanarPose p = start;
        double t = 0.0;
        while (t < 3.0 - 1e-12) {
            const double h = std::min(dt, 3.0 - t);
            p = integrate(p, c, h);
            t += h;
        }
        CHECK(std::abs(p.x - exact.x) < 1e-9);
        CHECK(std::abs(p.y - exact.y) < 1e-9);
        CHECK(std::abs(wrap_angle(p.theta - exact.theta)) < 1e-9);
    }
    // Against a fine Runge-Kutta reference of x' = vx cos - vy sin, y' = vx sin + vy cos.
    double x = start.x, y = start.y, th = start.theta;
    const int n = 30000;
    const double h = 3.0 / n;
    auto f = [&](double theta) {
        return std::array<double, 2>{c.v_x * std::cos(theta) - c.v_y * std::sin(theta),
                                     c.v_x * std::sin(theta) + c.v_y * std::cos(theta)};
    };
    for (int i = 0; i < n; ++i) {
        auto k1 = f(th), k2 = f(th + 0.5 * h * c.omega_z), k4 = f(th + h * c.omega_z);
        x += h / 6 * (k1[0] + 4 * k2[0] + k4[0]);
        y += h / 6 * (k1[1] + 4 * k2[1] + k4[1]);
        th += h * c.omega_z;
    }
    CHECK(std::abs(x - exact.x) < 1e-9);
    CHECK(std::abs(y - exact.y) < 1e-9);
    CHECK(std::abs(wrap_angle(th) - exact.theta) < 1e-9);
}

TEST_CASE("heading stays wrapped to (-pi, pi]") {
    CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
    LocomotionSim sim;
    for (int i = 0; i < 3; ++i) {
        LocomotionCommand c;
        c.omega_z = std::numbers::pi / 6;
        c.duration = 6.0;
        sim.enqueue(c);
    }
    for (int i = 0; i < 1900; ++i) {
        sim.step(0.01);
        CHECK(sim.pose().theta > -std::numbers::pi);
        CHECK(sim.pose().theta <= std::numbers::pi);
    }
}

TEST_CASE("a command enqueued mid-cycle starts at the next boundary") {
    LocomotionSim sim;
    const double dt = 0.001;
    while (sim.time() < 0.37 - 1e-9) sim.step(dt);
    sim.enqueue(forward(0.3, 1.0));
    double first_change = -1.0;
    while (sim.time() < 3.0 - 1e-9) {
        auto r = sim.step(dt);
        if (first_change < 0 && r.primitive != "idle") first_change = sim.time();
    }
    CHECK(first_change == doctest::Approx(1.0).epsilon(1e-9));
    bool saw_start = false;
    for (const auto& e : sim.events()) {
        if (e.event == "start") {
            saw_start = true;
            CHECK(e.t == doctest::Approx(1.0));
        }
    }
    CHECK(saw_start);
}

TEST_CASE("all transitions align to cycle boundaries over random schedules") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double dt : {0.01, 0.033, 0.25}) {
        LocomotionSim sim;
        std::string prev = sim.active_primitive();
        int transitions = 0;
        for (int i = 0; i < 4000 && sim.time() < 120.0; ++i) {
            if (u(rng) < 0.02) {
                if (u(rng) < 0.5) sim.enqueue(to_command({"turn", u(rng) < 0.5 ? "left" : "right", 180.0 * u(rng)}));
                else sim.enqueue(to_command({"move", u(rng) < 0.5 ? "forward" : "left", 1.5 * u(rng)}));
            }
            auto r = sim.step(dt);
            if (r.primitive != prev) {
                ++transitions;
                // The step may overshoot the boundary by at most one dt.
                const double phase = std::fmod(sim.time(), 1.0);
                CHECK(phase < dt + 1e-9);
                prev = r.primitive;
            }
        }
        CHECK(transitions > 5);
        for (const auto& e : sim.events()) {
            if (e.event == "enqueue") continue;
            const double off = std::abs(e.t - std::round(e.t));
            CHECK(off < 1e-9);
        }
    }
}

TEST_CASE("idle simulator holds its pose") {
    LocomotionSim sim;
    for (int i = 0; i < 500; ++i) sim.step(0.013);
    CHECK(sim.pose().x == 0.0);
    CHECK(sim.pose().y == 0.0);
    CHECK(sim.pose().theta == 0.0);
    CHECK(sim.active_primitive() == "idle");
}

TEST_CASE("queued commands run back to back") {
    LocomotionSim sim;
    sim.enqueue(forward(0.3, 1.0));
    sim.enqueue(to_command({"turn", "left", 90.0}));
    std::vector<std::pair<double, std::string>> seen;
    std::string prev = "";
    while (sim.time() < 6.0 - 1e-9) {
        auto r = sim.step(0.1);
        if (r.primitive != prev) seen.push_back({sim.time(), r.primitive});
        prev = r.primitive;
    }
    REQUIRE(seen.size() == 3);
    CHECK(seen[0].second == "walk_forward");
    CHECK(seen[1].second == "turn_left");
    CHECK(seen[1].first == doctest::Approx(1.0));
    CHECK(seen[2].second == "idle");
    CHECK(seen[2].first == doctest::Approx(4.0));
    CHECK(sim.pose().x == doctest::Approx(0.3));
    CHECK(sim.pose().theta == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("event log is newline-delimited with the expected fields") {
    LocomotionSim sim;
    sim.enqueue(forward(0.3, 1.0));
    for (int i = 0; i < 20; ++i) sim.step(0.1);
    std::ostringstream out;
    sim.write_log(out);
    std::istringstream in(out.str());
    std::string line;
    std::vector<std::string> kinds;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j.contains("t"));
        CHECK(j.contains("primitive"));
        CHECK(j["pose"].contains("theta"));
        kinds.push_back(j["event"]);
    }
    CHECK(kinds == std::vector<std::string>{"enqueue", "start", "stop"});
}
