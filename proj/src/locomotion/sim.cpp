#include "proact/locomotion/sim.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "proact/core/errors.hpp"

namespace proact::locomotion {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kTimeEps = 1e-9;
}  // namespace

double snap_duration(double seconds, double cycle_period) {
    if (!(seconds >= 0.0) || !std::isfinite(seconds)) throw std::invalid_argument("duration must be finite and >= 0");
    const double cycles = std::max(1.0, std::round(seconds / cycle_period));
    return cycles * cycle_period;
}

LocomotionCommand to_command(const PlannerMove& m, const LocomotionLimits& lim) {
    if (!(m.magnitude >= 0.0)) throw RangeViolation(m.action + " magnitude", m.magnitude, 0.0);
    LocomotionCommand c;
    c.tracking_target = m.tracking_target;
    c.reasoning = m.reasoning;
    if (m.action == "move") {
        if (m.magnitude > lim.max_translation) throw RangeViolation("move distance (m)", m.magnitude, lim.max_translation);
        const double v = lim.reference_speed;
        if (m.direction == "forward") c.v_x = v;
        else if (m.direction == "backward") c.v_x = -v;
        else if (m.direction == "left") c.v_y = v;
        else if (m.direction == "right") c.v_y = -v;
        else throw std::invalid_argument("unknown move direction: " + m.direction);
        c.duration = m.magnitude / v;
    } else if (m.action == "turn") {
        if (m.magnitude > lim.max_turn_deg) throw RangeViolation("turn angle (deg)", m.magnitude, lim.max_turn_deg);
        const double w = lim.reference_turn_deg_s * kDeg;
        if (m.direction == "left") c.omega_z = w;
        else if (m.direction == "right") c.omega_z = -w;
        else throw std::invalid_argument("unknown turn direction: " + m.direction);
        c.duration = m.magnitude / lim.reference_turn_deg_s;
    } else {
        throw std::invalid_argument("unknown locomotion action: " + m.action);
    }
    return c;
}

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);  // [-pi, pi]
    if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

PlanarPose integrate(const PlanarPose& p, const LocomotionCommand& c, double h) {
    PlanarPose q = p;
    const double th = p.theta;
    if (std::abs(c.omega_z) < 1e-12) {
        q.x += (c.v_x * std::cos(th) - c.v_y * std::sin(th)) * h;
        q.y += (c.v_x * std::sin(th) + c.v_y * std::cos(th)) * h;
    } else {
        const double th1 = th + c.omega_z * h;
        const double w = c.omega_z;
        q.x += (c.v_x * (std::sin(th1) - std::sin(th)) + c.v_y * (std::cos(th1) - std::cos(th))) / w;
        q.y += (c.v_x * (std::cos(th) - std::cos(th1)) + c.v_y * (std::sin(th1) - std::sin(th))) / w;
        q.theta = wrap_angle(th1);
    }
    return q;
}

std::string primitive_name(const LocomotionCommand* c) {
    if (!c) return "idle";
    if (c->omega_z > 0) return "turn_left";
    if (c->omega_z < 0) return "turn_right";
    if (c->v_x > 0) return "walk_forward";
    if (c->v_x < 0) return "walk_backward";
    if (c->v_y > 0) return "side_step_left";
    if (c->v_y < 0) return "side_step_right";
    return "idle";
}

LocomotionSim::LocomotionSim(LocomotionLimits limits) : limits_(limits) {
    if (limits_.cycle_period != 1.0) throw std::invalid_argument("the gait cycle is fixed at 1.0 s");
}

double LocomotionSim::phase() const { return t_ - static_cast<double>(cycle_) * limits_.cycle_period; }

const LocomotionCommand& LocomotionSim::enqueue(LocomotionCommand cmd) {
    if (!(cmd.duration >= 0.0)) throw std::invalid_argument("duration must be >= 0");
    const double dist = std::hypot(cmd.v_x, cmd.v_y) * cmd.duration;
    const double turn = std::abs(cmd.omega_z) * cmd.duration / kDeg;
    if (dist > limits_.max_translation + 1e-9) throw RangeViolation("move distance (m)", dist, limits_.max_translation);
    if (turn > limits_.max_turn_deg + 1e-9) throw RangeViolation("turn angle (deg)", turn, limits_.max_turn_deg);
    cmd.duration = snap_duration(cmd.duration, limits_.cycle_period);
    queue_.push_back(std::move(cmd));
    events_.push_back({t_, "enqueue", primitive_name(&queue_.back()), pose_});
    // A command queued exactly on an idle boundary starts now.
    if (!active_ && phase() < kTimeEps) boundary(t_);
    return queue_.back();
}

void LocomotionSim::boundary(double at) {
    if (active_ && at + kTimeEps >= active_end_) {
        events_.push_back({at, "stop", primitive_name(&*active_), pose_});
        active_.reset();
    }
    if (!active_ && !queue_.empty()) {
        active_ = queue_.front();
        queue_.pop_front();
        active_end_ = at + active_->duration;
        events_.push_back({at, "start", primitive_name(&*active_), pose_});
    }
}

StepResult LocomotionSim::step(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step dt must be positive");
    double remaining = dt;
    while (remaining > 0.0) {
        const double next = static_cast<double>(cycle_ + 1) * limits_.cycle_period;
        const double h = std::min(remaining, next - t_);
        if (active_) pose_ = integrate(pose_, *active_, h);
        remaining -= h;
        if (t_ + h + kTimeEps >= next) {
            t_ = next;
            ++cycle_;
            boundary(t_);
            if (remaining < kTimeEps) remaining = 0.0;
        } else {
            t_ += h;
        }
    }
    return {pose_, active_primitive()};
}

void LocomotionSim::write_log(std::ostream& out) const {
    for (const auto& e : events_) {
        nlohmann::ordered_json j;
        j["t"] = e.t;
        j["event"] = e.event;
        j["primitive"] = e.primitive;
        j["pose"] = {{"x", e.pose.x}, {"y", e.pose.y}, {"theta", e.pose.theta}};
        out << j.dump() << '\n';
    }
}

}  // namespace proact::locomotion
