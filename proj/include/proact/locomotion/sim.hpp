#pragma once

#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace proact::locomotion {

struct LocomotionCommand {
    double v_x = 0.0;      // m/s, body frame
    double v_y = 0.0;      // m/s, body frame
    double omega_z = 0.0;  // rad/s
    double duration = 0.0; // s
    std::string tracking_target;
    std::string reasoning;

    bool is_turn() const { return omega_z != 0.0; }
    bool operator==(const LocomotionCommand&) const = default;
};

struct LocomotionLimits {
    double max_translation = 1.5;   // m
    double max_turn_deg = 180.0;
    double reference_speed = 0.3;   // m/s used to turn planner distances into durations
    double reference_turn_deg_s = 30.0;
    double cycle_period = 1.0;      // s, fixed gait cycle
};

// Planner-level move as produced by the behaviour planner:
// action "move" (direction forward|backward|left|right, meters) or "turn" (left|right, degrees).
struct PlannerMove {
    std::string action;
    std::string direction;
    double magnitude = 0.0;
    std::string tracking_target;
    std::string reasoning;
};

// Throws RangeViolation naming the violated bound.
LocomotionCommand to_command(const PlannerMove& move, const LocomotionLimits& limits = {});

// Nearest whole number of gait cycles, at least one.
double snap_duration(double seconds, double cycle_period = 1.0);

struct PlanarPose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // wrapped to (-pi, pi]
};

double wrap_angle(double a);

// Closed-form pose after holding a constant body-frame command for h seconds.
PlanarPose integrate(const PlanarPose& p, const LocomotionCommand& c, double h);

std::string primitive_name(const LocomotionCommand* c);

struct LocomotionEvent {
    double t = 0.0;
    std::string event;  // enqueue | start | stop
    std::string primitive;
    PlanarPose pose;
};

struct StepResult {
    PlanarPose pose;
    std::string primitive;
};

class LocomotionSim {
public:
    explicit LocomotionSim(LocomotionLimits limits = {});

    // Validates magnitudes, snaps the duration, and queues the command. The command starts
    // at the first gait-cycle boundary at which nothing else is running.
    const LocomotionCommand& enqueue(LocomotionCommand cmd);

    // Advances by dt > 0, splitting the step at every cycle boundary crossed.
    StepResult step(double dt);

    double time() const { return t_; }
    double phase() const;
    const PlanarPose& pose() const { return pose_; }
    std::string active_primitive() const { return primitive_name(active_ ? &*active_ : nullptr); }
    bool idle() const { return !active_ && queue_.empty(); }
    const std::vector<LocomotionEvent>& events() const { return events_; }
    const LocomotionLimits& limits() const { return limits_; }

    // One record per event: {"t", "event", "primitive", "pose": {"x", "y", "theta"}}
    void write_log(std::ostream& out) const;

private:
    void boundary(double at);

    LocomotionLimits limits_;
    double t_ = 0.0;
    long cycle_ = 0;  // index of the boundary at or before t_
    PlanarPose pose_;
    std::deque<LocomotionCommand> queue_;
    std::optional<LocomotionCommand> active_;
    double active_end_ = 0.0;
    std::vector<LocomotionEvent> events_;
};

}  // namespace proact::locomotion
