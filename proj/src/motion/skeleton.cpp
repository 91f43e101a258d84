#include "proact/motion/skeleton.hpp"

#include <algorithm>
#include <stdexcept>

namespace proact::motion {

SkeletonSpec::SkeletonSpec(std::vector<std::string> joint_names, double fps)
    : joint_names_(std::move(joint_names)), fps_(fps) {
    if (joint_names_.empty()) throw std::invalid_argument("skeleton needs at least one joint");
    if (!(fps_ > 0.0)) throw std::invalid_argument("skeleton fps must be positive");
}

SkeletonSpec SkeletonSpec::toy() {
    return SkeletonSpec({"spine", "head", "left_arm", "right_arm", "right_hand"}, 30.0);
}

namespace {
std::vector<std::string> numbered(const std::string& prefix, int count) {
    std::vector<std::string> names;
    names.reserve(count);
    for (int i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i));
    return names;
}
}  // namespace

SkeletonSpec SkeletonSpec::robot23() { return SkeletonSpec(numbered("robot_joint_", 23), 30.0); }

SkeletonSpec SkeletonSpec::capture57() { return SkeletonSpec(numbered("capture_joint_", 57), 30.0); }

int SkeletonSpec::joint_index(const std::string& name) const {
    auto it = std::find(joint_names_.begin(), joint_names_.end(), name);
    if (it == joint_names_.end()) throw std::out_of_range("unknown joint '" + name + "'");
    return static_cast<int>(it - joint_names_.begin());
}

}  // namespace proact::motion
