#pragma once

#include <string>
#include <vector>

namespace proact::motion {

// Frame layout: [joint_0 expmap(3), ..., joint_{J-1} expmap(3), root_pos(3), root_vel(3)].
class SkeletonSpec {
public:
    static constexpr int kRotDimsPerJoint = 3;
    static constexpr int kRootDims = 6;

    SkeletonSpec(std::vector<std::string> joint_names, double fps);

    // Five-joint desk-scale skeleton used by default everywhere.
    static SkeletonSpec toy();
    // Widths matching a 23-joint humanoid robot and the 57-joint capture skeleton.
    static SkeletonSpec robot23();
    static SkeletonSpec capture57();

    int joint_count() const { return static_cast<int>(joint_names_.size()); }
    int frame_width() const { return joint_count() * kRotDimsPerJoint + kRootDims; }
    double fps() const { return fps_; }
    const std::vector<std::string>& joint_names() const { return joint_names_; }

    // Index of a joint by name; throws std::out_of_range if unknown.
    int joint_index(const std::string& name) const;
    int root_offset() const { return joint_count() * kRotDimsPerJoint; }

    bool operator==(const SkeletonSpec&) const = default;

private:
    std::vector<std::string> joint_names_;
    double fps_;
};

}  // namespace proact::motion
