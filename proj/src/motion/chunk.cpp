#include "proact/motion/chunk.hpp"

#include <cmath>
#include <numbers>

#include "proact/core/errors.hpp"

namespace proact::motion {

MotionChunk::MotionChunk(Matrix frames, std::int64_t start_index, SkeletonRef skeleton)
    : frames_(std::move(frames)), start_index_(start_index), skeleton_(std::move(skeleton)) {
    if (!skeleton_) throw std::invalid_argument("motion chunk requires a skeleton");
    if (frames_.cols() != skeleton_->frame_width() && frames_.rows() > 0) {
        throw ShapeError("motion chunk width " + std::to_string(frames_.cols()) + " does not match skeleton width " +
                         std::to_string(skeleton_->frame_width()));
    }
    if (frames_.rows() == 0) frames_.resize(0, skeleton_->frame_width());
}

MotionChunk MotionChunk::slice(Eigen::Index begin, Eigen::Index end) const {
    if (begin < 0 || end < begin || end > length()) throw std::out_of_range("chunk slice out of range");
    Matrix part = frames_.middleRows(begin, end - begin);
    return MotionChunk(std::move(part), start_index_ + begin, skeleton_);
}

bool MotionChunk::operator==(const MotionChunk& other) const {
    return start_index_ == other.start_index_ && frames_.rows() == other.frames_.rows() &&
           frames_.cols() == other.frames_.cols() && frames_ == other.frames_ &&
           ((skeleton_ == other.skeleton_) || (skeleton_ && other.skeleton_ && *skeleton_ == *other.skeleton_));
}

std::string to_string(AudioSource source) { return source == AudioSource::user ? "user" : "agent"; }

void canonicalize_expmap(std::span<double, 3> r) {
    constexpr double kPi = std::numbers::pi;
    const double angle = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    if (angle <= kPi || !std::isfinite(angle)) return;
    double wrapped = std::fmod(angle, 2.0 * kPi);
    // Same rotation about the same axis with angle in [0, 2pi); flip the axis past pi.
    double scale = wrapped / angle;
    if (wrapped > kPi) scale = (wrapped - 2.0 * kPi) / angle;
    for (auto& v : r) v *= scale;
}

void canonicalize_frames(Matrix& frames, const SkeletonSpec& skeleton) {
    for (Eigen::Index t = 0; t < frames.rows(); ++t) {
        for (int j = 0; j < skeleton.joint_count(); ++j) {
            canonicalize_expmap(std::span<double, 3>(frames.row(t).data() + 3 * j, 3));
        }
    }
}

}  // namespace proact::motion
