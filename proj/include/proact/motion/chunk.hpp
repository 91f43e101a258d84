#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "proact/core/linalg.hpp"
#include "proact/motion/skeleton.hpp"

namespace proact::motion {

using SkeletonRef = std::shared_ptr<const SkeletonSpec>;

inline SkeletonRef make_skeleton(SkeletonSpec spec) { return std::make_shared<const SkeletonSpec>(std::move(spec)); }

// A run of consecutive frames taken from a global stream starting at start_index.
// frames() is n x frame_width, one row per frame.
class MotionChunk {
public:
    MotionChunk() = default;
    MotionChunk(Matrix frames, std::int64_t start_index, SkeletonRef skeleton);

    const Matrix& frames() const { return frames_; }
    std::int64_t start_index() const { return start_index_; }
    std::int64_t end_index() const { return start_index_ + length(); }
    Eigen::Index length() const { return frames_.rows(); }
    Eigen::Index width() const { return frames_.cols(); }
    const SkeletonRef& skeleton() const { return skeleton_; }

    std::span<const double> frame(Eigen::Index i) const {
        return {frames_.data() + i * frames_.cols(), static_cast<std::size_t>(frames_.cols())};
    }

    // Frames [begin, end) as a new chunk with start_index shifted accordingly.
    MotionChunk slice(Eigen::Index begin, Eigen::Index end) const;

    bool operator==(const MotionChunk& other) const;

private:
    Matrix frames_;
    std::int64_t start_index_ = 0;
    SkeletonRef skeleton_;
};

enum class AudioSource { user, agent };

std::string to_string(AudioSource source);

// Per-frame audio features (n x F) for one side of the dyad.
struct AudioFeatureChunk {
    Matrix features;
    AudioSource source = AudioSource::user;

    Eigen::Index length() const { return features.rows(); }
    Eigen::Index dims() const { return features.cols(); }
};

// Wraps an angle-axis vector so that its angle lies in [0, pi].
void canonicalize_expmap(std::span<double, 3> rotation);

// Canonicalizes every joint block of every frame in place.
void canonicalize_frames(Matrix& frames, const SkeletonSpec& skeleton);

}  // namespace proact::motion
