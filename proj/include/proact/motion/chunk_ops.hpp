#pragma once

#include <string>
#include <vector>

#include "proact/motion/chunk.hpp"

namespace proact::motion {

// Maximum tolerated deviation between cached and clamped overlap frames, normalized units.
inline constexpr double kOverlapTolerance = 1e-6;

struct Violation {
    enum class Kind { width, non_finite, rotation_angle, skeleton };
    Kind kind;
    Eigen::Index frame = -1;
    Eigen::Index column = -1;
    std::string message;
};

using ValidationReport = std::vector<Violation>;

// Lists every violated invariant; empty iff the chunk is well-formed for the given skeleton.
ValidationReport validate_chunk(const MotionChunk& chunk, const SkeletonSpec& spec);
// Same checks for a raw frame matrix (used before a chunk is constructed).
ValidationReport validate_frames(const Matrix& frames, const SkeletonSpec& spec);

// prev followed by next with next's first `overlap` frames (which duplicate prev's last
// frames) emitted once. Throws OverlapMismatch beyond kOverlapTolerance and
// std::invalid_argument on index discontinuity.
MotionChunk concat_with_overlap(const MotionChunk& prev, const MotionChunk& next, Eigen::Index overlap);

// Last `count` frames. Throws std::out_of_range when count exceeds the length.
MotionChunk tail(const MotionChunk& chunk, Eigen::Index count);

struct DeltaStats {
    double mean = 0.0;
    double max = 0.0;
    double p99 = 0.0;
};

struct FrameDeltaReport {
    std::vector<DeltaStats> per_coordinate;
    DeltaStats aggregate;
};

// Statistics of |frame_{t+1} - frame_t|, per coordinate and pooled over all coordinates.
FrameDeltaReport frame_delta_stats(const MotionChunk& chunk);

// Euclidean norm of each consecutive frame difference (length n - 1).
std::vector<double> frame_step_norms(const Matrix& frames);

}  // namespace proact::motion
