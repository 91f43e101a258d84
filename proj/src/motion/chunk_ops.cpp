#include "proact/motion/chunk_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "proact/core/errors.hpp"
#include "proact/core/stats.hpp"

namespace proact::motion {

ValidationReport validate_frames(const Matrix& frames, const SkeletonSpec& spec) {
    ValidationReport report;
    if (frames.rows() > 0 && frames.cols() != spec.frame_width()) {
        std::ostringstream os;
        os << "frame width " << frames.cols() << " != expected " << spec.frame_width() << " (J=" << spec.joint_count()
           << ", Q=" << SkeletonSpec::kRotDimsPerJoint << ", G=" << SkeletonSpec::kRootDims << ")";
        report.push_back({Violation::Kind::width, -1, -1, os.str()});
        return report;
    }
    for (Eigen::Index t = 0; t < frames.rows(); ++t) {
        for (Eigen::Index c = 0; c < frames.cols(); ++c) {
            if (!std::isfinite(frames(t, c))) {
                std::ostringstream os;
                os << "non-finite value at frame " << t << ", column " << c;
                report.push_back({Violation::Kind::non_finite, t, c, os.str()});
            }
        }
        for (int j = 0; j < spec.joint_count(); ++j) {
            const double angle = frames.row(t).segment(3 * j, 3).norm();
            if (std::isfinite(angle) && angle > std::numbers::pi + 1e-9) {
                std::ostringstream os;
                os << "joint " << j << " rotation angle " << angle << " exceeds pi at frame " << t;
                report.push_back({Violation::Kind::rotation_angle, t, 3 * j, os.str()});
            }
        }
    }
    return report;
}

ValidationReport validate_chunk(const MotionChunk& chunk, const SkeletonSpec& spec) {
    ValidationReport report;
    if (chunk.skeleton() && chunk.skeleton()->frame_width() != spec.frame_width()) {
        report.push_back({Violation::Kind::skeleton, -1, -1, "chunk skeleton differs from the validation skeleton"});
    }
    auto frames = validate_frames(chunk.frames(), spec);
    report.insert(report.end(), frames.begin(), frames.end());
    return report;
}

MotionChunk concat_with_overlap(const MotionChunk& prev, const MotionChunk& next, Eigen::Index overlap) {
    if (overlap < 0 || overlap >= next.length() || overlap > prev.length()) {
        throw std::invalid_argument("overlap must satisfy 0 <= overlap < length(next) and <= length(prev)");
    }
    if (prev.width() != next.width()) throw ShapeError("concat_with_overlap: width mismatch");
    if (next.start_index() != prev.end_index() - overlap) {
        throw std::invalid_argument("concat_with_overlap: next.start_index " + std::to_string(next.start_index()) +
                                    " does not continue prev (expected " +
                                    std::to_string(prev.end_index() - overlap) + ")");
    }
    const Eigen::Index offset = prev.length() - overlap;
    double worst = 0.0;
    Eigen::Index worst_t = 0, worst_c = 0;
    for (Eigen::Index t = 0; t < overlap; ++t) {
        for (Eigen::Index c = 0; c < next.width(); ++c) {
            const double d = std::abs(next.frames()(t, c) - prev.frames()(offset + t, c));
            if (!(d <= worst)) {  // also catches NaN
                worst = std::isnan(d) ? INFINITY : d;
                worst_t = t;
                worst_c = c;
            }
        }
    }
    if (worst > kOverlapTolerance) throw OverlapMismatch(static_cast<std::size_t>(worst_t), static_cast<std::size_t>(worst_c), worst);

    Matrix out(prev.length() + next.length() - overlap, prev.width());
    out.topRows(prev.length()) = prev.frames();
    out.bottomRows(next.length() - overlap) = next.frames().bottomRows(next.length() - overlap);
    return MotionChunk(std::move(out), prev.start_index(), prev.skeleton());
}

MotionChunk tail(const MotionChunk& chunk, Eigen::Index count) {
    if (count < 0 || count > chunk.length()) {
        throw std::out_of_range("tail: requested " + std::to_string(count) + " frames from a chunk of " +
                                std::to_string(chunk.length()));
    }
    return chunk.slice(chunk.length() - count, chunk.length());
}

namespace {
DeltaStats summarize(std::vector<double> values) {
    DeltaStats s;
    s.mean = mean(values);
    s.max = *std::max_element(values.begin(), values.end());
    s.p99 = percentile(std::move(values), 99.0);
    return s;
}
}  // namespace

FrameDeltaReport frame_delta_stats(const MotionChunk& chunk) {
    if (chunk.length() < 2) throw std::invalid_argument("frame_delta_stats needs at least two frames");
    const Eigen::Index steps = chunk.length() - 1;
    FrameDeltaReport report;
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(steps * chunk.width()));
    for (Eigen::Index c = 0; c < chunk.width(); ++c) {
        std::vector<double> col(static_cast<std::size_t>(steps));
        for (Eigen::Index t = 0; t < steps; ++t) {
            col[static_cast<std::size_t>(t)] = std::abs(chunk.frames()(t + 1, c) - chunk.frames()(t, c));
        }
        pooled.insert(pooled.end(), col.begin(), col.end());
        report.per_coordinate.push_back(summarize(std::move(col)));
    }
    report.aggregate = summarize(std::move(pooled));
    return report;
}

std::vector<double> frame_step_norms(const Matrix& frames) {
    std::vector<double> out;
    for (Eigen::Index t = 0; t + 1 < frames.rows(); ++t) out.push_back((frames.row(t + 1) - frames.row(t)).norm());
    return out;
}

}  // namespace proact::motion
