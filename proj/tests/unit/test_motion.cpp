#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "proact/core/errors.hpp"
#include "proact/core/rng.hpp"
#include "proact/motion/chunk_io.hpp"
#include "proact/motion/chunk_ops.hpp"
#include "proact/motion/intention.hpp"

using namespace proact;
using namespace proact::motion;

namespace {

SkeletonRef toy() { return make_skeleton(SkeletonSpec::toy()); }

Matrix random_frames(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
    Rng rng(seed);
    return 0.3 * standard_normal(rng, rows, cols);
}

}  // namespace

TEST_CASE("skeleton widths") {
    CHECK(SkeletonSpec::toy().frame_width() == 21);
    CHECK(SkeletonSpec::robot23().frame_width() == 75);
    CHECK(SkeletonSpec::capture57().frame_width() == 177);
    CHECK_THROWS(SkeletonSpec({}, 30.0));
    CHECK_THROWS(SkeletonSpec({"a"}, 0.0));
}

TEST_CASE("validate_chunk") {
    auto sk = toy();
    MotionChunk ok(random_frames(1, 10, 21), 0, sk);
    CHECK(validate_chunk(ok, *sk).empty());
    CHECK(validate_chunk(ok, *sk).size() == validate_chunk(ok, *sk).size());

    Matrix bad = ok.frames();
    bad(4, 7) = std::numeric_limits<double>::quiet_NaN();
    auto report = validate_frames(bad, *sk);
    REQUIRE(report.size() == 1);
    CHECK(report[0].kind == Violation::Kind::non_finite);
    CHECK(report[0].frame == 4);
    CHECK(report[0].column == 7);

    auto robot = SkeletonSpec::robot23();
    auto wide = validate_frames(Matrix::Zero(3, 74), robot);
    REQUIRE(wide.size() == 1);
    CHECK(wide[0].kind == Violation::Kind::width);

    Matrix twisted = Matrix::Zero(2, 21);
    twisted(1, 3) = 4.0;
    auto rot = validate_frames(twisted, *sk);
    REQUIRE(rot.size() == 1);
    CHECK(rot[0].kind == Violation::Kind::rotation_angle);
    canonicalize_frames(twisted, *sk);
    CHECK(validate_frames(twisted, *sk).empty());
    CHECK(twisted(1, 3) == doctest::Approx(4.0 - 2 * M_PI));
}

TEST_CASE("concat_with_overlap and tail") {
    auto sk = toy();
    MotionChunk prev(random_frames(2, 150, 21), 0, sk);
    Matrix next_frames = random_frames(3, 150, 21);
    next_frames.topRows(30) = prev.frames().bottomRows(30);
    MotionChunk next(next_frames, 120, sk);

    MotionChunk joined = concat_with_overlap(prev, next, 30);
    CHECK(joined.length() == 270);
    CHECK(joined.start_index() == 0);
    CHECK(joined.slice(0, 150) == prev);
    CHECK(joined.slice(150, 270) == next.slice(30, 150));

    MotionChunk plain = concat_with_overlap(prev, MotionChunk(random_frames(4, 150, 21), 150, sk), 0);
    CHECK(plain.length() == 300);

    Matrix perturbed = next_frames;
    perturbed(12, 5) += 10 * kOverlapTolerance;
    try {
        concat_with_overlap(prev, MotionChunk(perturbed, 120, sk), 30);
        FAIL("expected overlap mismatch");
    } catch (const OverlapMismatch& e) {
        CHECK(e.frame == 12);
        CHECK(e.column == 5);
    }
    CHECK_THROWS(concat_with_overlap(prev, MotionChunk(next_frames, 121, sk), 30));

    MotionChunk t = tail(prev, 30);
    CHECK(t.length() == 30);
    CHECK(t.start_index() == 120);
    CHECK(t.frames() == prev.frames().bottomRows(30));
    CHECK(tail(prev, 150) == prev);
    CHECK(tail(prev, 0).length() == 0);
    CHECK_THROWS_AS(tail(prev, 151), std::out_of_range);
}

TEST_CASE("frame_delta_stats") {
    auto sk = toy();
    auto constant = frame_delta_stats(MotionChunk(Matrix::Constant(20, 21, 0.7), 0, sk));
    CHECK(constant.aggregate.max == 0.0);
    CHECK(constant.aggregate.mean == 0.0);

    Matrix ramp(20, 21);
    for (int t = 0; t < 20; ++t) ramp.row(t).setConstant(-0.05 * t);
    auto r = frame_delta_stats(MotionChunk(ramp, 0, sk));
    CHECK(r.aggregate.max == doctest::Approx(0.05));

    Matrix rnd = random_frames(5, 40, 21);
    auto s = frame_delta_stats(MotionChunk(rnd, 0, sk));
    double mx = 0, sum = 0;
    for (int c = 0; c < 21; ++c) {
        double cmx = 0;
        for (int t = 0; t + 1 < 40; ++t) {
            double d = std::abs(rnd(t + 1, c) - rnd(t, c));
            cmx = std::max(cmx, d);
            sum += d;
        }
        CHECK(s.per_coordinate[c].max == cmx);
        mx = std::max(mx, cmx);
    }
    CHECK(s.aggregate.max == mx);
    CHECK(s.aggregate.mean == doctest::Approx(sum / (39 * 21)));
    CHECK_THROWS(frame_delta_stats(MotionChunk(Matrix::Zero(1, 21), 0, sk)));
}

TEST_CASE("chunk serialization round trips") {
    auto sk = toy();
    MotionChunk c(random_frames(6, 17, 21), 42, sk);
    std::stringstream text;
    write_chunk_ndjson(text, c);
    CHECK(read_chunk_ndjson(text, sk) == c);
    std::stringstream bin;
    write_chunk_binary(bin, c);
    CHECK(read_chunk_binary(bin, sk) == c);
}

TEST_CASE("intention parsing") {
    auto vocab = IntentionVocabulary::standard();
    CHECK(vocab.body_parts().size() == 16);
    CHECK(vocab.actions().size() == 24);
    auto s = parse_intention("right_hand wave", vocab);
    CHECK(s.body_part == "right_hand");
    CHECK(s.action == "wave");
    CHECK(parse_intention("   ", vocab).empty());
    try {
        parse_intention("left_flipper wave", vocab);
        FAIL("expected out-of-vocabulary");
    } catch (const OutOfVocabulary& e) {
        CHECK(e.token == "left_flipper");
    }
    CHECK_FALSE(check_intention(IntentionSignal{"head", "nod", "head nod", 1.5, 0}, vocab).empty());
}
