#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "proact/flow/network.hpp"
#include "proact/motion/intention.hpp"
#include "proact/motion/skeleton.hpp"

namespace proact::scenario {

// Number of per-stream audio features produced by the generator:
// onset impulse, decaying envelope, activity, sin/cos of beat phase, loudness.
inline constexpr int kAudioFeatureDims = 6;

// Canonical motion segment for one intention, expressed on a subset of frame columns.
struct IntentionTemplate {
    std::string raw_text;
    std::vector<int> columns;  // frame columns the template drives
    Matrix values;             // length x columns.size()

    Eigen::Index length() const { return values.rows(); }
};

struct SyntheticCoupling {
    int beat_period = 15;  // frames
    int beat_jitter = 2;   // uniform +/- frames per beat
    int min_turn = 90;
    int max_turn = 240;
    int activity_ramp = 8;
    double speaker_amplitude = 0.8;
    double listener_amplitude = 0.35;
    double noise_std = 0.005;
    double sway_std = 0.02;  // per-frame innovation of the slow spine sway
    int crossfade = 6;
    std::map<std::string, IntentionTemplate> templates;

    void validate(const motion::SkeletonSpec& skeleton) const;
    const IntentionTemplate& find_template(const std::string& raw_text) const;

    // Beat period 15 at 30 fps with six gesture templates for the toy skeleton
    // (every named joint must exist in the skeleton).
    static SyntheticCoupling standard(const motion::SkeletonSpec& skeleton);
};

// A continuous dyadic recording: the agent gestures on its own beats while speaking and
// nods on the user's beats while listening.
struct DyadStream {
    Matrix motion;  // frames x frame_width
    Matrix user_audio, agent_audio;
    std::vector<int> user_beats, agent_beats;
    std::vector<bool> agent_speaking;

    Eigen::Index frames() const { return motion.rows(); }
    // Beats of whichever side is speaking, sorted.
    std::vector<int> beats() const;
    std::vector<int> beats_in(Eigen::Index begin, Eigen::Index end) const;
    flow::ConditioningBundle audio_window(Eigen::Index begin, Eigen::Index end) const;
};

DyadStream generate_stream(const SyntheticCoupling& coupling, const motion::SkeletonSpec& skeleton, Eigen::Index frames,
                           std::uint64_t seed);

// Audio-only streams for driving the generator at inference; same statistics as generate_stream.
DyadStream generate_audio(const SyntheticCoupling& coupling, Eigen::Index frames, std::uint64_t seed);

// Audio for an explicit speaking schedule; either side may be silent at any frame. Motion is left empty.
DyadStream render_audio(const SyntheticCoupling& coupling, const std::vector<bool>& user_active,
                        const std::vector<bool>& agent_active, std::uint64_t seed);

// Overwrites the template's columns starting at `offset`; the `crossfade` frames on either
// side are blended linearly toward the template's first and last poses.
void splice_template(Matrix& motion, const IntentionTemplate& tmpl, Eigen::Index offset, int crossfade);

struct TrainingTriple {
    Matrix motion;  // window x frame_width
    flow::ConditioningBundle audio;
    motion::IntentionSignal intention;  // empty when unlabelled
    std::vector<int> beats;            // window-relative audio beat frames
};

struct DatasetSpec {
    int size = 1;
    int window = 150;
    int template_offset = 30;        // intention segments start at this window row
    double intention_fraction = 0.0;  // share of samples carrying a template
    int stream_frames = 1800;        // length of each underlying recording
};

// Windows cut from seeded recordings; intention-labelled windows have a template spliced
// at template_offset. Fully determined by (coupling, spec, seed).
std::vector<TrainingTriple> generate_dataset(const SyntheticCoupling& coupling, const motion::SkeletonSpec& skeleton,
                                             const motion::IntentionVocabulary& vocab, const DatasetSpec& spec,
                                             std::uint64_t seed);

}  // namespace proact::scenario
