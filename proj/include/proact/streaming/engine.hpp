#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <vector>

#include "proact/control/branch.hpp"
#include "proact/flow/flow.hpp"
#include "proact/motion/chunk.hpp"
#include "proact/motion/intention.hpp"

namespace proact::streaming {

struct BudgetReport {
    double t_gen = 0.0;     // seconds of wall clock spent in the solver
    double t_motion = 0.0;  // seconds of playback produced: emitted frames / fps
    double ratio = 0.0;
    bool deadline_met = false;

    static BudgetReport make(double t_gen, double t_motion);
};

// Depth-one, last-writer-wins slot shared between the planner and the motion loop.
class IntentionMailbox {
public:
    struct Message {
        motion::IntentionSignal signal;
        bool release = false;
    };

    // Returns true when an unconsumed message was overwritten.
    bool post(Message message);
    std::optional<Message> take();
    bool pending() const;

private:
    mutable std::mutex mutex_;
    std::optional<Message> slot_;
};

struct Acknowledgement {
    bool accepted = false;
    bool superseded_pending = false;
};

// Validates the signal against the vocabulary, then posts it. An empty signal is a release.
Acknowledgement inject_intention(IntentionMailbox& mailbox, const motion::IntentionSignal& signal,
                                 const motion::IntentionVocabulary& vocab);

// Synchronized dual audio covering global frames [0, available_end()).
class AudioFeed {
public:
    virtual ~AudioFeed() = default;
    virtual std::int64_t available_end() const = 0;
    // Throws StreamStarvation when the range is not covered yet.
    virtual flow::ConditioningBundle window(std::int64_t begin, std::int64_t end) const = 0;
};

class MatrixAudioFeed : public AudioFeed {
public:
    MatrixAudioFeed(Matrix user, Matrix agent);
    std::int64_t available_end() const override { return user_.rows(); }
    flow::ConditioningBundle window(std::int64_t begin, std::int64_t end) const override;

private:
    Matrix user_, agent_;
};

struct StreamConfig {
    flow::FlowConfig flow;
    int ramp_frames = 15;  // R: linear gate ramp length after activation and after release
    int hold_chunks = 1;   // chunks an intention stays active before auto-release; 0 keeps it
    bool clamp = true;     // false runs the clamp-off ablation
    std::uint64_t seed = 0;
};

struct StreamState {
    std::int64_t chunk_index = 0;
    std::int64_t emitted_end = 0;
    std::optional<Matrix> cached_tail;
    motion::IntentionSignal active_intention;
    motion::IntentionSignal branch_intention;  // fed to the branch; outlives a release until the gate reaches 0
    double gate = 0.0;         // gate at the last emitted frame
    double gate_target = 0.0;
    int held_chunks = 0;
};

struct ChunkResult {
    motion::MotionChunk emitted;  // new frames only
    motion::MotionChunk window;   // the full sampled window
    BudgetReport budget;
    control::GateProfile gate;    // per window row
    motion::IntentionSignal active_intention;
    bool intention_applied = false;  // a mailbox intention became active at this boundary
};

class StreamingEngine {
public:
    // branch may be null for audio-only generation; both must outlive the engine.
    StreamingEngine(const flow::VelocityNetwork& base, const control::ControlBranch* branch, StreamConfig cfg,
                    motion::SkeletonRef skeleton);

    IntentionMailbox& mailbox() { return mailbox_; }
    const StreamState& state() const { return state_; }
    const std::vector<BudgetReport>& budget_history() const { return history_; }
    const StreamConfig& config() const { return cfg_; }

    // Frames the next call will emit, and the audio range it needs.
    std::int64_t next_window_begin() const;
    std::int64_t next_window_end() const { return next_window_begin() + cfg_.flow.window; }

    ChunkResult next_chunk(const AudioFeed& audio);

private:
    void apply_mailbox(bool& applied);

    const flow::VelocityNetwork& base_;
    const control::ControlBranch* branch_;
    StreamConfig cfg_;
    motion::SkeletonRef skeleton_;
    IntentionMailbox mailbox_;
    StreamState state_;
    std::vector<BudgetReport> history_;
};

// {"chunk_index", "t_gen_ms", "t_motion_ms", "deadline_met", "active_intention", "gate"}
void write_trace_record(std::ostream& out, std::int64_t chunk_index, const ChunkResult& r);

}  // namespace proact::streaming
