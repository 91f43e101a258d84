#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "proact/cognitive/loop.hpp"
#include "proact/locomotion/sim.hpp"
#include "proact/scenario/synthetic.hpp"
#include "proact/streaming/engine.hpp"

namespace proact::scenario {

struct ScriptEvent {
    enum class Kind { user_utterance, agent_turn, scene_event, end };
    double t = 0.0;  // seconds
    Kind kind = Kind::end;
    std::string text;       // utterances and agent turns
    double duration = 0.0;  // seconds of speech
    std::string token;      // scene events
};

struct ScenarioScript {
    std::string name;
    std::string scenario_prompt;
    std::uint64_t seed = 0;
    std::vector<ScriptEvent> events;

    double end_time() const;
    // Time-ordered, exactly one end event and it comes last, speech durations positive.
    void validate() const;
    static ScenarioScript from_json(const nlohmann::json& j);
    static ScenarioScript load(const std::string& path);
};

// Speaking schedules of the script at the given frame rate, padded to `frames`.
std::pair<std::vector<bool>, std::vector<bool>> speaking_schedule(const ScenarioScript& s, double fps, Eigen::Index frames);

struct HarnessSetup {
    const flow::VelocityNetwork* base = nullptr;
    const control::ControlBranch* branch = nullptr;  // optional
    streaming::StreamConfig stream;
    motion::SkeletonRef skeleton;
    std::shared_ptr<cognitive::ReasonerBackend> encoder;
    std::shared_ptr<cognitive::ReasonerBackend> planner;
    cognitive::CognitiveConfig cognitive;
    const motion::IntentionVocabulary* vocab = nullptr;
    locomotion::LocomotionLimits limits;
    SyntheticCoupling coupling;
    // Leaves wall-clock fields out of the trace so repeated runs compare byte for byte.
    bool deterministic = false;
};

struct ScenarioResult {
    std::vector<nlohmann::ordered_json> trace;  // one record per line, each with a "kind"
    std::vector<streaming::BudgetReport> budgets;
    std::vector<cognitive::CycleRecord> cycles;
    std::vector<locomotion::LocomotionEvent> locomotion;
    Matrix motion;  // every emitted frame, in order
    bool aborted = false;
    std::string error;

    void write_trace(std::ostream& out) const;
    std::string trace_text() const;
};

// Replays the script: audio drives the stream, transcript and scene events drive the cognitive
// loop every cycle_seconds of sim time, and each cycle's plan is applied when the next cycle starts
// (gesture to the mailbox, interrupt and prefill to the dialogue stub, moves to the locomotion queue).
// A cycle runs on its own thread while the stream keeps generating chunks.
ScenarioResult run_scenario(const ScenarioScript& script, const HarnessSetup& setup);

struct CausalityReport {
    bool ok = true;
    std::string detail;
};

// Every chunk that applied an intention must follow an intention record carrying the same text.
CausalityReport check_causality(const std::vector<nlohmann::ordered_json>& trace);

}  // namespace proact::scenario
