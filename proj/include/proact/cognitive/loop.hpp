#pragma once

#include <deque>
#include <functional>
#include <memory>

#include "proact/cognitive/reasoner.hpp"
#include "proact/motion/intention.hpp"

namespace proact::cognitive {

struct CognitiveConfig {
    double cycle_seconds = 3.0;
    double t_c = 3.0;  // per-cycle reasoning budget
    int threshold = 4;
    std::size_t field_capacity = kDefaultFieldCapacity;
    int encoder_cycles = 5;
    std::size_t encoder_events = 3;
    int planner_cycles = 1;
    std::size_t planner_events = 1;

    void validate() const;
};

// On backend failure the previous contents come back marked stale. cycle always advances.
MemoryBank encode_context(const MemoryBank& prev, const TranscriptWindow& transcript, const VisualEventSet& events,
                          const BehaviorPlan& prev_plan, ReasonerBackend& backend, const std::string& scenario = "");

struct Assessment {
    MotivationScores scores;
    bool stale = false;
};

// Backend failure yields all-ones (no action) marked stale.
Assessment assess_motivation(const PlannerInputs& in, ReasonerBackend& backend);

struct PlanContext {
    int threshold = 4;
    const motion::IntentionVocabulary* vocab = nullptr;  // when set, gestures outside it are dropped
    locomotion::LocomotionLimits limits;
};

// Drops gestures and prefills already in the history, and every turn once any turn has happened.
BehaviorPlan filter_repeats(BehaviorPlan plan, const ActionHistory& history);

// Early exit below threshold; otherwise channels from the backend, range-checked and filtered
// against in.history. The caller records the emitted plan into its history.
BehaviorPlan plan_behavior(const MotivationScores& scores, const PlannerInputs& in, ReasonerBackend& backend,
                           const PlanContext& ctx);

struct CycleRecord {
    std::int64_t cycle = 0;
    MemoryBank bank;
    BehaviorPlan plan;
    double latency_s = 0.0;
    bool over_budget = false;
    bool encoder_stale = false;
    bool planner_stale = false;
    std::size_t bank_bytes = 0;

    // Timing fields are left out when include_timing is false so traces can be compared byte for byte.
    nlohmann::ordered_json to_json(bool include_timing = true) const;
};

struct Utterance {
    Speaker speaker = Speaker::user;
    std::string text;
};

// Runs encoder and planner side by side on value snapshots of the previous cycle's outputs.
class CognitiveScheduler {
public:
    CognitiveScheduler(CognitiveConfig cfg, std::shared_ptr<ReasonerBackend> encoder,
                       std::shared_ptr<ReasonerBackend> planner, const motion::IntentionVocabulary* vocab = nullptr,
                       std::string scenario_prompt = "");

    // Called after every cycle with the emitted plan; used to forward gestures to the motion mailbox.
    void set_plan_sink(std::function<void(const CycleRecord&)> sink) { sink_ = std::move(sink); }

    // Utterances and events observed since the previous cycle.
    CycleRecord run_cycle(const std::vector<Utterance>& utterances, const std::vector<VisualEvent>& events);

    std::int64_t cycle() const { return bank_.cycle; }
    const MemoryBank& bank() const { return bank_; }
    const BehaviorPlan& plan() const { return plan_; }
    const ActionHistory& history() const { return history_; }
    std::size_t transcript_size() const { return transcript_.size(); }
    const CognitiveConfig& config() const { return cfg_; }

private:
    CognitiveConfig cfg_;
    std::shared_ptr<ReasonerBackend> encoder_;
    std::shared_ptr<ReasonerBackend> planner_;
    PlanContext ctx_;
    std::string scenario_;
    MemoryBank bank_;
    BehaviorPlan plan_;
    ActionHistory history_;
    std::deque<TranscriptEntry> transcript_;
    std::function<void(const CycleRecord&)> sink_;
};

}  // namespace proact::cognitive
