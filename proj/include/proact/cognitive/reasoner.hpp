#pragma once

#include <atomic>
#include <optional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "proact/cognitive/types.hpp"
#include "proact/locomotion/sim.hpp"

namespace proact::cognitive {

struct BackendFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EncoderInputs {
    MemoryBank bank;
    TranscriptWindow transcript;  // five most recent cycles
    VisualEventSet events;        // up to three since the last cycle
    BehaviorPlan prev_plan;
    std::string scenario_prompt;
};

struct PlannerInputs {
    MemoryBank bank;
    TranscriptWindow transcript;  // last cycle only
    VisualEventSet events;        // latest event only
    ActionHistory history;
    std::string scenario_prompt;
};

// Channel proposal before range checks and the repeat filter.
struct ProposedPlan {
    std::string motion_intent;
    bool should_interrupt = false;
    std::string dialogue_prefill;
    std::vector<locomotion::PlannerMove> locomotion;
    std::string reasoning;
};

// Implementations must be callable from two threads at once. Failures throw BackendFailure.
class ReasonerBackend {
public:
    virtual ~ReasonerBackend() = default;
    virtual std::string name() const = 0;
    // Returns the next bank contents; the caller stamps cycle and enforces field bounds.
    virtual MemoryBank encode(const EncoderInputs& in) = 0;
    virtual MotivationScores assess(const PlannerInputs& in) = 0;
    virtual ProposedPlan propose(const MotivationScores& scores, const PlannerInputs& in) = 0;
};

// ---- rule table -----------------------------------------------------------

struct MemoryOp {
    enum class Kind { set, add, remove, append };
    std::string field;
    Kind kind = Kind::set;
    std::string text;
};

struct RuleTrigger {
    std::string id;
    std::string event;                  // scene token, or empty for keyword triggers
    std::vector<std::string> keywords;  // matched case-insensitively in user speech
    std::vector<std::pair<std::string, int>> scores;
    std::vector<MemoryOp> memory;
    ProposedPlan plan;

    int peak() const;
};

// A scene event plus a condition on the bank that implies another event,
// e.g. the user leaving while an item still lies on the desk.
struct DerivedRule {
    std::string when_event;
    std::string field;
    std::vector<std::string> contains_any;
    std::string emit;
};

struct RuleTable {
    int version = 0;
    MotivationScores baseline;
    std::vector<std::pair<std::string, int>> in_conversation;  // floor applied while the user is talking
    std::vector<RuleTrigger> triggers;
    std::vector<DerivedRule> derived;

    static RuleTable from_json(const nlohmann::json& j);
    static RuleTable load(const std::string& path);
};

// Items of a comma-separated list field.
std::vector<std::string> list_items(const std::string& text);

struct TriggerMatch {
    const RuleTrigger* trigger = nullptr;
    std::string item;  // item that fired a derived rule, substituted for {item}
};

// Deterministic backend: a pure function of the published table.
class RuleOracle final : public ReasonerBackend {
public:
    explicit RuleOracle(RuleTable table, int threshold = 4);
    static RuleOracle load(const std::string& path, int threshold = 4) { return RuleOracle(RuleTable::load(path), threshold); }

    std::string name() const override { return "rule_oracle"; }
    MemoryBank encode(const EncoderInputs& in) override;
    MotivationScores assess(const PlannerInputs& in) override;
    ProposedPlan propose(const MotivationScores& scores, const PlannerInputs& in) override;

    std::vector<TriggerMatch> matches(const PlannerInputs& in) const;
    const RuleTable& table() const { return table_; }

private:
    RuleTable table_;
    int threshold_;
};

// ---- external endpoint ----------------------------------------------------

struct ExternalOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string path = "/reason";
    double t_c = 3.0;  // per-attempt deadline, seconds
    int retries = 1;
    std::string encoder_prompt;  // prompt texts sent with every request
    std::string planner_prompt;
};

// Posts {role, prompt_id, prompt, inputs} as JSON and parses the schema-shaped reply.
// Timeouts and malformed replies are retried once, then served by the fallback if one is set.
class ExternalReasoner final : public ReasonerBackend {
public:
    ExternalReasoner(ExternalOptions options, std::shared_ptr<ReasonerBackend> fallback);

    // Reads context_encoder.txt and behavior_planner.txt from a directory.
    static ExternalOptions with_prompts(ExternalOptions options, const std::string& prompt_dir);

    std::string name() const override { return "external"; }
    MemoryBank encode(const EncoderInputs& in) override;
    MotivationScores assess(const PlannerInputs& in) override;
    ProposedPlan propose(const MotivationScores& scores, const PlannerInputs& in) override;

    int fallback_count() const { return fallbacks_.load(); }

    static nlohmann::json encoder_request(const EncoderInputs& in, const std::string& prompt);
    static nlohmann::json planner_request(const PlannerInputs& in, const std::string& prompt);
    static MemoryBank parse_encoder_reply(const nlohmann::json& reply, std::size_t capacity);
    static std::pair<MotivationScores, ProposedPlan> parse_planner_reply(const nlohmann::json& reply);

private:
    nlohmann::json post(const nlohmann::json& request);
    // One planner round trip serves both assess and propose; the last reply (or failure) is cached.
    std::optional<std::pair<MotivationScores, ProposedPlan>> planner_call(const PlannerInputs& in, std::string& error);

    ExternalOptions options_;
    std::shared_ptr<ReasonerBackend> fallback_;
    std::atomic<int> fallbacks_{0};
    std::mutex cache_mutex_;
    std::string cache_key_;
    std::optional<std::pair<MotivationScores, ProposedPlan>> cache_value_;
};

}  // namespace proact::cognitive
