#include "proact/cognitive/loop.hpp"

#include <chrono>
#include <future>

#include "proact/core/errors.hpp"

namespace proact::cognitive {

void CognitiveConfig::validate() const {
    if (!(cycle_seconds > 0.0)) throw std::invalid_argument("cycle_seconds must be positive");
    if (!(t_c > 0.0)) throw std::invalid_argument("t_c must be positive");
    if (threshold < 1 || threshold > 5) throw std::invalid_argument("threshold must be in [1, 5]");
    if (encoder_cycles < 1 || planner_cycles < 1) throw std::invalid_argument("transcript windows must cover at least one cycle");
    if (encoder_events > 3 || planner_events > 3) throw std::invalid_argument("at most three visual events per cycle");
}

MemoryBank encode_context(const MemoryBank& prev, const TranscriptWindow& transcript, const VisualEventSet& events,
                          const BehaviorPlan& prev_plan, ReasonerBackend& backend, const std::string& scenario) {
    MemoryBank next = prev;
    try {
        MemoryBank got = backend.encode({prev, transcript, events, prev_plan, scenario});
        next = MemoryBank(prev.capacity());
        for (auto f : kMemoryFields) next.set(f, got.field(f));
        next.stale = false;
    } catch (const std::exception&) {
        next.stale = true;
    }
    next.cycle = prev.cycle + 1;
    return next;
}

Assessment assess_motivation(const PlannerInputs& in, ReasonerBackend& backend) {
    try {
        auto s = backend.assess(in);
        if (!s.valid()) return {MotivationScores{}, true};
        return {s, false};
    } catch (const std::exception&) {
        return {MotivationScores{}, true};
    }
}

BehaviorPlan filter_repeats(BehaviorPlan plan, const ActionHistory& history) {
    if (!plan.motion_intent.empty() && history.gestures.count(plan.motion_intent)) {
        plan.motion_intent.clear();
        plan.suppressed.push_back("gesture");
    }
    if (!plan.dialogue_prefill.empty() && history.prefills.count(plan.dialogue_prefill)) {
        plan.dialogue_prefill.clear();
        plan.suppressed.push_back("prefill");
    }
    bool turned = !history.turns.empty();
    std::vector<locomotion::LocomotionCommand> kept;
    for (auto& c : plan.locomotion) {
        if (c.is_turn()) {
            if (turned) {
                plan.suppressed.push_back("turn");
                continue;
            }
            turned = true;
        }
        kept.push_back(std::move(c));
    }
    plan.locomotion = std::move(kept);
    return plan;
}

BehaviorPlan plan_behavior(const MotivationScores& scores, const PlannerInputs& in, ReasonerBackend& backend,
                           const PlanContext& ctx) {
    if (!scores.valid()) throw std::invalid_argument("motivation scores must lie in [1, 5]");
    BehaviorPlan plan;
    plan.scores = scores;
    if (scores.max() < ctx.threshold) {
        plan.reasoning = "early exit";
        return plan;
    }
    ProposedPlan p;
    try {
        p = backend.propose(scores, in);
    } catch (const std::exception& e) {
        plan.stale = true;
        plan.reasoning = std::string("planner unavailable: ") + e.what();
        return plan;
    }
    std::string notes;
    plan.motion_intent = p.motion_intent;
    if (ctx.vocab && !plan.motion_intent.empty()) {
        try {
            plan.motion_intent = motion::parse_intention(plan.motion_intent, *ctx.vocab).raw_text;
        } catch (const OutOfVocabulary& e) {
            notes += "; dropped gesture (" + std::string(e.what()) + ")";
            plan.motion_intent.clear();
        }
    }
    plan.should_interrupt = p.should_interrupt && scores.max() >= 5;
    plan.dialogue_prefill = p.dialogue_prefill;
    for (const auto& m : p.locomotion) {
        try {
            plan.locomotion.push_back(locomotion::to_command(m, ctx.limits));
        } catch (const std::invalid_argument& e) {
            notes += "; dropped locomotion (" + std::string(e.what()) + ")";
        }
    }
    plan.reasoning = p.reasoning + notes;
    return filter_repeats(std::move(plan), in.history);
}

nlohmann::ordered_json CycleRecord::to_json(bool include_timing) const {
    nlohmann::ordered_json j;
    j["cycle"] = cycle;
    j["bank"] = bank.to_json();
    j["plan"] = plan.to_json();
    j["encoder_stale"] = encoder_stale;
    j["planner_stale"] = planner_stale;
    j["bank_bytes"] = bank_bytes;
    if (include_timing) {
        j["latency_s"] = latency_s;
        j["over_budget"] = over_budget;
    }
    return j;
}

CognitiveScheduler::CognitiveScheduler(CognitiveConfig cfg, std::shared_ptr<ReasonerBackend> encoder,
                                       std::shared_ptr<ReasonerBackend> planner, const motion::IntentionVocabulary* vocab,
                                       std::string scenario_prompt)
    : cfg_(cfg), encoder_(std::move(encoder)), planner_(std::move(planner)), scenario_(std::move(scenario_prompt)),
      bank_(cfg.field_capacity) {
    cfg_.validate();
    if (!encoder_ || !planner_) throw std::invalid_argument("scheduler needs both backends");
    ctx_.threshold = cfg_.threshold;
    ctx_.vocab = vocab;
}

CycleRecord CognitiveScheduler::run_cycle(const std::vector<Utterance>& utterances, const std::vector<VisualEvent>& events) {
    const std::int64_t k = bank_.cycle + 1;
    for (const auto& u : utterances) transcript_.push_back({k, u.speaker, u.text});
    const std::int64_t oldest = k - cfg_.encoder_cycles + 1;
    while (!transcript_.empty() && transcript_.front().cycle < oldest) transcript_.pop_front();
    TranscriptWindow all{{transcript_.begin(), transcript_.end()}};

    // Snapshots of cycle k-1; neither context touches scheduler state.
    const MemoryBank prev_bank = bank_;
    const BehaviorPlan prev_plan = plan_;
    EncoderInputs enc_in{prev_bank, all, VisualEventSet::sample(events, cfg_.encoder_events), prev_plan, scenario_};
    PlannerInputs plan_in{prev_bank, all.range(k - cfg_.planner_cycles + 1, k),
                          VisualEventSet::sample(events, cfg_.planner_events), history_, scenario_};

    const auto t0 = std::chrono::steady_clock::now();
    auto encoded = std::async(std::launch::async, [this, enc_in = std::move(enc_in)] {
        return encode_context(enc_in.bank, enc_in.transcript, enc_in.events, enc_in.prev_plan, *encoder_, enc_in.scenario_prompt);
    });
    const Assessment assessment = assess_motivation(plan_in, *planner_);
    BehaviorPlan plan = plan_behavior(assessment.scores, plan_in, *planner_, ctx_);
    plan.stale = plan.stale || assessment.stale;
    MemoryBank bank = encoded.get();
    const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    bank_ = std::move(bank);
    plan_ = plan;
    history_.record(plan_);

    CycleRecord rec;
    rec.cycle = k;
    rec.bank = bank_;
    rec.plan = plan_;
    rec.latency_s = latency;
    rec.over_budget = latency > cfg_.t_c;
    rec.encoder_stale = bank_.stale;
    rec.planner_stale = plan_.stale;
    rec.bank_bytes = bank_.serialize().size();
    if (sink_) sink_(rec);
    return rec;
}

}  // namespace proact::cognitive
