#include <doctest.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <random>
#include <thread>

#include <httplib.h>

#include "proact/cognitive/loop.hpp"

using namespace proact;
using namespace proact::cognitive;

namespace {

const std::string kRules = std::string(PROACT_ASSET_DIR) + "/rules/rule_oracle_v1.json";

std::shared_ptr<RuleOracle> oracle() { return std::make_shared<RuleOracle>(RuleOracle::load(kRules)); }

PlannerInputs planner_in(std::vector<std::string> events, std::vector<std::string> user_lines = {}) {
    PlannerInputs in;
    for (auto& e : events) in.events.events.push_back({e, 0});
    for (auto& l : user_lines) in.transcript.entries.push_back({1, Speaker::user, l});
    return in;
}

struct Failing : ReasonerBackend {
    std::string name() const override { return "failing"; }
    MemoryBank encode(const EncoderInputs&) override { throw BackendFailure("down"); }
    MotivationScores assess(const PlannerInputs&) override { throw BackendFailure("down"); }
    ProposedPlan propose(const MotivationScores&, const PlannerInputs&) override { throw BackendFailure("down"); }
};

// Proposes fixed channels regardless of input.
struct Scripted : ReasonerBackend {
    MotivationScores scores;
    ProposedPlan plan;
    std::string name() const override { return "scripted"; }
    MemoryBank encode(const EncoderInputs& in) override { return in.bank; }
    MotivationScores assess(const PlannerInputs&) override { return scores; }
    ProposedPlan propose(const MotivationScores&, const PlannerInputs&) override { return plan; }
};

}  // namespace

TEST_CASE("utf-8 truncation never splits a code point") {
    CHECK(truncate_utf8("hello", 3) == "hel");
    const std::string s = "ab\xC3\xA9" "cd";  // a b e-acute c d
    CHECK(truncate_utf8(s, 3) == "ab");
    CHECK(truncate_utf8(s, 4) == "ab\xC3\xA9");
    const std::string emoji = "\xF0\x9F\x98\x80";
    CHECK(truncate_utf8(emoji + emoji, 7) == emoji);
    CHECK(truncate_utf8(emoji, 3).empty());
}

TEST_CASE("memory bank bounds and fixed-size serialization") {
    MemoryBank bank;
    CHECK(bank.capacity() == 280);
    bank.set("user_profile", std::string(1000, 'x'));
    CHECK(bank.field("user_profile").size() == 280);
    CHECK_THROWS_AS(bank.set("mood", "x"), std::invalid_argument);
    bank.set("robot_actions", "waved");
    bank.cycle = 42;
    bank.stale = true;
    const auto bytes = bank.serialize();
    CHECK(bytes.size() == MemoryBank::serialized_size(280));
    CHECK(bytes.size() == MemoryBank(280).serialize().size());
    CHECK(MemoryBank::deserialize(bytes) == bank);
    CHECK(bank.to_json().size() == 8);
}

TEST_CASE("rule table loads and rejects malformed entries") {
    auto t = RuleTable::load(kRules);
    CHECK(t.version == 1);
    CHECK(!t.triggers.empty());
    auto j = nlohmann::json::parse(R"({"version": 1, "baseline": {"visual_scene": 1},
        "triggers": [{"id": "x", "event": "e", "scores": {"visual_scene": 9}}]})");
    CHECK_THROWS(RuleTable::from_json(j));
    j["triggers"][0]["scores"]["visual_scene"] = 4;
    CHECK_NOTHROW(RuleTable::from_json(j));
    j["version"] = 2;
    CHECK_THROWS(RuleTable::from_json(j));
}

TEST_CASE("encode_context: no news, scene events, failures") {
    auto rules = oracle();
    MemoryBank prev;
    prev.set("user_profile", "someone");
    prev.cycle = 7;
    auto same = encode_context(prev, {}, {}, {}, *rules);
    CHECK(same.cycle == 8);
    for (auto f : kMemoryFields) CHECK(same.field(f) == prev.field(f));
    CHECK(!same.stale);

    VisualEventSet ev;
    ev.events.push_back({"bag_placed", 10});
    auto bag = encode_context(prev, {}, ev, {}, *rules);
    CHECK(bag.field("workspace_status").find("bag") != std::string::npos);
    CHECK(bag.field("event_timeline").find("bag_placed") != std::string::npos);

    Failing failing;
    auto stale = encode_context(bag, {}, ev, {}, failing);
    CHECK(stale.stale);
    CHECK(stale.cycle == bag.cycle + 1);
    CHECK(stale.field("workspace_status") == bag.field("workspace_status"));
}

TEST_CASE("encode_context stays bounded over long random runs") {
    auto rules = oracle();
    std::vector<std::string> tokens;
    for (const auto& t : rules->table().triggers) {
        if (!t.event.empty()) tokens.push_back(t.event);
    }
    std::mt19937_64 rng(5);
    MemoryBank bank;
    BehaviorPlan plan;
    plan.motion_intent = "head nod";
    const auto size = bank.serialize().size();
    for (int k = 0; k < 1000; ++k) {
        VisualEventSet ev;
        for (int i = 0; i < 3; ++i) ev.events.push_back({tokens[rng() % tokens.size()], k});
        TranscriptWindow tw{{{bank.cycle + 1, Speaker::user, "please remind me about the poster"}}};
        bank = encode_context(bank, tw, ev, plan, *rules);
        CHECK(bank.serialize().size() == size);
        for (auto f : kMemoryFields) REQUIRE(bank.field(f).size() <= 280);
    }
    CHECK(size <= 6 * 280 + 64);
    CHECK(bank.cycle == 1000);
}

TEST_CASE("assess_motivation against the rule table") {
    auto rules = oracle();
    auto quiet = assess_motivation(planner_in({}, {"so anyway, the weather was nice"}), *rules);
    CHECK(!quiet.stale);
    CHECK(quiet.scores.max() <= 2);

    auto arrive = assess_motivation(planner_in({"user_arrives"}), *rules);
    CHECK(arrive.scores["social_protocol"] == 4);

    auto leave = assess_motivation(planner_in({"user_leaving", "item_forgotten"}), *rules);
    CHECK(leave.scores["visual_scene"] == 5);

    // The bank supplies the item: leaving with a bag on the desk implies a forgotten item.
    auto in = planner_in({"user_leaving"});
    CHECK(assess_motivation(in, *rules).scores["visual_scene"] < 4);
    in.bank.set("workspace_status", "cup, bag");
    CHECK(assess_motivation(in, *rules).scores["visual_scene"] == 5);

    Failing failing;
    auto down = assess_motivation(in, failing);
    CHECK(down.stale);
    CHECK(down.scores.max() == 1);
}

TEST_CASE("plan_behavior: early exit, gesture, once-ever") {
    auto rules = oracle();
    const auto vocab = motion::IntentionVocabulary::standard();
    PlanContext ctx{4, &vocab, {}};

    MotivationScores three;
    three["visual_scene"] = 3;
    CHECK(plan_behavior(three, planner_in({"user_arrives"}), *rules, ctx).empty());

    auto in = planner_in({"user_arrives"});
    auto s = rules->assess(in);
    auto plan = plan_behavior(s, in, *rules, ctx);
    CHECK(plan.motion_intent == "right_hand wave");
    CHECK(!plan.should_interrupt);

    in.history.record(plan);
    auto again = plan_behavior(s, in, *rules, ctx);
    CHECK(again.motion_intent.empty());
    CHECK(again.dialogue_prefill.empty());

    Failing failing;
    auto down = plan_behavior(s, in, failing, ctx);
    CHECK(down.empty());
    CHECK(down.stale);
}

TEST_CASE("plan_behavior enforces the interrupt threshold, vocabulary, and ranges") {
    const auto vocab = motion::IntentionVocabulary::standard();
    PlanContext ctx{4, &vocab, {}};
    Scripted b;
    b.scores["user_intent"] = 4;
    b.plan.should_interrupt = true;
    b.plan.motion_intent = "tail wag";
    b.plan.locomotion = {{"turn", "left", 200.0}, {"move", "forward", 0.6}};
    auto plan = plan_behavior(b.scores, {}, b, ctx);
    CHECK(!plan.should_interrupt);
    CHECK(plan.motion_intent.empty());
    REQUIRE(plan.locomotion.size() == 1);
    CHECK(plan.locomotion[0].v_x == doctest::Approx(0.3));
    CHECK(plan.reasoning.find("dropped") != std::string::npos);

    b.scores["user_intent"] = 5;
    CHECK(plan_behavior(b.scores, {}, b, ctx).should_interrupt);
}

TEST_CASE("filter_repeats") {
    BehaviorPlan plan;
    plan.motion_intent = "head nod";
    plan.dialogue_prefill = "hi";
    plan.locomotion = {locomotion::to_command({"turn", "left", 30}), locomotion::to_command({"move", "forward", 0.3}),
                       locomotion::to_command({"turn", "right", 30})};
    ActionHistory empty;
    auto fresh = filter_repeats(plan, empty);
    CHECK(fresh.motion_intent == "head nod");
    CHECK(fresh.dialogue_prefill == "hi");
    CHECK(fresh.locomotion.size() == 2);  // only one turn per run
    CHECK(fresh.suppressed == std::vector<std::string>{"turn"});

    ActionHistory h;
    h.record(fresh);
    auto repeat = filter_repeats(plan, h);
    CHECK(repeat.motion_intent.empty());
    CHECK(repeat.dialogue_prefill.empty());
    CHECK(repeat.suppressed == std::vector<std::string>{"gesture", "prefill", "turn", "turn"});
    REQUIRE(repeat.locomotion.size() == 1);
    CHECK(!repeat.locomotion[0].is_turn());
}

TEST_CASE("rule backend is pure") {
    auto a = oracle();
    auto b = oracle();
    auto in = planner_in({"phone_out"}, {"the dragon flew over"});
    auto s1 = a->assess(in);
    for (int i = 0; i < 5; ++i) {
        CHECK(b->assess(in) == s1);
        CHECK(a->propose(s1, in).dialogue_prefill == b->propose(s1, in).dialogue_prefill);
        CHECK(a->propose(s1, in).motion_intent == "right_hand raise");
    }
}

namespace {

// Records the cycle of every bank it is shown and delays the encoder.
struct Recorder : ReasonerBackend {
    RuleOracle inner = RuleOracle::load(kRules);
    std::mutex m;
    std::vector<std::int64_t> encoder_saw, planner_saw;
    std::string name() const override { return "recorder"; }
    MemoryBank encode(const EncoderInputs& in) override {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        std::lock_guard l(m);
        encoder_saw.push_back(in.bank.cycle);
        return inner.encode(in);
    }
    MotivationScores assess(const PlannerInputs& in) override {
        std::lock_guard l(m);
        planner_saw.push_back(in.bank.cycle);
        return inner.assess(in);
    }
    ProposedPlan propose(const MotivationScores& s, const PlannerInputs& in) override { return inner.propose(s, in); }
};

}  // namespace

TEST_CASE("scheduler runs both halves on the previous cycle's outputs") {
    auto rec = std::make_shared<Recorder>();
    const auto vocab = motion::IntentionVocabulary::standard();
    CognitiveScheduler sched({}, rec, rec, &vocab);
    std::vector<CycleRecord> sunk;
    sched.set_plan_sink([&](const CycleRecord& r) { sunk.push_back(r); });
    sched.run_cycle({}, {{"bag_placed", 0}});
    sched.run_cycle({{Speaker::user, "bye"}}, {});
    auto r3 = sched.run_cycle({}, {{"user_leaving", 0}});
    CHECK(rec->encoder_saw == std::vector<std::int64_t>{0, 1, 2});
    CHECK(rec->planner_saw == std::vector<std::int64_t>{0, 1, 2});
    CHECK(sunk.size() == 3);
    // The bag noted in cycle 1 lets the planner in cycle 3 spot the forgotten item.
    CHECK(r3.plan.motion_intent == "right_hand point");
    CHECK(r3.plan.should_interrupt);
    CHECK(r3.plan.dialogue_prefill.find("bag") != std::string::npos);
    CHECK(sched.history().gestures.count("right_hand point") == 1);
}

TEST_CASE("rule backend cycles stay well under budget") {
    const auto vocab = motion::IntentionVocabulary::standard();
    auto rules = oracle();
    CognitiveScheduler sched({}, rules, rules, &vocab);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        auto r = sched.run_cycle({{Speaker::user, "how do i fix this"}, {Speaker::agent, "try this"}}, {{"cup_placed", k}});
        worst = std::max(worst, r.latency_s);
        CHECK(!r.over_budget);
    }
    CHECK(worst < 0.05);
    CHECK(sched.transcript_size() == 10);  // five cycles of two lines
}

namespace {

struct StubServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::mutex m;
    std::condition_variable cv;
    bool stopping = false;
    std::atomic<int> hits{0};

    explicit StubServer(std::function<std::string(const nlohmann::json&, StubServer&)> reply) {
        server.Post("/reason", [this, reply](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            res.set_content(reply(nlohmann::json::parse(req.body), *this), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    // Blocks a handler for up to `d` unless the server is shutting down.
    void stall(std::chrono::milliseconds d) {
        std::unique_lock l(m);
        cv.wait_for(l, d, [this] { return stopping; });
    }
    ~StubServer() {
        {
            std::lock_guard l(m);
            stopping = true;
        }
        cv.notify_all();
        server.stop();
        thread.join();
    }
};

std::string good_reply(const nlohmann::json& req, StubServer&) {
    if (req.at("role") == "encoder") {
        nlohmann::json j = req["inputs"]["bank"];
        j["event_timeline"] = "remote summary";
        return j.dump();
    }
    return R"({"motivation_scores": {"visual_scene": 1, "user_intent": 4, "conversation_state": 2,
               "social_protocol": 1, "emotional_response": 1},
               "motion_intent": "both_hands open", "should_interrupt": false, "dialogue_prefill": "remote",
               "locomotion": [{"action": "move", "direction": "forward", "magnitude": 0.3}], "reasoning": "stub"})";
}

}  // namespace

TEST_CASE("external reasoner: schema round trip over the wire") {
    StubServer stub(good_reply);
    ExternalOptions o;
    o.port = stub.port;
    auto ext = std::make_shared<ExternalReasoner>(o, oracle());
    const auto vocab = motion::IntentionVocabulary::standard();
    CognitiveScheduler sched({}, ext, ext, &vocab);
    auto r = sched.run_cycle({{Speaker::user, "hello"}}, {});
    CHECK(r.bank.field("event_timeline") == "remote summary");
    CHECK(r.plan.motion_intent == "both_hands open");
    CHECK(r.plan.dialogue_prefill == "remote");
    CHECK(r.plan.locomotion.size() == 1);
    CHECK(ext->fallback_count() == 0);
    CHECK(stub.hits == 2);  // one encoder and one planner call
}

TEST_CASE("external reasoner: malformed replies fall back to rules after one retry") {
    StubServer stub([](const nlohmann::json&, StubServer&) { return std::string("{\"nope\": 1}"); });
    ExternalOptions o;
    o.port = stub.port;
    auto ext = std::make_shared<ExternalReasoner>(o, oracle());
    const auto vocab = motion::IntentionVocabulary::standard();
    CognitiveScheduler sched({}, ext, ext, &vocab);
    auto r = sched.run_cycle({}, {{"user_arrives", 0}});
    CHECK(r.plan.motion_intent == "right_hand wave");
    CHECK(ext->fallback_count() >= 2);
    CHECK(!r.encoder_stale);

    auto no_fallback = std::make_shared<ExternalReasoner>(o, nullptr);
    CognitiveScheduler bare({}, no_fallback, no_fallback, &vocab);
    auto s = bare.run_cycle({}, {{"user_arrives", 0}});
    CHECK(s.encoder_stale);
    CHECK(s.planner_stale);
    CHECK(s.plan.empty());
}

TEST_CASE("external reasoner: a slow endpoint flags the cycle over budget") {
    StubServer stub([](const nlohmann::json& req, StubServer& self) {
        self.stall(std::chrono::seconds(10));
        return good_reply(req, self);
    });
    ExternalOptions o;
    o.port = stub.port;
    o.t_c = 3.0;
    auto ext = std::make_shared<ExternalReasoner>(o, oracle());
    const auto vocab = motion::IntentionVocabulary::standard();
    CognitiveScheduler sched({}, ext, ext, &vocab);
    auto r = sched.run_cycle({}, {{"user_arrives", 0}});
    CHECK(r.over_budget);
    CHECK(r.latency_s > 3.0);
    CHECK(r.latency_s < 9.0);  // two timed-out attempts, then the rule fallback
    CHECK(r.plan.motion_intent == "right_hand wave");
}
