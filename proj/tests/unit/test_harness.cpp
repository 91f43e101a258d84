#include <doctest.h>

#include <memory>

#include "proact/control/branch.hpp"
#include "proact/core/rng.hpp"
#include "proact/scenario/harness.hpp"

using namespace proact;
using namespace proact::scenario;

namespace {

std::string asset(const std::string& rel) { return std::string(PROACT_ASSET_DIR) + "/" + rel; }

struct Rig {
    motion::IntentionVocabulary vocab = motion::IntentionVocabulary::standard();
    flow::VelocityNetwork base;
    control::ControlBranch branch;
    std::shared_ptr<cognitive::RuleOracle> oracle;

    Rig()
        : base(make_base()),
          branch(control::init_control_branch(base, vocab, {}, 5)),
          oracle(std::make_shared<cognitive::RuleOracle>(cognitive::RuleOracle::load(asset("rules/rule_oracle_v1.json")))) {}

    static flow::VelocityNetwork make_base() {
        auto net = flow::VelocityNetwork::initialize({}, 1);
        Rng rng(2);
        net.for_each_parameter([&](const std::string&, Matrix& m) { m += 0.05 * standard_normal(rng, m.rows(), m.cols()); });
        return net;
    }

    HarnessSetup setup(bool deterministic = true) const {
        HarnessSetup s;
        s.base = &base;
        s.branch = &branch;
        s.stream.flow.steps = 4;
        s.stream.seed = 9;
        s.skeleton = motion::make_skeleton(motion::SkeletonSpec::toy());
        s.encoder = oracle;
        s.planner = oracle;
        s.vocab = &vocab;
        s.coupling = SyntheticCoupling::standard(motion::SkeletonSpec::toy());
        s.deterministic = deterministic;
        return s;
    }
};

std::vector<nlohmann::ordered_json> of_kind(const ScenarioResult& r, const std::string& kind) {
    std::vector<nlohmann::ordered_json> out;
    for (const auto& j : r.trace) {
        if (j.at("kind") == kind) out.push_back(j);
    }
    return out;
}

}  // namespace

TEST_CASE("script parsing rejects unordered or endless scripts") {
    auto j = nlohmann::json::parse(R"({"name":"x","events":[{"t":2,"kind":"end"},{"t":1,"kind":"scene_event","token":"a"}]})");
    CHECK_THROWS(ScenarioScript::from_json(j));
    j = nlohmann::json::parse(R"({"name":"x","events":[{"t":1,"kind":"scene_event","token":"a"}]})");
    CHECK_THROWS(ScenarioScript::from_json(j));
    j = nlohmann::json::parse(R"({"name":"x","events":[{"t":1,"kind":"agent_turn","text":"hi"},{"t":3,"kind":"end"}]})");
    CHECK_THROWS(ScenarioScript::from_json(j));
    j = nlohmann::json::parse(R"({"name":"x","events":[{"t":1,"kind":"wave"},{"t":3,"kind":"end"}]})");
    CHECK_THROWS(ScenarioScript::from_json(j));
}

TEST_CASE("speaking schedule covers the spoken frames") {
    ScenarioScript s;
    s.events = {{1.0, ScriptEvent::Kind::user_utterance, "hi", 0.5, ""}, {2.0, ScriptEvent::Kind::agent_turn, "yo", 1.0, ""},
                {4.0, ScriptEvent::Kind::end, "", 0.0, ""}};
    auto [user, agent] = speaking_schedule(s, 30.0, 120);
    CHECK_FALSE(user[29]);
    CHECK(user[30]);
    CHECK(user[44]);
    CHECK_FALSE(user[45]);
    CHECK(agent[60]);
    CHECK_FALSE(agent[90]);
    CHECK(std::count(agent.begin(), agent.end(), true) == 30);
}

TEST_CASE("bundled scenarios parse") {
    for (auto name : {"attentive_care", "poster_explanation", "supportive_assistance", "storytelling", "emotional_support", "quiet"}) {
        CAPTURE(name);
        auto s = ScenarioScript::load(asset(std::string("scenarios/") + name + ".json"));
        CHECK(s.name == name);
        CHECK(s.end_time() > 20.0);
    }
}

TEST_CASE("attentive care: one reminder gesture after the departure, at a chunk boundary") {
    Rig rig;
    auto script = ScenarioScript::load(asset("scenarios/attentive_care.json"));
    auto r = run_scenario(script, rig.setup());
    REQUIRE_FALSE(r.aborted);

    auto intents = of_kind(r, "intention");
    REQUIRE(intents.size() == 1);
    CHECK(intents[0]["raw_text"] == "right_hand point");
    double leaving = -1;
    for (const auto& e : of_kind(r, "scene_event")) {
        if (e["token"] == "user_leaving") leaving = e["t"].get<double>();
    }
    REQUIRE(leaving > 0);
    const double issued = intents[0]["t"].get<double>();
    CHECK(issued > leaving);

    // The first chunk that carries it starts on or after the issue time.
    bool found = false;
    for (const auto& c : of_kind(r, "chunk")) {
        if (!c["intention_applied"].get<bool>()) continue;
        CHECK(c["active_intention"] == "right_hand point");
        CHECK(c["t"].get<double>() >= issued);
        found = true;
        break;
    }
    CHECK(found);
    CHECK(check_causality(r.trace).ok);

    // The agent was mid-turn, so the plan cut it short and queued the reminder sentence.
    auto dialogue = of_kind(r, "dialogue");
    CHECK(std::any_of(dialogue.begin(), dialogue.end(), [](const auto& d) { return d["action"] == "interrupt"; }));
    CHECK(std::any_of(dialogue.begin(), dialogue.end(), [](const auto& d) {
        return d["action"] == "prefill" && d["text"].template get<std::string>().find("bag") != std::string::npos;
    }));
    for (const auto& b : r.budgets) CHECK(b.deadline_met);
    CHECK(r.motion.rows() >= static_cast<Eigen::Index>(script.end_time() * 30.0));
}

TEST_CASE("deterministic mode gives byte-identical traces") {
    Rig rig;
    auto script = ScenarioScript::load(asset("scenarios/attentive_care.json"));
    auto a = run_scenario(script, rig.setup());
    auto b = run_scenario(script, rig.setup());
    CHECK(a.trace_text() == b.trace_text());
    CHECK(a.motion == b.motion);
    CHECK(a.trace_text().find("t_gen_ms") == std::string::npos);
    auto timed = run_scenario(script, rig.setup(false));
    CHECK(timed.trace_text().find("t_gen_ms") != std::string::npos);
}

TEST_CASE("storytelling: the phone triggers a gesture and a prefilled next turn") {
    Rig rig;
    auto r = run_scenario(ScenarioScript::load(asset("scenarios/storytelling.json")), rig.setup());
    REQUIRE_FALSE(r.aborted);
    auto intents = of_kind(r, "intention");
    REQUIRE(intents.size() == 1);
    CHECK(intents[0]["raw_text"] == "right_hand raise");
    bool prefilled = false;
    for (const auto& s : of_kind(r, "speech")) {
        if (s.contains("prefill")) {
            prefilled = true;
            CHECK(s["t"].get<double>() > intents[0]["t"].get<double>() - 1e-9);
        }
    }
    CHECK(prefilled);
    CHECK(check_causality(r.trace).ok);
}

TEST_CASE("poster question turns the robot on a gait boundary") {
    Rig rig;
    auto r = run_scenario(ScenarioScript::load(asset("scenarios/poster_explanation.json")), rig.setup());
    REQUIRE_FALSE(r.aborted);
    bool turned = false;
    for (const auto& e : r.locomotion) {
        if (e.event == "start") {
            CHECK(std::abs(e.t - std::round(e.t)) < 1e-9);
            turned = turned || e.primitive == "turn_left";
        }
    }
    CHECK(turned);
    CHECK(std::abs(r.locomotion.back().pose.theta - std::acos(0.0)) < 1e-9);
}

TEST_CASE("small talk with no scene events produces no plans") {
    Rig rig;
    auto r = run_scenario(ScenarioScript::load(asset("scenarios/quiet.json")), rig.setup());
    REQUIRE_FALSE(r.aborted);
    CHECK(of_kind(r, "intention").empty());
    CHECK(of_kind(r, "dialogue").empty());
    for (const auto& c : r.cycles) CHECK(c.plan.empty());
    CHECK(r.cycles.size() >= 6);
}

TEST_CASE("causality check flags an intention with no earlier plan") {
    std::vector<nlohmann::ordered_json> trace{
        {{"kind", "chunk"}, {"chunk_index", 3}, {"intention_applied", true}, {"active_intention", "head nod"}}};
    CHECK_FALSE(check_causality(trace).ok);
    trace.insert(trace.begin(), nlohmann::ordered_json{{"kind", "intention"}, {"raw_text", "head nod"}});
    CHECK(check_causality(trace).ok);
}

TEST_CASE("a branch that cannot encode the planned gesture aborts with a partial trace") {
    Rig rig;
    auto narrow = control::init_control_branch(rig.base, motion::IntentionVocabulary({"head"}, {"nod"}), {}, 5);
    auto s = rig.setup();
    s.branch = &narrow;
    auto r = run_scenario(ScenarioScript::load(asset("scenarios/attentive_care.json")), s);
    CHECK(r.aborted);
    CHECK(r.error.find("right_hand") != std::string::npos);
    CHECK(r.trace.back()["kind"] == "error");
    CHECK(of_kind(r, "intention").size() == 1);
    CHECK(r.motion.rows() > 0);
}
