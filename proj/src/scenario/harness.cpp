#include "proact/scenario/harness.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <optional>
#include <set>
#include <sstream>

#include "proact/core/errors.hpp"

namespace proact::scenario {

namespace {

using nlohmann::ordered_json;

ScriptEvent::Kind parse_kind(const std::string& k) {
    if (k == "user_utterance") return ScriptEvent::Kind::user_utterance;
    if (k == "agent_turn") return ScriptEvent::Kind::agent_turn;
    if (k == "scene_event") return ScriptEvent::Kind::scene_event;
    if (k == "end") return ScriptEvent::Kind::end;
    throw std::invalid_argument("unknown script event kind: " + k);
}

Eigen::Index frame_at(double t, double fps) { return static_cast<Eigen::Index>(std::llround(t * fps)); }

// Pre-rendered script audio; an interrupted agent turn is silenced from the cut onward.
class ScriptAudioFeed final : public streaming::AudioFeed {
public:
    ScriptAudioFeed(Matrix user, Matrix agent) : user_(std::move(user)), agent_(std::move(agent)) {}
    std::int64_t available_end() const override { return user_.rows(); }
    flow::ConditioningBundle window(std::int64_t begin, std::int64_t end) const override {
        if (begin < 0 || end > available_end()) throw StreamStarvation(end, available_end());
        flow::ConditioningBundle b;
        b.user_audio = {user_.middleRows(begin, end - begin), motion::AudioSource::user};
        b.agent_audio = {agent_.middleRows(begin, end - begin), motion::AudioSource::agent};
        return b;
    }
    void silence_agent(Eigen::Index from, Eigen::Index to) {
        from = std::clamp<Eigen::Index>(from, 0, agent_.rows());
        to = std::clamp<Eigen::Index>(to, from, agent_.rows());
        agent_.middleRows(from, to - from).setZero();
    }

private:
    Matrix user_, agent_;
};

ordered_json pose_json(const locomotion::PlanarPose& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

}  // namespace

double ScenarioScript::end_time() const {
    for (const auto& e : events) {
        if (e.kind == ScriptEvent::Kind::end) return e.t;
    }
    throw std::invalid_argument("script has no end event");
}

void ScenarioScript::validate() const {
    int ends = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (!(e.t >= 0.0) || !std::isfinite(e.t)) throw std::invalid_argument("script event time must be finite and >= 0");
        if (i > 0 && e.t < events[i - 1].t) throw std::invalid_argument("script events are not time-ordered");
        if (e.kind == ScriptEvent::Kind::end) ++ends;
        if ((e.kind == ScriptEvent::Kind::user_utterance || e.kind == ScriptEvent::Kind::agent_turn) && !(e.duration > 0.0)) {
            throw std::invalid_argument("speech events need a positive duration");
        }
        if (e.kind == ScriptEvent::Kind::scene_event && e.token.empty()) throw std::invalid_argument("scene event without token");
    }
    if (ends != 1 || events.back().kind != ScriptEvent::Kind::end) throw std::invalid_argument("script needs exactly one end event, last");
}

ScenarioScript ScenarioScript::from_json(const nlohmann::json& j) {
    ScenarioScript s;
    s.name = j.at("name").get<std::string>();
    s.scenario_prompt = j.value("scenario_prompt", "");
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& ej : j.at("events")) {
        ScriptEvent e;
        e.t = ej.at("t").get<double>();
        e.kind = parse_kind(ej.at("kind").get<std::string>());
        e.text = ej.value("text", "");
        e.duration = ej.value("duration", 0.0);
        e.token = ej.value("token", "");
        s.events.push_back(std::move(e));
    }
    s.validate();
    return s;
}

ScenarioScript ScenarioScript::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario " + path);
    return from_json(nlohmann::json::parse(in));
}

std::pair<std::vector<bool>, std::vector<bool>> speaking_schedule(const ScenarioScript& s, double fps, Eigen::Index frames) {
    std::vector<bool> user(static_cast<std::size_t>(frames), false), agent(user);
    for (const auto& e : s.events) {
        auto* side = e.kind == ScriptEvent::Kind::user_utterance ? &user : e.kind == ScriptEvent::Kind::agent_turn ? &agent : nullptr;
        if (!side) continue;
        const auto b = std::min(frame_at(e.t, fps), frames);
        const auto f = std::min(frame_at(e.t + e.duration, fps), frames);
        for (auto t = b; t < f; ++t) (*side)[static_cast<std::size_t>(t)] = true;
    }
    return {user, agent};
}

void ScenarioResult::write_trace(std::ostream& out) const {
    for (const auto& r : trace) out << r.dump() << '\n';
}

std::string ScenarioResult::trace_text() const {
    std::ostringstream out;
    write_trace(out);
    return out.str();
}

ScenarioResult run_scenario(const ScenarioScript& script, const HarnessSetup& setup) {
    if (!setup.base || !setup.skeleton || !setup.encoder || !setup.planner || !setup.vocab) {
        throw std::invalid_argument("harness setup is missing a handle");
    }
    script.validate();
    ScenarioResult res;
    const double fps = setup.skeleton->fps();
    const double end_t = script.end_time();
    const auto& fc = setup.stream.flow;
    const Eigen::Index audio_frames = frame_at(end_t, fps) + fc.window;
    const auto [user_on, agent_on] = speaking_schedule(script, fps, audio_frames);
    const auto rendered = render_audio(setup.coupling, user_on, agent_on, script.seed);
    ScriptAudioFeed feed(rendered.user_audio, rendered.agent_audio);

    streaming::StreamingEngine engine(*setup.base, setup.branch, setup.stream, setup.skeleton);
    cognitive::CognitiveScheduler sched(setup.cognitive, setup.encoder, setup.planner, setup.vocab, script.scenario_prompt);
    locomotion::LocomotionSim loco(setup.limits);
    const double cycle = setup.cognitive.cycle_seconds;

    std::vector<cognitive::Utterance> heard;
    std::vector<cognitive::VisualEvent> seen;
    std::optional<std::future<cognitive::CycleRecord>> running;
    double delivery_t = 0.0;
    std::int64_t next_cycle = 1;
    std::size_t next_event = 0;
    std::size_t loco_logged = 0;
    std::string pending_prefill;
    double agent_turn_end = -1.0;
    std::vector<Matrix> emitted;

    auto advance_locomotion = [&](double t) {
        const double dt = 1.0 / fps;
        while (loco.time() < t - 1e-9) loco.step(std::min(dt, t - loco.time()));
        for (; loco_logged < loco.events().size(); ++loco_logged) {
            const auto& e = loco.events()[loco_logged];
            res.trace.push_back({{"kind", "locomotion"}, {"t", e.t}, {"event", e.event}, {"primitive", e.primitive},
                                 {"pose", pose_json(e.pose)}});
        }
    };

    auto deliver = [&](double t) {
        auto rec = running->get();
        running.reset();
        res.cycles.push_back(rec);
        auto j = rec.to_json(!setup.deterministic);
        ordered_json line{{"kind", "cycle"}, {"t", t}};
        for (auto& [k, v] : j.items()) line[k] = v;
        res.trace.push_back(std::move(line));
        const auto& plan = rec.plan;
        if (!plan.motion_intent.empty()) {
            const auto signal = motion::parse_intention(plan.motion_intent, *setup.vocab, 1.0, frame_at(t, fps));
            const auto ack = streaming::inject_intention(engine.mailbox(), signal, *setup.vocab);
            res.trace.push_back({{"kind", "intention"}, {"t", t}, {"cycle", rec.cycle}, {"raw_text", signal.raw_text},
                                 {"superseded_pending", ack.superseded_pending}});
        }
        if (plan.should_interrupt && t < agent_turn_end) {
            feed.silence_agent(frame_at(t, fps), frame_at(agent_turn_end, fps));
            res.trace.push_back({{"kind", "dialogue"}, {"t", t}, {"action", "interrupt"}, {"cut_seconds", agent_turn_end - t}});
            agent_turn_end = t;
        }
        if (!plan.dialogue_prefill.empty()) {
            pending_prefill = plan.dialogue_prefill;
            res.trace.push_back({{"kind", "dialogue"}, {"t", t}, {"action", "prefill"}, {"text", pending_prefill}});
        }
        for (const auto& cmd : plan.locomotion) loco.enqueue(cmd);
        advance_locomotion(t);
    };

    try {
        while (true) {
            const double chunk_t = static_cast<double>(engine.state().emitted_end) / fps;
            const double launch_t = static_cast<double>(next_cycle) * cycle;
            const double event_t = script.events[next_event].t;
            const double deliver_at = running ? delivery_t : INFINITY;
            // Same-time order: plan delivery, script event, cycle launch, chunk.
            if (deliver_at <= std::min({event_t, launch_t, chunk_t})) {
                advance_locomotion(deliver_at);
                deliver(deliver_at);
                continue;
            }
            if (event_t <= std::min(launch_t, chunk_t)) {
                const auto& e = script.events[next_event++];
                advance_locomotion(e.t);
                if (e.kind == ScriptEvent::Kind::end) break;
                if (e.kind == ScriptEvent::Kind::scene_event) {
                    seen.push_back({e.token, frame_at(e.t, fps)});
                    res.trace.push_back({{"kind", "scene_event"}, {"t", e.t}, {"token", e.token}});
                } else {
                    const bool agent = e.kind == ScriptEvent::Kind::agent_turn;
                    std::string text = e.text;
                    ordered_json line{{"kind", "speech"}, {"t", e.t}, {"speaker", agent ? "agent" : "user"}, {"text", text}};
                    if (agent) {
                        if (!pending_prefill.empty()) {
                            text = pending_prefill + " " + text;
                            line["prefill"] = pending_prefill;
                            pending_prefill.clear();
                        }
                        agent_turn_end = e.t + e.duration;
                    }
                    heard.push_back({agent ? cognitive::Speaker::agent : cognitive::Speaker::user, text});
                    res.trace.push_back(std::move(line));
                }
                continue;
            }
            if (launch_t <= chunk_t) {
                advance_locomotion(launch_t);
                if (running) deliver(launch_t);  // only when t_c exceeds the cycle period
                running = std::async(std::launch::async, [&sched, u = std::move(heard), v = std::move(seen)] {
                    return sched.run_cycle(u, v);
                });
                heard.clear();
                seen.clear();
                delivery_t = launch_t + std::min(setup.cognitive.t_c, cycle);
                ++next_cycle;
                continue;
            }
            advance_locomotion(chunk_t);
            auto r = engine.next_chunk(feed);
            res.budgets.push_back(r.budget);
            emitted.push_back(r.emitted.frames());
            ordered_json line{{"kind", "chunk"},
                              {"t", chunk_t},
                              {"chunk_index", engine.state().chunk_index - 1},
                              {"start_frame", r.emitted.start_index()},
                              {"frames", r.emitted.length()},
                              {"active_intention", r.active_intention.raw_text},
                              {"intention_applied", r.intention_applied},
                              {"gate", r.gate.back()},
                              {"pose", pose_json(loco.pose())}};
            if (!setup.deterministic) {
                line["t_gen_ms"] = r.budget.t_gen * 1000.0;
                line["t_motion_ms"] = r.budget.t_motion * 1000.0;
                line["deadline_met"] = r.budget.deadline_met;
            }
            res.trace.push_back(std::move(line));
        }
        if (running) deliver(std::max(delivery_t, end_t));
        res.trace.push_back({{"kind", "end"}, {"t", end_t}, {"chunks", res.budgets.size()}, {"cycles", res.cycles.size()}});
    } catch (const std::exception& e) {
        if (running) running->wait();
        res.aborted = true;
        res.error = e.what();
        res.trace.push_back({{"kind", "error"}, {"message", e.what()}});
    }
    Eigen::Index rows = 0;
    for (const auto& m : emitted) rows += m.rows();
    res.motion.resize(rows, setup.skeleton->frame_width());
    Eigen::Index at = 0;
    for (const auto& m : emitted) {
        res.motion.middleRows(at, m.rows()) = m;
        at += m.rows();
    }
    res.locomotion = loco.events();
    return res;
}

CausalityReport check_causality(const std::vector<nlohmann::ordered_json>& trace) {
    std::multiset<std::string> issued;
    for (const auto& r : trace) {
        const auto kind = r.at("kind").get<std::string>();
        if (kind == "intention") issued.insert(r.at("raw_text").get<std::string>());
        if (kind == "chunk" && r.at("intention_applied").get<bool>()) {
            const auto text = r.at("active_intention").get<std::string>();
            auto it = issued.find(text);
            if (it == issued.end()) return {false, "chunk " + r.at("chunk_index").dump() + " applied '" + text + "' with no earlier plan"};
            issued.erase(it);
        }
    }
    return {};
}

}  // namespace proact::scenario
