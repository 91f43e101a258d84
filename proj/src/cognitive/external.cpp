#include <fstream>
#include <sstream>

#include <httplib.h>

#include "proact/cognitive/reasoner.hpp"

namespace proact::cognitive {

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open prompt " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json plan_inputs_json(const BehaviorPlan& p) { return p.to_json(); }

}  // namespace

ExternalReasoner::ExternalReasoner(ExternalOptions options, std::shared_ptr<ReasonerBackend> fallback)
    : options_(std::move(options)), fallback_(std::move(fallback)) {
    if (!(options_.t_c > 0.0)) throw std::invalid_argument("reasoner deadline must be positive");
    if (options_.retries < 0) throw std::invalid_argument("retries must be >= 0");
}

ExternalOptions ExternalReasoner::with_prompts(ExternalOptions options, const std::string& dir) {
    options.encoder_prompt = read_text(dir + "/context_encoder.txt");
    options.planner_prompt = read_text(dir + "/behavior_planner.txt");
    return options;
}

nlohmann::json ExternalReasoner::encoder_request(const EncoderInputs& in, const std::string& prompt) {
    return {{"role", "encoder"},
            {"prompt_id", "context_encoder"},
            {"prompt", prompt},
            {"inputs",
             {{"bank", in.bank.fields_json()},
              {"transcript", in.transcript.to_json()},
              {"events", in.events.to_json()},
              {"prev_plan", plan_inputs_json(in.prev_plan)},
              {"scenario", in.scenario_prompt}}}};
}

nlohmann::json ExternalReasoner::planner_request(const PlannerInputs& in, const std::string& prompt) {
    return {{"role", "planner"},
            {"prompt_id", "behavior_planner"},
            {"prompt", prompt},
            {"inputs",
             {{"bank", in.bank.fields_json()},
              {"transcript", in.transcript.to_json()},
              {"events", in.events.to_json()},
              {"history", in.history.to_json()},
              {"scenario", in.scenario_prompt}}}};
}

MemoryBank ExternalReasoner::parse_encoder_reply(const nlohmann::json& reply, std::size_t capacity) {
    MemoryBank b(capacity);
    for (auto f : kMemoryFields) b.set(f, reply.at(std::string(f)).get<std::string>());
    return b;
}

std::pair<MotivationScores, ProposedPlan> ExternalReasoner::parse_planner_reply(const nlohmann::json& reply) {
    const auto scores = MotivationScores::from_json(reply.at("motivation_scores"));
    ProposedPlan p;
    p.motion_intent = reply.value("motion_intent", "");
    p.should_interrupt = reply.value("should_interrupt", false);
    p.dialogue_prefill = reply.value("dialogue_prefill", "");
    p.reasoning = reply.value("reasoning", "");
    for (const auto& m : reply.value("locomotion", nlohmann::json::array())) {
        locomotion::PlannerMove mv;
        mv.action = m.at("action").get<std::string>();
        mv.direction = m.at("direction").get<std::string>();
        mv.magnitude = m.at("magnitude").get<double>();
        mv.tracking_target = m.value("tracking_target", "");
        mv.reasoning = m.value("reasoning", "");
        p.locomotion.push_back(std::move(mv));
    }
    return {scores, p};
}

nlohmann::json ExternalReasoner::post(const nlohmann::json& request) {
    const auto secs = static_cast<time_t>(options_.t_c);
    const auto usecs = static_cast<time_t>((options_.t_c - static_cast<double>(secs)) * 1e6);
    std::string last_error;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        httplib::Client cli(options_.host, options_.port);
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);
        auto res = cli.Post(options_.path, request.dump(), "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            last_error = e.what();
        }
    }
    throw BackendFailure("external reasoner: " + last_error);
}

MemoryBank ExternalReasoner::encode(const EncoderInputs& in) {
    try {
        return parse_encoder_reply(post(encoder_request(in, options_.encoder_prompt)), in.bank.capacity());
    } catch (const std::exception& e) {
        if (!fallback_) throw BackendFailure(e.what());
        ++fallbacks_;
        return fallback_->encode(in);
    }
}

std::optional<std::pair<MotivationScores, ProposedPlan>> ExternalReasoner::planner_call(const PlannerInputs& in,
                                                                                         std::string& error) {
    const auto request = planner_request(in, options_.planner_prompt);
    const std::string key = request.dump();
    {
        std::lock_guard lock(cache_mutex_);
        if (cache_key_ == key) return cache_value_;
    }
    std::optional<std::pair<MotivationScores, ProposedPlan>> out;
    try {
        out = parse_planner_reply(post(request));
    } catch (const std::exception& e) {
        error = e.what();
    }
    std::lock_guard lock(cache_mutex_);
    cache_key_ = key;
    cache_value_ = out;
    return out;
}

MotivationScores ExternalReasoner::assess(const PlannerInputs& in) {
    std::string error;
    if (auto r = planner_call(in, error)) return r->first;
    if (!fallback_) throw BackendFailure(error);
    ++fallbacks_;
    return fallback_->assess(in);
}

ProposedPlan ExternalReasoner::propose(const MotivationScores& scores, const PlannerInputs& in) {
    std::string error;
    if (auto r = planner_call(in, error)) return r->second;
    if (!fallback_) throw BackendFailure(error.empty() ? "external reasoner: planner call failed" : error);
    return fallback_->propose(scores, in);
}

}  // namespace proact::cognitive
