#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "proact/cognitive/reasoner.hpp"

namespace proact::cognitive {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\n") - b + 1);
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
        text.replace(pos, key.size(), value);
    }
    return text;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

// Appends a segment, dropping the oldest segments until the field fits.
void append_bounded(MemoryBank& bank, std::string_view field, const std::string& segment) {
    std::vector<std::string> parts;
    std::string cur = bank.field(field);
    for (std::size_t pos; !cur.empty();) {
        pos = cur.find("; ");
        parts.push_back(cur.substr(0, pos));
        cur = pos == std::string::npos ? "" : cur.substr(pos + 2);
    }
    parts.push_back(segment);
    while (parts.size() > 1 && join(parts, "; ").size() > bank.capacity()) parts.erase(parts.begin());
    bank.set(field, join(parts, "; "));
}

void apply(MemoryBank& bank, const MemoryOp& op, const std::string& item, std::int64_t cycle) {
    const std::string text = substitute(substitute(op.text, "{item}", item.empty() ? "belongings" : item), "{cycle}",
                                        std::to_string(cycle));
    switch (op.kind) {
        case MemoryOp::Kind::set:
            bank.set(op.field, text);
            break;
        case MemoryOp::Kind::append:
            append_bounded(bank, op.field, text);
            break;
        case MemoryOp::Kind::add: {
            auto items = list_items(bank.field(op.field));
            if (std::find(items.begin(), items.end(), text) == items.end()) items.push_back(text);
            bank.set(op.field, join(items, ", "));
            break;
        }
        case MemoryOp::Kind::remove: {
            auto items = list_items(bank.field(op.field));
            items.erase(std::remove(items.begin(), items.end(), text), items.end());
            bank.set(op.field, join(items, ", "));
            break;
        }
    }
}

std::vector<std::pair<std::string, int>> parse_scores(const nlohmann::json& j) {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& [dim, v] : j.items()) {
        MotivationScores::index_of(dim);
        const int value = v.get<int>();
        if (value < 1 || value > 5) throw std::invalid_argument("rule score out of [1, 5] for " + dim);
        out.emplace_back(dim, value);
    }
    return out;
}

locomotion::PlannerMove parse_move(const nlohmann::json& j) {
    locomotion::PlannerMove m;
    m.action = j.at("action").get<std::string>();
    m.direction = j.at("direction").get<std::string>();
    m.magnitude = j.at("magnitude").get<double>();
    m.tracking_target = j.value("tracking_target", "");
    m.reasoning = j.value("reasoning", "");
    return m;
}

}  // namespace

std::vector<std::string> list_items(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) {
        part = trim(part);
        if (!part.empty()) items.push_back(part);
    }
    return items;
}

int RuleTrigger::peak() const {
    int p = 0;
    for (const auto& [dim, v] : scores) p = std::max(p, v);
    return p;
}

RuleTable RuleTable::from_json(const nlohmann::json& j) {
    RuleTable t;
    t.version = j.at("version").get<int>();
    if (t.version != 1) throw std::invalid_argument("unsupported rule table version " + std::to_string(t.version));
    for (const auto& [dim, v] : parse_scores(j.at("baseline"))) t.baseline[dim] = v;
    t.in_conversation = parse_scores(j.value("in_conversation", nlohmann::json::object()));
    std::set<std::string> ids;
    for (const auto& tj : j.at("triggers")) {
        RuleTrigger r;
        r.id = tj.at("id").get<std::string>();
        if (!ids.insert(r.id).second) throw std::invalid_argument("duplicate trigger id " + r.id);
        r.event = tj.value("event", "");
        for (const auto& k : tj.value("keywords", nlohmann::json::array())) r.keywords.push_back(lower(k.get<std::string>()));
        if (r.event.empty() == r.keywords.empty()) throw std::invalid_argument("trigger " + r.id + " needs exactly one of event or keywords");
        r.scores = parse_scores(tj.at("scores"));
        for (const auto& mj : tj.value("memory", nlohmann::json::array())) {
            MemoryOp op;
            op.field = mj.at("field").get<std::string>();
            MemoryBank::index_of(op.field);
            const std::string kind = mj.at("op").get<std::string>();
            if (kind == "set") op.kind = MemoryOp::Kind::set;
            else if (kind == "add") op.kind = MemoryOp::Kind::add;
            else if (kind == "remove") op.kind = MemoryOp::Kind::remove;
            else if (kind == "append") op.kind = MemoryOp::Kind::append;
            else throw std::invalid_argument("unknown memory op " + kind);
            op.text = mj.at("text").get<std::string>();
            r.memory.push_back(std::move(op));
        }
        if (tj.contains("plan")) {
            const auto& pj = tj["plan"];
            r.plan.motion_intent = pj.value("motion_intent", "");
            r.plan.dialogue_prefill = pj.value("dialogue_prefill", "");
            r.plan.should_interrupt = pj.value("should_interrupt", false);
            for (const auto& mj : pj.value("locomotion", nlohmann::json::array())) r.plan.locomotion.push_back(parse_move(mj));
        }
        t.triggers.push_back(std::move(r));
    }
    for (const auto& dj : j.value("derived", nlohmann::json::array())) {
        DerivedRule d;
        d.when_event = dj.at("when_event").get<std::string>();
        d.field = dj.at("field").get<std::string>();
        MemoryBank::index_of(d.field);
        d.contains_any = dj.at("contains_any").get<std::vector<std::string>>();
        d.emit = dj.at("emit").get<std::string>();
        t.derived.push_back(std::move(d));
    }
    return t;
}

RuleTable RuleTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rule table " + path);
    return from_json(nlohmann::json::parse(in));
}

RuleOracle::RuleOracle(RuleTable table, int threshold) : table_(std::move(table)), threshold_(threshold) {
    if (threshold < 1 || threshold > 5) throw std::invalid_argument("motivation threshold must be in [1, 5]");
}

std::vector<TriggerMatch> RuleOracle::matches(const PlannerInputs& in) const {
    std::vector<TriggerMatch> out;
    std::set<std::string> seen;
    auto push = [&](const RuleTrigger& t, const std::string& item) {
        if (seen.insert(t.id).second) out.push_back({&t, item});
    };
    for (const auto& ev : in.events.events) {
        for (const auto& t : table_.triggers) {
            if (t.event == ev.token) push(t, "");
        }
        for (const auto& d : table_.derived) {
            if (d.when_event != ev.token) continue;
            const auto items = list_items(in.bank.field(d.field));
            auto hit = std::find_first_of(items.begin(), items.end(), d.contains_any.begin(), d.contains_any.end());
            if (hit == items.end()) continue;
            for (const auto& t : table_.triggers) {
                if (t.event == d.emit) push(t, *hit);
            }
        }
    }
    for (const auto& e : in.transcript.entries) {
        if (e.speaker != Speaker::user) continue;
        const std::string text = lower(e.text);
        for (const auto& t : table_.triggers) {
            for (const auto& k : t.keywords) {
                if (text.find(k) != std::string::npos) push(t, "");
            }
        }
    }
    return out;
}

MemoryBank RuleOracle::encode(const EncoderInputs& in) {
    MemoryBank b = in.bank;
    b.stale = false;
    const std::int64_t k = in.bank.cycle + 1;
    for (const auto& ev : in.events.events) {
        append_bounded(b, "event_timeline", "c" + std::to_string(k) + " " + ev.token);
        PlannerInputs probe{in.bank, {}, {{ev}}, {}, {}};
        for (const auto& m : matches(probe)) {
            for (const auto& op : m.trigger->memory) apply(b, op, m.item, k);
        }
    }
    // Speech is folded in once, in the cycle it arrives.
    PlannerInputs speech{in.bank, in.transcript.range(k, k), {}, {}, {}};
    for (const auto& m : matches(speech)) {
        for (const auto& op : m.trigger->memory) apply(b, op, m.item, k);
    }
    const auto& p = in.prev_plan;
    if (!p.empty()) {
        std::vector<std::string> acts;
        if (!p.motion_intent.empty()) acts.push_back("gesture " + p.motion_intent);
        if (p.should_interrupt) acts.push_back("interrupted");
        if (!p.dialogue_prefill.empty()) acts.push_back("spoke");
        for (const auto& c : p.locomotion) acts.push_back(locomotion::primitive_name(&c));
        append_bounded(b, "robot_actions", "c" + std::to_string(k - 1) + " " + join(acts, ", "));
    }
    return b;
}

MotivationScores RuleOracle::assess(const PlannerInputs& in) {
    MotivationScores s = table_.baseline;
    if (!in.transcript.empty()) {
        for (const auto& [dim, v] : table_.in_conversation) s[dim] = std::max(s[dim], v);
    }
    for (const auto& m : matches(in)) {
        for (const auto& [dim, v] : m.trigger->scores) s[dim] = std::max(s[dim], v);
    }
    return s;
}

ProposedPlan RuleOracle::propose(const MotivationScores& scores, const PlannerInputs& in) {
    ProposedPlan p;
    if (scores.max() < threshold_) {
        p.reasoning = "early exit";
        return p;
    }
    std::vector<std::string> ids, prefills;
    int gesture_peak = 0;
    for (const auto& m : matches(in)) {
        const auto& t = *m.trigger;
        if (t.peak() < threshold_) continue;
        ids.push_back(t.id);
        if (!t.plan.motion_intent.empty() && t.peak() > gesture_peak) {
            gesture_peak = t.peak();
            p.motion_intent = t.plan.motion_intent;
        }
        const std::string prefill = substitute(t.plan.dialogue_prefill, "{item}", m.item.empty() ? "belongings" : m.item);
        if (!prefill.empty() && std::find(prefills.begin(), prefills.end(), prefill) == prefills.end()) prefills.push_back(prefill);
        if (t.plan.should_interrupt && t.peak() >= 5) p.should_interrupt = true;
        p.locomotion.insert(p.locomotion.end(), t.plan.locomotion.begin(), t.plan.locomotion.end());
    }
    p.dialogue_prefill = join(prefills, " ");
    p.reasoning = "triggers: " + join(ids, ", ");
    return p;
}

}  // namespace proact::cognitive
