#include "proact/cognitive/types.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "proact/core/binary_io.hpp"

namespace proact::cognitive {

std::string truncate_utf8(std::string s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return s;
    std::size_t cut = max_bytes;
    // Back up over continuation bytes so the cut lands on a code point start.
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    s.resize(cut);
    return s;
}

MemoryBank::MemoryBank(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0 || capacity > 0xFFFF) throw std::invalid_argument("memory field capacity must be in [1, 65535]");
}

std::size_t MemoryBank::index_of(std::string_view field) {
    for (std::size_t i = 0; i < kMemoryFields.size(); ++i) {
        if (kMemoryFields[i] == field) return i;
    }
    throw std::invalid_argument("unknown memory field: " + std::string(field));
}

void MemoryBank::set(std::string_view name, std::string text) {
    fields_[index_of(name)] = truncate_utf8(std::move(text), capacity_);
}

std::string MemoryBank::serialize() const {
    std::ostringstream out;
    binary::write_magic(out, "PRMB");
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(capacity_));
    binary::write_le<std::int64_t>(out, cycle);
    binary::write_le<std::uint8_t>(out, stale ? 1 : 0);
    for (const auto& f : fields_) {
        binary::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(f.size()));
        std::string padded = f;
        padded.resize(capacity_, '\0');
        out.write(padded.data(), static_cast<std::streamsize>(padded.size()));
    }
    return out.str();
}

MemoryBank MemoryBank::deserialize(std::string_view bytes) {
    std::istringstream in{std::string(bytes)};
    binary::expect_magic(in, "PRMB");
    MemoryBank bank(binary::read_le<std::uint32_t>(in));
    if (bytes.size() != serialized_size(bank.capacity_)) throw std::runtime_error("memory bank record has the wrong size");
    bank.cycle = binary::read_le<std::int64_t>(in);
    bank.stale = binary::read_le<std::uint8_t>(in) != 0;
    for (auto& f : bank.fields_) {
        const auto len = binary::read_le<std::uint16_t>(in);
        if (len > bank.capacity_) throw std::runtime_error("memory field longer than capacity");
        std::string buf(bank.capacity_, '\0');
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.resize(len);
        f = std::move(buf);
    }
    return bank;
}

nlohmann::ordered_json MemoryBank::fields_json() const {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < kMemoryFields.size(); ++i) j[std::string(kMemoryFields[i])] = fields_[i];
    return j;
}

nlohmann::ordered_json MemoryBank::to_json() const {
    nlohmann::ordered_json j = fields_json();
    j["cycle_k"] = cycle;
    j["stale"] = stale;
    return j;
}

std::string_view speaker_name(Speaker s) { return s == Speaker::user ? "user" : "agent"; }

TranscriptWindow TranscriptWindow::range(std::int64_t first, std::int64_t last) const {
    TranscriptWindow w;
    for (const auto& e : entries) {
        if (e.cycle >= first && e.cycle <= last) w.entries.push_back(e);
    }
    return w;
}

nlohmann::json TranscriptWindow::to_json() const {
    auto j = nlohmann::json::array();
    for (const auto& e : entries) j.push_back({{"cycle", e.cycle}, {"speaker", speaker_name(e.speaker)}, {"text", e.text}});
    return j;
}

VisualEventSet VisualEventSet::sample(const std::vector<VisualEvent>& all, std::size_t count) {
    VisualEventSet s;
    if (count == 0 || all.empty()) return s;
    if (all.size() <= count) {
        s.events = all;
        return s;
    }
    if (count == 1) {
        s.events.push_back(all.back());
        return s;
    }
    const double span = static_cast<double>(all.size() - 1);
    for (std::size_t i = 0; i < count; ++i) {
        const auto idx = static_cast<std::size_t>(std::llround(span * static_cast<double>(i) / static_cast<double>(count - 1)));
        s.events.push_back(all[idx]);
    }
    return s;
}

bool VisualEventSet::contains(std::string_view token) const {
    return std::any_of(events.begin(), events.end(), [&](const VisualEvent& e) { return e.token == token; });
}

nlohmann::json VisualEventSet::to_json() const {
    auto j = nlohmann::json::array();
    for (const auto& e : events) j.push_back({{"token", e.token}, {"frame", e.frame}});
    return j;
}

std::size_t MotivationScores::index_of(std::string_view dim) {
    for (std::size_t i = 0; i < kDimensions.size(); ++i) {
        if (kDimensions[i] == dim) return i;
    }
    throw std::invalid_argument("unknown motivation dimension: " + std::string(dim));
}

int MotivationScores::max() const { return *std::max_element(values.begin(), values.end()); }

bool MotivationScores::valid() const {
    return std::all_of(values.begin(), values.end(), [](int v) { return v >= 1 && v <= 5; });
}

nlohmann::ordered_json MotivationScores::to_json() const {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < kDimensions.size(); ++i) j[std::string(kDimensions[i])] = values[i];
    return j;
}

MotivationScores MotivationScores::from_json(const nlohmann::json& j) {
    MotivationScores s;
    for (std::size_t i = 0; i < kDimensions.size(); ++i) s.values[i] = j.at(std::string(kDimensions[i])).get<int>();
    if (!s.valid()) throw std::invalid_argument("motivation scores must lie in [1, 5]");
    return s;
}

nlohmann::ordered_json BehaviorPlan::to_json() const {
    nlohmann::ordered_json j;
    j["scores"] = scores.to_json();
    j["motivation_score"] = scores.max();
    j["motion_intent"] = motion_intent;
    j["should_interrupt"] = should_interrupt;
    j["dialogue_prefill"] = dialogue_prefill;
    auto loco = nlohmann::ordered_json::array();
    for (const auto& c : locomotion) {
        loco.push_back({{"v_x", c.v_x}, {"v_y", c.v_y}, {"omega_z", c.omega_z}, {"duration", c.duration},
                        {"tracking_target", c.tracking_target}, {"reasoning", c.reasoning}});
    }
    j["locomotion"] = std::move(loco);
    j["reasoning"] = reasoning;
    j["stale"] = stale;
    j["suppressed"] = suppressed;
    return j;
}

void ActionHistory::record(const BehaviorPlan& plan) {
    if (!plan.motion_intent.empty()) gestures.insert(plan.motion_intent);
    if (!plan.dialogue_prefill.empty()) prefills.insert(plan.dialogue_prefill);
    for (const auto& c : plan.locomotion) {
        if (c.is_turn()) turns.push_back(c);
    }
}

nlohmann::json ActionHistory::to_json() const {
    nlohmann::json turn_list = nlohmann::json::array();
    for (const auto& t : turns) turn_list.push_back({{"omega_z", t.omega_z}, {"duration", t.duration}, {"tracking_target", t.tracking_target}});
    return {{"gestures", gestures}, {"turns", turn_list}, {"prefills", prefills}};
}

}  // namespace proact::cognitive
