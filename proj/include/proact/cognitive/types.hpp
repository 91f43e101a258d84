#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "proact/locomotion/sim.hpp"

namespace proact::cognitive {

inline constexpr std::array<std::string_view, 6> kMemoryFields{
    "user_profile", "user_mental_state", "event_timeline", "workspace_status", "unresolved_tasks", "robot_actions"};

inline constexpr std::size_t kDefaultFieldCapacity = 280;

// Longest prefix of s that fits in max_bytes without splitting a UTF-8 sequence.
std::string truncate_utf8(std::string s, std::size_t max_bytes);

class MemoryBank {
public:
    explicit MemoryBank(std::size_t capacity = kDefaultFieldCapacity);

    static std::size_t index_of(std::string_view field);  // throws std::invalid_argument
    const std::string& field(std::string_view name) const { return fields_[index_of(name)]; }
    const std::string& at(std::size_t i) const { return fields_.at(i); }
    // Stores text truncated to the field capacity (bytes, UTF-8 safe).
    void set(std::string_view name, std::string text);
    std::size_t capacity() const { return capacity_; }

    std::int64_t cycle = 0;
    bool stale = false;

    // Fixed-size record: "PRMB", u32 capacity, i64 cycle, u8 stale, then per field u16 length + capacity bytes.
    std::string serialize() const;
    static MemoryBank deserialize(std::string_view bytes);
    static std::size_t serialized_size(std::size_t capacity) { return 17 + kMemoryFields.size() * (2 + capacity); }

    nlohmann::ordered_json fields_json() const;
    nlohmann::ordered_json to_json() const;

    bool operator==(const MemoryBank&) const = default;

private:
    std::size_t capacity_;
    std::array<std::string, 6> fields_;
};

enum class Speaker { user, agent };
std::string_view speaker_name(Speaker s);

struct TranscriptEntry {
    std::int64_t cycle = 0;
    Speaker speaker = Speaker::user;
    std::string text;
    bool operator==(const TranscriptEntry&) const = default;
};

struct TranscriptWindow {
    std::vector<TranscriptEntry> entries;

    // Entries with first <= cycle <= last.
    TranscriptWindow range(std::int64_t first, std::int64_t last) const;
    bool empty() const { return entries.empty(); }
    nlohmann::json to_json() const;
};

struct VisualEvent {
    std::string token;
    std::int64_t frame = 0;
    bool operator==(const VisualEvent&) const = default;
};

struct VisualEventSet {
    std::vector<VisualEvent> events;

    // At most `count` events spread evenly over the input, keeping order; the latest is always kept.
    static VisualEventSet sample(const std::vector<VisualEvent>& since_last_cycle, std::size_t count);
    bool contains(std::string_view token) const;
    nlohmann::json to_json() const;
};

inline constexpr std::array<std::string_view, 5> kDimensions{
    "visual_scene", "user_intent", "conversation_state", "social_protocol", "emotional_response"};

struct MotivationScores {
    std::array<int, 5> values{1, 1, 1, 1, 1};

    static std::size_t index_of(std::string_view dim);  // throws std::invalid_argument
    int& operator[](std::string_view dim) { return values[index_of(dim)]; }
    int operator[](std::string_view dim) const { return values[index_of(dim)]; }
    int max() const;
    bool valid() const;
    nlohmann::ordered_json to_json() const;
    static MotivationScores from_json(const nlohmann::json& j);  // throws on missing/invalid scores

    bool operator==(const MotivationScores&) const = default;
};

struct BehaviorPlan {
    MotivationScores scores;
    std::string motion_intent;  // raw "body_part action" text, or empty
    bool should_interrupt = false;
    std::string dialogue_prefill;
    std::vector<locomotion::LocomotionCommand> locomotion;
    std::string reasoning;
    bool stale = false;
    std::vector<std::string> suppressed;  // channels removed as repeats: "gesture", "prefill", "turn"

    bool empty() const { return motion_intent.empty() && !should_interrupt && dialogue_prefill.empty() && locomotion.empty(); }
    nlohmann::ordered_json to_json() const;
};

struct ActionHistory {
    std::set<std::string> gestures;
    std::vector<locomotion::LocomotionCommand> turns;
    std::set<std::string> prefills;

    void record(const BehaviorPlan& plan);
    nlohmann::json to_json() const;
};

}  // namespace proact::cognitive
