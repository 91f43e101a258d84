#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace proact::motion {

// Closed "body part + action" vocabulary. Row order of the embedding table follows
// tokens(): all body parts first, then all actions.
class IntentionVocabulary {
public:
    IntentionVocabulary(std::vector<std::string> body_parts, std::vector<std::string> actions);

    // 16 body parts x 24 actions.
    static IntentionVocabulary standard();
    // Plain text, one token per line; the first body_part_count lines are body parts.
    static IntentionVocabulary load(const std::string& path, std::size_t body_part_count);
    void save(const std::string& path) const;

    const std::vector<std::string>& body_parts() const { return body_parts_; }
    const std::vector<std::string>& actions() const { return actions_; }
    std::vector<std::string> tokens() const;
    std::size_t size() const { return body_parts_.size() + actions_.size(); }

    bool is_body_part(const std::string& token) const;
    bool is_action(const std::string& token) const;
    // Row of a token in the embedding table; throws OutOfVocabulary.
    std::size_t row_of(const std::string& token) const;

private:
    std::vector<std::string> body_parts_;
    std::vector<std::string> actions_;
};

struct IntentionSignal {
    std::string body_part;
    std::string action;
    std::string raw_text;
    double gate = 0.0;
    std::int64_t issued_at = 0;

    bool empty() const { return raw_text.empty(); }
    static IntentionSignal none() { return {}; }

    bool operator==(const IntentionSignal&) const = default;
};

// Parses "body_part action" against the vocabulary. An empty or whitespace-only
// descriptor yields the empty intention. Throws OutOfVocabulary naming the first bad token.
IntentionSignal parse_intention(const std::string& raw_text, const IntentionVocabulary& vocab, double gate = 1.0,
                                std::int64_t issued_at = 0);

// Empty string when the signal is well-formed, otherwise a description of the problem.
std::string check_intention(const IntentionSignal& signal, const IntentionVocabulary& vocab);

}  // namespace proact::motion
