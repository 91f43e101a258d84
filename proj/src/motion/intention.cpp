#include "proact/motion/intention.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "proact/core/errors.hpp"

namespace proact::motion {

IntentionVocabulary::IntentionVocabulary(std::vector<std::string> body_parts, std::vector<std::string> actions)
    : body_parts_(std::move(body_parts)), actions_(std::move(actions)) {
    auto all = tokens();
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
        throw std::invalid_argument("intention vocabulary has duplicate tokens");
    }
}

IntentionVocabulary IntentionVocabulary::standard() {
    return IntentionVocabulary(
        {"head", "neck", "torso", "hips", "left_shoulder", "right_shoulder", "left_arm", "right_arm", "left_elbow",
         "right_elbow", "left_hand", "right_hand", "both_hands", "both_arms", "left_leg", "right_leg"},
        {"wave", "raise", "lower", "point", "nod", "shake", "tilt", "beckon", "clap", "open", "close", "shrug",
         "reach", "rub", "tap", "pat", "bow", "lean", "turn", "cross", "spread", "rest", "idle", "gesture"});
}

IntentionVocabulary IntentionVocabulary::load(const std::string& path, std::size_t body_part_count) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary file " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.size() < body_part_count) throw std::runtime_error("vocabulary file shorter than body part count");
    std::vector<std::string> parts(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(body_part_count));
    std::vector<std::string> actions(lines.begin() + static_cast<std::ptrdiff_t>(body_part_count), lines.end());
    return IntentionVocabulary(std::move(parts), std::move(actions));
}

void IntentionVocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    for (const auto& t : tokens()) out << t << '\n';
}

std::vector<std::string> IntentionVocabulary::tokens() const {
    std::vector<std::string> all = body_parts_;
    all.insert(all.end(), actions_.begin(), actions_.end());
    return all;
}

bool IntentionVocabulary::is_body_part(const std::string& token) const {
    return std::find(body_parts_.begin(), body_parts_.end(), token) != body_parts_.end();
}

bool IntentionVocabulary::is_action(const std::string& token) const {
    return std::find(actions_.begin(), actions_.end(), token) != actions_.end();
}

std::size_t IntentionVocabulary::row_of(const std::string& token) const {
    auto it = std::find(body_parts_.begin(), body_parts_.end(), token);
    if (it != body_parts_.end()) return static_cast<std::size_t>(it - body_parts_.begin());
    auto jt = std::find(actions_.begin(), actions_.end(), token);
    if (jt != actions_.end()) return body_parts_.size() + static_cast<std::size_t>(jt - actions_.begin());
    throw OutOfVocabulary(token);
}

IntentionSignal parse_intention(const std::string& raw_text, const IntentionVocabulary& vocab, double gate,
                                std::int64_t issued_at) {
    std::istringstream is(raw_text);
    std::vector<std::string> words;
    for (std::string w; is >> w;) words.push_back(w);
    if (words.empty()) return IntentionSignal::none();
    if (!vocab.is_body_part(words[0])) throw OutOfVocabulary(words[0]);
    if (words.size() < 2) throw std::invalid_argument("intention '" + raw_text + "' has no action");
    if (!vocab.is_action(words[1])) throw OutOfVocabulary(words[1]);
    if (words.size() > 2) throw std::invalid_argument("intention '" + raw_text + "' has trailing tokens");
    if (gate < 0.0 || gate > 1.0) throw std::invalid_argument("intention gate outside [0, 1]");
    return IntentionSignal{words[0], words[1], words[0] + " " + words[1], gate, issued_at};
}

std::string check_intention(const IntentionSignal& s, const IntentionVocabulary& vocab) {
    if (!(s.gate >= 0.0 && s.gate <= 1.0)) return "gate outside [0, 1]";
    if (s.empty()) return s.body_part.empty() && s.action.empty() ? "" : "empty text with non-empty tokens";
    try {
        auto parsed = parse_intention(s.raw_text, vocab, s.gate, s.issued_at);
        if (parsed.body_part != s.body_part || parsed.action != s.action) return "tokens disagree with raw_text";
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace proact::motion
