#include "proact/scenario/synthetic.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "proact/core/rng.hpp"

namespace proact::scenario {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double bump(Eigen::Index t, Eigen::Index len) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(t) / static_cast<double>(len - 1));
    return s * s;
}

// Rotation angle along one beat: speed vanishes only at phase 0.
double beat_angle(double phase) { return kTwoPi * phase - std::sin(kTwoPi * phase); }

IntentionTemplate make_template(const motion::SkeletonSpec& sk, const std::string& raw,
                                const std::vector<std::pair<std::string, std::array<double, 3>>>& joints,
                                const std::function<std::array<double, 3>(const std::string&, Eigen::Index, double)>& extra,
                                Eigen::Index len = 40) {
    IntentionTemplate t;
    t.raw_text = raw;
    for (const auto& [name, _] : joints) {
        const int j = sk.joint_index(name);
        for (int q = 0; q < 3; ++q) t.columns.push_back(j * 3 + q);
    }
    t.values = Matrix::Zero(len, static_cast<Eigen::Index>(t.columns.size()));
    for (Eigen::Index f = 0; f < len; ++f) {
        const double b = bump(f, len);
        for (std::size_t k = 0; k < joints.size(); ++k) {
            const auto& [name, dir] = joints[k];
            const auto add = extra ? extra(name, f, b) : std::array<double, 3>{0, 0, 0};
            for (int q = 0; q < 3; ++q) t.values(f, static_cast<Eigen::Index>(3 * k + q)) = b * dir[q] + add[q];
        }
    }
    return t;
}

struct Turns {
    std::vector<bool> agent;  // per frame
};

Turns draw_turns(const SyntheticCoupling& c, Eigen::Index frames, Rng& rng) {
    Turns turns;
    turns.agent.resize(static_cast<std::size_t>(frames));
    bool agent = uniform01(rng) < 0.5;
    std::uniform_int_distribution<int> dur(c.min_turn, c.max_turn);
    Eigen::Index t = 0;
    while (t < frames) {
        const Eigen::Index end = std::min<Eigen::Index>(frames, t + dur(rng));
        for (; t < end; ++t) turns.agent[static_cast<std::size_t>(t)] = agent;
        agent = !agent;
    }
    return turns;
}

struct SideAudio {
    Matrix features;
    std::vector<int> beats;
    std::vector<double> phase;  // beat phase in [0, 1) while active
    std::vector<double> loudness;
};

SideAudio draw_side(const SyntheticCoupling& c, const std::vector<bool>& active, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(active.size());
    SideAudio s;
    s.features = Matrix::Zero(n, kAudioFeatureDims);
    s.phase.assign(active.size(), 0.0);
    s.loudness.assign(active.size(), 0.0);
    std::uniform_int_distribution<int> jitter(-c.beat_jitter, c.beat_jitter);
    Eigen::Index t = 0;
    while (t < n) {
        if (!active[static_cast<std::size_t>(t)]) {
            ++t;
            continue;
        }
        Eigen::Index end = t;
        while (end < n && active[static_cast<std::size_t>(end)]) ++end;
        const double loud = 0.6 + 0.4 * uniform01(rng);
        // Beats run from slightly before the turn so the phase is defined everywhere inside it.
        std::vector<Eigen::Index> marks{t - std::uniform_int_distribution<int>(0, c.beat_period - 1)(rng)};
        while (marks.back() < end) marks.push_back(marks.back() + c.beat_period + jitter(rng));
        for (std::size_t k = 0; k + 1 < marks.size(); ++k) {
            const Eigen::Index b0 = marks[k], b1 = marks[k + 1];
            if (b0 >= t) s.beats.push_back(static_cast<int>(b0));
            for (Eigen::Index f = std::max(b0, t); f < std::min(b1, end); ++f) {
                const double ph = static_cast<double>(f - b0) / static_cast<double>(b1 - b0);
                const auto fi = static_cast<std::size_t>(f);
                s.phase[fi] = ph;
                s.loudness[fi] = loud;
                s.features(f, 0) = f == b0 ? 1.0 : 0.0;
                s.features(f, 1) = std::exp(-static_cast<double>(f - b0) / 4.0);
                s.features(f, 2) = 1.0;
                s.features(f, 3) = std::sin(kTwoPi * ph);
                s.features(f, 4) = std::cos(kTwoPi * ph);
                s.features(f, 5) = loud;
            }
        }
        t = end;
    }
    return s;
}

std::vector<double> ramped(const std::vector<bool>& active, int ramp) {
    // Symmetric moving average of the activity indicator.
    const auto n = static_cast<long>(active.size());
    std::vector<double> out(active.size());
    for (long t = 0; t < n; ++t) {
        double sum = 0;
        int count = 0;
        for (long k = t - ramp; k <= t + ramp; ++k) {
            if (k < 0 || k >= n) continue;
            sum += active[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
            ++count;
        }
        out[static_cast<std::size_t>(t)] = sum / count;
    }
    return out;
}

struct AudioDraw {
    std::vector<bool> agent_active, user_active;
    SideAudio agent, user;
};

AudioDraw draw_audio(const SyntheticCoupling& c, Eigen::Index frames, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0xa0d10));
    AudioDraw a;
    a.agent_active = draw_turns(c, frames, rng).agent;
    a.user_active.resize(a.agent_active.size());
    for (std::size_t t = 0; t < a.user_active.size(); ++t) a.user_active[t] = !a.agent_active[t];
    a.agent = draw_side(c, a.agent_active, rng);
    a.user = draw_side(c, a.user_active, rng);
    return a;
}

DyadStream pack(const AudioDraw& a) {
    DyadStream s;
    s.agent_audio = a.agent.features;
    s.user_audio = a.user.features;
    s.agent_beats = a.agent.beats;
    s.user_beats = a.user.beats;
    s.agent_speaking = a.agent_active;
    return s;
}

}  // namespace

void SyntheticCoupling::validate(const motion::SkeletonSpec& skeleton) const {
    if (beat_period < 2) throw std::invalid_argument("beat period must be at least 2 frames");
    if (beat_jitter < 0 || beat_jitter >= beat_period / 2) throw std::invalid_argument("beat jitter out of range");
    if (min_turn < 1 || max_turn < min_turn) throw std::invalid_argument("turn lengths out of range");
    for (const auto& [raw, t] : templates) {
        for (int c : t.columns) {
            if (c < 0 || c >= skeleton.root_offset()) throw std::invalid_argument("template column outside skeleton: " + raw);
        }
        if (t.values.cols() != static_cast<Eigen::Index>(t.columns.size())) {
            throw std::invalid_argument("template width mismatch: " + raw);
        }
    }
}

const IntentionTemplate& SyntheticCoupling::find_template(const std::string& raw_text) const {
    auto it = templates.find(raw_text);
    if (it == templates.end()) throw std::out_of_range("no template for intention: " + raw_text);
    return it->second;
}

SyntheticCoupling SyntheticCoupling::standard(const motion::SkeletonSpec& sk) {
    SyntheticCoupling c;
    auto add = [&](IntentionTemplate t) { c.templates.emplace(t.raw_text, std::move(t)); };
    add(make_template(sk, "right_hand raise", {{"right_arm", {0.3, -0.2, 1.4}}, {"right_hand", {0.2, 0.4, 0.7}}}, {}));
    add(make_template(sk, "right_hand wave", {{"right_arm", {0.2, -0.3, 1.2}}, {"right_hand", {0.0, 0.0, 0.3}}},
                      [](const std::string& joint, Eigen::Index f, double b) -> std::array<double, 3> {
                          if (joint != "right_hand") return {0, 0, 0};
                          return {0.6 * b * std::sin(kTwoPi * static_cast<double>(f) / 10.0), 0, 0};
                      }));
    add(make_template(sk, "right_hand point", {{"right_arm", {1.2, 0.3, 0.2}}, {"right_hand", {0.5, -0.2, 0.0}}}, {}));
    add(make_template(sk, "head nod", {{"head", {0.0, 0.05, 0.0}}},
                      [](const std::string&, Eigen::Index f, double b) -> std::array<double, 3> {
                          return {0.35 * b * (1.0 - std::cos(kTwoPi * static_cast<double>(f) / 13.0)), 0, 0};
                      }));
    add(make_template(sk, "both_hands open",
                      {{"left_arm", {0.2, 0.0, -1.0}}, {"right_arm", {0.2, 0.0, 1.0}}, {"right_hand", {0.3, 0.0, 0.2}}},
                      {}));
    add(make_template(sk, "left_hand raise", {{"left_arm", {0.3, 0.2, -1.4}}}, {}));
    c.validate(sk);
    return c;
}

std::vector<int> DyadStream::beats() const {
    std::vector<int> all = user_beats;
    all.insert(all.end(), agent_beats.begin(), agent_beats.end());
    std::sort(all.begin(), all.end());
    return all;
}

std::vector<int> DyadStream::beats_in(Eigen::Index begin, Eigen::Index end) const {
    std::vector<int> out;
    for (int b : beats()) {
        if (b >= begin && b < end) out.push_back(static_cast<int>(b - begin));
    }
    return out;
}

flow::ConditioningBundle DyadStream::audio_window(Eigen::Index begin, Eigen::Index end) const {
    if (begin < 0 || end > user_audio.rows() || begin > end) throw std::out_of_range("audio window outside stream");
    flow::ConditioningBundle b;
    b.user_audio = {user_audio.middleRows(begin, end - begin), motion::AudioSource::user};
    b.agent_audio = {agent_audio.middleRows(begin, end - begin), motion::AudioSource::agent};
    return b;
}

DyadStream render_audio(const SyntheticCoupling& c, const std::vector<bool>& user_active,
                        const std::vector<bool>& agent_active, std::uint64_t seed) {
    if (user_active.size() != agent_active.size()) throw std::invalid_argument("speaking schedules differ in length");
    Rng rng(mix_seed(seed, 0xa0d11));
    AudioDraw a;
    a.agent_active = agent_active;
    a.user_active = user_active;
    a.agent = draw_side(c, a.agent_active, rng);
    a.user = draw_side(c, a.user_active, rng);
    return pack(a);
}

DyadStream generate_audio(const SyntheticCoupling& c, Eigen::Index frames, std::uint64_t seed) {
    return pack(draw_audio(c, frames, seed));
}

DyadStream generate_stream(const SyntheticCoupling& c, const motion::SkeletonSpec& sk, Eigen::Index frames,
                           std::uint64_t seed) {
    c.validate(sk);
    // Audio comes from the same generator used at inference, motion from a separate stream.
    const AudioDraw audio = draw_audio(c, frames, seed);
    const SideAudio& agent = audio.agent;
    const SideAudio& user = audio.user;
    DyadStream s = pack(audio);
    Rng rng(mix_seed(seed, 0x30710));
    const auto speak = ramped(audio.agent_active, c.activity_ramp);
    const auto listen = ramped(audio.user_active, c.activity_ramp);

    const int W = sk.frame_width();
    s.motion = Matrix::Zero(frames, W);
    struct ArmCircle {
        int joint;
        double offset;
        double scale;
    };
    std::vector<ArmCircle> arms;
    const double offsets[] = {0.0, 2.1, 4.2};
    int k = 0;
    for (const char* name : {"left_arm", "right_arm", "right_hand"}) {
        const auto& names = sk.joint_names();
        if (std::find(names.begin(), names.end(), name) == names.end()) continue;
        arms.push_back({sk.joint_index(name), offsets[k % 3], k == 2 ? 0.6 : 1.0});
        ++k;
    }
    const auto& names = sk.joint_names();
    const bool has_head = std::find(names.begin(), names.end(), "head") != names.end();
    const bool has_spine = std::find(names.begin(), names.end(), "spine") != names.end();
    const int head = has_head ? sk.joint_index("head") : -1;
    const int spine = has_spine ? sk.joint_index("spine") : -1;

    std::normal_distribution<double> gauss(0.0, 1.0);
    double drift[3] = {0, 0, 0};
    double root[3] = {0, 0, 0};
    for (Eigen::Index t = 0; t < frames; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        const double amp = c.speaker_amplitude * speak[ti] * std::max(agent.loudness[ti], 0.6);
        const double theta = beat_angle(agent.phase[ti]);
        for (const auto& a : arms) {
            s.motion(t, 3 * a.joint + 0) = amp * a.scale * (std::cos(theta + a.offset) - std::cos(a.offset));
            s.motion(t, 3 * a.joint + 1) = amp * a.scale * (std::sin(theta + a.offset) - std::sin(a.offset));
        }
        if (head >= 0) {
            const double nod = c.listener_amplitude * listen[ti];
            const double th = beat_angle(user.phase[ti]);
            s.motion(t, 3 * head + 0) = nod * (1.0 - std::cos(th));
            s.motion(t, 3 * head + 2) = nod * std::sin(th);
        }
        for (int q = 0; q < 3; ++q) {
            drift[q] += -0.02 * drift[q] + c.sway_std * gauss(rng);
            root[q] += -0.01 * root[q] + 0.002 * gauss(rng);
        }
        if (spine >= 0) {
            for (int q = 0; q < 3; ++q) s.motion(t, 3 * spine + q) = drift[q];
        }
        const int ro = sk.root_offset();
        for (int q = 0; q < 3; ++q) s.motion(t, ro + q) = root[q];
    }
    const int ro = sk.root_offset();
    for (Eigen::Index t = 0; t < frames; ++t) {
        const Eigen::Index prev = t == 0 ? 0 : t - 1;
        for (int q = 0; q < 3; ++q) s.motion(t, ro + 3 + q) = (s.motion(t, ro + q) - s.motion(prev, ro + q)) * sk.fps();
    }
    for (Eigen::Index i = 0; i < s.motion.size(); ++i) s.motion.data()[i] += c.noise_std * gauss(rng);
    return s;
}

void splice_template(Matrix& motion, const IntentionTemplate& tmpl, Eigen::Index offset, int crossfade) {
    const Eigen::Index len = tmpl.length();
    auto blend = [&](Eigen::Index t, Eigen::Index row, double w) {
        if (t < 0 || t >= motion.rows()) return;
        for (std::size_t k = 0; k < tmpl.columns.size(); ++k) {
            double& v = motion(t, tmpl.columns[k]);
            v = (1.0 - w) * v + w * tmpl.values(row, static_cast<Eigen::Index>(k));
        }
    };
    for (Eigen::Index f = 0; f < len; ++f) blend(offset + f, f, 1.0);
    // Fade the surrounding motion into the template's first and last poses.
    for (int k = 1; k <= crossfade; ++k) {
        const double w = 1.0 - static_cast<double>(k) / (crossfade + 1);
        blend(offset - k, 0, w);
        blend(offset + len - 1 + k, len - 1, w);
    }
}

std::vector<TrainingTriple> generate_dataset(const SyntheticCoupling& c, const motion::SkeletonSpec& sk,
                                             const motion::IntentionVocabulary& vocab, const DatasetSpec& spec,
                                             std::uint64_t seed) {
    if (spec.size < 1) throw std::invalid_argument("dataset size must be >= 1");
    if (spec.window < 2 || spec.stream_frames < spec.window) throw std::invalid_argument("dataset window out of range");
    std::vector<std::string> labels;
    for (const auto& [raw, _] : c.templates) labels.push_back(raw);
    Rng rng(mix_seed(seed, 0xda7a));
    std::vector<TrainingTriple> out;
    out.reserve(static_cast<std::size_t>(spec.size));
    const int windows_per_stream = std::max(1, spec.stream_frames / spec.window);
    DyadStream stream;
    for (int i = 0; i < spec.size; ++i) {
        if (i % windows_per_stream == 0) {
            stream = generate_stream(c, sk, spec.stream_frames, mix_seed(seed, 1000 + static_cast<std::uint64_t>(i)));
        }
        const Eigen::Index begin =
            std::uniform_int_distribution<Eigen::Index>(0, stream.frames() - spec.window)(rng);
        TrainingTriple tr;
        tr.motion = stream.motion.middleRows(begin, spec.window);
        tr.audio = stream.audio_window(begin, begin + spec.window);
        tr.beats = stream.beats_in(begin, begin + spec.window);
        if (uniform01(rng) < spec.intention_fraction && !labels.empty()) {
            const auto& raw = labels[std::uniform_int_distribution<std::size_t>(0, labels.size() - 1)(rng)];
            tr.intention = motion::parse_intention(raw, vocab, 1.0, begin + spec.template_offset);
            splice_template(tr.motion, c.find_template(raw), spec.template_offset, c.crossfade);
        }
        out.push_back(std::move(tr));
    }
    return out;
}

}  // namespace proact::scenario
