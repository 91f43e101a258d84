#include "proact/app/pipeline.hpp"

#include <numeric>

#include "proact/core/rng.hpp"
#include "proact/cognitive/reasoner.hpp"

namespace proact::app {

namespace {

constexpr std::uint64_t kHeldOutAudio = 0xe7a100;
constexpr std::uint64_t kHeldOutNoise = 0xe7b200;

Matrix concat(const std::vector<motion::MotionChunk>& chunks, int width) {
    Eigen::Index rows = 0;
    for (const auto& c : chunks) rows += c.length();
    Matrix all(rows, width);
    Eigen::Index at = 0;
    for (const auto& c : chunks) {
        all.middleRows(at, c.length()) = c.frames();
        at += c.length();
    }
    return all;
}

double mean_t_gen(const std::vector<streaming::BudgetReport>& b) {
    if (b.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : b) s += r.t_gen;
    return s / static_cast<double>(b.size());
}

nlohmann::json budgets_json(const std::vector<streaming::BudgetReport>& b) {
    auto j = nlohmann::json::array();
    for (const auto& r : b) j.push_back({{"t_gen", r.t_gen}, {"t_motion", r.t_motion}, {"deadline_met", r.deadline_met}});
    return j;
}

}  // namespace

Pipeline::Pipeline(Config config)
    : cfg(std::move(config)),
      spec(cfg.skeleton.build()),
      skeleton(motion::make_skeleton(spec)),
      vocab(motion::IntentionVocabulary::standard()),
      coupling(scenario::SyntheticCoupling::standard(spec)) {
    cfg.network.frame_width = spec.frame_width();
    cfg.validate();
}

training::WindowSampler Pipeline::sampler(double intention_fraction, std::uint64_t seed) const {
    training::WindowSampler::Options o;
    o.streams = cfg.train.streams;
    o.stream_frames = cfg.train.stream_frames;
    o.window = cfg.flow.window;
    o.intention_fraction = intention_fraction;
    return training::WindowSampler(coupling, spec, vocab, o, seed);
}

flow::VelocityNetwork Pipeline::fresh_network(std::uint64_t seed) const {
    return flow::VelocityNetwork::initialize(cfg.network, seed);
}

streaming::StreamConfig Pipeline::stream_config(std::uint64_t seed, bool clamp) const {
    streaming::StreamConfig s;
    s.flow = cfg.flow;
    s.ramp_frames = cfg.control.ramp_frames;
    s.hold_chunks = cfg.control.hold_chunks;
    s.clamp = clamp;
    s.seed = seed;
    return s;
}

scenario::HarnessSetup Pipeline::harness(const flow::VelocityNetwork& base, const control::ControlBranch* branch,
                                         bool deterministic) const {
    scenario::HarnessSetup s;
    s.base = &base;
    s.branch = branch;
    s.stream = stream_config(cfg.train.base.seed);
    s.skeleton = skeleton;
    auto rules = std::make_shared<cognitive::RuleOracle>(cognitive::RuleOracle::load(resolve_asset(cfg.cognitive.rules),
                                                                                     cfg.cognitive.loop.threshold));
    if (cfg.cognitive.backend == "external") {
        cognitive::ExternalOptions o;
        o.host = cfg.cognitive.host;
        o.port = cfg.cognitive.port;
        o.t_c = cfg.cognitive.loop.t_c;
        auto ext = std::make_shared<cognitive::ExternalReasoner>(
            cognitive::ExternalReasoner::with_prompts(o, resolve_asset("prompts")), rules);
        s.encoder = ext;
        s.planner = ext;
    } else {
        s.encoder = rules;
        s.planner = rules;
    }
    s.cognitive = cfg.cognitive.loop;
    s.vocab = &vocab;
    s.limits = cfg.locomotion;
    s.coupling = coupling;
    s.deterministic = deterministic;
    return s;
}

bool StreamEvaluation::overlap_exact() const {
    return std::all_of(continuity.begin(), continuity.end(), [](const auto& c) { return c.clamped.overlap_max_deviation == 0.0; });
}

bool StreamEvaluation::seams_within_p999() const {
    return std::all_of(continuity.begin(), continuity.end(), [](const auto& c) { return c.clamped.passed; });
}

bool StreamEvaluation::clamp_off_worse() const {
    return !continuity.empty() && std::all_of(continuity.begin(), continuity.end(), [](const auto& c) {
        return c.unclamped.boundary_mean > c.clamped.boundary_mean;
    });
}

nlohmann::json StreamEvaluation::to_json() const {
    auto seeds = nlohmann::json::array();
    for (const auto& c : continuity) {
        seeds.push_back({{"seed", c.seed}, {"clamped", c.clamped.to_json()}, {"unclamped", c.unclamped.to_json()}});
    }
    return {{"continuity", seeds},
            {"overlap_exact", overlap_exact()},
            {"seams_within_p999", seams_within_p999()},
            {"clamp_off_worse", clamp_off_worse()},
            {"fgd", fgd.to_json()},
            {"beat_align", beat_align.to_json()},
            {"beat_align_shuffled", beat_align_shuffled.to_json()},
            {"beat_margin", beat_margin()},
            {"diversity", diversity.to_json()},
            {"budgets", budgets_json(budgets)}};
}

StreamEvaluation evaluate_streams(const Pipeline& p, const flow::VelocityNetwork& net, int seeds, std::uint64_t seed) {
    if (seeds < 1) throw std::invalid_argument("evaluate_streams: seeds must be >= 1");
    const int W = p.spec.frame_width();
    const int window = p.cfg.flow.window;
    const auto frames = static_cast<Eigen::Index>(std::llround(p.cfg.eval.stream_seconds * p.spec.fps()));
    StreamEvaluation ev;
    std::vector<Matrix> generated, reference;
    std::vector<std::vector<int>> beats;
    for (int s = 0; s < seeds; ++s) {
        const auto data_seed = mix_seed(seed, kHeldOutAudio + static_cast<std::uint64_t>(s));
        // The recording shares its audio with the generator's input, so its motion is the matching reference.
        const auto truth = scenario::generate_stream(p.coupling, p.spec, frames + window, data_seed);
        streaming::MatrixAudioFeed feed(truth.user_audio, truth.agent_audio);
        SeedContinuity sc;
        sc.seed = data_seed;
        for (bool clamp : {true, false}) {
            streaming::StreamingEngine eng(net, nullptr, p.stream_config(mix_seed(seed, kHeldOutNoise + s), clamp), p.skeleton);
            std::vector<motion::MotionChunk> emitted, windows;
            while (eng.state().emitted_end < frames) {
                auto r = eng.next_chunk(feed);
                emitted.push_back(r.emitted);
                windows.push_back(r.window);
                if (clamp) ev.budgets.push_back(r.budget);
            }
            (clamp ? sc.clamped : sc.unclamped) = eval::continuity(emitted, clamp ? &windows : nullptr, p.cfg.flow.overlap);
            if (!clamp) continue;
            const Matrix all = concat(emitted, W);
            for (Eigen::Index b = 0; b + window <= frames; b += window) {
                generated.push_back(all.middleRows(b, window));
                reference.push_back(truth.motion.middleRows(b, window));
                beats.push_back(truth.beats_in(b, b + window));
            }
        }
        ev.continuity.push_back(std::move(sc));
    }
    // Each window scored against the beats of a window from elsewhere in the set.
    std::vector<std::vector<int>> shuffled(beats.size());
    const std::size_t shift = std::max<std::size_t>(1, beats.size() / 2);
    for (std::size_t i = 0; i < beats.size(); ++i) shuffled[i] = beats[(i + shift) % beats.size()];
    const int rot = p.spec.joint_count() * motion::SkeletonSpec::kRotDimsPerJoint;
    ev.beat_align = eval::beat_align(generated, beats, rot, p.cfg.eval.sigma);
    ev.beat_align_shuffled = eval::beat_align(generated, shuffled, rot, p.cfg.eval.sigma);
    ev.fgd = eval::fgd(reference, generated, p.cfg.eval.projection_seed, p.cfg.eval.fgd_dims);
    ev.diversity = eval::diversity_k(generated, p.cfg.eval.div_k, seed);
    return ev;
}

eval::MetricReport window_fgd(const Pipeline& p, const flow::VelocityNetwork& net, int windows, std::uint64_t seed) {
    const int window = p.cfg.flow.window;
    std::vector<Matrix> generated, reference;
    const auto truth = scenario::generate_stream(p.coupling, p.spec, static_cast<Eigen::Index>(windows) * window,
                                                 mix_seed(seed, kHeldOutAudio + 0x77));
    Rng rng(mix_seed(seed, kHeldOutNoise + 0x77));
    for (int i = 0; i < windows; ++i) {
        const Eigen::Index b = static_cast<Eigen::Index>(i) * window;
        const Matrix noise = standard_normal(rng, window, p.spec.frame_width());
        auto chunk = flow::euler_sample(net, truth.audio_window(b, b + window), p.cfg.flow, noise, nullptr, b, p.skeleton);
        generated.push_back(chunk.frames());
        reference.push_back(truth.motion.middleRows(b, window));
    }
    return eval::fgd(reference, generated, p.cfg.eval.projection_seed, p.cfg.eval.fgd_dims);
}

nlohmann::json ControlEvaluation::to_json() const {
    auto rows = nlohmann::json::array();
    for (const auto& s : scores) {
        rows.push_back({{"intention", s.intention}, {"seed", s.seed}, {"conditioned", s.conditioned}, {"unconditioned", s.unconditioned}});
    }
    return {{"conditioned_mean", conditioned_mean}, {"unconditioned_mean", unconditioned_mean}, {"scores", rows}};
}

ControlEvaluation evaluate_control(const Pipeline& p, const flow::VelocityNetwork& base,
                                   const control::ControlBranch& branch, int seeds, std::uint64_t seed) {
    ControlEvaluation ev;
    const Eigen::Index frames = 2 * static_cast<Eigen::Index>(p.cfg.flow.window);
    for (const auto& [raw, tmpl] : p.coupling.templates) {
        for (int s = 0; s < seeds; ++s) {
            const auto audio_seed = mix_seed(seed, kHeldOutAudio + 0x100 + static_cast<std::uint64_t>(s));
            const auto audio = scenario::generate_audio(p.coupling, frames, audio_seed);
            streaming::MatrixAudioFeed feed(audio.user_audio, audio.agent_audio);
            TemplateScore ts{raw, audio_seed, 0.0, 0.0};
            for (bool conditioned : {false, true}) {
                streaming::StreamingEngine eng(base, &branch, p.stream_config(mix_seed(seed, kHeldOutNoise + 0x100 + s)), p.skeleton);
                eng.next_chunk(feed);
                if (conditioned) streaming::inject_intention(eng.mailbox(), motion::parse_intention(raw, p.vocab), p.vocab);
                const auto r = eng.next_chunk(feed);
                (conditioned ? ts.conditioned : ts.unconditioned) = eval::template_match(r.window.frames(), tmpl);
            }
            ev.scores.push_back(ts);
        }
    }
    for (const auto& s : ev.scores) {
        ev.conditioned_mean += s.conditioned;
        ev.unconditioned_mean += s.unconditioned;
    }
    if (!ev.scores.empty()) {
        ev.conditioned_mean /= static_cast<double>(ev.scores.size());
        ev.unconditioned_mean /= static_cast<double>(ev.scores.size());
    }
    return ev;
}

double BudgetBench::mean_audio_only() const { return mean_t_gen(audio_only); }
double BudgetBench::mean_controlled() const { return mean_t_gen(controlled); }

bool BudgetBench::all_deadlines_met() const {
    auto met = [](const auto& v) { return std::all_of(v.begin(), v.end(), [](const auto& b) { return b.deadline_met; }); };
    return met(audio_only) && met(controlled);
}

nlohmann::json BudgetBench::to_json() const {
    return {{"mean_t_gen_audio_only", mean_audio_only()},
            {"mean_t_gen_controlled", mean_controlled()},
            {"all_deadlines_met", all_deadlines_met()},
            {"audio_only", budgets_json(audio_only)},
            {"controlled", budgets_json(controlled)}};
}

BudgetBench bench_budget(const Pipeline& p, const flow::VelocityNetwork& base, const control::ControlBranch& branch,
                         int chunks, std::uint64_t seed) {
    if (chunks < 2) throw std::invalid_argument("bench_budget: chunks must be >= 2");
    const Eigen::Index frames = static_cast<Eigen::Index>(p.cfg.flow.window) + static_cast<Eigen::Index>(chunks) * p.cfg.flow.new_frames();
    const auto audio = scenario::generate_audio(p.coupling, frames, mix_seed(seed, kHeldOutAudio + 0x200));
    streaming::MatrixAudioFeed feed(audio.user_audio, audio.agent_audio);
    const auto raw = p.coupling.templates.begin()->first;
    BudgetBench bench;
    // Interleaved so that drift in machine load hits both arms alike.
    streaming::StreamingEngine plain(base, nullptr, p.stream_config(seed), p.skeleton);
    streaming::StreamingEngine steered(base, &branch, p.stream_config(seed), p.skeleton);
    for (int i = 0; i < chunks; ++i) {
        bench.audio_only.push_back(plain.next_chunk(feed).budget);
        streaming::inject_intention(steered.mailbox(), motion::parse_intention(raw, p.vocab), p.vocab);
        bench.controlled.push_back(steered.next_chunk(feed).budget);
    }
    return bench;
}

}  // namespace proact::app
