#include "proact/streaming/engine.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "proact/core/errors.hpp"
#include "proact/core/rng.hpp"

namespace proact::streaming {

BudgetReport BudgetReport::make(double t_gen, double t_motion) {
    BudgetReport r;
    r.t_gen = t_gen;
    r.t_motion = t_motion;
    r.ratio = t_gen / t_motion;
    r.deadline_met = r.ratio < 1.0;
    return r;
}

bool IntentionMailbox::post(Message message) {
    std::lock_guard lock(mutex_);
    const bool replaced = slot_.has_value();
    slot_ = std::move(message);
    return replaced;
}

std::optional<IntentionMailbox::Message> IntentionMailbox::take() {
    std::lock_guard lock(mutex_);
    std::optional<Message> out;
    out.swap(slot_);
    return out;
}

bool IntentionMailbox::pending() const {
    std::lock_guard lock(mutex_);
    return slot_.has_value();
}

Acknowledgement inject_intention(IntentionMailbox& mailbox, const motion::IntentionSignal& signal,
                                 const motion::IntentionVocabulary& vocab) {
    if (!signal.empty()) {
        const auto problem = motion::check_intention(signal, vocab);
        if (!problem.empty()) throw std::invalid_argument("rejected intention: " + problem);
    }
    Acknowledgement ack;
    ack.accepted = true;
    ack.superseded_pending = mailbox.post({signal, signal.empty()});
    return ack;
}

MatrixAudioFeed::MatrixAudioFeed(Matrix user, Matrix agent) : user_(std::move(user)), agent_(std::move(agent)) {
    if (user_.rows() != agent_.rows() || user_.cols() != agent_.cols()) throw ShapeError("audio feeds must match");
}

flow::ConditioningBundle MatrixAudioFeed::window(std::int64_t begin, std::int64_t end) const {
    if (begin < 0 || end > available_end()) throw StreamStarvation(end, available_end());
    flow::ConditioningBundle b;
    b.user_audio = {user_.middleRows(begin, end - begin), motion::AudioSource::user};
    b.agent_audio = {agent_.middleRows(begin, end - begin), motion::AudioSource::agent};
    return b;
}

StreamingEngine::StreamingEngine(const flow::VelocityNetwork& base, const control::ControlBranch* branch,
                                 StreamConfig cfg, motion::SkeletonRef skeleton)
    : base_(base), branch_(branch), cfg_(cfg), skeleton_(std::move(skeleton)) {
    cfg_.flow.validate();
    if (cfg_.ramp_frames < 1) throw std::invalid_argument("gate ramp must be at least one frame");
    if (skeleton_->frame_width() != base_.shape().frame_width) throw ShapeError("skeleton width differs from network");
    if (branch_ && !(branch_->shape == base_.shape())) throw ShapeError("branch shape differs from base network");
}

std::int64_t StreamingEngine::next_window_begin() const {
    return state_.chunk_index == 0 ? 0 : state_.emitted_end - cfg_.flow.overlap;
}

void StreamingEngine::apply_mailbox(bool& applied) {
    applied = false;
    if (!state_.active_intention.empty() && cfg_.hold_chunks > 0 && state_.held_chunks >= cfg_.hold_chunks) {
        state_.active_intention = motion::IntentionSignal::none();
        state_.gate_target = 0.0;
    }
    if (auto msg = mailbox_.take()) {
        if (msg->release || msg->signal.empty()) {
            state_.active_intention = motion::IntentionSignal::none();
            state_.gate_target = 0.0;
        } else if (branch_) {
            state_.active_intention = msg->signal;
            state_.branch_intention = msg->signal;
            state_.gate_target = std::clamp(msg->signal.gate, 0.0, 1.0);
            state_.held_chunks = 0;
            applied = true;
        }
    }
}

ChunkResult StreamingEngine::next_chunk(const AudioFeed& audio) {
    const auto& fc = cfg_.flow;
    const std::int64_t begin = next_window_begin();
    const std::int64_t end = begin + fc.window;
    if (end > audio.available_end()) throw StreamStarvation(end, audio.available_end());
    const flow::ConditioningBundle cond = audio.window(begin, end);

    ChunkResult out;
    apply_mailbox(out.intention_applied);

    // Gate: rows already emitted keep the boundary value; new rows ramp toward the target.
    const int first_new = state_.chunk_index == 0 ? 0 : fc.overlap;
    out.gate.assign(static_cast<std::size_t>(fc.window), state_.gate);
    const double g0 = state_.gate;
    const double target = state_.gate_target;
    for (int t = first_new; t < fc.window; ++t) {
        const double moved = static_cast<double>(t - first_new + 1) / cfg_.ramp_frames;
        out.gate[static_cast<std::size_t>(t)] = g0 < target ? std::min(target, g0 + moved) : std::max(target, g0 - moved);
    }

    Rng rng(mix_seed(cfg_.seed, static_cast<std::uint64_t>(state_.chunk_index)));
    const Matrix m0 = standard_normal(rng, fc.window, base_.shape().frame_width);
    const Matrix* cache = cfg_.clamp && state_.cached_tail ? &*state_.cached_tail : nullptr;

    const bool use_branch = branch_ && std::any_of(out.gate.begin(), out.gate.end(), [](double v) { return v > 0.0; });
    const auto t0 = std::chrono::steady_clock::now();
    Matrix frames;
    if (use_branch) {
        const RowVector feat = branch_->embedding.encode(state_.branch_intention);
        flow::VelocityField field = [&](double tau, const Matrix& m) {
            return control::fused_velocity(base_, *branch_, out.gate, tau, m, cond, feat);
        };
        frames = flow::euler_integrate_normalized(base_.norm(), field, fc.steps, m0, cache);
    } else {
        flow::VelocityField field = [&](double tau, const Matrix& m) { return flow::forward_velocity(base_, tau, m, cond); };
        frames = flow::euler_integrate_normalized(base_.norm(), field, fc.steps, m0, cache);
    }
    const double t_gen = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    out.window = motion::MotionChunk(frames, begin, skeleton_);
    out.emitted = out.window.slice(first_new, fc.window);
    out.budget = BudgetReport::make(t_gen, static_cast<double>(out.emitted.length()) / skeleton_->fps());
    out.active_intention = state_.active_intention;

    state_.cached_tail = Matrix(frames.bottomRows(fc.overlap));
    state_.emitted_end = out.emitted.end_index();
    state_.gate = out.gate.back();
    if (state_.gate == 0.0) state_.branch_intention = motion::IntentionSignal::none();
    if (!state_.active_intention.empty()) ++state_.held_chunks;
    ++state_.chunk_index;
    history_.push_back(out.budget);
    return out;
}

void write_trace_record(std::ostream& out, std::int64_t chunk_index, const ChunkResult& r) {
    nlohmann::ordered_json j;
    j["chunk_index"] = chunk_index;
    j["t_gen_ms"] = r.budget.t_gen * 1000.0;
    j["t_motion_ms"] = r.budget.t_motion * 1000.0;
    j["deadline_met"] = r.budget.deadline_met;
    j["active_intention"] = r.active_intention.raw_text;
    j["gate"] = r.gate.back();
    out << j.dump() << '\n';
}

}  // namespace proact::streaming
