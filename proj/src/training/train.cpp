#include "proact/training/train.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "proact/core/binary_io.hpp"
#include "proact/core/errors.hpp"
#include "proact/core/rng.hpp"
#include "proact/flow/flow.hpp"

namespace proact::training {

namespace {

constexpr std::uint64_t kNoiseReplacementOffset = 0x5eed0ff5e7ull;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::uint64_t sample_seed(const TrainConfig& cfg, std::int64_t step, int i) {
    return mix_seed(cfg.seed, static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(cfg.batch_size) +
                                  static_cast<std::uint64_t>(i));
}

}  // namespace

void Adam::save(std::ostream& out) const {
    binary::write_le<std::int64_t>(out, t_);
    binary::write_le<std::uint64_t>(out, m_.size());
    for (std::size_t k = 0; k < m_.size(); ++k) {
        binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m_[k].rows()));
        binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m_[k].cols()));
        for (const Matrix* mat : {&m_[k], &v_[k]}) {
            for (Eigen::Index i = 0; i < mat->size(); ++i) binary::write_le<double>(out, mat->data()[i]);
        }
    }
}

void Adam::load(std::istream& in) {
    t_ = binary::read_le<std::int64_t>(in);
    const auto blocks = binary::read_le<std::uint64_t>(in);
    m_.assign(blocks, Matrix());
    v_.assign(blocks, Matrix());
    for (std::size_t k = 0; k < blocks; ++k) {
        const auto rows = binary::read_le<std::uint32_t>(in);
        const auto cols = binary::read_le<std::uint32_t>(in);
        for (Matrix* mat : {&m_[k], &v_[k]}) {
            mat->resize(rows, cols);
            for (Eigen::Index i = 0; i < mat->size(); ++i) mat->data()[i] = binary::read_le<double>(in);
        }
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
    if (!(dropout_p >= 0.0 && dropout_p <= 1.0)) throw std::invalid_argument("dropout_p must lie in [0, 1]");
    if (!(prefix_clamp_p >= 0.0 && prefix_clamp_p <= 1.0)) throw std::invalid_argument("prefix_clamp_p must lie in [0, 1]");
    if (batch_size < 1 || total_steps < 0 || log_interval < 1) throw std::invalid_argument("batch/steps/log interval");
    if (overlap < 0) throw std::invalid_argument("overlap must be >= 0");
}

std::uint64_t TrainConfig::hash() const {
    std::ostringstream s;
    s.precision(17);
    s << learning_rate << '|' << dropout_p << '|' << batch_size << '|' << total_steps << '|' << seed << '|' << beta1
      << '|' << beta2 << '|' << epsilon << '|' << prefix_clamp_p << '|' << overlap;
    const std::string text = s.str();
    return fnv1a(text.data(), text.size());
}

WindowSampler::WindowSampler(scenario::SyntheticCoupling coupling, motion::SkeletonSpec skeleton,
                             motion::IntentionVocabulary vocab, Options options, std::uint64_t seed)
    : coupling_(std::move(coupling)), skeleton_(std::move(skeleton)), vocab_(std::move(vocab)), options_(options) {
    if (options_.streams < 1 || options_.stream_frames < options_.window) {
        throw std::invalid_argument("window sampler needs streams longer than the window");
    }
    for (int s = 0; s < options_.streams; ++s) {
        streams_.push_back(scenario::generate_stream(coupling_, skeleton_, options_.stream_frames,
                                                     mix_seed(seed, 0x5a3900 + static_cast<std::uint64_t>(s))));
    }
    for (const auto& [raw, _] : coupling_.templates) labels_.push_back(raw);
}

flow::FeatureNorm WindowSampler::feature_norm() const {
    std::vector<Matrix> motions;
    // Windows with each template spliced in, so template-driven columns are not scaled by
    // their near-constant unconditioned spread.
    for (const auto& s : streams_) {
        motions.push_back(s.motion);
        for (const auto& raw : labels_) {
            Matrix w = s.motion.topRows(options_.window);
            scenario::splice_template(w, coupling_.find_template(raw), options_.template_offset, coupling_.crossfade);
            motions.push_back(std::move(w));
        }
    }
    return flow::FeatureNorm::fit(motions);
}

scenario::TrainingTriple WindowSampler::sample(Rng& rng) const {
    const auto& s = streams_[std::uniform_int_distribution<std::size_t>(0, streams_.size() - 1)(rng)];
    const Eigen::Index begin = std::uniform_int_distribution<Eigen::Index>(0, s.frames() - options_.window)(rng);
    scenario::TrainingTriple tr;
    tr.motion = s.motion.middleRows(begin, options_.window);
    tr.audio = s.audio_window(begin, begin + options_.window);
    tr.beats = s.beats_in(begin, begin + options_.window);
    if (uniform01(rng) < options_.intention_fraction && !labels_.empty()) {
        const auto& raw = labels_[std::uniform_int_distribution<std::size_t>(0, labels_.size() - 1)(rng)];
        tr.intention = motion::parse_intention(raw, vocab_, 1.0, begin + options_.template_offset);
        scenario::splice_template(tr.motion, coupling_.find_template(raw), options_.template_offset, coupling_.crossfade);
    }
    return tr;
}

void write_loss_record(std::ostream& out, const LossRecord& r) {
    out << nlohmann::json{{"step", r.step}, {"loss", r.loss}, {"wall_ms", r.wall_ms}}.dump() << '\n';
}

BaseResult train_base(flow::VelocityNetwork init, const WindowSampler& data, const TrainConfig& cfg,
                      const TrainHooks& hooks) {
    cfg.validate();
    BaseResult res{std::move(init), {}, Adam(cfg.adam()), false};
    if (res.net.norm().identity()) res.net.norm() = data.feature_norm();
    const auto start = Clock::now();
    const auto& shape = res.net.shape();
    std::vector<flow::FlowExample> batch(static_cast<std::size_t>(cfg.batch_size));
    std::vector<flow::FlowDraw> draws(batch.size());
    for (std::int64_t step = 0; step < cfg.total_steps; ++step) {
        for (int i = 0; i < cfg.batch_size; ++i) {
            Rng rng(sample_seed(cfg, step, i));
            auto tr = data.sample(rng);
            auto& ex = batch[static_cast<std::size_t>(i)];
            ex.motion = res.net.norm().to_model(tr.motion);
            ex.audio = std::move(tr.audio);
            TapEvent ev{step, i, false, false, false, {}};
            if (uniform01(rng) < cfg.dropout_p) {
                ex.audio.user_audio.features.setZero();
                ex.audio.agent_audio.features.setZero();
                ev.audio_zeroed = true;
            }
            ev.prefix_clamped = uniform01(rng) < cfg.prefix_clamp_p;
            ex.clamped_prefix = ev.prefix_clamped ? cfg.overlap : 0;
            draws[static_cast<std::size_t>(i)] = flow::draw_flow_sample(rng, ex.motion.rows(), shape.frame_width);
            if (hooks.tap) hooks.tap(ev);
        }
        flow::LossResult lr;
        try {
            lr = flow::cfm_loss(res.net, batch, draws);
        } catch (const NonFiniteLoss&) {
            res.diverged = true;
            return res;
        }
        const flow::VelocityNetwork last_good = res.net;
        res.optimizer.step(res.net, lr.grad);
        bool finite = true;
        res.net.for_each_parameter([&](const std::string&, const Matrix& m) { finite = finite && m.allFinite(); });
        if (!finite) {
            res.net = last_good;
            res.diverged = true;
            return res;
        }
        LossRecord rec{step, lr.loss, ms_since(start)};
        res.curve.push_back(rec);
        if (hooks.on_log && (step % cfg.log_interval == 0 || step + 1 == cfg.total_steps)) hooks.on_log(rec);
    }
    return res;
}

ControlResult train_control(const flow::VelocityNetwork& base, control::ControlBranch init, const WindowSampler& data,
                            const TrainConfig& cfg, const TrainHooks& hooks) {
    cfg.validate();
    ControlResult res{std::move(init), {}, Adam(cfg.adam()), false};
    const auto start = Clock::now();
    const auto& shape = base.shape();
    const double b = static_cast<double>(cfg.batch_size);
    control::FusedTape tape;
    for (std::int64_t step = 0; step < cfg.total_steps; ++step) {
        auto grads = res.branch.zeros_like();
        double loss = 0.0;
        for (int i = 0; i < cfg.batch_size; ++i) {
            const std::uint64_t seed = sample_seed(cfg, step, i);
            Rng rng(seed);
            auto tr = data.sample(rng);
            flow::FlowExample ex{base.norm().to_model(tr.motion), std::move(tr.audio), 0};
            TapEvent ev{step, i, false, false, false, tr.intention.raw_text};
            if (uniform01(rng) < cfg.dropout_p) {
                Rng noise(mix_seed(seed, kNoiseReplacementOffset));
                ex.audio.user_audio.features = standard_normal(noise, ex.motion.rows(), shape.audio_dims);
                ex.audio.agent_audio.features = standard_normal(noise, ex.motion.rows(), shape.audio_dims);
                ev.audio_replaced = true;
            }
            ev.prefix_clamped = uniform01(rng) < cfg.prefix_clamp_p;
            ex.clamped_prefix = ev.prefix_clamped ? cfg.overlap : 0;
            const auto draw = flow::draw_flow_sample(rng, ex.motion.rows(), shape.frame_width);
            if (hooks.tap) hooks.tap(ev);

            const Matrix cond = flow::conditioning_matrix(ex.audio, draw.tau, shape.time_dims);
            const Matrix state = flow::flow_state(ex, draw);
            const Matrix v = control::fused_forward(base, res.branch, control::constant_gate(state.rows(), 1.0), state,
                                                    cond, tr.intention, tape);
            Matrix dv;
            const double l = flow::velocity_loss(v, ex, draw, b, &dv);
            if (!std::isfinite(l)) {
                res.diverged = true;
                return res;
            }
            loss += l / b;
            control::fused_backward(base, res.branch, tape, dv, grads);
        }
        const control::ControlBranch last_good = res.branch;
        res.optimizer.step(res.branch, grads);
        bool finite = true;
        res.branch.for_each_parameter([&](const std::string&, const Matrix& m) { finite = finite && m.allFinite(); });
        if (!finite) {
            res.branch = last_good;
            res.diverged = true;
            return res;
        }
        LossRecord rec{step, loss, ms_since(start)};
        res.curve.push_back(rec);
        if (hooks.on_log && (step % cfg.log_interval == 0 || step + 1 == cfg.total_steps)) hooks.on_log(rec);
    }
    return res;
}

double smoothed_head(const std::vector<LossRecord>& curve, std::size_t window) {
    if (curve.empty()) throw std::invalid_argument("empty loss curve");
    const std::size_t n = std::min(window, curve.size());
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += curve[i].loss;
    return s / static_cast<double>(n);
}

double smoothed_tail(const std::vector<LossRecord>& curve, std::size_t window) {
    if (curve.empty()) throw std::invalid_argument("empty loss curve");
    const std::size_t n = std::min(window, curve.size());
    double s = 0;
    for (std::size_t i = curve.size() - n; i < curve.size(); ++i) s += curve[i].loss;
    return s / static_cast<double>(n);
}

}  // namespace proact::training
