#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "proact/control/branch.hpp"
#include "proact/core/rng.hpp"
#include "proact/flow/network.hpp"
#include "proact/scenario/synthetic.hpp"
#include "proact/training/adam.hpp"

namespace proact::training {

struct TrainConfig {
    double learning_rate = 1e-4;
    double dropout_p = 0.2;
    int batch_size = 16;
    int total_steps = 2000;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int log_interval = 10;
    // Probability that a sample's first `overlap` rows are clamped to clean motion,
    // the condition the streaming sampler creates at every chunk after the first.
    double prefix_clamp_p = 0.5;
    int overlap = 30;

    void validate() const;
    AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
    // FNV-1a over the fields that change the optimization trajectory.
    std::uint64_t hash() const;
};

// Pre-generated recordings from which training windows are drawn.
class WindowSampler {
public:
    struct Options {
        int streams = 48;
        int stream_frames = 1800;
        int window = 150;
        int template_offset = 30;
        double intention_fraction = 0.0;
    };

    WindowSampler(scenario::SyntheticCoupling coupling, motion::SkeletonSpec skeleton,
                  motion::IntentionVocabulary vocab, Options options, std::uint64_t seed);

    scenario::TrainingTriple sample(Rng& rng) const;
    // Per-column statistics of the recordings; train_base installs it on a network that has none.
    flow::FeatureNorm feature_norm() const;
    const Options& options() const { return options_; }
    const scenario::SyntheticCoupling& coupling() const { return coupling_; }

private:
    scenario::SyntheticCoupling coupling_;
    motion::SkeletonSpec skeleton_;
    motion::IntentionVocabulary vocab_;
    Options options_;
    std::vector<scenario::DyadStream> streams_;
    std::vector<std::string> labels_;
};

struct LossRecord {
    std::int64_t step = 0;
    double loss = 0.0;
    double wall_ms = 0.0;
};

void write_loss_record(std::ostream& out, const LossRecord& r);

// What happened to one sample on its way into the loss (instrumentation hook).
struct TapEvent {
    std::int64_t step = 0;
    int sample = 0;
    bool audio_zeroed = false;    // base stage dropout
    bool audio_replaced = false;  // control stage noise replacement
    bool prefix_clamped = false;
    std::string intention;
};

struct TrainHooks {
    std::function<void(const TapEvent&)> tap;
    std::function<void(const LossRecord&)> on_log;
};

struct BaseResult {
    flow::VelocityNetwork net;
    std::vector<LossRecord> curve;  // every step
    Adam optimizer;
    bool diverged = false;  // net then holds the last finite parameters
};

BaseResult train_base(flow::VelocityNetwork init, const WindowSampler& data, const TrainConfig& cfg,
                      const TrainHooks& hooks = {});

struct ControlResult {
    control::ControlBranch branch;
    std::vector<LossRecord> curve;
    Adam optimizer;
    bool diverged = false;
};

// The base network is taken by const reference and never written.
ControlResult train_control(const flow::VelocityNetwork& base, control::ControlBranch init, const WindowSampler& data,
                            const TrainConfig& cfg, const TrainHooks& hooks = {});

// Mean of the first / last `window` losses of a curve.
double smoothed_head(const std::vector<LossRecord>& curve, std::size_t window);
double smoothed_tail(const std::vector<LossRecord>& curve, std::size_t window);

// Resumable training state, little-endian:
//   magic "PRTC" | u32 version (=1) | i64 step | u64 config hash | u64 parameter count
//   | float64 parameters | Adam: i64 t | u64 block count | per block: u64 size, float64 m, float64 v
template <typename Params>
void save_training_state(std::ostream& out, std::int64_t step, std::uint64_t config_hash, const Params& params,
                         const Adam& adam);
template <typename Params>
std::int64_t load_training_state(std::istream& in, std::uint64_t config_hash, Params& params, Adam& adam);

}  // namespace proact::training

#include "proact/training/train_state.ipp"
