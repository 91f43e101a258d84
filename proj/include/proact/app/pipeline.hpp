#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "proact/app/config.hpp"
#include "proact/eval/metrics.hpp"
#include "proact/scenario/harness.hpp"
#include "proact/streaming/engine.hpp"

namespace proact::app {

// Everything derived from a Config that the commands share.
struct Pipeline {
    explicit Pipeline(Config config);

    Config cfg;
    motion::SkeletonSpec spec;
    motion::SkeletonRef skeleton;
    motion::IntentionVocabulary vocab;
    scenario::SyntheticCoupling coupling;

    training::WindowSampler sampler(double intention_fraction, std::uint64_t seed) const;
    flow::VelocityNetwork fresh_network(std::uint64_t seed) const;
    streaming::StreamConfig stream_config(std::uint64_t seed, bool clamp = true) const;
    scenario::HarnessSetup harness(const flow::VelocityNetwork& base, const control::ControlBranch* branch,
                                   bool deterministic) const;
};

struct SeedContinuity {
    std::uint64_t seed = 0;
    eval::ContinuityReport clamped;
    eval::ContinuityReport unclamped;
};

struct StreamEvaluation {
    std::vector<SeedContinuity> continuity;
    eval::MetricReport fgd;
    eval::MetricReport beat_align;
    eval::MetricReport beat_align_shuffled;  // same motion scored against another window's beats
    eval::MetricReport diversity;
    std::vector<streaming::BudgetReport> budgets;  // clamped runs

    double beat_margin() const { return beat_align.value - beat_align_shuffled.value; }
    bool overlap_exact() const;
    bool seams_within_p999() const;
    // The clamp-off run has the larger mean seam delta on every seed.
    bool clamp_off_worse() const;
    nlohmann::json to_json() const;
};

// `seeds` audio-only streams of cfg.eval.stream_seconds each, generated with and without clamping.
StreamEvaluation evaluate_streams(const Pipeline& p, const flow::VelocityNetwork& net, int seeds, std::uint64_t seed);

// FGD of sampled windows against held-out recordings, without streaming.
eval::MetricReport window_fgd(const Pipeline& p, const flow::VelocityNetwork& net, int windows, std::uint64_t seed);

struct TemplateScore {
    std::string intention;
    std::uint64_t seed = 0;
    double conditioned = 0.0;
    double unconditioned = 0.0;
};

struct ControlEvaluation {
    std::vector<TemplateScore> scores;
    double conditioned_mean = 0.0;
    double unconditioned_mean = 0.0;
    nlohmann::json to_json() const;
};

// For every template and seed, a two-chunk stream on held-out audio: the intention is posted
// after chunk 0, and template_match is taken over chunk 1's window.
ControlEvaluation evaluate_control(const Pipeline& p, const flow::VelocityNetwork& base,
                                   const control::ControlBranch& branch, int seeds, std::uint64_t seed);

struct BudgetBench {
    std::vector<streaming::BudgetReport> audio_only;
    std::vector<streaming::BudgetReport> controlled;  // an intention re-posted before every chunk
    double mean_audio_only() const;
    double mean_controlled() const;
    bool all_deadlines_met() const;
    nlohmann::json to_json() const;
};

BudgetBench bench_budget(const Pipeline& p, const flow::VelocityNetwork& base, const control::ControlBranch& branch,
                         int chunks, std::uint64_t seed);

}  // namespace proact::app
