#pragma once

#include <string>

#include "proact/cognitive/loop.hpp"
#include "proact/control/branch.hpp"
#include "proact/flow/flow.hpp"
#include "proact/locomotion/sim.hpp"
#include "proact/motion/skeleton.hpp"
#include "proact/training/train.hpp"

namespace proact::app {

struct SkeletonSection {
    std::string preset = "toy";  // toy | robot23 | capture57
    motion::SkeletonSpec build() const;
};

struct TrainSection {
    training::TrainConfig base;
    int streams = 48;
    int stream_frames = 1800;
};

struct ControlSection {
    training::TrainConfig train;
    control::BranchShape shape;
    double intention_fraction = 0.8;
    int ramp_frames = 15;
    int hold_chunks = 1;
};

struct CognitiveSection {
    cognitive::CognitiveConfig loop;
    std::string rules = "rules/rule_oracle_v1.json";  // relative paths resolve against the asset dir
    std::string backend = "rules";                    // rules | external
    std::string host = "127.0.0.1";
    int port = 8080;
};

struct EvalSection {
    double sigma = 3.0;
    int fgd_dims = 16;
    std::uint64_t projection_seed = 1;
    int div_k = 0;
    int stream_seconds = 60;
};

struct Config {
    SkeletonSection skeleton;
    flow::FlowConfig flow;
    flow::NetworkShape network;
    TrainSection train;
    ControlSection control;
    CognitiveSection cognitive;
    locomotion::LocomotionLimits locomotion;
    EvalSection eval;

    // INI with sections [skeleton] [flow] [train] [control] [cognitive] [locomotion] [eval].
    // Missing keys keep their defaults; unknown sections or keys are errors.
    static Config load(const std::string& path);
    static Config parse(const std::string& text);
    std::string to_ini() const;
    void validate() const;
};

// Directory holding rules, prompts, scenarios; PROACT_ASSETS overrides the build-time default.
std::string asset_dir();
std::string resolve_asset(const std::string& path);

}  // namespace proact::app
