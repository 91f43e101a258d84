#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "proact/core/linalg.hpp"
#include "proact/motion/chunk.hpp"

namespace proact::flow {

struct NetworkShape {
    int frame_width = 21;  // J*3 + 6 for the toy skeleton
    int audio_dims = 6;    // per stream; user and agent are concatenated user-first
    int time_dims = 16;    // sinusoidal flow-time features
    int hidden = 48;
    int ff_hidden = 96;
    int blocks = 4;
    int kernel = 9;  // temporal mixing taps, odd

    int cond_dims() const { return 2 * audio_dims + time_dims; }
    void validate() const;
    bool operator==(const NetworkShape&) const = default;
};

// One conditioned residual block:
//   [shift1 | scale1 | gate1 | shift2 | scale2 | gate2] = cond * mod_w + mod_b
//   h_mid = h   + gate1 * gelu(temporal_mix(norm(h) * (1 + scale1) + shift1))
//   h_out = h_mid + gate2 * ffn(norm(h_mid) * (1 + scale2) + shift2)
// mod_w and mod_b start at zero, so a fresh block is the identity.
struct TrunkBlock {
    Matrix mod_w, mod_b;  // cond_dims x 6H, 1 x 6H
    Matrix mix_w, mix_b;  // kernel x H depthwise taps, 1 x H
    Matrix ff1_w, ff1_b;  // H x Hf
    Matrix ff2_w, ff2_b;  // Hf x H

    template <typename Self, typename F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        f(prefix + "mod_w", self.mod_w);
        f(prefix + "mod_b", self.mod_b);
        f(prefix + "mix_w", self.mix_w);
        f(prefix + "mix_b", self.mix_b);
        f(prefix + "ff1_w", self.ff1_w);
        f(prefix + "ff1_b", self.ff1_b);
        f(prefix + "ff2_w", self.ff2_w);
        f(prefix + "ff2_b", self.ff2_b);
    }
};

struct Trunk {
    Matrix in_w, in_b;  // frame_width x H
    std::vector<TrunkBlock> blocks;

    template <typename Self, typename F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        f(prefix + "in_w", self.in_w);
        f(prefix + "in_b", self.in_b);
        for (std::size_t l = 0; l < self.blocks.size(); ++l) {
            TrunkBlock::visit(self.blocks[l], prefix + "block" + std::to_string(l) + ".", f);
        }
    }
};

// Fixed per-column affine map from data units to the unit-scale space the flow is learned in.
// Empty vectors mean identity.
struct FeatureNorm {
    RowVector mean;
    RowVector scale;

    bool identity() const { return mean.size() == 0; }
    Matrix to_model(const Matrix& data) const;
    Matrix to_data(const Matrix& model) const;
    // Column means and standard deviations over all rows of all samples; scales below floor are raised to it.
    static FeatureNorm fit(const std::vector<Matrix>& samples, double floor = 1e-3);

    bool operator==(const FeatureNorm& o) const { return mean == o.mean && scale == o.scale; }
};

class VelocityNetwork {
public:
    VelocityNetwork() = default;

    // Seeded random init; conditioning-modulation layers are zero.
    static VelocityNetwork initialize(const NetworkShape& shape, std::uint64_t seed);
    // All-zero parameters with the given shape (gradient accumulators).
    static VelocityNetwork zeros(const NetworkShape& shape);

    const NetworkShape& shape() const { return shape_; }
    Trunk& trunk() { return trunk_; }
    const Trunk& trunk() const { return trunk_; }
    Matrix& out_w() { return out_w_; }
    Matrix& out_b() { return out_b_; }
    const Matrix& out_w() const { return out_w_; }
    const Matrix& out_b() const { return out_b_; }
    // Not a trainable parameter; fixed before training from the data.
    FeatureNorm& norm() { return norm_; }
    const FeatureNorm& norm() const { return norm_; }

    // Visits (name, matrix) for every parameter block in declaration order.
    template <typename F>
    void for_each_parameter(F&& f) {
        visit(*this, f);
    }
    template <typename F>
    void for_each_parameter(F&& f) const {
        visit(*this, f);
    }

    std::size_t parameter_count() const;
    std::uint64_t checksum() const;

private:
    template <typename Self, typename F>
    static void visit(Self& self, F&& f) {
        Trunk::visit(self.trunk_, "trunk.", f);
        f(std::string("out_w"), self.out_w_);
        f(std::string("out_b"), self.out_b_);
    }

    NetworkShape shape_;
    Trunk trunk_;
    Matrix out_w_, out_b_;
    FeatureNorm norm_;
};

// Dual-side audio for one window; both sides have one row per frame.
struct ConditioningBundle {
    motion::AudioFeatureChunk user_audio;
    motion::AudioFeatureChunk agent_audio;

    Eigen::Index length() const { return user_audio.length(); }
};

// [sin(w_i * tau), cos(w_i * tau)] with geometric frequencies; dims must be even.
RowVector time_embedding(double tau, int dims);

// n x cond_dims rows of [user features | agent features | time embedding].
Matrix conditioning_matrix(const ConditioningBundle& cond, double tau, int time_dims);

// v_theta(tau, M_tau, C) for a whole window (n x frame_width).
Matrix forward_velocity(const VelocityNetwork& net, double tau, const Matrix& state, const ConditioningBundle& cond);

}  // namespace proact::flow
