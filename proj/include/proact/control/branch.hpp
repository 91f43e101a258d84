#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "proact/flow/network.hpp"
#include "proact/flow/trunk_ops.hpp"
#include "proact/motion/intention.hpp"

namespace proact::control {

using flow::ConditioningBundle;
using flow::VelocityNetwork;

// Learned token table over the closed vocabulary; an intention encodes to the mean of its
// body-part and action rows, the empty intention to zeros.
class IntentionEmbedding {
public:
    IntentionEmbedding() = default;
    IntentionEmbedding(motion::IntentionVocabulary vocab, Matrix table);

    static IntentionEmbedding random(motion::IntentionVocabulary vocab, int dims, std::uint64_t seed);

    const motion::IntentionVocabulary& vocabulary() const { return vocab_; }
    const Matrix& table() const { return table_; }
    Matrix& table() { return table_; }
    int dims() const { return static_cast<int>(table_.cols()); }

    // Throws OutOfVocabulary naming the first unknown token.
    RowVector encode(const motion::IntentionSignal& signal) const;
    // Table rows used by encode (empty for the empty intention).
    std::vector<std::size_t> rows_of(const motion::IntentionSignal& signal) const;

private:
    motion::IntentionVocabulary vocab_{{}, {}};
    Matrix table_;
};

struct BranchShape {
    int intent_dims = 16;
    int position_dims = 16;  // sinusoidal features of the frame index inside the window
    bool operator==(const BranchShape&) const = default;
};

// Trainable copy of the base trunk. The intention module maps [intent | position] through a
// projection and two residual tanh mixing layers into the branch's initial hidden state.
// Block l of the branch feeds the base block l through zero-initialized zero_w[l], zero_b[l].
struct ControlBranch {
    flow::NetworkShape shape;
    BranchShape branch_shape;
    IntentionEmbedding embedding;
    flow::Trunk trunk;
    Matrix intent_w, intent_b;  // (D + P) x H
    Matrix mix1_w, mix1_b;      // H x H
    Matrix mix2_w, mix2_b;      // H x H
    std::vector<Matrix> zero_w, zero_b;

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
    // Same structure with every parameter zeroed (gradient accumulator).
    ControlBranch zeros_like() const;

private:
    template <typename Self, typename F>
    static void visit(Self& self, F&& f) {
        f(std::string("embedding"), self.embedding.table());
        flow::Trunk::visit(self.trunk, "trunk.", f);
        f(std::string("intent_w"), self.intent_w);
        f(std::string("intent_b"), self.intent_b);
        f(std::string("mix1_w"), self.mix1_w);
        f(std::string("mix1_b"), self.mix1_b);
        f(std::string("mix2_w"), self.mix2_w);
        f(std::string("mix2_b"), self.mix2_b);
        for (std::size_t l = 0; l < self.zero_w.size(); ++l) {
            f("zero_w" + std::to_string(l), self.zero_w[l]);
            f("zero_b" + std::to_string(l), self.zero_b[l]);
        }
    }
};

ControlBranch init_control_branch(const VelocityNetwork& base, motion::IntentionVocabulary vocab,
                                  const BranchShape& shape, std::uint64_t seed);

// Per-frame gate profile over a window; all rows share one value in the common case.
using GateProfile = std::vector<double>;

GateProfile constant_gate(Eigen::Index rows, double g);

RowVector position_encoding(Eigen::Index frame, int dims);

// Per-block residuals g_t * (branch block output * zero_w + zero_b) for rows with g_t > 0;
// rows with g_t == 0 are left as zeros.
std::vector<Matrix> branch_injections(const ControlBranch& branch, const Matrix& state, const Matrix& cond,
                                      const RowVector& intent_feat, const GateProfile& gate);

// Base velocity with the branch residuals added to each base block output. Rows with zero
// gate are never touched, so g = 0 reproduces forward_velocity bit for bit.
Matrix fused_velocity(const VelocityNetwork& base, const ControlBranch& branch, const GateProfile& gate, double tau,
                      const Matrix& state, const ConditioningBundle& cond, const RowVector& intent_feat);

// Branch-only gradient of a loss through fused_velocity. dv is dL/dv; the base is read-only.
struct FusedTape {
    flow::NetworkTape base;
    flow::TrunkTape branch;
    std::vector<Matrix> branch_outputs;
    Matrix x, e0, t1, e1, t2;  // intention module: input, projection, mixing activations
    GateProfile gate;
    std::vector<std::size_t> intent_rows;
};

Matrix fused_forward(const VelocityNetwork& base, const ControlBranch& branch, const GateProfile& gate,
                     const Matrix& state, const Matrix& cond, const motion::IntentionSignal& intention,
                     FusedTape& tape);
void fused_backward(const VelocityNetwork& base, const ControlBranch& branch, const FusedTape& tape, const Matrix& dv,
                    ControlBranch& grads);

// Tag-2 section of the network checkpoint format: shared header, then
//   u32 intent_dims | u32 position_dims | u32 body_part_count | u32 token_count
//   | tokens as (u32 length, bytes) | u64 parameter count | float32 parameters.
void save_branch(std::ostream& out, const ControlBranch& branch);
ControlBranch load_branch(std::istream& in);
void save_branch(const std::string& path, const ControlBranch& branch);
ControlBranch load_branch(const std::string& path);

}  // namespace proact::control
