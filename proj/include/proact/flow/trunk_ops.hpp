#pragma once

// Forward/backward passes over the residual blocks, shared by the base network
// and the control branch.

#include <vector>

#include "proact/flow/network.hpp"

namespace proact::flow {

struct BlockTape {
    Matrix h_in, mod, y1, rstd1, u1, mix_pre, a, h_mid, y2, rstd2, u2, ff_pre, ff_act, f;
};

struct TrunkTape {
    Matrix cond;
    std::vector<BlockTape> blocks;
};

// Runs all blocks on hidden state h (n x H). When injections is non-null, injections[l]
// is added to the output of block l; rows listed as skipped (injection_rows[t] == false)
// are left untouched so that a zero gate is exactly the identity. block_outputs, when
// non-null, receives each block's output hidden state.
Matrix run_blocks(const Trunk& trunk, Matrix h, const Matrix& cond, const std::vector<Matrix>* injections,
                  const std::vector<bool>* injection_rows, TrunkTape* tape, std::vector<Matrix>* block_outputs);

// Reverse pass. dh is dL/d(final hidden). extra_out_grads[l] (optional) is added to
// dL/d(block l output) before that block is differentiated. Parameter gradients are
// accumulated into grads when non-null; dL/d(block l output) is written to
// block_out_grads[l] when non-null. Returns dL/d(initial hidden).
Matrix backprop_blocks(const Trunk& trunk, const TrunkTape& tape, Matrix dh, const std::vector<Matrix>* extra_out_grads,
                       Trunk* grads, std::vector<Matrix>* block_out_grads);

double gelu(double x);
double gelu_grad(double x);

}  // namespace proact::flow

namespace proact::flow {

struct NetworkTape {
    Matrix input;
    TrunkTape trunk;
    Matrix h_final;
};

// Full velocity pass recording everything needed by backward_network.
Matrix forward_network(const VelocityNetwork& net, const Matrix& state, const Matrix& cond,
                       const std::vector<Matrix>* injections, const std::vector<bool>* injection_rows,
                       NetworkTape& tape);

// Given dL/dv, accumulates parameter gradients into grads (when non-null) and writes
// dL/d(block l output) into block_out_grads (when non-null).
void backward_network(const VelocityNetwork& net, const NetworkTape& tape, const Matrix& dv, VelocityNetwork* grads,
                      std::vector<Matrix>* block_out_grads);

}  // namespace proact::flow
