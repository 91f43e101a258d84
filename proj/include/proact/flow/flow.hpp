#pragma once

#include <functional>
#include <optional>
#include <span>

#include "proact/core/rng.hpp"
#include "proact/flow/network.hpp"
#include "proact/motion/chunk.hpp"

namespace proact::flow {

struct FlowConfig {
    int window = 150;   // n frames per generated window
    int overlap = 30;   // l cached frames clamped at the window head
    int steps = 50;     // K Euler steps over tau in [0, 1]

    void validate() const;
    int new_frames() const { return window - overlap; }
};

struct FlowPath {
    Matrix state;            // M_tau = tau * M1 + (1 - tau) * M0
    Matrix target_velocity;  // M1 - M0
};

FlowPath ot_interpolate(const Matrix& noise, const Matrix& data, double tau);

using VelocityField = std::function<Matrix(double tau, const Matrix& state)>;

// Uniform-grid Euler from tau = 0 to 1. When cached_overlap is given its rows overwrite
// the first rows of the state initially and after every step. Throws SolverDiverged.
Matrix euler_integrate(const VelocityField& field, int steps, Matrix state, const Matrix* cached_overlap);

// euler_integrate in the model space of `norm`: noise is already in model space, the cache and
// the result are in data units, and the cached rows of the result are copied from the cache.
Matrix euler_integrate_normalized(const FeatureNorm& norm, const VelocityField& field, int steps, const Matrix& noise,
                                  const Matrix* cached_overlap);

motion::MotionChunk euler_sample(const VelocityNetwork& net, const ConditioningBundle& cond, const FlowConfig& cfg,
                                 const Matrix& noise, const Matrix* cached_overlap, std::int64_t start_index,
                                 motion::SkeletonRef skeleton);

// One training window: clean motion M1 with its audio. When clamped_prefix > 0 the first
// rows of M_tau are replaced by clean motion (the inference-time overlap condition) and
// excluded from the loss.
struct FlowExample {
    Matrix motion;
    ConditioningBundle audio;
    int clamped_prefix = 0;
};

struct FlowDraw {
    double tau = 0.0;
    Matrix noise;
};

FlowDraw draw_flow_sample(Rng& rng, Eigen::Index rows, Eigen::Index cols);

// Builds the network input for an example and a draw (applies prefix clamping).
Matrix flow_state(const FlowExample& example, const FlowDraw& draw);

// Per-example squared-error loss and dL/dv for a predicted velocity. The loss is the
// mean over unmasked entries; dv is scaled by 1 / batch_size.
double velocity_loss(const Matrix& predicted, const FlowExample& example, const FlowDraw& draw, double batch_size,
                     Matrix* dv);

struct LossResult {
    double loss = 0.0;
    VelocityNetwork grad;  // empty unless gradients were requested
};

// Mean over the batch of ||v_theta(tau, M_tau, C) - (M1 - M0)||^2 (mean over entries).
// Throws NonFiniteLoss with the offending batch index.
LossResult cfm_loss(const VelocityNetwork& net, std::span<const FlowExample> batch, std::span<const FlowDraw> draws,
                    bool with_gradient = true);
LossResult cfm_loss(const VelocityNetwork& net, std::span<const FlowExample> batch, Rng& rng,
                    bool with_gradient = true);

}  // namespace proact::flow
