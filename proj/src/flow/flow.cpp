#include "proact/flow/flow.hpp"

#include <cmath>
#include <stdexcept>

#include "proact/core/errors.hpp"
#include "proact/flow/trunk_ops.hpp"

namespace proact::flow {

void FlowConfig::validate() const {
    if (window < 1) throw std::invalid_argument("flow window must be positive");
    if (overlap < 0 || overlap >= window) throw std::invalid_argument("flow overlap must satisfy 0 <= l < n");
    if (steps < 1) throw std::invalid_argument("flow steps must be >= 1");
}

FlowPath ot_interpolate(const Matrix& noise, const Matrix& data, double tau) {
    if (noise.rows() != data.rows() || noise.cols() != data.cols()) throw ShapeError("ot_interpolate: shape mismatch");
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("ot_interpolate: tau outside [0, 1]");
    FlowPath p;
    p.state = tau * data + (1.0 - tau) * noise;
    p.target_velocity = data - noise;
    return p;
}

namespace {
void clamp_rows(Matrix& state, const Matrix* cached) {
    if (cached && cached->rows() > 0) state.topRows(cached->rows()) = *cached;
}
}  // namespace

Matrix euler_integrate(const VelocityField& field, int steps, Matrix state, const Matrix* cached_overlap) {
    if (steps < 1) throw std::invalid_argument("euler_integrate: steps must be >= 1");
    if (cached_overlap && (cached_overlap->cols() != state.cols() || cached_overlap->rows() > state.rows())) {
        throw ShapeError("euler_integrate: cached overlap shape mismatch");
    }
    clamp_rows(state, cached_overlap);
    const double dt = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
        const double tau = static_cast<double>(s) / steps;
        Matrix v = field(tau, state);
        if (v.rows() != state.rows() || v.cols() != state.cols()) throw ShapeError("velocity field shape mismatch");
        state += dt * v;
        clamp_rows(state, cached_overlap);
        if (!state.allFinite()) throw SolverDiverged(s);
    }
    return state;
}

Matrix euler_integrate_normalized(const FeatureNorm& norm, const VelocityField& field, int steps, const Matrix& noise,
                                  const Matrix* cached_overlap) {
    if (norm.identity()) return euler_integrate(field, steps, noise, cached_overlap);
    std::optional<Matrix> cache_model;
    if (cached_overlap) cache_model = norm.to_model(*cached_overlap);
    Matrix out = norm.to_data(euler_integrate(field, steps, noise, cache_model ? &*cache_model : nullptr));
    if (cached_overlap) out.topRows(cached_overlap->rows()) = *cached_overlap;
    return out;
}

motion::MotionChunk euler_sample(const VelocityNetwork& net, const ConditioningBundle& cond, const FlowConfig& cfg,
                                 const Matrix& noise, const Matrix* cached_overlap, std::int64_t start_index,
                                 motion::SkeletonRef skeleton) {
    cfg.validate();
    if (noise.rows() != cfg.window || noise.cols() != net.shape().frame_width) {
        throw ShapeError("euler_sample: noise must be window x frame_width");
    }
    if (cached_overlap && cached_overlap->rows() != cfg.overlap) {
        throw ShapeError("euler_sample: cached overlap must have exactly l frames");
    }
    VelocityField field = [&](double tau, const Matrix& state) { return forward_velocity(net, tau, state, cond); };
    Matrix out = euler_integrate_normalized(net.norm(), field, cfg.steps, noise, cached_overlap);
    return motion::MotionChunk(std::move(out), start_index, std::move(skeleton));
}

FlowDraw draw_flow_sample(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    FlowDraw d;
    d.tau = uniform01(rng);
    d.noise = standard_normal(rng, rows, cols);
    return d;
}

Matrix flow_state(const FlowExample& example, const FlowDraw& draw) {
    Matrix state = draw.tau * example.motion + (1.0 - draw.tau) * draw.noise;
    if (example.clamped_prefix > 0) state.topRows(example.clamped_prefix) = example.motion.topRows(example.clamped_prefix);
    return state;
}

double velocity_loss(const Matrix& predicted, const FlowExample& example, const FlowDraw& draw, double batch_size,
                     Matrix* dv) {
    const Eigen::Index skip = example.clamped_prefix;
    const Eigen::Index rows = predicted.rows() - skip;
    const double count = static_cast<double>(rows * predicted.cols());
    Matrix residual = predicted - (example.motion - draw.noise);
    residual.topRows(skip).setZero();
    const double loss = residual.squaredNorm() / count;
    if (dv) *dv = residual * (2.0 / (count * batch_size));
    return loss;
}

LossResult cfm_loss(const VelocityNetwork& net, std::span<const FlowExample> batch, std::span<const FlowDraw> draws,
                    bool with_gradient) {
    if (batch.empty()) throw std::invalid_argument("cfm_loss: empty batch");
    if (draws.size() != batch.size()) throw std::invalid_argument("cfm_loss: one draw per example required");
    LossResult result;
    if (with_gradient) result.grad = VelocityNetwork::zeros(net.shape());
    const double b = static_cast<double>(batch.size());
    NetworkTape tape;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const FlowExample& ex = batch[i];
        if (ex.motion.cols() != net.shape().frame_width || ex.audio.length() != ex.motion.rows()) {
            throw ShapeError("cfm_loss: example shape mismatch");
        }
        const Matrix cond = conditioning_matrix(ex.audio, draws[i].tau, net.shape().time_dims);
        const Matrix state = flow_state(ex, draws[i]);
        Matrix v = forward_network(net, state, cond, nullptr, nullptr, tape);
        Matrix dv;
        const double l = velocity_loss(v, ex, draws[i], b, with_gradient ? &dv : nullptr);
        if (!std::isfinite(l)) throw NonFiniteLoss(i);
        result.loss += l / b;
        if (with_gradient) backward_network(net, tape, dv, &result.grad, nullptr);
    }
    return result;
}

LossResult cfm_loss(const VelocityNetwork& net, std::span<const FlowExample> batch, Rng& rng, bool with_gradient) {
    std::vector<FlowDraw> draws;
    draws.reserve(batch.size());
    for (const auto& ex : batch) draws.push_back(draw_flow_sample(rng, ex.motion.rows(), ex.motion.cols()));
    return cfm_loss(net, batch, draws, with_gradient);
}

}  // namespace proact::flow
