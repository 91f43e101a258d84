#include "proact/flow/network.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "proact/core/errors.hpp"
#include "proact/core/rng.hpp"
#include "proact/flow/trunk_ops.hpp"

namespace proact::flow {

namespace {

constexpr double kNormEps = 1e-5;

Matrix scaled_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
    return standard_normal(rng, rows, cols) * stddev;
}

void layer_norm(const Matrix& x, Matrix& y, Matrix& rstd) {
    const Eigen::Index n = x.rows();
    y.resize(x.rows(), x.cols());
    rstd.resize(n, 1);
    for (Eigen::Index t = 0; t < n; ++t) {
        const double mu = x.row(t).mean();
        const double var = (x.row(t).array() - mu).square().mean();
        const double r = 1.0 / std::sqrt(var + kNormEps);
        rstd(t, 0) = r;
        y.row(t) = (x.row(t).array() - mu) * r;
    }
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& y, const Matrix& rstd) {
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index t = 0; t < dy.rows(); ++t) {
        const double mean_dy = dy.row(t).mean();
        const double mean_dyy = (dy.row(t).array() * y.row(t).array()).mean();
        dx.row(t) = rstd(t, 0) * (dy.row(t).array() - mean_dy - y.row(t).array() * mean_dyy);
    }
    return dx;
}

// Depthwise temporal convolution with zero padding, centred taps.
Matrix temporal_mix(const Matrix& u, const Matrix& taps, const Matrix& bias) {
    const Eigen::Index n = u.rows();
    const Eigen::Index radius = (taps.rows() - 1) / 2;
    Matrix out = bias.replicate(n, 1);
    for (Eigen::Index j = 0; j < taps.rows(); ++j) {
        const Eigen::Index shift = j - radius;
        const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
        const Eigen::Index t1 = std::min<Eigen::Index>(n, n - shift);
        if (t1 <= t0) continue;
        out.middleRows(t0, t1 - t0).array() +=
            u.middleRows(t0 + shift, t1 - t0).array().rowwise() * taps.row(j).array();
    }
    return out;
}

void temporal_mix_backward(const Matrix& dpre, const Matrix& u, const Matrix& taps, Matrix& du, Matrix* dtaps,
                           Matrix* dbias) {
    const Eigen::Index n = u.rows();
    const Eigen::Index radius = (taps.rows() - 1) / 2;
    du.setZero(u.rows(), u.cols());
    if (dbias) *dbias += dpre.colwise().sum();
    for (Eigen::Index j = 0; j < taps.rows(); ++j) {
        const Eigen::Index shift = j - radius;
        const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
        const Eigen::Index t1 = std::min<Eigen::Index>(n, n - shift);
        if (t1 <= t0) continue;
        auto g = dpre.middleRows(t0, t1 - t0).array();
        auto src = u.middleRows(t0 + shift, t1 - t0).array();
        if (dtaps) dtaps->row(j) += (g * src).colwise().sum().matrix();
        du.middleRows(t0 + shift, t1 - t0).array() += g.rowwise() * taps.row(j).array();
    }
}

Matrix gelu_m(const Matrix& x) { return x.unaryExpr([](double v) { return gelu(v); }); }
Matrix gelu_grad_m(const Matrix& x) { return x.unaryExpr([](double v) { return gelu_grad(v); }); }

}  // namespace

double gelu(double x) {
    constexpr double s = 0.7978845608028654;  // sqrt(2/pi)
    return 0.5 * x * (1.0 + std::tanh(s * (x + 0.044715 * x * x * x)));
}

double gelu_grad(double x) {
    constexpr double s = 0.7978845608028654;
    const double th = std::tanh(s * (x + 0.044715 * x * x * x));
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * s * (1.0 + 3.0 * 0.044715 * x * x);
}

void NetworkShape::validate() const {
    if (frame_width < 1 || audio_dims < 1 || hidden < 1 || ff_hidden < 1 || blocks < 1) {
        throw std::invalid_argument("network shape dimensions must be positive");
    }
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("temporal mixing kernel must be odd");
    if (time_dims < 2 || time_dims % 2 != 0) throw std::invalid_argument("time embedding dims must be even");
}

Matrix FeatureNorm::to_model(const Matrix& data) const {
    if (identity()) return data;
    if (data.cols() != mean.size()) throw ShapeError("feature norm: width mismatch");
    return (data.rowwise() - mean).array().rowwise() / scale.array();
}

Matrix FeatureNorm::to_data(const Matrix& model) const {
    if (identity()) return model;
    if (model.cols() != mean.size()) throw ShapeError("feature norm: width mismatch");
    return (model.array().rowwise() * scale.array()).matrix().rowwise() + mean;
}

FeatureNorm FeatureNorm::fit(const std::vector<Matrix>& samples, double floor) {
    if (samples.empty()) throw std::invalid_argument("feature norm needs samples");
    const Eigen::Index w = samples.front().cols();
    RowVector sum = RowVector::Zero(w), sq = RowVector::Zero(w);
    double rows = 0;
    for (const auto& m : samples) {
        if (m.cols() != w) throw ShapeError("feature norm: width mismatch");
        sum += m.colwise().sum();
        rows += static_cast<double>(m.rows());
    }
    FeatureNorm n;
    n.mean = sum / rows;
    for (const auto& m : samples) sq += (m.rowwise() - n.mean).array().square().matrix().colwise().sum();
    n.scale = (sq / rows).array().sqrt().max(floor).matrix();
    return n;
}

VelocityNetwork VelocityNetwork::zeros(const NetworkShape& shape) {
    shape.validate();
    VelocityNetwork net;
    net.shape_ = shape;
    const int H = shape.hidden, W = shape.frame_width, C = shape.cond_dims();
    net.trunk_.in_w = Matrix::Zero(W, H);
    net.trunk_.in_b = Matrix::Zero(1, H);
    net.trunk_.blocks.resize(static_cast<std::size_t>(shape.blocks));
    for (auto& b : net.trunk_.blocks) {
        b.mod_w = Matrix::Zero(C, 6 * H);
        b.mod_b = Matrix::Zero(1, 6 * H);
        b.mix_w = Matrix::Zero(shape.kernel, H);
        b.mix_b = Matrix::Zero(1, H);
        b.ff1_w = Matrix::Zero(H, shape.ff_hidden);
        b.ff1_b = Matrix::Zero(1, shape.ff_hidden);
        b.ff2_w = Matrix::Zero(shape.ff_hidden, H);
        b.ff2_b = Matrix::Zero(1, H);
    }
    net.out_w_ = Matrix::Zero(H, W);
    net.out_b_ = Matrix::Zero(1, W);
    return net;
}

VelocityNetwork VelocityNetwork::initialize(const NetworkShape& shape, std::uint64_t seed) {
    VelocityNetwork net = zeros(shape);
    Rng rng(mix_seed(seed, 0x0b45e));
    const int H = shape.hidden, W = shape.frame_width;
    net.trunk_.in_w = scaled_normal(rng, W, H, 1.0 / std::sqrt(double(W)));
    for (auto& b : net.trunk_.blocks) {
        b.mix_w = scaled_normal(rng, shape.kernel, H, 1.0 / std::sqrt(double(shape.kernel)));
        b.ff1_w = scaled_normal(rng, H, shape.ff_hidden, 1.0 / std::sqrt(double(H)));
        b.ff2_w = scaled_normal(rng, shape.ff_hidden, H, 1.0 / std::sqrt(double(shape.ff_hidden)));
    }
    net.out_w_ = scaled_normal(rng, H, W, 1.0 / std::sqrt(double(H)));
    return net;
}

std::size_t VelocityNetwork::parameter_count() const {
    std::size_t count = 0;
    for_each_parameter([&](const std::string&, const Matrix& m) { count += static_cast<std::size_t>(m.size()); });
    return count;
}

std::uint64_t VelocityNetwork::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for_each_parameter([&](const std::string&, const Matrix& m) {
        h = fnv1a(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double), h);
    });
    return h;
}

RowVector time_embedding(double tau, int dims) {
    const int half = dims / 2;
    RowVector e(dims);
    for (int i = 0; i < half; ++i) {
        // Frequencies from 1000 down to ~1 rad per unit tau.
        const double freq = 1000.0 * std::pow(1000.0, -double(i) / double(std::max(1, half - 1)));
        e(i) = std::sin(freq * tau);
        e(half + i) = std::cos(freq * tau);
    }
    return e;
}

Matrix conditioning_matrix(const ConditioningBundle& cond, double tau, int time_dims) {
    const auto n = cond.user_audio.length();
    if (cond.agent_audio.length() != n) throw ShapeError("user and agent audio lengths differ");
    if (cond.user_audio.dims() != cond.agent_audio.dims()) throw ShapeError("user and agent audio dims differ");
    const auto F = cond.user_audio.dims();
    Matrix c(n, 2 * F + time_dims);
    c.leftCols(F) = cond.user_audio.features;
    c.middleCols(F, F) = cond.agent_audio.features;
    c.rightCols(time_dims) = time_embedding(tau, time_dims).replicate(n, 1);
    return c;
}

Matrix run_blocks(const Trunk& trunk, Matrix h, const Matrix& cond, const std::vector<Matrix>* injections,
                  const std::vector<bool>* injection_rows, TrunkTape* tape, std::vector<Matrix>* block_outputs) {
    const Eigen::Index H = h.cols();
    if (tape) {
        tape->cond = cond;
        tape->blocks.resize(trunk.blocks.size());
    }
    if (block_outputs) block_outputs->resize(trunk.blocks.size());
    for (std::size_t l = 0; l < trunk.blocks.size(); ++l) {
        const TrunkBlock& b = trunk.blocks[l];
        BlockTape local;
        BlockTape& bt = tape ? tape->blocks[l] : local;
        bt.h_in = h;
        bt.mod = cond * b.mod_w;
        bt.mod.rowwise() += b.mod_b.row(0);
        auto shift1 = bt.mod.middleCols(0, H);
        auto scale1 = bt.mod.middleCols(H, H);
        auto gate1 = bt.mod.middleCols(2 * H, H);
        auto shift2 = bt.mod.middleCols(3 * H, H);
        auto scale2 = bt.mod.middleCols(4 * H, H);
        auto gate2 = bt.mod.middleCols(5 * H, H);

        layer_norm(h, bt.y1, bt.rstd1);
        bt.u1 = (bt.y1.array() * (1.0 + scale1.array()) + shift1.array()).matrix();
        bt.mix_pre = temporal_mix(bt.u1, b.mix_w, b.mix_b);
        bt.a = gelu_m(bt.mix_pre);
        bt.h_mid = (h.array() + gate1.array() * bt.a.array()).matrix();

        layer_norm(bt.h_mid, bt.y2, bt.rstd2);
        bt.u2 = (bt.y2.array() * (1.0 + scale2.array()) + shift2.array()).matrix();
        bt.ff_pre = bt.u2 * b.ff1_w;
        bt.ff_pre.rowwise() += b.ff1_b.row(0);
        bt.ff_act = gelu_m(bt.ff_pre);
        bt.f = bt.ff_act * b.ff2_w;
        bt.f.rowwise() += b.ff2_b.row(0);
        h = (bt.h_mid.array() + gate2.array() * bt.f.array()).matrix();

        if (injections) {
            const Matrix& inj = (*injections)[l];
            if (injection_rows) {
                for (Eigen::Index t = 0; t < h.rows(); ++t) {
                    if ((*injection_rows)[static_cast<std::size_t>(t)]) h.row(t) += inj.row(t);
                }
            } else {
                h += inj;
            }
        }
        if (block_outputs) (*block_outputs)[l] = h;
    }
    return h;
}

Matrix backprop_blocks(const Trunk& trunk, const TrunkTape& tape, Matrix dh, const std::vector<Matrix>* extra_out_grads,
                       Trunk* grads, std::vector<Matrix>* block_out_grads) {
    if (block_out_grads) block_out_grads->resize(trunk.blocks.size());
    for (std::size_t li = trunk.blocks.size(); li-- > 0;) {
        const TrunkBlock& b = trunk.blocks[li];
        const BlockTape& bt = tape.blocks[li];
        TrunkBlock* gb = grads ? &grads->blocks[li] : nullptr;
        if (extra_out_grads) dh += (*extra_out_grads)[li];
        if (block_out_grads) (*block_out_grads)[li] = dh;

        const Eigen::Index H = dh.cols();
        auto scale1 = bt.mod.middleCols(H, H);
        auto gate1 = bt.mod.middleCols(2 * H, H);
        auto scale2 = bt.mod.middleCols(4 * H, H);
        auto gate2 = bt.mod.middleCols(5 * H, H);
        Matrix dmod(bt.mod.rows(), bt.mod.cols());

        // h_out = h_mid + gate2 * f
        dmod.middleCols(5 * H, H) = (dh.array() * bt.f.array()).matrix();
        Matrix df = (dh.array() * gate2.array()).matrix();
        if (gb) {
            gb->ff2_w.noalias() += bt.ff_act.transpose() * df;
            gb->ff2_b += df.colwise().sum();
        }
        Matrix dact = df * b.ff2_w.transpose();
        Matrix dpre = (dact.array() * gelu_grad_m(bt.ff_pre).array()).matrix();
        if (gb) {
            gb->ff1_w.noalias() += bt.u2.transpose() * dpre;
            gb->ff1_b += dpre.colwise().sum();
        }
        Matrix du2 = dpre * b.ff1_w.transpose();
        dmod.middleCols(4 * H, H) = (du2.array() * bt.y2.array()).matrix();
        dmod.middleCols(3 * H, H) = du2;
        Matrix dy2 = (du2.array() * (1.0 + scale2.array())).matrix();
        Matrix dh_mid = dh + layer_norm_backward(dy2, bt.y2, bt.rstd2);

        // h_mid = h_in + gate1 * a
        dmod.middleCols(2 * H, H) = (dh_mid.array() * bt.a.array()).matrix();
        Matrix da = (dh_mid.array() * gate1.array()).matrix();
        Matrix dmix = (da.array() * gelu_grad_m(bt.mix_pre).array()).matrix();
        Matrix du1;
        temporal_mix_backward(dmix, bt.u1, b.mix_w, du1, gb ? &gb->mix_w : nullptr, gb ? &gb->mix_b : nullptr);
        dmod.middleCols(H, H) = (du1.array() * bt.y1.array()).matrix();
        dmod.middleCols(0, H) = du1;
        Matrix dy1 = (du1.array() * (1.0 + scale1.array())).matrix();
        dh = dh_mid + layer_norm_backward(dy1, bt.y1, bt.rstd1);

        if (gb) {
            gb->mod_b += dmod.colwise().sum();
            gb->mod_w.noalias() += tape.cond.transpose() * dmod;
        }
    }
    return dh;
}

Matrix forward_velocity(const VelocityNetwork& net, double tau, const Matrix& state, const ConditioningBundle& cond) {
    const auto& shape = net.shape();
    if (state.cols() != shape.frame_width) throw ShapeError("forward_velocity: state width mismatch");
    if (cond.length() != state.rows()) throw ShapeError("forward_velocity: conditioning length mismatch");
    if (cond.user_audio.dims() != shape.audio_dims) throw ShapeError("forward_velocity: audio dims mismatch");
    const Matrix c = conditioning_matrix(cond, tau, shape.time_dims);
    Matrix h = state * net.trunk().in_w;
    h.rowwise() += net.trunk().in_b.row(0);
    h = run_blocks(net.trunk(), std::move(h), c, nullptr, nullptr, nullptr, nullptr);
    Matrix v = h * net.out_w();
    v.rowwise() += net.out_b().row(0);
    return v;
}

}  // namespace proact::flow

namespace proact::flow {

Matrix forward_network(const VelocityNetwork& net, const Matrix& state, const Matrix& cond,
                       const std::vector<Matrix>* injections, const std::vector<bool>* injection_rows,
                       NetworkTape& tape) {
    tape.input = state;
    Matrix h = state * net.trunk().in_w;
    h.rowwise() += net.trunk().in_b.row(0);
    tape.h_final = run_blocks(net.trunk(), std::move(h), cond, injections, injection_rows, &tape.trunk, nullptr);
    Matrix v = tape.h_final * net.out_w();
    v.rowwise() += net.out_b().row(0);
    return v;
}

void backward_network(const VelocityNetwork& net, const NetworkTape& tape, const Matrix& dv, VelocityNetwork* grads,
                      std::vector<Matrix>* block_out_grads) {
    if (grads) {
        grads->out_w().noalias() += tape.h_final.transpose() * dv;
        grads->out_b() += dv.colwise().sum();
    }
    Matrix dh = dv * net.out_w().transpose();
    Matrix dh0 = backprop_blocks(net.trunk(), tape.trunk, std::move(dh), nullptr, grads ? &grads->trunk() : nullptr,
                                 block_out_grads);
    if (grads) {
        grads->trunk().in_w.noalias() += tape.input.transpose() * dh0;
        grads->trunk().in_b += dh0.colwise().sum();
    }
}

}  // namespace proact::flow
