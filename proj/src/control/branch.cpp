#include "proact/control/branch.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "proact/core/errors.hpp"
#include "proact/core/rng.hpp"
#include "proact/flow/checkpoint.hpp"

namespace proact::control {

IntentionEmbedding::IntentionEmbedding(motion::IntentionVocabulary vocab, Matrix table)
    : vocab_(std::move(vocab)), table_(std::move(table)) {
    if (static_cast<std::size_t>(table_.rows()) != vocab_.size()) {
        throw ShapeError("embedding table rows must equal vocabulary size");
    }
}

IntentionEmbedding IntentionEmbedding::random(motion::IntentionVocabulary vocab, int dims, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0xe3b));
    const auto rows = static_cast<Eigen::Index>(vocab.size());
    return IntentionEmbedding(std::move(vocab), 0.02 * standard_normal(rng, rows, dims));
}

std::vector<std::size_t> IntentionEmbedding::rows_of(const motion::IntentionSignal& signal) const {
    if (signal.empty()) return {};
    return {vocab_.row_of(signal.body_part), vocab_.row_of(signal.action)};
}

RowVector IntentionEmbedding::encode(const motion::IntentionSignal& signal) const {
    RowVector v = RowVector::Zero(table_.cols());
    const auto rows = rows_of(signal);
    for (std::size_t r : rows) v += table_.row(static_cast<Eigen::Index>(r));
    if (!rows.empty()) v /= static_cast<double>(rows.size());
    return v;
}

std::size_t ControlBranch::parameter_count() const {
    std::size_t n = 0;
    for_each_parameter([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

std::uint64_t ControlBranch::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for_each_parameter([&](const std::string&, const Matrix& m) {
        h = fnv1a(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double), h);
    });
    return h;
}

ControlBranch ControlBranch::zeros_like() const {
    ControlBranch z = *this;
    z.for_each_parameter([](const std::string&, Matrix& m) { m.setZero(); });
    return z;
}

ControlBranch init_control_branch(const VelocityNetwork& base, motion::IntentionVocabulary vocab,
                                  const BranchShape& shape, std::uint64_t seed) {
    if (shape.intent_dims < 1 || shape.position_dims < 2 || shape.position_dims % 2 != 0) {
        throw std::invalid_argument("branch shape: intent dims >= 1, position dims even");
    }
    ControlBranch b;
    b.shape = base.shape();
    b.branch_shape = shape;
    b.embedding = IntentionEmbedding::random(std::move(vocab), shape.intent_dims, seed);
    b.trunk = base.trunk();
    const int H = b.shape.hidden;
    Rng rng(mix_seed(seed, 0xc0b));
    b.intent_w = 0.02 * standard_normal(rng, shape.intent_dims + shape.position_dims, H);
    b.intent_b = Matrix::Zero(1, H);
    b.mix1_w = 0.02 * standard_normal(rng, H, H);
    b.mix1_b = Matrix::Zero(1, H);
    b.mix2_w = 0.02 * standard_normal(rng, H, H);
    b.mix2_b = Matrix::Zero(1, H);
    b.zero_w.assign(static_cast<std::size_t>(b.shape.blocks), Matrix::Zero(H, H));
    b.zero_b.assign(static_cast<std::size_t>(b.shape.blocks), Matrix::Zero(1, H));
    return b;
}

GateProfile constant_gate(Eigen::Index rows, double g) { return GateProfile(static_cast<std::size_t>(rows), g); }

RowVector position_encoding(Eigen::Index frame, int dims) {
    RowVector e(dims);
    const int half = dims / 2;
    for (int i = 0; i < half; ++i) {
        const double w = std::pow(256.0, -static_cast<double>(i) / std::max(1, half - 1));
        e(i) = std::sin(w * static_cast<double>(frame));
        e(half + i) = std::cos(w * static_cast<double>(frame));
    }
    return e;
}

namespace {

void check_gate(const GateProfile& gate, Eigen::Index rows) {
    if (static_cast<Eigen::Index>(gate.size()) != rows) throw ShapeError("gate profile length must equal window length");
    for (double g : gate) {
        if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument("gate outside [0, 1]");
    }
}

bool any_open(const GateProfile& gate) {
    for (double g : gate) {
        if (g > 0.0) return true;
    }
    return false;
}

std::vector<bool> open_rows(const GateProfile& gate) {
    std::vector<bool> rows(gate.size());
    for (std::size_t t = 0; t < gate.size(); ++t) rows[t] = gate[t] > 0.0;
    return rows;
}

// Intention module plus branch trunk; fills tape fields when given.
std::vector<Matrix> branch_forward(const ControlBranch& br, const Matrix& state, const Matrix& cond,
                                   const RowVector& intent_feat, FusedTape* tape) {
    const Eigen::Index n = state.rows();
    const int D = br.branch_shape.intent_dims, P = br.branch_shape.position_dims;
    if (intent_feat.size() != D) throw ShapeError("intention feature width mismatch");
    Matrix x(n, D + P);
    for (Eigen::Index t = 0; t < n; ++t) {
        x.row(t).head(D) = intent_feat;
        x.row(t).tail(P) = position_encoding(t, P);
    }
    Matrix e0 = x * br.intent_w;
    e0.rowwise() += br.intent_b.row(0);
    Matrix p1 = e0 * br.mix1_w;
    p1.rowwise() += br.mix1_b.row(0);
    Matrix t1 = p1.array().tanh().matrix();
    Matrix e1 = e0 + t1;
    Matrix p2 = e1 * br.mix2_w;
    p2.rowwise() += br.mix2_b.row(0);
    Matrix t2 = p2.array().tanh().matrix();

    Matrix h = state * br.trunk.in_w;
    h.rowwise() += br.trunk.in_b.row(0);
    h += e1 + t2;
    std::vector<Matrix> outputs;
    flow::run_blocks(br.trunk, std::move(h), cond, nullptr, nullptr, tape ? &tape->branch : nullptr, &outputs);
    if (tape) {
        tape->x = std::move(x);
        tape->e0 = std::move(e0);
        tape->t1 = std::move(t1);
        tape->e1 = std::move(e1);
        tape->t2 = std::move(t2);
        tape->branch_outputs = outputs;
    }
    return outputs;
}

std::vector<Matrix> project_injections(const ControlBranch& br, const std::vector<Matrix>& outputs,
                                       const GateProfile& gate) {
    std::vector<Matrix> inj(outputs.size());
    for (std::size_t l = 0; l < outputs.size(); ++l) {
        Matrix proj = outputs[l] * br.zero_w[l];
        proj.rowwise() += br.zero_b[l].row(0);
        inj[l] = Matrix::Zero(proj.rows(), proj.cols());
        for (Eigen::Index t = 0; t < proj.rows(); ++t) {
            const double g = gate[static_cast<std::size_t>(t)];
            if (g > 0.0) inj[l].row(t) = g * proj.row(t);
        }
    }
    return inj;
}

void check_compatible(const VelocityNetwork& base, const ControlBranch& br) {
    if (!(base.shape() == br.shape)) throw ShapeError("control branch shape differs from base network");
}

}  // namespace

std::vector<Matrix> branch_injections(const ControlBranch& branch, const Matrix& state, const Matrix& cond,
                                      const RowVector& intent_feat, const GateProfile& gate) {
    check_gate(gate, state.rows());
    return project_injections(branch, branch_forward(branch, state, cond, intent_feat, nullptr), gate);
}

Matrix fused_velocity(const VelocityNetwork& base, const ControlBranch& branch, const GateProfile& gate, double tau,
                      const Matrix& state, const ConditioningBundle& cond, const RowVector& intent_feat) {
    check_compatible(base, branch);
    check_gate(gate, state.rows());
    if (!any_open(gate)) return flow::forward_velocity(base, tau, state, cond);
    if (state.cols() != base.shape().frame_width || cond.length() != state.rows()) {
        throw ShapeError("fused_velocity: shape mismatch");
    }
    const Matrix c = flow::conditioning_matrix(cond, tau, base.shape().time_dims);
    const auto inj = project_injections(branch, branch_forward(branch, state, c, intent_feat, nullptr), gate);
    const auto rows = open_rows(gate);
    Matrix h = state * base.trunk().in_w;
    h.rowwise() += base.trunk().in_b.row(0);
    h = flow::run_blocks(base.trunk(), std::move(h), c, &inj, &rows, nullptr, nullptr);
    Matrix v = h * base.out_w();
    v.rowwise() += base.out_b().row(0);
    return v;
}

Matrix fused_forward(const VelocityNetwork& base, const ControlBranch& branch, const GateProfile& gate,
                     const Matrix& state, const Matrix& cond, const motion::IntentionSignal& intention,
                     FusedTape& tape) {
    check_compatible(base, branch);
    check_gate(gate, state.rows());
    tape.gate = gate;
    tape.intent_rows = branch.embedding.rows_of(intention);
    const RowVector feat = branch.embedding.encode(intention);
    const auto outputs = branch_forward(branch, state, cond, feat, &tape);
    const auto inj = project_injections(branch, outputs, gate);
    const auto rows = open_rows(gate);
    return flow::forward_network(base, state, cond, &inj, &rows, tape.base);
}

void fused_backward(const VelocityNetwork& base, const ControlBranch& br, const FusedTape& tape, const Matrix& dv,
                    ControlBranch& grads) {
    std::vector<Matrix> dout;
    flow::backward_network(base, tape.base, dv, nullptr, &dout);
    const Eigen::Index n = dv.rows();
    const int H = br.shape.hidden;
    std::vector<Matrix> extra(dout.size());
    for (std::size_t l = 0; l < dout.size(); ++l) {
        Matrix dproj = Matrix::Zero(n, H);
        for (Eigen::Index t = 0; t < n; ++t) {
            const double g = tape.gate[static_cast<std::size_t>(t)];
            if (g > 0.0) dproj.row(t) = g * dout[l].row(t);
        }
        grads.zero_w[l].noalias() += tape.branch_outputs[l].transpose() * dproj;
        grads.zero_b[l] += dproj.colwise().sum();
        extra[l] = dproj * br.zero_w[l].transpose();
    }
    Matrix dh0 = flow::backprop_blocks(br.trunk, tape.branch, Matrix::Zero(n, H), &extra, &grads.trunk, nullptr);
    const Matrix& state = tape.base.input;
    grads.trunk.in_w.noalias() += state.transpose() * dh0;
    grads.trunk.in_b += dh0.colwise().sum();

    // e2 = e1 + tanh(e1 W2 + b2), e1 = e0 + tanh(e0 W1 + b1)
    Matrix dpre2 = (dh0.array() * (1.0 - tape.t2.array().square())).matrix();
    grads.mix2_w.noalias() += tape.e1.transpose() * dpre2;
    grads.mix2_b += dpre2.colwise().sum();
    Matrix de1 = dh0 + dpre2 * br.mix2_w.transpose();
    Matrix dpre1 = (de1.array() * (1.0 - tape.t1.array().square())).matrix();
    grads.mix1_w.noalias() += tape.e0.transpose() * dpre1;
    grads.mix1_b += dpre1.colwise().sum();
    Matrix de0 = de1 + dpre1 * br.mix1_w.transpose();
    grads.intent_w.noalias() += tape.x.transpose() * de0;
    grads.intent_b += de0.colwise().sum();

    if (!tape.intent_rows.empty()) {
        const int D = br.branch_shape.intent_dims;
        RowVector dfeat = (de0 * br.intent_w.topRows(D).transpose()).colwise().sum();
        dfeat /= static_cast<double>(tape.intent_rows.size());
        for (std::size_t r : tape.intent_rows) grads.embedding.table().row(static_cast<Eigen::Index>(r)) += dfeat;
    }
}

void save_branch(std::ostream& out, const ControlBranch& branch) {
    flow::write_network_header(out, flow::kBranchSection, branch.shape);
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(branch.branch_shape.intent_dims));
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(branch.branch_shape.position_dims));
    const auto& vocab = branch.embedding.vocabulary();
    const auto tokens = vocab.tokens();
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(vocab.body_parts().size()));
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(tokens.size()));
    for (const auto& t : tokens) {
        binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.size()));
        out.write(t.data(), static_cast<std::streamsize>(t.size()));
    }
    flow::write_parameters(out, branch, branch.parameter_count());
}

ControlBranch load_branch(std::istream& in) {
    const auto shape = flow::read_network_header(in, flow::kBranchSection);
    BranchShape bs;
    bs.intent_dims = static_cast<int>(binary::read_le<std::uint32_t>(in));
    bs.position_dims = static_cast<int>(binary::read_le<std::uint32_t>(in));
    const auto body_parts = binary::read_le<std::uint32_t>(in);
    const auto count = binary::read_le<std::uint32_t>(in);
    std::vector<std::string> tokens(count);
    for (auto& t : tokens) {
        t.resize(binary::read_le<std::uint32_t>(in));
        if (!in.read(t.data(), static_cast<std::streamsize>(t.size()))) throw std::runtime_error("truncated branch vocabulary");
    }
    if (body_parts > count) throw std::runtime_error("corrupt branch vocabulary header");
    motion::IntentionVocabulary vocab({tokens.begin(), tokens.begin() + body_parts},
                                      {tokens.begin() + body_parts, tokens.end()});
    ControlBranch br = init_control_branch(VelocityNetwork::zeros(shape), std::move(vocab), bs, 0);
    flow::read_parameters(in, br, br.parameter_count());
    return br;
}

void save_branch(const std::string& path, const ControlBranch& branch) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    save_branch(out, branch);
}

ControlBranch load_branch(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return load_branch(in);
}

}  // namespace proact::control
