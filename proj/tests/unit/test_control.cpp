#include <doctest.h>

#include <cmath>
#include <sstream>

#include "proact/control/branch.hpp"
#include "proact/core/errors.hpp"
#include "proact/core/rng.hpp"
#include "proact/flow/checkpoint.hpp"
#include "proact/flow/flow.hpp"

using namespace proact;
using namespace proact::control;
using motion::IntentionVocabulary;
using motion::parse_intention;

namespace {

flow::NetworkShape small_shape() {
    flow::NetworkShape s;
    s.frame_width = 9;
    s.audio_dims = 2;
    s.time_dims = 4;
    s.hidden = 8;
    s.ff_hidden = 10;
    s.blocks = 2;
    s.kernel = 3;
    return s;
}

IntentionVocabulary small_vocab() { return IntentionVocabulary({"head", "right_hand"}, {"nod", "wave", "raise"}); }

ConditioningBundle random_bundle(Rng& rng, Eigen::Index n, int f) {
    ConditioningBundle b;
    b.user_audio = {standard_normal(rng, n, f), motion::AudioSource::user};
    b.agent_audio = {standard_normal(rng, n, f), motion::AudioSource::agent};
    return b;
}

template <typename P>
void jitter(P& params, std::uint64_t seed, double scale) {
    Rng rng(seed);
    params.for_each_parameter([&](const std::string&, Matrix& m) { m += scale * standard_normal(rng, m.rows(), m.cols()); });
}

template <typename P>
double& entry(P& params, std::size_t flat) {
    double* found = nullptr;
    params.for_each_parameter([&](const std::string&, Matrix& m) {
        if (found) return;
        if (flat < static_cast<std::size_t>(m.size())) {
            found = m.data() + flat;
        } else {
            flat -= m.size();
        }
    });
    return *found;
}

}  // namespace

TEST_CASE("encode_intention") {
    auto emb = IntentionEmbedding::random(IntentionVocabulary::standard(), 16, 3);
    CHECK(emb.encode(motion::IntentionSignal::none()) == RowVector::Zero(16));
    const auto& vocab = emb.vocabulary();
    RowVector expected = (emb.table().row(vocab.row_of("right_hand")) + emb.table().row(vocab.row_of("wave"))) / 2.0;
    CHECK(emb.encode(parse_intention("right_hand wave", vocab)) == expected);
    motion::IntentionSignal bad{"left_flipper", "wave", "left_flipper wave", 1.0, 0};
    CHECK_THROWS_AS(emb.encode(bad), OutOfVocabulary);
}

TEST_CASE("init_control_branch") {
    flow::NetworkShape shape;
    auto base = flow::VelocityNetwork::initialize(shape, 5);
    jitter(base, 6, 0.1);
    auto a = init_control_branch(base, IntentionVocabulary::standard(), {}, 9);
    auto b = init_control_branch(base, IntentionVocabulary::standard(), {}, 9);
    CHECK(a.checksum() == b.checksum());
    CHECK(a.trunk.in_w == base.trunk().in_w);
    for (std::size_t l = 0; l < a.trunk.blocks.size(); ++l) {
        CHECK(a.trunk.blocks[l].mod_w == base.trunk().blocks[l].mod_w);
        CHECK(a.trunk.blocks[l].ff2_w == base.trunk().blocks[l].ff2_w);
        CHECK(a.zero_w[l].cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.zero_b[l].cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(static_cast<int>(a.zero_w.size()) == shape.blocks);
}

TEST_CASE("gate equivalences") {
    auto shape = small_shape();
    auto base = flow::VelocityNetwork::initialize(shape, 1);
    jitter(base, 2, 0.2);
    auto fresh = init_control_branch(base, small_vocab(), {4, 6}, 3);
    auto trained = fresh;
    jitter(trained, 4, 0.1);
    Rng rng(10);
    for (int i = 0; i < 50; ++i) {
        auto bundle = random_bundle(rng, 11, shape.audio_dims);
        Matrix m = standard_normal(rng, 11, shape.frame_width);
        double tau = uniform01(rng);
        RowVector feat = standard_normal(rng, 1, 4);
        Matrix ref = flow::forward_velocity(base, tau, m, bundle);
        CHECK(fused_velocity(base, trained, constant_gate(11, 0.0), tau, m, bundle, feat) == ref);
        CHECK(fused_velocity(base, fresh, constant_gate(11, uniform01(rng)), tau, m, bundle, feat) == ref);
        CHECK(fused_velocity(base, fresh, constant_gate(11, 1.0), tau, m, bundle, feat) == ref);
    }

    auto bundle = random_bundle(rng, 11, shape.audio_dims);
    Matrix m = standard_normal(rng, 11, shape.frame_width);
    RowVector feat = trained.embedding.encode(parse_intention("right_hand wave", trained.embedding.vocabulary()));
    Matrix c = flow::conditioning_matrix(bundle, 0.4, shape.time_dims);
    auto full = branch_injections(trained, m, c, feat, constant_gate(11, 1.0));
    for (double g : {0.25, 0.5}) {
        auto part = branch_injections(trained, m, c, feat, constant_gate(11, g));
        for (std::size_t l = 0; l < full.size(); ++l) CHECK(part[l] == Matrix(g * full[l]));
    }
    Matrix ref = flow::forward_velocity(base, 0.4, m, bundle);
    double d_quarter = (fused_velocity(base, trained, constant_gate(11, 0.25), 0.4, m, bundle, feat) - ref).norm();
    double d_one = (fused_velocity(base, trained, constant_gate(11, 1.0), 0.4, m, bundle, feat) - ref).norm();
    CHECK(d_quarter > 0.0);
    CHECK(d_one > d_quarter);

    GateProfile partial = constant_gate(11, 0.0);
    partial[3] = 0.5;
    auto inj = branch_injections(trained, m, c, feat, partial);
    CHECK(inj[0].row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(inj[0].row(3).cwiseAbs().maxCoeff() > 0.0);
    CHECK_THROWS(fused_velocity(base, trained, constant_gate(11, 1.5), 0.4, m, bundle, feat));
}

TEST_CASE("branch gradient matches central differences") {
    auto shape = small_shape();
    auto base = flow::VelocityNetwork::initialize(shape, 1);
    jitter(base, 2, 0.2);
    auto branch = init_control_branch(base, small_vocab(), {4, 6}, 3);
    jitter(branch, 5, 0.2);
    Rng rng(13);
    auto bundle = random_bundle(rng, 9, shape.audio_dims);
    Matrix m1 = standard_normal(rng, 9, shape.frame_width);
    flow::FlowExample ex{m1, bundle, 0};
    flow::FlowDraw draw = flow::draw_flow_sample(rng, 9, shape.frame_width);
    auto intention = parse_intention("right_hand raise", branch.embedding.vocabulary());
    GateProfile gate = constant_gate(9, 1.0);
    gate[2] = 0.0;
    gate[5] = 0.6;
    const Matrix state = flow::flow_state(ex, draw);
    const Matrix c = flow::conditioning_matrix(bundle, draw.tau, shape.time_dims);

    auto loss_of = [&](const ControlBranch& br, ControlBranch* grads) {
        FusedTape tape;
        Matrix v = fused_forward(base, br, gate, state, c, intention, tape);
        Matrix dv;
        double l = flow::velocity_loss(v, ex, draw, 1.0, grads ? &dv : nullptr);
        if (grads) fused_backward(base, br, tape, dv, *grads);
        return l;
    };
    auto grads = branch.zeros_like();
    loss_of(branch, &grads);
    const auto base_sum = base.checksum();

    Rng pick(77);
    const double h = 1e-5;
    int failures = 0;
    for (int p = 0; p < 200; ++p) {
        std::size_t k = std::uniform_int_distribution<std::size_t>(0, branch.parameter_count() - 1)(pick);
        double& w = entry(branch, k);
        const double saved = w;
        w = saved + h;
        double up = loss_of(branch, nullptr);
        w = saved - h;
        double down = loss_of(branch, nullptr);
        w = saved;
        double numeric = (up - down) / (2 * h);
        double exact = entry(grads, k);
        double rel = std::abs(numeric - exact) / std::max({std::abs(numeric), std::abs(exact), 1e-6});
        if (rel > 1e-4) {
            ++failures;
            MESSAGE("param " << k << " analytic " << exact << " numeric " << numeric);
        }
    }
    CHECK(failures == 0);
    CHECK(base.checksum() == base_sum);
}

TEST_CASE("checkpoints round trip through float32") {
    auto shape = small_shape();
    auto base = flow::VelocityNetwork::initialize(shape, 1);
    jitter(base, 2, 0.2);
    std::stringstream s1;
    flow::save_network(s1, base);
    auto loaded = flow::load_network(s1);
    CHECK(loaded.shape() == base.shape());
    double dev = 0;
    loaded.for_each_parameter([&](const std::string& name, const Matrix& m) {
        base.for_each_parameter([&](const std::string& other, const Matrix& o) {
            if (name == other) dev = std::max(dev, (m - o).cwiseAbs().maxCoeff());
        });
    });
    CHECK(dev < 1e-6);
    std::stringstream s2, s3;
    flow::save_network(s2, loaded);
    flow::save_network(s3, flow::load_network(s2));
    CHECK(s2.str() == s3.str());

    auto branch = init_control_branch(base, small_vocab(), {4, 6}, 3);
    std::stringstream b1;
    save_branch(b1, branch);
    auto back = load_branch(b1);
    CHECK(back.embedding.vocabulary().tokens() == branch.embedding.vocabulary().tokens());
    CHECK(back.parameter_count() == branch.parameter_count());
    std::stringstream wrong(b1.str());
    CHECK_THROWS(flow::load_network(wrong));
}
