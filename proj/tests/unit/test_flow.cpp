#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "proact/core/errors.hpp"
#include "proact/core/rng.hpp"
#include "proact/flow/checkpoint.hpp"
#include "proact/flow/flow.hpp"
#include "proact/flow/trunk_ops.hpp"

using namespace proact;
using namespace proact::flow;

namespace {

NetworkShape small_shape() {
    NetworkShape s;
    s.frame_width = 9;
    s.audio_dims = 2;
    s.time_dims = 4;
    s.hidden = 8;
    s.ff_hidden = 12;
    s.blocks = 2;
    s.kernel = 3;
    return s;
}

ConditioningBundle random_bundle(Rng& rng, Eigen::Index n, int f) {
    ConditioningBundle b;
    b.user_audio = {standard_normal(rng, n, f), motion::AudioSource::user};
    b.agent_audio = {standard_normal(rng, n, f), motion::AudioSource::agent};
    return b;
}

// Fresh nets have zero modulation; give every parameter some weight so all paths carry gradient.
VelocityNetwork perturbed_net(const NetworkShape& shape, std::uint64_t seed) {
    auto net = VelocityNetwork::initialize(shape, seed);
    Rng rng(seed + 1);
    net.for_each_parameter([&](const std::string&, Matrix& m) { m += 0.2 * standard_normal(rng, m.rows(), m.cols()); });
    return net;
}

double& param_entry(VelocityNetwork& net, std::size_t flat) {
    double* found = nullptr;
    net.for_each_parameter([&](const std::string&, Matrix& m) {
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

TEST_CASE("ot_interpolate endpoints and midpoint") {
    Rng rng(3);
    Matrix m0 = standard_normal(rng, 5, 4), m1 = standard_normal(rng, 5, 4);
    auto a = ot_interpolate(m0, m1, 0.0);
    CHECK(a.state == m0);
    CHECK(a.target_velocity == m1 - m0);
    auto b = ot_interpolate(m0, m1, 1.0);
    CHECK(b.state == m1);
    CHECK(b.target_velocity == a.target_velocity);
    auto c = ot_interpolate(Matrix::Zero(3, 3), Matrix::Constant(3, 3, 2.0), 0.5);
    CHECK(c.state == Matrix::Ones(3, 3));
    CHECK_THROWS_AS(ot_interpolate(m0, Matrix::Zero(5, 3), 0.5), ShapeError);
}

TEST_CASE("euler sampler oracle fields") {
    Rng rng(7);
    Matrix m0 = standard_normal(rng, 12, 5);
    Matrix c = standard_normal(rng, 12, 5);
    Matrix out = euler_integrate([&](double, const Matrix&) { return c; }, 50, m0, nullptr);
    CHECK((out - (m0 + c)).cwiseAbs().maxCoeff() < 1e-12);

    Matrix target = standard_normal(rng, 12, 5);
    const double delta = 1e-4;
    VelocityField point = [&](double tau, const Matrix& m) -> Matrix { return (target - m) / (1.0 - tau + delta); };
    Matrix reached = euler_integrate(point, 50, m0, nullptr);
    CHECK((reached - target).cwiseAbs().maxCoeff() < 1e-3);

    double prev = INFINITY;
    for (int k : {1, 5, 10, 50}) {
        double err = (euler_integrate(point, k, m0, nullptr) - target).norm();
        CHECK(err <= prev + 1e-12);
        prev = err;
    }

    Matrix cache = standard_normal(rng, 3, 5);
    Matrix clamped = euler_integrate(point, 10, m0, &cache);
    CHECK(clamped.topRows(3) == cache);

    VelocityField blowup = [](double, const Matrix& m) -> Matrix { return Matrix::Constant(m.rows(), m.cols(), NAN); };
    CHECK_THROWS_AS(euler_integrate(blowup, 4, m0, nullptr), SolverDiverged);
}

TEST_CASE("network sampling is deterministic and clamps the overlap") {
    NetworkShape shape;
    auto net = perturbed_net(shape, 11);
    FlowConfig cfg;
    cfg.window = 40;
    cfg.overlap = 8;
    cfg.steps = 6;
    Rng rng(5);
    auto bundle = random_bundle(rng, 40, shape.audio_dims);
    Matrix m0 = standard_normal(rng, 40, shape.frame_width);
    Matrix cache = standard_normal(rng, 8, shape.frame_width);
    auto sk = motion::make_skeleton(motion::SkeletonSpec::toy());
    auto a = euler_sample(net, bundle, cfg, m0, &cache, 32, sk);
    auto b = euler_sample(net, bundle, cfg, m0, &cache, 32, sk);
    CHECK(a == b);
    CHECK(a.frames().topRows(8) == cache);
    Matrix short_cache = cache.topRows(7);
    CHECK_THROWS_AS(euler_sample(net, bundle, cfg, m0, &short_cache, 32, sk), ShapeError);
}

TEST_CASE("forward_velocity") {
    NetworkShape shape = small_shape();
    auto fresh = VelocityNetwork::initialize(shape, 21);
    Rng rng(8);
    auto bundle = random_bundle(rng, 7, shape.audio_dims);
    Matrix m = standard_normal(rng, 7, shape.frame_width);

    // Zero modulation: every block is the identity, so the trunk reduces to the two projections.
    Matrix h = m * fresh.trunk().in_w;
    h.rowwise() += fresh.trunk().in_b.row(0);
    Matrix expected = h * fresh.out_w();
    expected.rowwise() += fresh.out_b().row(0);
    CHECK(forward_velocity(fresh, 0.3, m, bundle) == expected);

    auto net = perturbed_net(shape, 21);
    Matrix v0 = forward_velocity(net, 0.0, m, bundle);
    CHECK(v0 == forward_velocity(net, 0.0, m, bundle));
    CHECK((v0 - forward_velocity(net, 1.0, m, bundle)).cwiseAbs().maxCoeff() > 1e-6);
    CHECK_THROWS_AS(forward_velocity(net, 0.0, Matrix::Zero(7, 8), bundle), ShapeError);
}

TEST_CASE("cfm_loss closed forms") {
    NetworkShape shape = small_shape();
    Rng rng(9);
    FlowExample ex{standard_normal(rng, 7, shape.frame_width), random_bundle(rng, 7, shape.audio_dims), 0};
    FlowDraw draw{0.4, standard_normal(rng, 7, shape.frame_width)};
    auto zero = VelocityNetwork::zeros(shape);
    std::vector<FlowExample> batch{ex};
    std::vector<FlowDraw> draws{draw};
    auto r = cfm_loss(zero, batch, draws);
    Matrix diff = ex.motion - draw.noise;
    CHECK(r.loss == doctest::Approx(diff.squaredNorm() / diff.size()).epsilon(1e-14));

    // Perfect predictor: output bias equal to the target velocity when it is constant over frames.
    FlowExample flat = ex;
    flat.motion = Matrix::Constant(7, shape.frame_width, 0.5);
    FlowDraw flat_draw{0.7, Matrix::Constant(7, shape.frame_width, -0.25)};
    auto oracle = VelocityNetwork::zeros(shape);
    oracle.out_b().setConstant(0.75);
    std::vector<FlowExample> fb{flat};
    std::vector<FlowDraw> fd{flat_draw};
    auto p = cfm_loss(oracle, fb, fd);
    CHECK(p.loss == 0.0);
    double gmax = 0;
    p.grad.for_each_parameter([&](const std::string&, const Matrix& m) { gmax = std::max(gmax, m.cwiseAbs().maxCoeff()); });
    CHECK(gmax == 0.0);

    FlowExample broken = ex;
    broken.motion(2, 2) = NAN;
    std::vector<FlowExample> bb{ex, broken};
    std::vector<FlowDraw> bd{draw, draw};
    try {
        cfm_loss(zero, bb, bd);
        FAIL("expected non-finite loss");
    } catch (const NonFiniteLoss& e) {
        CHECK(e.batch_index == 1);
    }
}

TEST_CASE("cfm_loss gradient matches central differences") {
    NetworkShape shape = small_shape();
    auto net = perturbed_net(shape, 4);
    REQUIRE(net.parameter_count() <= 10000);
    Rng rng(12);
    std::vector<FlowExample> batch;
    std::vector<FlowDraw> draws;
    for (int i = 0; i < 3; ++i) {
        batch.push_back({standard_normal(rng, 7, shape.frame_width), random_bundle(rng, 7, shape.audio_dims), i == 2 ? 2 : 0});
        draws.push_back(draw_flow_sample(rng, 7, shape.frame_width));
    }
    auto analytic = cfm_loss(net, batch, draws);

    const double h = 1e-5;
    const std::size_t total = net.parameter_count();
    Rng pick(99);
    int probes = 0, failures = 0;
    for (; probes < 300; ++probes) {
        std::size_t k = std::uniform_int_distribution<std::size_t>(0, total - 1)(pick);
        double& w = param_entry(net, k);
        const double saved = w;
        w = saved + h;
        double up = cfm_loss(net, batch, draws, false).loss;
        w = saved - h;
        double down = cfm_loss(net, batch, draws, false).loss;
        w = saved;
        double numeric = (up - down) / (2 * h);
        double exact = param_entry(analytic.grad, k);
        double rel = std::abs(numeric - exact) / std::max({std::abs(numeric), std::abs(exact), 1e-6});
        if (rel > 1e-4) {
            ++failures;
            MESSAGE("param " << k << " analytic " << exact << " numeric " << numeric);
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("feature norm maps data to unit scale and back") {
    Rng rng(3);
    std::vector<Matrix> samples;
    for (int i = 0; i < 4; ++i) {
        Matrix m = standard_normal(rng, 50, 3);
        m.col(0) = m.col(0) * 0.01 + Eigen::VectorXd::Constant(50, 2.0);
        m.col(2).setConstant(-1.0);  // constant column hits the floor
        samples.push_back(m);
    }
    auto n = FeatureNorm::fit(samples);
    CHECK(n.mean[0] == doctest::Approx(2.0).epsilon(0.01));
    CHECK(n.scale[2] == 1e-3);
    Matrix all(200, 3);
    for (int i = 0; i < 4; ++i) all.middleRows(50 * i, 50) = samples[static_cast<std::size_t>(i)];
    Matrix z = n.to_model(all);
    for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(z.col(c).mean()) < 1e-9);
        CHECK(std::sqrt(z.col(c).array().square().mean()) == doctest::Approx(1.0));
    }
    CHECK((n.to_data(z) - all).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(FeatureNorm{}.to_model(all) == all);
}

TEST_CASE("normalized sampling keeps the cache bit-exact and survives checkpoints") {
    NetworkShape shape;
    auto net = perturbed_net(shape, 12);
    Rng rng(6);
    net.norm().mean = standard_normal(rng, 1, shape.frame_width);
    net.norm().scale = standard_normal(rng, 1, shape.frame_width).cwiseAbs().array() + 0.01;
    FlowConfig cfg;
    cfg.window = 40;
    cfg.overlap = 8;
    cfg.steps = 5;
    auto bundle = random_bundle(rng, 40, shape.audio_dims);
    Matrix m0 = standard_normal(rng, 40, shape.frame_width);
    Matrix cache = standard_normal(rng, 8, shape.frame_width) * 0.37;
    auto sk = motion::make_skeleton(motion::SkeletonSpec::toy());
    auto a = euler_sample(net, bundle, cfg, m0, &cache, 0, sk);
    CHECK(a.frames().topRows(8) == cache);

    std::stringstream s;
    save_network(s, net);
    auto back = load_network(s);
    CHECK(back.norm() == net.norm());
}
