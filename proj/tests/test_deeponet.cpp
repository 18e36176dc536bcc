#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ivprop/deeponet.hpp"
#include "ivprop/rng.hpp"
#include "test_util.hpp"

using namespace ivp;
using namespace ivp::onet;

TEST_CASE("deeponet forward: zero branch gives zero, q=1 gives the product") {
    DeepONet net = make_deeponet(4, 1, 3, {8}, {8}, 60);
    // zero the branch output layer
    auto& last = net.branch.layers.back();
    std::fill(last.weights.data.begin(), last.weights.data.end(), 0.0);
    std::fill(last.bias.data.begin(), last.bias.data.end(), 0.0);
    Rng rng = make_rng(61);
    const Tensor u = testutil::random_tensor({4}, rng);
    const Tensor x = testutil::random_tensor({1}, rng);
    CHECK(deeponet_forward(net, u, x) == 0.0);

    // q = 1 with forced latents beta = 2, tau = 3
    DeepONet tiny = make_deeponet(2, 1, 1, {4}, {4}, 62);
    for (auto* mlp : {&tiny.branch, &tiny.trunk})
        for (auto& l : mlp->layers) {
            std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
            std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
        }
    tiny.branch.layers.back().bias[0] = 2.0;
    tiny.trunk.layers.back().bias[0] = 3.0;
    CHECK(deeponet_forward(tiny, Tensor::vector({0, 0}), Tensor::vector({0.5})) ==
          doctest::Approx(6.0));
}

TEST_CASE("seed-0 deeponet matches a hand-computed latent dot product") {
    const DeepONet net = make_deeponet(3, 1, 2, {5}, {5}, 0);
    Rng rng = make_rng(63);
    const Tensor u = testutil::random_tensor({3}, rng);
    const Tensor x = testutil::random_tensor({1}, rng);
    const Tensor beta = nn::mlp_forward(net.branch, u);
    const Tensor tau = nn::mlp_forward(net.trunk, x);
    double ref = 0.0;
    for (std::size_t i = 0; i < 2; ++i) ref += beta[i] * tau[i];
    CHECK(deeponet_forward(net, u, x) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("naive interval deeponet: zero latents give the head bias") {
    NaiveIntervalDeepONet net = make_naive_deeponet(3, 1, 4, {6}, {6}, 64);
    auto& last = net.branch.layers.back();
    std::fill(last.weights.data.begin(), last.weights.data.end(), 0.0);
    std::fill(last.bias.data.begin(), last.bias.data.end(), 0.0);
    net.head.bias[0] = -0.25;
    net.head.bias[1] = 0.75;
    const IntervalVector u{Interval(0, 1), Interval(-1, 0), Interval(0.5, 0.5)};
    const nn::BoundPair p = naive_interval_forward(net, u, Tensor::vector({0.3}));
    CHECK(p.lo == doctest::Approx(-0.25));
    CHECK(p.hi == doctest::Approx(0.75));
}

TEST_CASE("naive interval deeponet is symmetric under tied head rows on degenerate input") {
    NaiveIntervalDeepONet net = make_naive_deeponet(2, 1, 3, {6}, {6}, 65);
    // make the branch blind to the lo/hi distinction: average the weight
    // columns for each sensor pair so branch(pack(u,u)) treats both equally,
    // and tie the head rows
    auto& w = net.branch.layers.front().weights;
    for (std::size_t o = 0; o < w.shape[0]; ++o)
        for (std::size_t i = 0; i < w.shape[1]; i += 2) {
            const double avg = 0.5 * (w.at(o, i) + w.at(o, i + 1));
            w.at(o, i) = avg;
            w.at(o, i + 1) = avg;
        }
    for (std::size_t c = 0; c < net.head.weights.shape[1]; ++c)
        net.head.weights.at(1, c) = net.head.weights.at(0, c);
    net.head.bias[1] = net.head.bias[0];
    // interleaved latent pairs are not symmetric in general, but the head and
    // branch no longer distinguish them on a degenerate input
    const IntervalVector u{Interval(0.4, 0.4), Interval(-0.7, -0.7)};
    const nn::BoundPair p = naive_interval_forward(net, u, Tensor::vector({0.2}));
    CHECK(p.lo == doctest::Approx(p.hi));
}

TEST_CASE("seed-0 naive interval deeponet matches a hand-rolled pass") {
    const NaiveIntervalDeepONet net = make_naive_deeponet(2, 1, 3, {5}, {5}, 0);
    const IntervalVector u{Interval(0.1, 0.3), Interval(-0.2, 0.0)};
    const Tensor x = Tensor::vector({0.6});
    const Tensor beta = nn::mlp_forward(net.branch, nn::pack_interval_input(u));  // (6)
    const Tensor tau = nn::mlp_forward(net.trunk, x);                             // (3)
    std::vector<double> z(6);
    for (std::size_t i = 0; i < 3; ++i) {
        z[2 * i] = beta[2 * i] * tau[i];
        z[2 * i + 1] = beta[2 * i + 1] * tau[i];
    }
    double lo = net.head.bias[0], hi = net.head.bias[1];
    for (std::size_t c = 0; c < 6; ++c) {
        lo += net.head.weights.at(0, c) * z[c];
        hi += net.head.weights.at(1, c) * z[c];
    }
    const nn::BoundPair p = naive_interval_forward(net, u, x);
    CHECK(p.lo == doctest::Approx(lo).epsilon(1e-13));
    CHECK(p.hi == doctest::Approx(hi).epsilon(1e-13));
}

TEST_CASE("inn deeponet collapses to a pointwise deeponet when degenerate") {
    InnDeepONet net = make_inn_deeponet(3, 1, 4, {8}, {8}, 66, 0.01);
    for (auto& l : net.branch.layers) {
        std::fill(l.w_radius_raw.data.begin(), l.w_radius_raw.data.end(), -45.0);
        std::fill(l.b_radius_raw.data.begin(), l.b_radius_raw.data.end(), -45.0);
    }
    std::fill(net.head.w_radius_raw.data.begin(), net.head.w_radius_raw.data.end(), -45.0);
    std::fill(net.head.b_radius_raw.data.begin(), net.head.b_radius_raw.data.end(), -45.0);

    DeepONet center;
    for (const auto& l : net.branch.layers) {
        nn::DenseLayer dl;
        dl.weights = l.w_center;
        dl.bias = l.b_center;
        dl.activation = l.activation;
        center.branch.layers.push_back(std::move(dl));
    }
    center.trunk = net.trunk;

    Rng rng = make_rng(67);
    const Tensor u = testutil::random_tensor({3}, rng);
    const Tensor x = testutil::random_tensor({1}, rng);
    IntervalVector ui;
    for (double v : u.data) ui.push_back(Interval(v, v));
    const Interval out = inn_deeponet_forward(net, ui, x);
    // head applies its own (center) weights after the latent products
    const Tensor beta = nn::mlp_forward(center.branch, u);
    const Tensor tau = nn::mlp_forward(center.trunk, x);
    double ref = net.head.b_center[0];
    for (std::size_t i = 0; i < 4; ++i) ref += net.head.w_center.at(0, i) * beta[i] * tau[i];
    CHECK(out.lo == doctest::Approx(ref).epsilon(1e-9));
    CHECK(out.hi == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("inn deeponet output contains Monte-Carlo realisations") {
    const InnDeepONet net = make_inn_deeponet(3, 1, 4, {8, 8}, {8, 8}, 68, 0.3);
    const IntervalVector u{Interval(-0.5, 0.2), Interval(0.1, 0.8), Interval(-1.0, -0.3)};
    Rng rng = make_rng(69);
    const Tensor x = Tensor::vector({0.35});
    const Interval out = inn_deeponet_forward(net, u, x);
    CHECK(out.lo <= out.hi);
    const Tensor tau = nn::mlp_forward(net.trunk, x);
    for (int s = 0; s < 500; ++s) {
        // realise branch weights and the input inside their intervals
        nn::MlpModel real;
        for (const auto& l : net.branch.layers) {
            const inn::LayerBounds b = inn::effective_bounds(l);
            nn::DenseLayer dl;
            dl.activation = l.activation;
            dl.weights = Tensor::zeros(b.w_lo.shape);
            dl.bias = Tensor::zeros(b.b_lo.shape);
            for (std::size_t i = 0; i < dl.weights.size(); ++i)
                dl.weights[i] = runif(rng, b.w_lo[i], b.w_hi[i]);
            for (std::size_t i = 0; i < dl.bias.size(); ++i)
                dl.bias[i] = runif(rng, b.b_lo[i], b.b_hi[i]);
            real.layers.push_back(std::move(dl));
        }
        Tensor ur = Tensor::zeros({3});
        for (std::size_t i = 0; i < 3; ++i) ur[i] = runif(rng, u[i].lo, u[i].hi);
        const Tensor beta = nn::mlp_forward(real, ur);
        const inn::LayerBounds hb = inn::effective_bounds(net.head);
        double v = runif(rng, hb.b_lo[0], hb.b_hi[0]);
        for (std::size_t i = 0; i < 4; ++i)
            v += runif(rng, hb.w_lo.at(0, i), hb.w_hi.at(0, i)) * beta[i] * tau[i];
        CHECK(v >= out.lo - 1e-9);
        CHECK(v <= out.hi + 1e-9);
    }
}

TEST_CASE("bounded deeponet forward: zero radius equals the pointwise forward") {
    const DeepONet net = make_deeponet(4, 1, 3, {10, 10}, {10, 10}, 70);
    Rng rng = make_rng(71);
    const Tensor u = testutil::random_tensor({4}, rng);
    Tensor coords = testutil::random_tensor({6, 1}, rng);
    for (BoundMethod bm : {BoundMethod::Ibp, BoundMethod::Crown}) {
        const inn::IntervalBatch out =
            bounded_deeponet_forward(net, {u, Tensor::zeros({4})}, coords, bm);
        for (std::size_t j = 0; j < 6; ++j) {
            const double ref = deeponet_forward(
                net, u, Tensor::vector({coords.at(j, 0)}));
            CHECK(std::fabs(out.lo[j] - ref) <= 1e-9);
            CHECK(std::fabs(out.hi[j] - ref) <= 1e-9);
        }
    }
}

TEST_CASE("bounded combination sign-splits negative tau") {
    // q = 1, tau = -1, beta bounds [2, 3] -> output [-3, -2]
    DeepONet net = make_deeponet(1, 1, 1, {2}, {2}, 72);
    for (auto* mlp : {&net.branch, &net.trunk})
        for (auto& l : mlp->layers) {
            std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
            std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
        }
    net.trunk.layers.back().bias[0] = -1.0;
    // branch output = identity on the single input (after a pass-through
    // hidden layer), so the box [2, 3] maps to latent bounds [2, 3]
    net.branch.layers.front().weights.at(0, 0) = 1.0;
    net.branch.layers.back().weights.at(0, 0) = 1.0;
    const inn::IntervalBatch out = bounded_deeponet_forward(
        net, {Tensor::vector({2.5}), Tensor::vector({0.5})}, Tensor::matrix(1, 1, {0.0}),
        BoundMethod::Ibp);
    CHECK(out.lo[0] == doctest::Approx(-3.0));
    CHECK(out.hi[0] == doctest::Approx(-2.0));
}

TEST_CASE("bounded deeponet forward is sound under Monte-Carlo sampling") {
    Rng rng = make_rng(73);
    const DeepONet net = make_deeponet(3, 1, 4, {8, 8}, {8}, 74);
    const bp::BoxSpec box{testutil::random_tensor({3}, rng),
                          testutil::random_tensor({3}, rng, 0.05, 0.5)};
    Tensor coords = testutil::random_tensor({5, 1}, rng);
    for (BoundMethod bm : {BoundMethod::Ibp, BoundMethod::Crown}) {
        const inn::IntervalBatch out = bounded_deeponet_forward(net, box, coords, bm);
        for (int s = 0; s < 400; ++s) {
            Tensor u = Tensor::zeros({3});
            for (std::size_t d = 0; d < 3; ++d)
                u[d] = runif(rng, box.center[d] - box.radius[d], box.center[d] + box.radius[d]);
            for (std::size_t j = 0; j < 5; ++j) {
                const double v = deeponet_forward(net, u, Tensor::vector({coords.at(j, 0)}));
                CHECK(v >= out.lo[j] - 1e-9);
                CHECK(v <= out.hi[j] + 1e-9);
            }
        }
    }
}

TEST_CASE("make_training_tuples counts, rejects ragged grids, is order-insensitive") {
    data::FunctionSample a;
    a.sensors = Tensor::vector({1, 2});
    a.coords = Tensor::matrix(3, 1, {0, 0.5, 1});
    a.values = Tensor::vector({1, 2, 3});
    data::FunctionSample b = a;
    b.values = Tensor::vector({4, 5, 6});

    const auto tuples = make_training_tuples({a, b});
    CHECK(tuples.size() == 6);
    CHECK(make_training_tuples({}).empty());

    // shuffled inputs give a permutation of the same (value) multiset
    const auto shuffled = make_training_tuples({b, a});
    std::vector<double> v1, v2;
    for (const auto& t : tuples) v1.push_back(t.value);
    for (const auto& t : shuffled) v2.push_back(t.value);
    std::sort(v1.begin(), v1.end());
    std::sort(v2.begin(), v2.end());
    CHECK(v1 == v2);

    data::FunctionSample ragged = a;
    ragged.values = Tensor::vector({1, 2});
    CHECK_THROWS_AS(make_training_tuples({a, ragged}), ShapeError);
}

TEST_CASE("tape combine paths equal the plain prediction paths") {
    Rng rng = make_rng(75);
    Tensor coords = testutil::random_tensor({7, 1}, rng);

    SUBCASE("naive") {
        const NaiveIntervalDeepONet net = make_naive_deeponet(3, 1, 4, {6}, {6}, 76);
        const IntervalVector u{Interval(-0.2, 0.1), Interval(0.3, 0.5), Interval(-1, -0.5)};
        ad::Tape t;
        const nn::MlpVars branch = nn::register_mlp(t, net.branch);
        const nn::MlpVars trunk = nn::register_mlp(t, net.trunk);
        const nn::DenseVars head{t.leaf(net.head.weights), t.leaf(net.head.bias),
                                 nn::Activation::Linear};
        const Tensor packed = nn::pack_interval_input(u);
        Tensor packed_row = packed;
        packed_row.shape = {1, packed.size()};
        const ad::VarId L = nn::mlp_forward_t(t, branch, t.constant(packed_row));
        const ad::VarId T = nn::mlp_forward_t(t, trunk, t.constant(coords));
        const ad::VarId row = t.reshape(L, {t.val(L).shape[1]});
        const nn::PredPair pp =
            naive_combine_t(t, row, T, head, t.constant(interleave_matrix(4)));
        for (std::size_t j = 0; j < 7; ++j) {
            const nn::BoundPair ref =
                naive_interval_forward(net, u, Tensor::vector({coords.at(j, 0)}));
            CHECK(t.val(pp.lo)[j] == doctest::Approx(ref.lo).epsilon(1e-12));
            CHECK(t.val(pp.hi)[j] == doctest::Approx(ref.hi).epsilon(1e-12));
        }
    }

    SUBCASE("inn") {
        const InnDeepONet net = make_inn_deeponet(3, 1, 4, {6}, {6}, 77, 0.2);
        const IntervalVector u{Interval(-0.2, 0.1), Interval(0.3, 0.5), Interval(-1, -0.5)};
        ad::Tape t;
        const auto branch = inn::register_inn(t, net.branch);
        const nn::MlpVars trunk = nn::register_mlp(t, net.trunk);
        const auto head = inn::register_inn_layer(t, net.head);
        Tensor ulo = Tensor::zeros({3}), uhi = Tensor::zeros({3});
        for (std::size_t i = 0; i < 3; ++i) {
            ulo[i] = u[i].lo;
            uhi[i] = u[i].hi;
        }
        const inn::VarPair beta =
            inn::inn_forward_t(t, branch, {t.constant(ulo), t.constant(uhi)});
        const ad::VarId T = nn::mlp_forward_t(t, trunk, t.constant(coords));
        const nn::PredPair pp = inn_combine_t(t, beta, T, head);
        for (std::size_t j = 0; j < 7; ++j) {
            const Interval ref = inn_deeponet_forward(net, u, Tensor::vector({coords.at(j, 0)}));
            CHECK(t.val(pp.lo)[j] == doctest::Approx(ref.lo).epsilon(1e-12));
            CHECK(t.val(pp.hi)[j] == doctest::Approx(ref.hi).epsilon(1e-12));
        }
    }

    SUBCASE("bounded (ibp)") {
        const DeepONet net = make_deeponet(3, 1, 4, {6, 6}, {6}, 78);
        const bp::BoxSpec box{testutil::random_tensor({3}, rng),
                              testutil::random_tensor({3}, rng, 0.0, 0.4)};
        ad::Tape t;
        const nn::MlpVars branch = nn::register_mlp(t, net.branch);
        const nn::MlpVars trunk = nn::register_mlp(t, net.trunk);
        Tensor crow = box.center, rrow = box.radius;
        crow.shape = {1, 3};
        rrow.shape = {1, 3};
        const inn::VarPair bounds =
            bp::ibp_forward_t(t, branch, t.constant(crow), t.constant(rrow));
        inn::VarPair beta{t.reshape(bounds.lo, {4}), t.reshape(bounds.hi, {4})};
        const ad::VarId T = nn::mlp_forward_t(t, trunk, t.constant(coords));
        const nn::PredPair pp = bounded_combine_t(t, beta, T);
        const inn::IntervalBatch ref =
            bounded_deeponet_forward(net, box, coords, BoundMethod::Ibp);
        for (std::size_t j = 0; j < 7; ++j) {
            CHECK(t.val(pp.lo)[j] == doctest::Approx(ref.lo[j]).epsilon(1e-12));
            CHECK(t.val(pp.hi)[j] == doctest::Approx(ref.hi[j]).epsilon(1e-12));
        }
    }
}
