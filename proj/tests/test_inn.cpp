#include <doctest.h>

#include <cmath>

#include "ivprop/inn.hpp"
#include "ivprop/rng.hpp"
#include "test_util.hpp"

using namespace ivp;
using namespace ivp::inn;

namespace {

// raw value giving softplus(raw) == radius exactly enough for tests
double raw_for_radius(double radius) { return std::log(std::expm1(radius)); }

IntervalDenseLayer exact_layer(const Tensor& w_lo, const Tensor& w_hi, const Tensor& b_lo,
                               const Tensor& b_hi, nn::Activation act) {
    IntervalDenseLayer l;
    l.activation = act;
    l.w_center = Tensor::zeros(w_lo.shape);
    l.w_radius_raw = Tensor::zeros(w_lo.shape);
    for (std::size_t i = 0; i < w_lo.size(); ++i) {
        l.w_center[i] = 0.5 * (w_lo[i] + w_hi[i]);
        l.w_radius_raw[i] = raw_for_radius(std::max(0.5 * (w_hi[i] - w_lo[i]), 1e-15));
    }
    l.b_center = Tensor::zeros(b_lo.shape);
    l.b_radius_raw = Tensor::zeros(b_lo.shape);
    for (std::size_t i = 0; i < b_lo.size(); ++i) {
        l.b_center[i] = 0.5 * (b_lo[i] + b_hi[i]);
        l.b_radius_raw[i] = raw_for_radius(std::max(0.5 * (b_hi[i] - b_lo[i]), 1e-15));
    }
    return l;
}

IntervalBatch vec_pair(std::vector<double> lo, std::vector<double> hi) {
    return {Tensor::vector(std::move(lo)), Tensor::vector(std::move(hi))};
}

}  // namespace

TEST_CASE("1x1 interval layer reproduces the interval product") {
    // W = [1,2], b = [0,0], z = [-1,3], linear -> [-2, 6]
    const IntervalDenseLayer l =
        exact_layer(Tensor::matrix(1, 1, {1.0}), Tensor::matrix(1, 1, {2.0}),
                    Tensor::vector({0.0}), Tensor::vector({0.0}), nn::Activation::Linear);
    const IntervalBatch out = inn_layer_forward(l, vec_pair({-1}, {3}));
    CHECK(out.lo[0] == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(out.hi[0] == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("relu fast path single-coordinate example") {
    // z = [0,1], W = [-1,2], b = [0,0]: pre-activation [-1, 2], relu -> [0, 2]
    const IntervalDenseLayer l =
        exact_layer(Tensor::matrix(1, 1, {-1.0}), Tensor::matrix(1, 1, {2.0}),
                    Tensor::vector({0.0}), Tensor::vector({0.0}), nn::Activation::Relu);
    const IntervalBatch out = inn_layer_forward_relu_fast(l, vec_pair({0}, {1}));
    CHECK(out.lo[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(out.hi[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("all-zero input gives relu(bias interval)") {
    const IntervalDenseLayer l =
        exact_layer(Tensor::matrix(2, 3, {1, -2, 3, 0.5, 1, -1}),
                    Tensor::matrix(2, 3, {2, -1, 4, 1.0, 2, 0}), Tensor::vector({-0.5, 0.25}),
                    Tensor::vector({0.5, 0.75}), nn::Activation::Relu);
    const IntervalBatch out =
        inn_layer_forward_relu_fast(l, vec_pair({0, 0, 0}, {0, 0, 0}));
    CHECK(out.lo[0] == doctest::Approx(0.0));
    CHECK(out.hi[0] == doctest::Approx(0.5));
    CHECK(out.lo[1] == doctest::Approx(0.25));
    CHECK(out.hi[1] == doctest::Approx(0.75));
}

TEST_CASE("fast path equals the general path on non-negative inputs") {
    Rng rng = make_rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor wl = testutil::random_tensor({6, 5}, rng);
        Tensor wh = wl;
        for (std::size_t i = 0; i < wh.size(); ++i) wh[i] += runif(rng, 0.0, 0.6);
        Tensor bl = testutil::random_tensor({6}, rng);
        Tensor bh = bl;
        for (std::size_t i = 0; i < bh.size(); ++i) bh[i] += runif(rng, 0.0, 0.3);
        const IntervalDenseLayer l = exact_layer(wl, wh, bl, bh, nn::Activation::Relu);
        Tensor zlo = testutil::random_tensor({3, 5}, rng, 0.0, 1.0);
        Tensor zhi = zlo;
        for (std::size_t i = 0; i < zhi.size(); ++i) zhi[i] += runif(rng, 0.0, 0.8);
        const IntervalBatch a = inn_layer_forward(l, {zlo, zhi});
        const IntervalBatch b = inn_layer_forward_relu_fast(l, {zlo, zhi});
        for (std::size_t i = 0; i < a.lo.size(); ++i) {
            CHECK(std::fabs(a.lo[i] - b.lo[i]) <= 1e-12);
            CHECK(std::fabs(a.hi[i] - b.hi[i]) <= 1e-12);
        }
    }
}

TEST_CASE("fast path rejects negative inputs") {
    const IntervalDenseLayer l =
        exact_layer(Tensor::matrix(1, 1, {1.0}), Tensor::matrix(1, 1, {1.0}),
                    Tensor::vector({0.0}), Tensor::vector({0.0}), nn::Activation::Relu);
    CHECK_THROWS_AS(inn_layer_forward_relu_fast(l, vec_pair({-0.1}, {0.5})),
                    std::invalid_argument);
}

TEST_CASE("Monte-Carlo containment for random interval layers and stacks") {
    Rng rng = make_rng(43);
    const InnModel m = make_inn({3, 8, 8, 2}, nn::Activation::Relu, nn::Activation::Linear, 44,
                                0.4);  // wide radii to make containment non-trivial
    const IntervalBatch input = vec_pair({-0.5, 0.1, -1.0}, {0.2, 0.9, -0.2});
    const IntervalBatch out = inn_forward(m, input);

    // realise weights and inputs inside their intervals, run a plain MLP
    for (int s = 0; s < 1000; ++s) {
        nn::MlpModel real;
        for (const auto& l : m.layers) {
            const LayerBounds b = effective_bounds(l);
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
        Tensor x = Tensor::zeros({3});
        for (std::size_t i = 0; i < 3; ++i) x[i] = runif(rng, input.lo[i], input.hi[i]);
        const Tensor y = nn::mlp_forward(real, x);
        for (std::size_t o = 0; o < y.size(); ++o) {
            CHECK(y[o] >= out.lo[o] - 1e-9);
            CHECK(y[o] <= out.hi[o] + 1e-9);
        }
    }
    // ordering holds everywhere by construction
    for (std::size_t o = 0; o < out.lo.size(); ++o) CHECK(out.lo[o] <= out.hi[o]);
}

TEST_CASE("degenerate radii and inputs collapse to the center MLP") {
    InnModel m = make_inn({2, 8, 8, 1}, nn::Activation::Relu, nn::Activation::Linear, 45, 0.01);
    for (auto& l : m.layers) {
        std::fill(l.w_radius_raw.data.begin(), l.w_radius_raw.data.end(), -45.0);
        std::fill(l.b_radius_raw.data.begin(), l.b_radius_raw.data.end(), -45.0);
    }
    nn::MlpModel center;
    for (const auto& l : m.layers) {
        nn::DenseLayer dl;
        dl.weights = l.w_center;
        dl.bias = l.b_center;
        dl.activation = l.activation;
        center.layers.push_back(std::move(dl));
    }
    Rng rng = make_rng(46);
    for (int t = 0; t < 25; ++t) {
        const Tensor x = testutil::random_tensor({2}, rng);
        const IntervalBatch out = inn_forward(m, {x, x});
        const double ref = nn::mlp_forward(center, x)[0];
        CHECK(std::fabs(out.lo[0] - ref) <= 1e-12);
        CHECK(std::fabs(out.hi[0] - ref) <= 1e-12);
    }
}

TEST_CASE("interval multiplication layer examples and random oracle") {
    const std::size_t q = 4;
    std::vector<double> blo{2, -1, 0.5, -2}, bhi{3, 1, 0.6, -1};
    std::vector<double> tau{1, 1, 1, 1}, out_lo(q), out_hi(q);
    interval_multiplication_layer(blo.data(), bhi.data(), tau.data(), out_lo.data(),
                                  out_hi.data(), q);
    CHECK(out_lo == blo);  // tau = 1 is the identity
    CHECK(out_hi == bhi);

    std::vector<double> tneg{-1, -1, -1, -1};
    interval_multiplication_layer(blo.data(), bhi.data(), tneg.data(), out_lo.data(),
                                  out_hi.data(), q);
    CHECK(out_lo[0] == -3);  // sign flip swaps bounds
    CHECK(out_hi[0] == -2);

    Rng rng = make_rng(47);
    for (int t = 0; t < 100; ++t) {
        const double l = runif(rng, -2, 2), w = runif(rng, 0, 2), tv = runif(rng, -2, 2);
        const double xlo = l, xhi = l + w;
        const Interval ref = imul(Interval(xlo, xhi), Interval(tv, tv));
        double olo, ohi;
        interval_multiplication_layer(&xlo, &xhi, &tv, &olo, &ohi, 1);
        CHECK(olo == doctest::Approx(ref.lo));
        CHECK(ohi == doctest::Approx(ref.hi));
    }
}

TEST_CASE("tape INN forward equals the plain forward") {
    const InnModel m = make_inn({3, 6, 6, 2}, nn::Activation::Relu, nn::Activation::Linear, 48,
                                0.3);
    const IntervalBatch input = vec_pair({-0.4, 0.2, 0.0}, {0.1, 0.8, 0.5});
    const IntervalBatch plain = inn_forward(m, input);
    ad::Tape t;
    const auto vars = register_inn(t, m);
    const VarPair out = inn_forward_t(
        t, vars, {t.constant(input.lo), t.constant(input.hi)});
    for (std::size_t o = 0; o < plain.lo.size(); ++o) {
        CHECK(t.val(out.lo)[o] == doctest::Approx(plain.lo[o]).epsilon(1e-13));
        CHECK(t.val(out.hi)[o] == doctest::Approx(plain.hi[o]).epsilon(1e-13));
    }
}

TEST_CASE("INN parameter gradients match finite differences") {
    InnModel m = make_inn({2, 5, 1}, nn::Activation::Relu, nn::Activation::Linear, 49, 0.2);
    const Tensor zlo = Tensor::vector({-0.3, 0.4});
    const Tensor zhi = Tensor::vector({0.2, 0.9});
    std::vector<Tensor*> params = collect_params(m);
    const double err = testutil::max_grad_rel_err(params, [&](ad::Tape& t,
                                                              std::vector<ad::VarId>& ids) {
        std::vector<InnLayerVars> vars;
        for (auto& l : m.layers) {
            InnLayerVars v = register_inn_layer(t, l);
            ids.push_back(v.w_center);
            ids.push_back(v.w_radius_raw);
            ids.push_back(v.b_center);
            ids.push_back(v.b_radius_raw);
            vars.push_back(v);
        }
        const VarPair out = inn_forward_t(t, vars, {t.constant(zlo), t.constant(zhi)});
        return t.add(t.mean(t.square(out.lo)), t.mean(t.square(out.hi)));
    });
    CHECK(err < 1e-4);
}
