#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "ivprop/layers.hpp"
#include "ivprop/model_io.hpp"
#include "ivprop/rng.hpp"
#include "test_util.hpp"

using namespace ivp;
using namespace ivp::nn;

TEST_CASE("single linear layer forward") {
    MlpModel m;
    DenseLayer l;
    l.weights = Tensor::matrix(1, 2, {2, -1});
    l.bias = Tensor::vector({1});
    l.activation = Activation::Linear;
    m.layers.push_back(l);
    const Tensor y = mlp_forward(m, Tensor::vector({1, 1}));
    CHECK(y[0] == doctest::Approx(2.0));
}

TEST_CASE("all-zero weights map anything to zero") {
    MlpModel m = make_mlp({3, 4, 1}, Activation::Relu, Activation::Linear, 1);
    for (auto& l : m.layers) {
        std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
        std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
    }
    Rng rng = make_rng(2);
    const Tensor x = testutil::random_tensor({3}, rng);
    CHECK(mlp_forward(m, x)[0] == 0.0);
}

TEST_CASE("two-layer relu net matches hand-computed matrix algebra") {
    const MlpModel m = make_mlp({2, 3, 1}, Activation::Relu, Activation::Linear, 42);
    const Tensor x = Tensor::vector({0.7, -0.3});
    // manual pass
    std::vector<double> h(3);
    for (std::size_t o = 0; o < 3; ++o) {
        double acc = m.layers[0].bias[o];
        for (std::size_t i = 0; i < 2; ++i) acc += m.layers[0].weights.at(o, i) * x[i];
        h[o] = acc > 0 ? acc : 0;
    }
    double out = m.layers[1].bias[0];
    for (std::size_t i = 0; i < 3; ++i) out += m.layers[1].weights.at(0, i) * h[i];
    CHECK(mlp_forward(m, x)[0] == doctest::Approx(out).epsilon(1e-12));
}

TEST_CASE("bias-free relu MLP is positively homogeneous") {
    MlpModel m = make_mlp({2, 8, 8, 1}, Activation::Relu, Activation::Linear, 7);
    for (auto& l : m.layers) std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
    Rng rng = make_rng(8);
    for (int t = 0; t < 30; ++t) {
        const Tensor x = testutil::random_tensor({2}, rng);
        const double alpha = runif(rng, 0.1, 5.0);
        Tensor ax = x;
        for (double& v : ax.data) v *= alpha;
        CHECK(mlp_forward(m, ax)[0] ==
              doctest::Approx(alpha * mlp_forward(m, x)[0]).epsilon(1e-10));
    }
}

TEST_CASE("batched and single-vector mlp forward agree") {
    const MlpModel m = make_mlp({3, 8, 2}, Activation::Tanh, Activation::Linear, 11);
    Rng rng = make_rng(12);
    const Tensor xb = testutil::random_tensor({5, 3}, rng);
    const Tensor yb = mlp_forward(m, xb);
    for (std::size_t i = 0; i < 5; ++i) {
        const Tensor xi = Tensor::vector({xb.at(i, 0), xb.at(i, 1), xb.at(i, 2)});
        const Tensor yi = mlp_forward(m, xi);
        CHECK(yb.at(i, 0) == doctest::Approx(yi[0]).epsilon(1e-13));
        CHECK(yb.at(i, 1) == doctest::Approx(yi[1]).epsilon(1e-13));
    }
}

TEST_CASE("rann on degenerate input with tied output rows is symmetric") {
    RannModel m = make_rann(2, {8, 8}, Activation::Relu, 3);
    m.output_hi = m.output_lo;  // tie the rows
    const IntervalVector x{Interval(0.4, 0.4), Interval(-1.2, -1.2)};
    const BoundPair p = rann_forward(m, x);
    CHECK(p.lo == p.hi);
}

TEST_CASE("rann with zero weights returns the output biases") {
    RannModel m = make_rann(1, {4}, Activation::Relu, 5);
    for (auto& l : m.hidden.layers) {
        std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
        std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
    }
    std::fill(m.output_lo.weights.data.begin(), m.output_lo.weights.data.end(), 0.0);
    std::fill(m.output_hi.weights.data.begin(), m.output_hi.weights.data.end(), 0.0);
    m.output_lo.bias[0] = 0.0;
    m.output_hi.bias[0] = 1.0;
    const BoundPair p = rann_forward(m, {Interval(0.2, 0.9)});
    CHECK(p.lo == 0.0);
    CHECK(p.hi == 1.0);
}

TEST_CASE("seed-0 rann forward matches a hand-rolled pass") {
    const RannModel m = make_rann(1, {4}, Activation::Relu, 0);
    const IntervalVector x{Interval(0.0, 0.1)};
    const Tensor packed = pack_interval_input(x);
    CHECK(packed.data == std::vector<double>{0.0, 0.1});
    std::vector<double> h(4);
    for (std::size_t o = 0; o < 4; ++o) {
        double acc = m.hidden.layers[0].bias[o];
        acc += m.hidden.layers[0].weights.at(o, 0) * 0.0;
        acc += m.hidden.layers[0].weights.at(o, 1) * 0.1;
        h[o] = acc > 0 ? acc : 0;
    }
    double lo = m.output_lo.bias[0], hi = m.output_hi.bias[0];
    for (std::size_t i = 0; i < 4; ++i) {
        lo += m.output_lo.weights.at(0, i) * h[i];
        hi += m.output_hi.weights.at(0, i) * h[i];
    }
    const BoundPair p = rann_forward(m, x);
    CHECK(p.lo == doctest::Approx(lo).epsilon(1e-13));
    CHECK(p.hi == doctest::Approx(hi).epsilon(1e-13));
}

TEST_CASE("tape forward equals plain forward") {
    const MlpModel m = make_mlp({4, 16, 16, 2}, Activation::Relu, Activation::Linear, 21);
    Rng rng = make_rng(22);
    const Tensor X = testutil::random_tensor({7, 4}, rng);
    const Tensor plain = mlp_forward(m, X);
    ad::Tape t;
    const MlpVars vars = register_mlp(t, m);
    const Tensor& taped = t.val(mlp_forward_t(t, vars, t.constant(X)));
    REQUIRE(taped.size() == plain.size());
    for (std::size_t i = 0; i < plain.size(); ++i) CHECK(taped[i] == plain[i]);
}

TEST_CASE("model files round-trip exactly") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ivprop_io_test";
    fs::create_directories(dir);

    const MlpModel m = make_mlp({3, 8, 1}, Activation::Relu, Activation::Linear, 33);
    const std::string mp = (dir / "m.model").string();
    io::save_model(mp, m);
    CHECK(io::peek_model_kind(mp) == "mlp");
    const MlpModel m2 = io::load_mlp(mp);
    REQUIRE(m2.layers.size() == m.layers.size());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        CHECK(m2.layers[l].weights.data == m.layers[l].weights.data);
        CHECK(m2.layers[l].bias.data == m.layers[l].bias.data);
        CHECK(m2.layers[l].activation == m.layers[l].activation);
    }

    const RannModel r = make_rann(2, {6, 6}, Activation::Relu, 34);
    const std::string rp = (dir / "r.model").string();
    io::save_model(rp, r);
    const RannModel r2 = io::load_rann(rp);
    CHECK(r2.output_lo.weights.data == r.output_lo.weights.data);
    CHECK(r2.hidden.layers[1].weights.data == r.hidden.layers[1].weights.data);

    CHECK_THROWS(io::load_rann(mp));  // wrong kind
    fs::remove_all(dir);
}
