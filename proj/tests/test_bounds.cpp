#include <doctest.h>

#include <cmath>

#include "ivprop/bounds.hpp"
#include "ivprop/rng.hpp"
#include "test_util.hpp"

using namespace ivp;
using namespace ivp::bp;
using nn::Activation;
using nn::MlpModel;

namespace {

MlpModel random_relu_net(Rng& rng, std::size_t in, std::vector<std::size_t> hidden,
                         std::size_t out) {
    std::vector<std::size_t> dims{in};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    return nn::make_mlp(dims, Activation::Relu, Activation::Linear,
                        std::uniform_int_distribution<std::uint64_t>(0, 1u << 30)(rng));
}

BoxSpec random_box(Rng& rng, std::size_t d, double rmax = 0.6) {
    Tensor c = testutil::random_tensor({d}, rng, -1.0, 1.0);
    Tensor r = testutil::random_tensor({d}, rng, 0.0, rmax);
    return {std::move(c), std::move(r)};
}

}  // namespace

TEST_CASE("IBP on a single linear layer matches the center/radius arithmetic") {
    MlpModel m;
    nn::DenseLayer l;
    l.weights = Tensor::matrix(1, 2, {2, -1});
    l.bias = Tensor::vector({1});
    l.activation = Activation::Linear;
    m.layers.push_back(l);
    const BoxSpec box{Tensor::vector({0.5, 0.5}), Tensor::vector({0.5, 0.5})};
    const inn::IntervalBatch out = ibp_forward(m, box);
    CHECK(out.lo[0] == doctest::Approx(0.0));
    CHECK(out.hi[0] == doctest::Approx(3.0));
}

TEST_CASE("zero radius collapses IBP and CROWN to the point evaluation") {
    Rng rng = make_rng(51);
    const MlpModel m = random_relu_net(rng, 3, {12, 12}, 2);
    for (int t = 0; t < 10; ++t) {
        const Tensor x = testutil::random_tensor({3}, rng);
        const Tensor y = nn::mlp_forward(m, x);
        const BoxSpec box{x, Tensor::zeros({3})};
        const inn::IntervalBatch ib = ibp_forward(m, box);
        const CrownResult cr = crown_backward_bounds(m, box);
        for (std::size_t o = 0; o < y.size(); ++o) {
            CHECK(std::fabs(ib.lo[o] - y[o]) <= 1e-9);
            CHECK(std::fabs(ib.hi[o] - y[o]) <= 1e-9);
            CHECK(std::fabs(cr.out.lo[o] - y[o]) <= 1e-9);
            CHECK(std::fabs(cr.out.hi[o] - y[o]) <= 1e-9);
        }
    }
}

TEST_CASE("crown_relax_relu per-neuron cases") {
    PreActBounds b;
    b.lo = Tensor::vector({-1, 1, -2});
    b.hi = Tensor::vector({1, 2, -1});
    const ReluRelaxation r = crown_relax_relu(b);
    // unstable [-1, 1]: chord slope 0.5, intercept 0.5, adaptive alpha = 1
    CHECK(r.up_slope[0] == doctest::Approx(0.5));
    CHECK(r.up_intercept[0] == doctest::Approx(0.5));
    CHECK(r.lo_slope[0] == 1.0);
    // stable active [1, 2]: identity both sides
    CHECK(r.up_slope[1] == 1.0);
    CHECK(r.up_intercept[1] == 0.0);
    CHECK(r.lo_slope[1] == 1.0);
    // stable inactive [-2, -1]: zero both sides
    CHECK(r.up_slope[2] == 0.0);
    CHECK(r.up_intercept[2] == 0.0);
    CHECK(r.lo_slope[2] == 0.0);
}

TEST_CASE("IBP and CROWN are sound; CROWN is never wider (random fuzz)") {
    Rng rng = make_rng(52);
    for (int net = 0; net < 12; ++net) {
        const MlpModel m = random_relu_net(rng, 2 + net % 3, {10, 10}, 1 + net % 2);
        for (int bx = 0; bx < 4; ++bx) {
            const BoxSpec box = random_box(rng, m.in_dim());
            const inn::IntervalBatch ib = ibp_forward(m, box);
            const CrownResult cr = crown_backward_bounds(m, box);
            for (std::size_t o = 0; o < m.out_dim(); ++o) {
                CHECK(cr.out.hi[o] - cr.out.lo[o] <= ib.hi[o] - ib.lo[o] + 1e-12);
            }
            for (int s = 0; s < 300; ++s) {
                Tensor x = Tensor::zeros({m.in_dim()});
                for (std::size_t d = 0; d < x.size(); ++d)
                    x[d] = runif(rng, box.center[d] - box.radius[d], box.center[d] + box.radius[d]);
                const Tensor y = nn::mlp_forward(m, x);
                for (std::size_t o = 0; o < y.size(); ++o) {
                    CHECK(y[o] >= ib.lo[o] - 1e-9);
                    CHECK(y[o] <= ib.hi[o] + 1e-9);
                    CHECK(y[o] >= cr.out.lo[o] - 1e-9);
                    CHECK(y[o] <= cr.out.hi[o] + 1e-9);
                    // the affine envelopes themselves are valid
                    double env_lo = cr.linear.c_lo[o], env_hi = cr.linear.c_hi[o];
                    for (std::size_t d = 0; d < x.size(); ++d) {
                        env_lo += cr.linear.A_lo.at(o, d) * x[d];
                        env_hi += cr.linear.A_hi.at(o, d) * x[d];
                    }
                    CHECK(y[o] >= env_lo - 1e-9);
                    CHECK(y[o] <= env_hi + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("purely linear single layer: CROWN equals IBP equals the exact image") {
    MlpModel m;
    nn::DenseLayer l;
    l.weights = Tensor::matrix(2, 2, {1.5, -2.0, 0.5, 1.0});
    l.bias = Tensor::vector({0.2, -0.3});
    l.activation = Activation::Linear;
    m.layers.push_back(l);
    const BoxSpec box{Tensor::vector({0.1, -0.4}), Tensor::vector({0.3, 0.2})};
    const inn::IntervalBatch ib = ibp_forward(m, box);
    const CrownResult cr = crown_backward_bounds(m, box);
    for (std::size_t o = 0; o < 2; ++o) {
        double exact_c = l.bias[o], exact_r = 0.0;
        for (std::size_t d = 0; d < 2; ++d) {
            exact_c += l.weights.at(o, d) * box.center[d];
            exact_r += std::fabs(l.weights.at(o, d)) * box.radius[d];
        }
        CHECK(ib.lo[o] == doctest::Approx(exact_c - exact_r));
        CHECK(ib.hi[o] == doctest::Approx(exact_c + exact_r));
        CHECK(cr.out.lo[o] == doctest::Approx(exact_c - exact_r));
        CHECK(cr.out.hi[o] == doctest::Approx(exact_c + exact_r));
    }
}

TEST_CASE("enlarging the radius never shrinks IBP bounds") {
    Rng rng = make_rng(53);
    const MlpModel m = random_relu_net(rng, 3, {14, 14}, 2);
    for (int t = 0; t < 20; ++t) {
        const BoxSpec small = random_box(rng, 3, 0.4);
        BoxSpec big = small;
        for (double& r : big.radius.data) r += runif(rng, 0.0, 0.5);
        const inn::IntervalBatch a = ibp_forward(m, small);
        const inn::IntervalBatch b = ibp_forward(m, big);
        for (std::size_t o = 0; o < 2; ++o) {
            CHECK(b.lo[o] <= a.lo[o] + 1e-12);
            CHECK(b.hi[o] >= a.hi[o] - 1e-12);
        }
    }
}

TEST_CASE("tape IBP equals plain IBP") {
    Rng rng = make_rng(54);
    const MlpModel m = random_relu_net(rng, 4, {9, 9}, 3);
    const Tensor C = testutil::random_tensor({6, 4}, rng);
    const Tensor R = testutil::random_tensor({6, 4}, rng, 0.0, 0.5);
    const inn::IntervalBatch plain = ibp_forward(m, {C, R});
    ad::Tape t;
    const nn::MlpVars vars = register_mlp(t, m);
    const inn::VarPair out = ibp_forward_t(t, vars, t.constant(C), t.constant(R));
    for (std::size_t i = 0; i < plain.lo.size(); ++i) {
        CHECK(t.val(out.lo)[i] == doctest::Approx(plain.lo[i]).epsilon(1e-13));
        CHECK(t.val(out.hi)[i] == doctest::Approx(plain.hi[i]).epsilon(1e-13));
    }
}

TEST_CASE("tape CROWN equals plain CROWN (vector and batched forms)") {
    Rng rng = make_rng(55);
    const MlpModel m = random_relu_net(rng, 3, {8, 8}, 4);
    const BoxSpec box = random_box(rng, 3);
    const CrownResult plain = crown_backward_bounds(m, box);
    {
        ad::Tape t;
        const nn::MlpVars vars = register_mlp(t, m);
        const auto relax = crown_relaxations(m, box);
        const inn::VarPair out = crown_backward_bounds_t(t, vars, relax, t.constant(box.center),
                                                         t.constant(box.radius));
        for (std::size_t o = 0; o < 4; ++o) {
            CHECK(t.val(out.lo)[o] == doctest::Approx(plain.out.lo[o]).epsilon(1e-12));
            CHECK(t.val(out.hi)[o] == doctest::Approx(plain.out.hi[o]).epsilon(1e-12));
        }
    }
    {
        // batched scalar-output form against per-row plain results
        const MlpModel ms = random_relu_net(rng, 2, {7, 7}, 1);
        const std::size_t n = 5;
        Tensor C = testutil::random_tensor({n, 2}, rng);
        Tensor R = testutil::random_tensor({n, 2}, rng, 0.0, 0.5);
        const auto relax = crown_relaxations(ms, {C, R});
        ad::Tape t;
        const nn::MlpVars vars = register_mlp(t, ms);
        const inn::VarPair out = crown_scalar_batch_t(t, vars, relax, t.constant(C), t.constant(R));
        for (std::size_t i = 0; i < n; ++i) {
            Tensor c = Tensor::vector({C.at(i, 0), C.at(i, 1)});
            Tensor r = Tensor::vector({R.at(i, 0), R.at(i, 1)});
            const CrownResult ref = crown_backward_bounds(ms, {c, r});
            CHECK(t.val(out.lo)[i] == doctest::Approx(ref.out.lo[0]).epsilon(1e-12));
            CHECK(t.val(out.hi)[i] == doctest::Approx(ref.out.hi[0]).epsilon(1e-12));
        }
    }
}

TEST_CASE("IBP training path passes finite-difference checks") {
    Rng rng = make_rng(56);
    MlpModel m = random_relu_net(rng, 2, {6, 6}, 1);
    const Tensor C = testutil::random_tensor({5, 2}, rng);
    const Tensor R = testutil::random_tensor({5, 2}, rng, 0.05, 0.4);
    std::vector<Tensor*> params = nn::collect_params(m);
    const double err =
        testutil::max_grad_rel_err(params, [&](ad::Tape& t, std::vector<ad::VarId>& ids) {
            const nn::MlpVars vars = nn::register_mlp(t, m);
            for (const auto& l : vars.layers) {
                ids.push_back(l.W);
                ids.push_back(l.b);
            }
            const inn::VarPair out = ibp_forward_t(t, vars, t.constant(C), t.constant(R));
            return t.add(t.mean(t.square(out.lo)), t.mean(t.square(out.hi)));
        });
    CHECK(err < 1e-4);
}

TEST_CASE("CROWN training path passes finite-difference checks with frozen relaxation") {
    // Slopes and intercepts are stop-gradient constants by design, so the
    // oracle perturbs weights while holding the relaxation fixed.
    Rng rng = make_rng(57);
    MlpModel m = random_relu_net(rng, 2, {6, 6}, 1);
    const Tensor C = testutil::random_tensor({4, 2}, rng);
    const Tensor R = testutil::random_tensor({4, 2}, rng, 0.05, 0.4);
    const auto relax = crown_relaxations(m, {C, R});
    std::vector<Tensor*> params = nn::collect_params(m);
    const double err =
        testutil::max_grad_rel_err(params, [&](ad::Tape& t, std::vector<ad::VarId>& ids) {
            const nn::MlpVars vars = nn::register_mlp(t, m);
            for (const auto& l : vars.layers) {
                ids.push_back(l.W);
                ids.push_back(l.b);
            }
            const inn::VarPair out =
                crown_scalar_batch_t(t, vars, relax, t.constant(C), t.constant(R));
            return t.add(t.mean(t.square(out.lo)), t.mean(t.square(out.hi)));
        });
    CHECK(err < 1e-4);
}
