#include <doctest.h>

#include <cmath>

#include "ivprop/rng.hpp"
#include "ivprop/tape.hpp"
#include "test_util.hpp"

using namespace ivp;
using ad::Tape;
using ad::VarId;
using testutil::max_grad_rel_err;
using testutil::random_tensor;

TEST_CASE("primitive forward examples") {
    Tape t;
    const VarId x = t.leaf(Tensor::vector({-1, 0, 2}));
    const VarId r = t.relu(x);
    CHECK(t.val(r).data == std::vector<double>{0, 0, 2});

    const VarId eye = t.constant(Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
    const VarId v = t.constant(Tensor::vector({3, -4, 5}));
    CHECK(t.val(t.matmul(eye, v)).data == std::vector<double>{3, -4, 5});

    const VarId m = t.max_with(t.constant(Tensor::vector({-1, 2})), 0.0);
    CHECK(t.val(m).data == std::vector<double>{0, 2});

    CHECK(t.val(t.sum(v))[0] == 4);
    CHECK(t.val(t.mean(v))[0] == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("shape mismatches raise structured errors naming both shapes") {
    Tape t;
    const VarId a = t.constant(Tensor::matrix(2, 3, std::vector<double>(6, 1.0)));
    const VarId b = t.constant(Tensor::matrix(3, 2, std::vector<double>(6, 1.0)));
    try {
        t.add(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(2, 3)") != std::string::npos);
        CHECK(msg.find("(3, 2)") != std::string::npos);
    }
    CHECK_THROWS_AS(t.matmul(a, a), ShapeError);
}

TEST_CASE("simple gradients: x^2 and inactive relu") {
    Tape t;
    const VarId x = t.leaf(Tensor::scalar(3.0), true);
    const VarId y = t.square(x);
    const auto g = t.gradients(y);
    CHECK(g[x][0] == doctest::Approx(6.0));

    Tape t2;
    const VarId x2 = t2.leaf(Tensor::scalar(-1.0), true);
    const VarId y2 = t2.relu(x2);
    const auto g2 = t2.gradients(y2);
    CHECK(g2[x2][0] == 0.0);
}

TEST_CASE("gradients require a scalar output") {
    Tape t;
    const VarId x = t.leaf(Tensor::vector({1, 2}), true);
    CHECK_THROWS_AS(t.gradients(x), std::invalid_argument);
}

TEST_CASE("stop_gradient detaches") {
    Tape t;
    const VarId x = t.leaf(Tensor::scalar(2.0), true);
    const VarId y = t.mul(t.stop_gradient(t.square(x)), x);  // value 8, d/dx with sg = 4
    const auto g = t.gradients(t.sum(y));
    CHECK(t.val(y)[0] == doctest::Approx(8.0));
    CHECK(g[x][0] == doctest::Approx(4.0));
}

TEST_CASE("replaying the same tape yields bit-identical gradients") {
    Rng rng = make_rng(3);
    Tape t;
    const VarId w = t.leaf(random_tensor({8, 5}, rng), true);
    const VarId x = t.constant(random_tensor({5}, rng));
    const VarId loss = t.mean(t.square(t.tanh_(t.matmul(w, x))));
    const auto g1 = t.gradients(loss);
    const auto g2 = t.gradients(loss);
    REQUIRE(g1[w].size() == g2[w].size());
    for (std::size_t i = 0; i < g1[w].size(); ++i) CHECK(g1[w][i] == g2[w][i]);
}

TEST_CASE("finite-difference check for every primitive") {
    Rng rng = make_rng(11);
    Tensor A = random_tensor({4, 3}, rng);
    Tensor B = random_tensor({3, 5}, rng);
    Tensor Bt = random_tensor({5, 3}, rng);
    Tensor v = random_tensor({5}, rng);
    Tensor w = random_tensor({4, 5}, rng, 0.1, 1.0);
    Tensor s = random_tensor({1}, rng, 0.5, 1.5);

    SUBCASE("matmul + add + relu + mean") {
        const double err = max_grad_rel_err({&A, &B}, [&](Tape& t, std::vector<VarId>& ids) {
            ids.push_back(t.leaf(A, true));
            ids.push_back(t.leaf(B, true));
            return t.mean(t.relu(t.matmul(ids[0], ids[1])));
        });
        CHECK(err < 1e-4);
    }
    SUBCASE("matmul_nt + row-broadcast bias + tanh") {
        const double err = max_grad_rel_err({&A, &Bt, &v}, [&](Tape& t, std::vector<VarId>& ids) {
            ids.push_back(t.leaf(A, true));
            ids.push_back(t.leaf(Bt, true));
            ids.push_back(t.leaf(v, true));
            return t.mean(t.tanh_(t.add(t.matmul_nt(ids[0], ids[1]), ids[2])));
        });
        CHECK(err < 1e-4);
    }
    SUBCASE("mul same-shape, square, exp") {
        const double err = max_grad_rel_err({&A}, [&](Tape& t, std::vector<VarId>& ids) {
            ids.push_back(t.leaf(A, true));
            const VarId sq = t.square(ids[0]);
            return t.mean(t.exp_(t.mul(sq, t.constant(Tensor::full(A.shape, 0.3)))));
        });
        CHECK(err < 1e-4);
    }
    SUBCASE("mul row-broadcast and scalar-broadcast") {
        const double err = max_grad_rel_err({&w, &v, &s}, [&](Tape& t, std::vector<VarId>& ids) {
            ids.push_back(t.leaf(w, true));
            ids.push_back(t.leaf(v, true));
            ids.push_back(t.leaf(s, true));
            return t.mean(t.mul(t.mul(ids[0], ids[1]), ids[2]));
        });
        CHECK(err < 1e-4);
    }
    SUBCASE("softplus, min_with, max_with away from the kink") {
        const double err = max_grad_rel_err({&A}, [&](Tape& t, std::vector<VarId>& ids) {
            ids.push_back(t.leaf(A, true));
            const VarId sp = t.softplus(ids[0]);
            return t.mean(t.add(t.min_with(sp, 0.9), t.max_with(ids[0], -0.45)));
        });
        CHECK(err < 1e-4);
    }
    SUBCASE("sub scalar-left (negation) and abs composition") {
        const double err = max_grad_rel_err({&A}, [&](Tape& t, std::vector<VarId>& ids) {
            ids.push_back(t.leaf(A, true));
            return t.mean(ad::ops::absval(t, ad::ops::neg(t, ids[0])));
        });
        CHECK(err < 1e-4);
    }
    SUBCASE("concat, slice_rows, reshape, sum") {
        const double err = max_grad_rel_err({&A, &B}, [&](Tape& t, std::vector<VarId>& ids) {
            ids.push_back(t.leaf(A, true));
            ids.push_back(t.leaf(B, true));
            const VarId cat = t.concat(t.reshape(ids[0], {12}), t.reshape(ids[1], {15}));
            return t.sum(t.square(t.slice_rows(cat, 3, 20)));
        });
        CHECK(err < 1e-4);
    }
    SUBCASE("vmin / vmax compositions away from ties") {
        Tensor C = random_tensor({4, 3}, rng, 2.0, 3.0);  // keep operands separated
        const double err = max_grad_rel_err({&A, &C}, [&](Tape& t, std::vector<VarId>& ids) {
            ids.push_back(t.leaf(A, true));
            ids.push_back(t.leaf(C, true));
            return t.mean(t.add(ad::ops::vmin(t, ids[0], ids[1]), ad::ops::vmax(t, ids[0], ids[1])));
        });
        CHECK(err < 1e-4);
    }
}

TEST_CASE("two-layer MLP gradient matches finite differences") {
    Rng rng = make_rng(29);
    Tensor W1 = random_tensor({6, 3}, rng);
    Tensor b1 = random_tensor({6}, rng);
    Tensor W2 = random_tensor({1, 6}, rng);
    Tensor b2 = random_tensor({1}, rng);
    const Tensor X = random_tensor({10, 3}, rng);
    const Tensor y = random_tensor({10}, rng);
    const double err =
        max_grad_rel_err({&W1, &b1, &W2, &b2}, [&](Tape& t, std::vector<VarId>& ids) {
            ids.push_back(t.leaf(W1, true));
            ids.push_back(t.leaf(b1, true));
            ids.push_back(t.leaf(W2, true));
            ids.push_back(t.leaf(b2, true));
            const VarId h = t.relu(t.add(t.matmul_nt(t.constant(X), ids[0]), ids[1]));
            const VarId out = t.reshape(t.add(t.matmul_nt(h, ids[2]), ids[3]), {10});
            return ad::ops::mse(t, out, t.constant(y));
        });
    CHECK(err < 1e-4);
}
