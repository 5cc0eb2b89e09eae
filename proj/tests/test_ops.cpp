#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "cfpr/error.hpp"
#include "cfpr/ops.hpp"

using cfpr::Padding;
using cfpr::Tensor;

TEST_CASE("conv2d 1x1 identity kernel passes input through") {
    std::mt19937_64 g(1);
    Tensor input = oracle::random_tensor({5, 7, 1}, g);
    Tensor kernel({1, 1, 1, 1});
    kernel.v[0] = 1.0;
    auto out = cfpr::conv2d(input, kernel, {0.0}, Padding::Same);
    REQUIRE(out.shape == input.shape);
    for (std::size_t i = 0; i < out.v.size(); ++i) CHECK(out.v[i] == input.v[i]);
}

TEST_CASE("conv2d zero input yields per-channel bias") {
    std::mt19937_64 g(2);
    Tensor input({5, 5, 1});
    Tensor kernels = oracle::random_tensor({3, 3, 1, 4}, g);
    std::vector<double> bias{0.5, -1.0, 2.0, 0.0};
    auto out = cfpr::conv2d(input, kernels, bias, Padding::Same);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            for (int f = 0; f < 4; ++f)
                CHECK(out.at(y, x, f) == bias[static_cast<std::size_t>(f)]);
}

TEST_CASE("conv2d matches the naive reference on a random case") {
    std::mt19937_64 g(3);
    Tensor input = oracle::random_tensor({8, 8, 2}, g);
    Tensor kernels = oracle::random_tensor({3, 3, 2, 4}, g);
    auto bias = oracle::random_vec(4, g);
    for (auto pad : {Padding::Same, Padding::Valid}) {
        auto got = cfpr::conv2d(input, kernels, bias, pad);
        auto want = oracle::conv_ref(input, kernels, bias, pad);
        REQUIRE(got.shape == want.shape);
        for (std::size_t i = 0; i < got.v.size(); ++i)
            CHECK(std::abs(got.v[i] - want.v[i]) <= 1e-10);
    }
}

TEST_CASE("conv2d rejects shape mismatches with a shape report") {
    Tensor input({4, 4, 2});
    Tensor kernels({3, 3, 3, 4});  // channel mismatch
    CHECK_THROWS_AS(cfpr::conv2d(input, kernels, {0, 0, 0, 0}, Padding::Same), cfpr::Error);
    Tensor even({2, 2, 2, 4});  // even kernel
    CHECK_THROWS_AS(cfpr::conv2d(input, even, {0, 0, 0, 0}, Padding::Same), cfpr::Error);
    Tensor ok({3, 3, 2, 4});
    CHECK_THROWS_AS(cfpr::conv2d(input, ok, {0, 0}, Padding::Same), cfpr::Error);  // bias length
    try {
        cfpr::conv2d(input, kernels, {0, 0, 0, 0}, Padding::Same);
        FAIL("expected a throw");
    } catch (const cfpr::Error& e) {
        // the report names the offending sizes
        CHECK(std::string(e.what()).find("2") != std::string::npos);
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
}

TEST_CASE("maxpool2 forced maximum in a single block") {
    Tensor input({2, 2, 1});
    input.at(0, 0, 0) = 1;
    input.at(0, 1, 0) = 2;
    input.at(1, 0, 0) = 3;
    input.at(1, 1, 0) = 4;
    auto res = cfpr::maxpool2(input);
    REQUIRE(res.out.shape == std::vector<int>{1, 1, 1});
    CHECK(res.out.at(0, 0, 0) == 4);
}

TEST_CASE("maxpool2 on a constant tensor halves dims and keeps the value") {
    Tensor input({6, 4, 3});
    for (auto& v : input.v) v = 2.5;
    auto res = cfpr::maxpool2(input);
    REQUIRE(res.out.shape == std::vector<int>{3, 2, 3});
    for (double v : res.out.v) CHECK(v == 2.5);
}

TEST_CASE("maxpool2 matches brute-force window max") {
    std::mt19937_64 g(4);
    Tensor input = oracle::random_tensor({6, 6, 3}, g);
    auto res = cfpr::maxpool2(input);
    auto want = oracle::pool_ref(input);
    REQUIRE(res.out.shape == want.shape);
    for (std::size_t i = 0; i < want.v.size(); ++i) CHECK(res.out.v[i] == want.v[i]);
}

TEST_CASE("maxpool2 rejects odd dims") {
    Tensor odd({5, 4, 1});
    CHECK_THROWS_AS(cfpr::maxpool2(odd), cfpr::Error);
    Tensor odd2({4, 5, 1});
    CHECK_THROWS_AS(cfpr::maxpool2(odd2), cfpr::Error);
}

TEST_CASE("maxpool2 argmax ties resolve to the first element in scan order") {
    Tensor input({2, 2, 1});
    for (auto& v : input.v) v = 7.0;
    auto res = cfpr::maxpool2(input);
    CHECK(res.argmax[0] == 0);  // flat index of (0,0,0)
}

TEST_CASE("relu definition") {
    Tensor t({3});
    t.v = {-1.0, 0.0, 2.0};
    auto out = cfpr::relu(t);
    CHECK(out.v == std::vector<double>{0.0, 0.0, 2.0});

    Tensor neg({4});
    neg.v = {-5, -0.1, -2, -1e9};
    for (double v : cfpr::relu(neg).v) CHECK(v == 0.0);

    Tensor pos({4});
    pos.v = {5, 0.1, 2, 1e9};
    CHECK(cfpr::relu(pos).v == pos.v);
}

TEST_CASE("dense identity and zero weights") {
    Tensor input({3});
    input.v = {1.0, -2.0, 3.0};
    Tensor eye({3, 3});
    for (int i = 0; i < 3; ++i) eye.v[static_cast<std::size_t>(i * 3 + i)] = 1.0;
    auto out = cfpr::dense(input, eye, {0, 0, 0});
    CHECK(out.v == input.v);

    Tensor zero({2, 3});
    auto out2 = cfpr::dense(input, zero, {4.0, -1.5});
    CHECK(out2.v == std::vector<double>{4.0, -1.5});
}

TEST_CASE("dense matches the dot-product oracle") {
    std::mt19937_64 g(5);
    Tensor input = oracle::random_tensor({10}, g);
    Tensor weights = oracle::random_tensor({4, 10}, g);
    auto bias = oracle::random_vec(4, g);
    auto got = cfpr::dense(input, weights, bias);
    auto want = oracle::dense_ref(input, weights, bias);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(got.v[i] - want.v[i]) <= 1e-12);
}

TEST_CASE("dense rejects shape mismatch") {
    Tensor input({5});
    Tensor weights({4, 10});
    CHECK_THROWS_AS(cfpr::dense(input, weights, {0, 0, 0, 0}), cfpr::Error);
    Tensor w2({4, 5});
    CHECK_THROWS_AS(cfpr::dense(input, w2, {0, 0}), cfpr::Error);
}

TEST_CASE("softmax_xent symmetric logits") {
    auto r = cfpr::softmax_xent({0.0, 0.0}, 1);
    CHECK(r.prob[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.prob[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("softmax_xent survives extreme logits") {
    auto r = cfpr::softmax_xent({1000.0, 0.0}, 0);
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss >= 0.0);
    CHECK(r.loss < 1e-9);
    CHECK(r.prob[0] > 0.0);
    CHECK(r.prob[0] < 1.0);
    CHECK(r.prob[1] > 0.0);
    CHECK(r.prob[1] < 1.0);

    auto r2 = cfpr::softmax_xent({-745.0, 745.0}, 0);
    CHECK(std::isfinite(r2.loss));
    CHECK(r2.prob[0] > 0.0);
    CHECK(r2.prob[1] < 1.0);
}

TEST_CASE("softmax_xent probabilities sum to 1 and grad matches finite differences") {
    std::mt19937_64 g(6);
    std::uniform_real_distribution<double> d(-30.0, 30.0);
    for (int it = 0; it < 200; ++it) {
        std::array<double, 2> logits{d(g), d(g)};
        int label = it % 2;
        auto r = cfpr::softmax_xent(logits, label);
        CHECK(std::abs(r.prob[0] + r.prob[1] - 1.0) <= 1e-12);
        CHECK(r.prob[0] > 0.0);
        CHECK(r.prob[1] > 0.0);
        const double h = 1e-6;
        for (int i = 0; i < 2; ++i) {
            auto lp = logits, lm = logits;
            lp[static_cast<std::size_t>(i)] += h;
            lm[static_cast<std::size_t>(i)] -= h;
            double fd = (cfpr::softmax_xent(lp, label).loss - cfpr::softmax_xent(lm, label).loss) /
                        (2 * h);
            CHECK(std::abs(fd - r.grad[static_cast<std::size_t>(i)]) <= 1e-6);
        }
    }
}

TEST_CASE("conv/pool/dense/relu agree with references on 100+ random shapes") {
    std::mt19937_64 g(7);
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_int_distribution<int> chan(1, 4);
    std::uniform_int_distribution<int> kpick(0, 1);
    int cases = 0;
    for (int it = 0; it < 120; ++it) {
        int k = kpick(g) == 0 ? 1 : 3;
        int h = dim(g) + (k == 3 ? 2 : 0);
        int w = dim(g) + (k == 3 ? 2 : 0);
        int c = chan(g), f = chan(g);
        Tensor input = oracle::random_tensor({h, w, c}, g);
        Tensor kernels = oracle::random_tensor({k, k, c, f}, g);
        auto bias = oracle::random_vec(static_cast<std::size_t>(f), g);
        Padding pad = kpick(g) == 0 ? Padding::Same : Padding::Valid;
        auto got = cfpr::conv2d(input, kernels, bias, pad);
        auto want = oracle::conv_ref(input, kernels, bias, pad);
        REQUIRE(got.shape == want.shape);
        for (std::size_t i = 0; i < got.v.size(); ++i)
            CHECK(std::abs(got.v[i] - want.v[i]) <= 1e-10);
        ++cases;
    }
    CHECK(cases >= 100);

    for (int it = 0; it < 120; ++it) {
        int h = 2 * dim(g), w = 2 * dim(g), c = chan(g);
        Tensor input = oracle::random_tensor({h, w, c}, g);
        auto got = cfpr::maxpool2(input);
        auto want = oracle::pool_ref(input);
        for (std::size_t i = 0; i < want.v.size(); ++i)
            CHECK(std::abs(got.out.v[i] - want.v[i]) <= 1e-10);
    }

    for (int it = 0; it < 120; ++it) {
        int in_n = dim(g) * 3, out_n = dim(g) * 2;
        Tensor input = oracle::random_tensor({in_n}, g);
        Tensor weights = oracle::random_tensor({out_n, in_n}, g);
        auto bias = oracle::random_vec(static_cast<std::size_t>(out_n), g);
        auto got = cfpr::dense(input, weights, bias);
        auto want = oracle::dense_ref(input, weights, bias);
        for (std::size_t i = 0; i < want.v.size(); ++i)
            CHECK(std::abs(got.v[i] - want.v[i]) <= 1e-10);
    }

    for (int it = 0; it < 120; ++it) {
        Tensor t = oracle::random_tensor({dim(g), dim(g), chan(g)}, g, -2.0, 2.0);
        auto out = cfpr::relu(t);
        for (std::size_t i = 0; i < t.v.size(); ++i)
            CHECK(out.v[i] == (t.v[i] > 0.0 ? t.v[i] : 0.0));
    }
}
