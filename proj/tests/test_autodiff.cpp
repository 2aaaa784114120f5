#include <cmath>
#include <vector>

#include "doctest.h"
#include "forge/ops.hpp"
#include "forge/rng.hpp"
#include "forge/tape.hpp"

using namespace forge;

namespace {

Tensor rand_tensor(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Rng rng(seed);
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("matmul small cases by hand") {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from_data({2, 1}, {1, 1});
    Tensor c = matmul(a, b);
    CHECK(c.shape() == Shape{2, 1});
    CHECK(c.data()[0] == doctest::Approx(3.0));
    CHECK(c.data()[1] == doctest::Approx(7.0));
}

TEST_CASE("matmul transpose flags agree with materialized transposes") {
    Rng rng(7);
    Tensor a = Tensor::randn({5, 3}, rng);
    Tensor b = Tensor::randn({5, 4}, rng);
    // a^T [3,5] * b [5,4]
    Tensor c = matmul(a, b, true, false);
    Tensor at = Tensor::zeros({3, 5});
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) at.data()[j * 5 + i] = a.data()[i * 3 + j];
    Tensor ref = matmul(at, b);
    for (int64_t i = 0; i < c.numel(); ++i)
        CHECK(c.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-12));

    Tensor d = Tensor::randn({4, 3}, rng);
    // a [5,3] * d^T [3,4]
    Tensor e = matmul(a, d, false, true);
    Tensor dt = Tensor::zeros({3, 4});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) dt.data()[j * 4 + i] = d.data()[i * 3 + j];
    Tensor ref2 = matmul(a, dt);
    for (int64_t i = 0; i < e.numel(); ++i)
        CHECK(e.data()[i] == doctest::Approx(ref2.data()[i]).epsilon(1e-12));
}

TEST_CASE("matmul rejects mismatched shapes with a diagnostic") {
    Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul"), std::invalid_argument);
    try {
        matmul(a, b);
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("[2,3]") != std::string::npos);
        CHECK(std::string(e.what()).find("[2,2]") != std::string::npos);
    }
}

TEST_CASE("softmax of uniform logits and shift invariance") {
    Tensor x = Tensor::from_data({4}, {0, 0, 0, 0});
    Tensor y = softmax_lastdim(x);
    for (int i = 0; i < 4; ++i) CHECK(y.data()[i] == doctest::Approx(0.25).epsilon(1e-15));

    Tensor z = rand_tensor({8, 16}, 3, -5, 5);
    Tensor shifted = Tensor::from_data(z.shape(), z.values());
    for (auto& v : shifted.values()) v += 1234.5;
    Tensor sz = softmax_lastdim(z);
    Tensor ss = softmax_lastdim(shifted);
    for (int64_t i = 0; i < sz.numel(); ++i)
        CHECK(sz.data()[i] == doctest::Approx(ss.data()[i]).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and stay strictly positive") {
    Tensor z = rand_tensor({32, 21}, 11, -30, 30);
    Tensor y = softmax_lastdim(z);
    for (int r = 0; r < 32; ++r) {
        double s = 0;
        for (int j = 0; j < 21; ++j) {
            const double v = y.data()[r * 21 + j];
            CHECK(v > 0.0);
            s += v;
        }
        CHECK(std::fabs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("layernorm normalizes rows before affine") {
    Tensor x = rand_tensor({16, 64}, 21, -3, 3);
    Tensor gain = Tensor::full({64}, 1.0);
    Tensor bias = Tensor::zeros({64});
    Tensor y = layernorm_lastdim(x, gain, bias, 1e-12);
    for (int r = 0; r < 16; ++r) {
        double mu = 0;
        for (int j = 0; j < 64; ++j) mu += y.data()[r * 64 + j];
        mu /= 64;
        double var = 0;
        for (int j = 0; j < 64; ++j) {
            const double d = y.data()[r * 64 + j] - mu;
            var += d * d;
        }
        var /= 64;
        CHECK(std::fabs(mu) < 1e-10);
        CHECK(std::fabs(var - 1.0) < 1e-8);
    }
}

TEST_CASE("cross entropy equals negative log softmax and is nonnegative") {
    Tensor logits = rand_tensor({6, 9}, 31, -4, 4);
    std::vector<int> targets = {0, 3, 8, 2, 2, 5};
    Tensor loss = cross_entropy_logits(logits, targets);
    CHECK(loss.item() >= 0.0);

    double ref = 0;
    for (int r = 0; r < 6; ++r) {
        double mx = -1e300;
        for (int j = 0; j < 9; ++j) mx = std::max(mx, logits.data()[r * 9 + j]);
        double se = 0;
        for (int j = 0; j < 9; ++j) se += std::exp(logits.data()[r * 9 + j] - mx);
        ref += mx + std::log(se) - logits.data()[r * 9 + targets[(std::size_t)r]];
    }
    ref /= 6;
    CHECK(std::fabs(loss.item() - ref) < 1e-12);
}

TEST_CASE("embed lookup rejects out-of-range ids") {
    Tensor table = rand_tensor({10, 4}, 5);
    std::vector<int> ok = {0, 9, 3};
    CHECK_NOTHROW(embed_lookup(table, ok));
    std::vector<int> bad = {0, 10};
    CHECK_THROWS_AS(embed_lookup(table, bad), std::invalid_argument);
}

TEST_CASE("backward on mse against zero gives 2x") {
    Tensor x = Tensor::from_data({1}, {3.0}, true);
    Tensor zero = Tensor::zeros({1});
    Tape tape;
    Tensor loss = mse(x, zero);
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("backward rejects non-scalar loss") {
    Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
    Tape tape;
    Tensor y = add(x, x);
    CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
}

TEST_CASE("consecutive backward calls accumulate leaf grads") {
    Tensor x = Tensor::from_data({3}, {1.0, -2.0, 0.5}, true);
    Tape tape;
    Tensor loss = mse(x, Tensor::zeros({3}));
    tape.backward(loss);
    const std::vector<double> g1 = x.grad();
    tape.backward(loss);
    for (int i = 0; i < 3; ++i)
        CHECK(x.grad()[(std::size_t)i] == doctest::Approx(2 * g1[(std::size_t)i]).epsilon(1e-14));
}

TEST_CASE("gelu gradient at zero via finite differences") {
    const int n = 8;
    Tensor x = Tensor::zeros({n});
    auto f = [](const Tensor& t) { return mean(gelu(t)); };
    CHECK(finite_diff_check(f, x) < 1e-6);
    {
        Tensor x2 = Tensor::zeros({n}, true);
        Tape tape;
        Tensor loss = mean(gelu(x2));
        tape.backward(loss);
        for (int i = 0; i < n; ++i)
            CHECK(x2.grad()[(std::size_t)i] == doctest::Approx(0.5 / n).epsilon(1e-12));
    }
}

TEST_CASE("finite diff oracle: mean of squares and identity") {
    Tensor x = rand_tensor({8}, 17);
    auto fsq = [](const Tensor& t) { return mse(t, Tensor::zeros(t.shape())); };
    CHECK(finite_diff_check(fsq, x) < 1e-6);

    auto fid = [](const Tensor& t) { return mean(t); };
    Tensor x2 = rand_tensor({16}, 18);
    x2.set_requires_grad(true);
    x2.zero_grad();
    {
        Tape tape;
        tape.backward(mean(x2));
    }
    for (int i = 0; i < 16; ++i)
        CHECK(std::fabs(x2.grad()[(std::size_t)i] - 1.0 / 16) < 1e-16);
    CHECK(finite_diff_check(fid, rand_tensor({16}, 19)) < 1e-10);
}

TEST_CASE("finite diff through a two-layer gelu mlp") {
    Rng rng(23);
    Tensor w1 = Tensor::randn({6, 10}, rng, 0.5);
    Tensor w2 = Tensor::randn({10, 3}, rng, 0.5);
    auto f = [&](const Tensor& t) { return mean(matmul(gelu(matmul(t, w1)), w2)); };
    CHECK(finite_diff_check(f, rand_tensor({4, 6}, 29)) < 1e-4);
}

TEST_CASE("finite diff across every primitive op") {
    Rng rng(101);
    const Tensor w34 = Tensor::randn({3, 4}, rng);
    const Tensor w43 = Tensor::randn({4, 3}, rng);
    const Tensor c34 = Tensor::randn({3, 4}, rng);
    const Tensor g4 = Tensor::randn({4}, rng, 0.3);
    const Tensor b4 = Tensor::randn({4}, rng, 0.3);
    const std::vector<int> ids = {2, 0, 1, 2};
    const std::vector<int> tgt = {1, 3, 0};
    const std::vector<double> wts = {1.0, 0.0, 2.0};
    const Tensor w43b = Tensor::randn({4, 3}, rng);
    const Tensor w38 = Tensor::randn({3, 8}, rng);
    const Tensor w24 = Tensor::randn({2, 4}, rng);
    const Tensor w32 = Tensor::randn({3, 2}, rng);

    struct Case {
        const char* name;
        std::function<Tensor(const Tensor&)> f;
        Shape shape;
    };
    const Case cases[] = {
        {"matmul_lhs", [&](const Tensor& t) { return mean(matmul(t, w43)); }, {3, 4}},
        {"matmul_rhs", [&](const Tensor& t) { return mean(matmul(c34, t)); }, {4, 3}},
        {"matmul_ta", [&](const Tensor& t) { return mean(matmul(t, w43, true, false)); }, {4, 3}},
        {"matmul_tb", [&](const Tensor& t) { return mean(matmul(t, w34, false, true)); }, {5, 4}},
        {"matmul_tatb", [&](const Tensor& t) { return mean(matmul(t, w34, true, true)); }, {4, 5}},
        {"add", [&](const Tensor& t) { return mean(mul(add(t, c34), w34)); }, {3, 4}},
        {"mul", [&](const Tensor& t) { return mean(mul(mul(t, c34), w34)); }, {3, 4}},
        {"scale", [&](const Tensor& t) { return mean(mul(scale(t, -1.7), w34)); }, {3, 4}},
        {"gelu", [&](const Tensor& t) { return mean(mul(gelu(t), w34)); }, {3, 4}},
        {"softmax", [&](const Tensor& t) { return mean(mul(softmax_lastdim(t), w34)); }, {3, 4}},
        {"layernorm_x",
         [&](const Tensor& t) { return mean(mul(layernorm_lastdim(t, g4, b4), w34)); },
         {3, 4}},
        {"layernorm_gain",
         [&](const Tensor& t) { return mean(mul(layernorm_lastdim(c34, t, b4), w34)); },
         {4}},
        {"layernorm_bias",
         [&](const Tensor& t) { return mean(mul(layernorm_lastdim(c34, g4, t), w34)); },
         {4}},
        {"embed_lookup",
         [&](const Tensor& t) { return mean(mul(embed_lookup(t, ids), w43b)); },
         {3, 3}},
        {"concat",
         [&](const Tensor& t) {
             const Tensor parts[] = {t, c34};
             return mean(mul(concat_lastdim(parts), w38));
         },
         {3, 4}},
        {"slice_rows", [&](const Tensor& t) { return mean(mul(slice(t, 0, 1, 2), w24)); }, {5, 4}},
        {"slice_cols", [&](const Tensor& t) { return mean(mul(slice(t, 1, 1, 2), w32)); }, {3, 4}},
        {"reshape", [&](const Tensor& t) { return mean(mul(reshape(t, {4, 3}), w43)); }, {3, 4}},
        {"mean", [&](const Tensor& t) { return mean(t); }, {3, 4}},
        {"cross_entropy", [&](const Tensor& t) { return cross_entropy_logits(t, tgt); }, {3, 4}},
        {"cross_entropy_weighted",
         [&](const Tensor& t) { return cross_entropy_logits(t, tgt, wts); },
         {3, 4}},
        {"mse_lhs", [&](const Tensor& t) { return mse(t, c34); }, {3, 4}},
        {"mse_rhs", [&](const Tensor& t) { return mse(c34, t); }, {3, 4}},
    };
    for (const Case& c : cases) {
        INFO(std::string(c.name));
        // fresh weights per case are seeded above; input seeded by name hash
        Tensor x = rand_tensor(c.shape, mix64((uint64_t)c.name[0] * 131 + (uint64_t)c.name[1]));
        CHECK(finite_diff_check(c.f, x) < 1e-4);
    }
}

TEST_CASE("ops are deterministic bit for bit") {
    Tensor x = rand_tensor({7, 13}, 77, -2, 2);
    Tensor w = rand_tensor({13, 5}, 78);
    Tensor y1 = matmul(gelu(x), slice(w, 1, 0, 5));
    Tensor y2 = matmul(gelu(x), slice(w, 1, 0, 5));
    for (int64_t i = 0; i < y1.numel(); ++i) CHECK(y1.data()[i] == y2.data()[i]);
}

TEST_CASE("grad flows only into requires_grad inputs") {
    Tensor x = rand_tensor({3, 3}, 91);
    x.set_requires_grad(true);
    Tensor w = rand_tensor({3, 3}, 92);  // frozen
    Tape tape;
    Tensor loss = mean(matmul(x, w));
    tape.backward(loss);
    CHECK(x.grad_if_any() != nullptr);
    CHECK(w.grad_if_any() == nullptr);
}
