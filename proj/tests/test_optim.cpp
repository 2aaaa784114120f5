#include <cmath>

#include "doctest.h"
#include "forge/ops.hpp"
#include "forge/optim.hpp"
#include "forge/tape.hpp"

using namespace forge;

TEST_CASE("zero gradient leaves params unchanged and bumps t") {
    Tensor p = Tensor::from_data({3}, {1.0, 2.0, 3.0}, true);
    Adam opt({p}, {.lr = 0.1});
    opt.step();  // no grad buffer at all
    CHECK(opt.t() == 1);
    CHECK(p.data()[0] == 1.0);
    CHECK(p.data()[1] == 2.0);
    CHECK(p.data()[2] == 3.0);

    p.grad();  // materialize zero grads
    opt.step();
    CHECK(opt.t() == 2);
    CHECK(p.data()[0] == 1.0);
}

TEST_CASE("first adam step with unit gradient is about -lr") {
    // with g=1: m̂ = 1, v̂ = 1 after bias correction, so Δ = -lr/(1+eps)
    Tensor p = Tensor::from_data({1}, {0.0}, true);
    p.grad()[0] = 1.0;
    Adam opt({p}, {.lr = 0.1, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8});
    opt.step();
    CHECK(p.data()[0] == doctest::Approx(-0.1).epsilon(1e-7));
    CHECK(std::fabs(p.data()[0] + 0.1 / (1.0 + 1e-8)) < 1e-15);
}

TEST_CASE("adam runs are bit-identical under identical inputs") {
    auto run = [] {
        Tensor p = Tensor::from_data({4}, {0.5, -0.5, 1.0, -1.0}, true);
        Adam opt({p}, {.lr = 3e-2});
        for (int step = 0; step < 50; ++step) {
            opt.zero_grads();
            Tape tape;
            Tensor loss = mse(p, Tensor::from_data({4}, {1.0, 2.0, 3.0, 4.0}));
            tape.backward(loss);
            opt.step();
        }
        return p.values();
    };
    const auto a = run();
    const auto b = run();
    for (int i = 0; i < 4; ++i) CHECK(a[(std::size_t)i] == b[(std::size_t)i]);
}

TEST_CASE("adam converges on a quadratic") {
    Tensor p = Tensor::from_data({4}, {0.0, 0.0, 0.0, 0.0}, true);
    Tensor target = Tensor::from_data({4}, {1.0, -2.0, 0.3, 0.7});
    Adam opt({p}, {.lr = 5e-2});
    double last = 1e300;
    for (int step = 0; step < 400; ++step) {
        opt.zero_grads();
        Tape tape;
        Tensor loss = mse(p, target);
        tape.backward(loss);
        opt.step();
        last = loss.item();
    }
    CHECK(last < 1e-4);
}

TEST_CASE("adam rejects grad length mismatch") {
    Tensor p = Tensor::from_data({2}, {0.0, 0.0}, true);
    Adam opt({p}, {});
    p.grad().push_back(1.0);  // corrupt
    CHECK_THROWS_AS(opt.step(), std::invalid_argument);
}
