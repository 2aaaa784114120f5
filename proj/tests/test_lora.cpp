#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "forge/checkpoint.hpp"
#include "forge/lora.hpp"
#include "forge/tape.hpp"

using namespace forge;

namespace {
std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("fresh adapter is an exact identity") {
    Rng rng(1);
    Tensor w = Tensor::randn({6, 4}, rng);
    Tensor x = Tensor::randn({3, 6}, rng);
    LoraAdapter ad = LoraAdapter::init("lin", 6, 4, 2, 4.0, rng);
    Tensor base = matmul(x, w);
    Tensor adapted = adapted_matmul(x, w, ad);
    for (int64_t i = 0; i < base.numel(); ++i) CHECK(adapted.data()[i] == base.data()[i]);
}

TEST_CASE("identity algebra: rank d_in with A=B=I and alpha=r gives (W+I)x") {
    const int d = 4;
    Rng rng(2);
    Tensor w = Tensor::randn({d, d}, rng);
    Tensor x = Tensor::randn({5, d}, rng);
    LoraAdapter ad = LoraAdapter::init("lin", d, d, d, (double)d, rng);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            ad.a.data()[i * d + j] = i == j ? 1.0 : 0.0;
            ad.b.data()[i * d + j] = i == j ? 1.0 : 0.0;
        }
    Tensor got = adapted_matmul(x, w, ad);
    Tensor wi = Tensor::from_data(w.shape(), w.values());
    for (int i = 0; i < d; ++i) wi.data()[i * d + i] += 1.0;
    Tensor ref = matmul(x, wi);
    for (int64_t i = 0; i < got.numel(); ++i)
        CHECK(got.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-12));
}

TEST_CASE("adapted forward matches materialized delta within 1e-10") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const int64_t d_in = 3 + (int64_t)rng.next_below(8);
        const int64_t d_out = 3 + (int64_t)rng.next_below(8);
        const int r = 1 + (int)rng.next_below(4);
        Tensor w = Tensor::randn({d_in, d_out}, rng);
        Tensor x = Tensor::randn({4, d_in}, rng);
        LoraAdapter ad = LoraAdapter::init("lin", d_in, d_out, r, 2.0 * r, rng);
        for (auto& v : ad.b.values()) v = rng.normal();

        Tensor got = adapted_matmul(x, w, ad);
        // materialize full delta (alpha/r) B*A, stored layout transpose
        Tensor weff = Tensor::from_data(w.shape(), w.values());
        for (int64_t i = 0; i < d_in; ++i)
            for (int64_t j = 0; j < d_out; ++j) {
                double s = 0;
                for (int k = 0; k < r; ++k) s += ad.b.data()[j * r + k] * ad.a.data()[k * d_in + i];
                weff.data()[i * d_out + j] += ad.scaling() * s;
            }
        Tensor ref = matmul(x, weff);
        for (int64_t i = 0; i < got.numel(); ++i)
            CHECK(std::fabs(got.data()[i] - ref.data()[i]) < 1e-10);
    }
}

TEST_CASE("merge then plain forward equals adapted forward on 100 inputs") {
    Rng rng(5);
    Tensor w = Tensor::randn({8, 6}, rng);
    LoraAdapter ad = LoraAdapter::init("lin", 8, 6, 3, 6.0, rng);
    for (auto& v : ad.b.values()) v = rng.normal();
    LoraAdapter ad_copy = ad;
    Tensor merged = merge(w, ad_copy);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor x = Tensor::randn({2, 8}, rng);
        Tensor got = matmul(x, merged);
        Tensor ref = adapted_matmul(x, w, ad);
        for (int64_t i = 0; i < got.numel(); ++i)
            CHECK(std::fabs(got.data()[i] - ref.data()[i]) < 1e-10);
    }
}

TEST_CASE("merge with zero B returns W unchanged") {
    Rng rng(6);
    Tensor w = Tensor::randn({5, 5}, rng);
    LoraAdapter ad = LoraAdapter::init("lin", 5, 5, 2, 4.0, rng);
    Tensor merged = merge(w, ad);
    for (int64_t i = 0; i < w.numel(); ++i) CHECK(merged.data()[i] == w.data()[i]);
}

TEST_CASE("merging a consumed adapter is rejected") {
    Rng rng(7);
    Tensor w = Tensor::randn({5, 5}, rng);
    LoraAdapter ad = LoraAdapter::init("lin", 5, 5, 2, 4.0, rng);
    (void)merge(w, ad);
    CHECK_THROWS_AS(merge(w, ad), std::invalid_argument);
}

TEST_CASE("adapter save/load round trip is exact at f32") {
    Rng rng(8);
    LoraAdapter ad = LoraAdapter::init("blocks.0.attn.q", 16, 16, 4, 8.0, rng);
    for (auto& v : ad.b.values()) v = rng.normal();
    const std::string path = tmp_path("forge_adapters.wsfg");
    save_adapters(path, {ad});
    auto loaded = load_adapters(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].layer_name == "blocks.0.attn.q");
    CHECK(loaded[0].rank == 4);
    CHECK(loaded[0].alpha == 8.0);
    for (int64_t i = 0; i < ad.a.numel(); ++i)
        CHECK(loaded[0].a.data()[i] == (double)(float)ad.a.data()[i]);
    for (int64_t i = 0; i < ad.b.numel(); ++i)
        CHECK(loaded[0].b.data()[i] == (double)(float)ad.b.data()[i]);
    std::remove(path.c_str());
}

TEST_CASE("incomplete adapter file is rejected") {
    Rng rng(9);
    LoraAdapter ad = LoraAdapter::init("lin", 4, 4, 2, 4.0, rng);
    const std::string path = tmp_path("forge_adapters_bad.wsfg");
    // write A without B
    save_checkpoint(path, {{"lin.lora.A", ad.a}, {"lin.lora.alpha", Tensor::scalar(4.0)}});
    CHECK_THROWS(load_adapters(path));
    std::remove(path.c_str());
}

TEST_CASE("adapter file is small next to the full checkpoint") {
    Rng rng(10);
    Tensor w1 = Tensor::randn({768, 256}, rng);
    Tensor w2 = Tensor::randn({256, 768}, rng);
    const std::string full = tmp_path("forge_full.wsfg");
    const std::string adp = tmp_path("forge_adp.wsfg");
    save_checkpoint(full, {{"fc1", w1}, {"fc2", w2}});
    LoraAdapter a1 = LoraAdapter::init("fc1", 768, 256, 4, 8.0, rng);
    LoraAdapter a2 = LoraAdapter::init("fc2", 256, 768, 4, 8.0, rng);
    save_adapters(adp, {a1, a2});
    const auto full_sz = std::filesystem::file_size(full);
    const auto adp_sz = std::filesystem::file_size(adp);
    CHECK((double)adp_sz < 0.05 * (double)full_sz);
    std::remove(full.c_str());
    std::remove(adp.c_str());
}

TEST_CASE("gradients flow through the adapter but not frozen W") {
    Rng rng(11);
    Tensor w = Tensor::randn({6, 5}, rng);  // frozen
    Tensor x = Tensor::randn({3, 6}, rng);
    LoraAdapter ad = LoraAdapter::init("lin", 6, 5, 2, 4.0, rng);
    for (auto& v : ad.b.values()) v = rng.normal();

    {
        Tape tape;
        Tensor loss = mean(adapted_matmul(x, w, ad));
        tape.backward(loss);
    }
    CHECK(w.grad_if_any() == nullptr);
    REQUIRE(ad.a.grad_if_any() != nullptr);
    REQUIRE(ad.b.grad_if_any() != nullptr);

    // finite-difference check for A and B
    auto fa = [&](const Tensor& t) {
        LoraAdapter tmp = ad;
        tmp.a = t;
        return mean(adapted_matmul(x, w, tmp));
    };
    auto fb = [&](const Tensor& t) {
        LoraAdapter tmp = ad;
        tmp.b = t;
        return mean(adapted_matmul(x, w, tmp));
    };
    CHECK(finite_diff_check(fa, Tensor::from_data(ad.a.shape(), ad.a.values())) < 1e-4);
    CHECK(finite_diff_check(fb, Tensor::from_data(ad.b.shape(), ad.b.values())) < 1e-4);
}
