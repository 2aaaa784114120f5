#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "forge/checkpoint.hpp"
#include "forge/rng.hpp"
#include "forge/sha256.hpp"

using namespace forge;

namespace {
std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("checkpoint round trip is exact at f32") {
    Rng rng(4);
    Tensor a = Tensor::randn({5, 7}, rng);
    Tensor b = Tensor::randn({3}, rng, 10.0);
    const std::string path = tmp_path("forge_ckpt_test.wsfg");
    save_checkpoint(path, {{"layer.weight", a}, {"layer.bias", b}});

    auto loaded = load_checkpoint(path);
    REQUIRE(loaded.size() == 2);
    REQUIRE(loaded.count("layer.weight") == 1);
    CHECK(loaded["layer.weight"].shape() == Shape{5, 7});
    for (int64_t i = 0; i < a.numel(); ++i)
        CHECK(loaded["layer.weight"].data()[i] == (double)(float)a.data()[i]);
    for (int64_t i = 0; i < b.numel(); ++i)
        CHECK(loaded["layer.bias"].data()[i] == (double)(float)b.data()[i]);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint bytes are reproducible") {
    Rng rng(9);
    Tensor a = Tensor::randn({4, 4}, rng);
    const std::string p1 = tmp_path("forge_ckpt_a.wsfg");
    const std::string p2 = tmp_path("forge_ckpt_b.wsfg");
    save_checkpoint(p1, {{"w", a}});
    save_checkpoint(p2, {{"w", a}});
    CHECK(sha256_file_hex(p1) == sha256_file_hex(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("checkpoint header fields are as documented") {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    const std::string path = tmp_path("forge_ckpt_hdr.wsfg");
    save_checkpoint(path, {{"w", a}});
    std::ifstream f(path, std::ios::binary);
    char magic[4];
    f.read(magic, 4);
    CHECK(std::string(magic, 4) == "WSFG");
    uint32_t version = 0, count = 0;
    f.read((char*)&version, 4);
    f.read((char*)&count, 4);
    CHECK(version == 1);
    CHECK(count == 1);
    uint32_t name_len = 0;
    f.read((char*)&name_len, 4);
    CHECK(name_len == 1);
    std::remove(path.c_str());
}

TEST_CASE("loading a missing or corrupt file fails loudly") {
    CHECK_THROWS(load_checkpoint(tmp_path("forge_no_such_file.wsfg")));
    const std::string path = tmp_path("forge_ckpt_bad.wsfg");
    std::ofstream f(path, std::ios::binary);
    f << "NOPE";
    f.close();
    CHECK_THROWS(load_checkpoint(path));
    std::remove(path.c_str());
}
