#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace forge {

// Incremental SHA-256 (FIPS 180-4); used for content hashes and cache keys.
class Sha256 {
public:
    Sha256();
    void update(const void* data, std::size_t len);
    void update(const std::string& s) { update(s.data(), s.size()); }
    std::string hex_digest();  // finalizes; further updates are invalid

private:
    void process_block(const uint8_t* block);
    uint32_t h_[8];
    uint8_t buf_[64];
    std::size_t buf_len_ = 0;
    uint64_t total_ = 0;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file_hex(const std::string& path);  // throws on missing file

}  // namespace forge
