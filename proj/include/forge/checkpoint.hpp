#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "forge/tensor.hpp"

namespace forge {

// Checkpoint container, bit-exact across platforms. Layout:
//   magic "WSFG", u32 version = 1, u32 tensor count, then per tensor:
//   u32 name length, UTF-8 name bytes, u32 rank, u64 extents[rank],
//   little-endian f32 payload (row-major).
// In-memory tensors are f64; payloads narrow to f32 on save and re-widen
// on load.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace forge
