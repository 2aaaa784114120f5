#pragma once

#include <string>
#include <vector>

#include "forge/ops.hpp"
#include "forge/tensor.hpp"

namespace forge {

// Low-rank delta for one named linear layer. Base weights here use the
// row-vector convention y = x*W with W stored [d_in, d_out]; the adapter
// applies y += (alpha/r) * (x*A^T)*B^T without materializing the delta.
// A is [r, d_in] with N(0, 0.02^2) init; B is [d_out, r] and starts at zero
// so a fresh adapter is an exact identity.
struct LoraAdapter {
    std::string layer_name;
    Tensor a;  // [r, d_in]
    Tensor b;  // [d_out, r]
    int rank = 0;
    double alpha = 0.0;
    bool consumed = false;  // set once merged; a merged adapter must not be reused

    static LoraAdapter init(std::string layer_name, int64_t d_in, int64_t d_out, int rank,
                            double alpha, Rng& rng);

    int64_t param_count() const { return a.numel() + b.numel(); }
    double scaling() const { return alpha / (double)rank; }
};

// y = x*W + (alpha/r) * (x*A^T)*B^T ; x [n, d_in], W [d_in, d_out]
Tensor adapted_matmul(const Tensor& x, const Tensor& w, const LoraAdapter& adapter);

// W' = W + (alpha/r) * (B*A)^T in stored layout; rejects reuse of a merged
// adapter since applying the delta twice silently doubles it.
Tensor merge(const Tensor& w, LoraAdapter& adapter);

// WSFG container with "<layer>.lora.A" / ".lora.B" / ".lora.alpha" entries.
void save_adapters(const std::string& path, const std::vector<LoraAdapter>& adapters);
std::vector<LoraAdapter> load_adapters(const std::string& path);

}  // namespace forge
