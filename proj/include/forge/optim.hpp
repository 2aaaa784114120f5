#pragma once

#include <span>
#include <vector>

#include "forge/tensor.hpp"

namespace forge {

// Adam with bias correction. Moment buffers are zero-initialized and laid
// out per parameter in registration order; t increments once per step().
class Adam {
public:
    struct Hyper {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    Adam(std::vector<Tensor> params, Hyper hp);

    // reads each param's grad (empty grad counts as zero) and updates in place
    void step();
    void zero_grads();

    int64_t t() const { return t_; }
    const Hyper& hyper() const { return hp_; }
    std::span<const Tensor> params() const { return params_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    Hyper hp_;
    int64_t t_ = 0;
};

}  // namespace forge
