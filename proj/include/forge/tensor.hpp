#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "forge/rng.hpp"

namespace forge {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    bool leaf = true;
};

// Shared-ownership handle over a dense row-major array of 64-bit floats.
// Values are written only at construction or by the optimizer; ops create
// fresh tensors, so a recorded graph stays valid until its tape is dropped.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int rank() const { return (int)node_->shape.size(); }
    int64_t dim(int i) const { return node_->shape[(std::size_t)i]; }
    int64_t numel() const { return (int64_t)node_->value.size(); }

    double* data() { return node_->value.data(); }
    const double* data() const { return node_->value.data(); }
    std::vector<double>& values() { return node_->value; }
    const std::vector<double>& values() const { return node_->value; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    Tensor& set_requires_grad(bool rg);
    bool is_leaf() const { return node_->leaf; }
    void mark_result() { node_->leaf = false; }

    // gradient accumulator; sized and zeroed on first access
    std::vector<double>& grad();
    const std::vector<double>* grad_if_any() const;
    void zero_grad();

    TensorNode* raw() const { return node_.get(); }
    const std::shared_ptr<TensorNode>& handle() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}
    std::shared_ptr<TensorNode> node_;
};

}  // namespace forge
