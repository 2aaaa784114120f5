#include "forge/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace forge {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

namespace {
std::shared_ptr<TensorNode> make_node(Shape shape, bool requires_grad) {
    for (int64_t d : shape)
        if (d <= 0) throw std::invalid_argument("tensor: non-positive extent in " + shape_str(shape));
    auto n = std::make_shared<TensorNode>();
    n->value.resize((std::size_t)shape_numel(shape), 0.0);
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return n;
}
}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return Tensor(make_node(std::move(shape), requires_grad));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& x : t.node_->value) x = v;
    return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return full({1}, v, requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    if ((int64_t)data.size() != shape_numel(shape))
        throw std::invalid_argument("tensor: data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
    Tensor t = zeros(std::move(shape), requires_grad);
    t.node_->value = std::move(data);
    return t;
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& x : t.node_->value) x = stddev * rng.normal();
    return t;
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("item(): tensor has " + std::to_string(numel()) + " elements");
    return node_->value[0];
}

Tensor& Tensor::set_requires_grad(bool rg) {
    node_->requires_grad = rg;
    return *this;
}

std::vector<double>& Tensor::grad() {
    if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
    return node_->grad;
}

const std::vector<double>* Tensor::grad_if_any() const {
    return node_->grad.empty() ? nullptr : &node_->grad;
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
}

}  // namespace forge
