#pragma once

#include <functional>
#include <span>
#include <vector>

#include "forge/tape.hpp"
#include "forge/tensor.hpp"

// Primitive forward ops. Each records itself on the active tape when any
// input requires grad. Shape rules are strict: no broadcasting except the
// constant in scale(). Violations throw std::invalid_argument naming the op
// and the offending shapes.
namespace forge {

// 2-D product C = op(A) * op(B) with optional stored-transpose flags.
Tensor matmul(const Tensor& a, const Tensor& b, bool ta = false, bool tb = false);

Tensor add(const Tensor& a, const Tensor& b);   // same shape
Tensor mul(const Tensor& a, const Tensor& b);   // same shape, elementwise
Tensor scale(const Tensor& x, double c);        // constant * tensor

// gelu, tanh approximation:
//   0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))
Tensor gelu(const Tensor& x);

Tensor softmax_lastdim(const Tensor& x);

// y = gain * (x - mean)/sqrt(var + eps) + bias, per row over the last dim;
// gain/bias are 1-D of that dim.
Tensor layernorm_lastdim(const Tensor& x, const Tensor& gain, const Tensor& bias,
                         double eps = 1e-5);

// rows of `table` ([V, d]) gathered by id; ids out of range are rejected.
Tensor embed_lookup(const Tensor& table, std::span<const int> ids);

Tensor concat_lastdim(std::span<const Tensor> xs);

// axis must be 0 or the last axis.
Tensor slice(const Tensor& x, int axis, int64_t start, int64_t len);

Tensor reshape(const Tensor& x, Shape new_shape);

Tensor mean(const Tensor& x);  // scalar mean over all elements

// mean over rows of -log softmax(logits_row)[target]; optional per-row
// weights give a weighted mean (sum w_i * nll_i / sum w_i).
Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> targets,
                            std::span<const double> weights = {});

Tensor mse(const Tensor& a, const Tensor& b);  // scalar mean squared error

// max over coordinates of |analytic - central difference| /
// max(1e-8, |analytic| + |numeric|) for a scalar-valued f.
double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                         double h = 1e-5);

}  // namespace forge
