#include "forge/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace forge {

Adam::Adam(std::vector<Tensor> params, Hyper hp) : params_(std::move(params)), hp_(hp) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
        m_.emplace_back((std::size_t)p.numel(), 0.0);
        v_.emplace_back((std::size_t)p.numel(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(hp_.beta1, (double)t_);
    const double bc2 = 1.0 - std::pow(hp_.beta2, (double)t_);
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        const std::vector<double>* g = p.grad_if_any();
        if (g && g->size() != p.values().size())
            throw std::invalid_argument("adam: grad/param length mismatch");
        double* pv = p.data();
        std::vector<double>& m = m_[pi];
        std::vector<double>& v = v_[pi];
        const std::size_t n = m.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g ? (*g)[i] : 0.0;
            m[i] = hp_.beta1 * m[i] + (1.0 - hp_.beta1) * gi;
            v[i] = hp_.beta2 * v[i] + (1.0 - hp_.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            pv[i] -= hp_.lr * mhat / (std::sqrt(vhat) + hp_.eps);
        }
    }
}

void Adam::zero_grads() {
    for (Tensor& p : params_) p.zero_grad();
}

}  // namespace forge
