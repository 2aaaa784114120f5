#include "forge/tape.hpp"

#include <stdexcept>

namespace forge {

namespace {
thread_local Tape* g_active = nullptr;
}

std::vector<double>& AdjointStore::touch(const Tensor& t) {
    auto it = map_.find(t.raw());
    if (it == map_.end()) {
        auto [pos, _] = map_.emplace(
            t.raw(), std::make_pair(t, std::vector<double>((std::size_t)t.numel(), 0.0)));
        return pos->second.second;
    }
    return it->second.second;
}

std::vector<double>* AdjointStore::find(const TensorNode* n) {
    auto it = map_.find(n);
    return it == map_.end() ? nullptr : &it->second.second;
}

Tape::Tape() {
    prev_ = g_active;
    g_active = this;
}

Tape::~Tape() {
    g_active = prev_;
}

Tape* Tape::active() {
    return g_active;
}

void Tape::record(const Tensor& output, BackwardFn fn) {
    recs_.push_back({output.handle(), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw std::invalid_argument("backward: loss must be a scalar tensor");
    AdjointStore adj;
    adj.touch(loss)[0] = 1.0;
    for (auto it = recs_.rbegin(); it != recs_.rend(); ++it) {
        if (const std::vector<double>* out_adj = adj.find(it->out.get()))
            it->fn(out_adj->data(), adj);
    }
    adj.for_each([](Tensor& t, std::vector<double>& a) {
        if (t.is_leaf() && t.requires_grad()) {
            std::vector<double>& g = t.grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += a[i];
        }
    });
}

}  // namespace forge
