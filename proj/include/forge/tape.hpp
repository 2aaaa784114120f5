#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "forge/tensor.hpp"

namespace forge {

// Per-backward-call adjoint buffers, keyed by node. Keeping adjoints out of
// the tensors themselves makes repeated backward() calls accumulate exactly
// one contribution per call into leaf .grad.
class AdjointStore {
public:
    std::vector<double>& touch(const Tensor& t);
    std::vector<double>* find(const TensorNode* n);

    template <typename Fn>
    void for_each(Fn&& fn) {
        for (auto& [node, entry] : map_) fn(entry.first, entry.second);
    }

private:
    std::unordered_map<const TensorNode*, std::pair<Tensor, std::vector<double>>> map_;
};

// out_adj points at the output's adjoint buffer (length == output numel).
// A raw pointer is used because the store may rehash while the closure adds
// entries; vector data stays put under rehash, references into the map do not.
using BackwardFn = std::function<void(const double* out_adj, AdjointStore& adj)>;

// Ordered record of executed primitives. Construction pushes the tape as the
// active one for the current thread; destruction pops it. Ops record
// themselves only while a tape is active and some input requires grad.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(const Tensor& output, BackwardFn fn);
    std::size_t size() const { return recs_.size(); }

    // Reverse sweep from a scalar loss; leaf grads accumulate (+=).
    void backward(const Tensor& loss);

private:
    struct Rec {
        std::shared_ptr<TensorNode> out;
        BackwardFn fn;
    };
    std::vector<Rec> recs_;
    Tape* prev_ = nullptr;
};

}  // namespace forge
