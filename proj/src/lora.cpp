#include "forge/lora.hpp"

#include <map>
#include <set>
#include <stdexcept>

#include "forge/checkpoint.hpp"

namespace forge {

LoraAdapter LoraAdapter::init(std::string layer_name, int64_t d_in, int64_t d_out, int rank,
                              double alpha, Rng& rng) {
    if (rank < 1) throw std::invalid_argument("lora: rank must be >= 1");
    LoraAdapter ad;
    ad.layer_name = std::move(layer_name);
    ad.a = Tensor::randn({rank, d_in}, rng, 0.02, true);
    ad.b = Tensor::zeros({d_out, rank}, true);
    ad.rank = rank;
    ad.alpha = alpha;
    return ad;
}

Tensor adapted_matmul(const Tensor& x, const Tensor& w, const LoraAdapter& adapter) {
    if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0))
        throw std::invalid_argument("adapted_matmul: x " + shape_str(x.shape()) + " vs W " +
                                    shape_str(w.shape()));
    if (adapter.a.dim(1) != w.dim(0) || adapter.b.dim(0) != w.dim(1))
        throw std::invalid_argument("adapted_matmul: adapter for " + adapter.layer_name +
                                    " does not fit W " + shape_str(w.shape()));
    Tensor base = matmul(x, w);
    Tensor u = matmul(x, adapter.a, false, true);        // [n, r]
    Tensor delta = matmul(u, adapter.b, false, true);    // [n, d_out]
    return add(base, scale(delta, adapter.scaling()));
}

Tensor merge(const Tensor& w, LoraAdapter& adapter) {
    if (adapter.consumed)
        throw std::invalid_argument("lora merge: adapter for " + adapter.layer_name +
                                    " was already merged");
    if (adapter.a.dim(1) != w.dim(0) || adapter.b.dim(0) != w.dim(1))
        throw std::invalid_argument("lora merge: adapter for " + adapter.layer_name +
                                    " does not fit W " + shape_str(w.shape()));
    // stored-layout delta: (B*A)^T == A^T * B^T
    Tensor delta = matmul(adapter.a, adapter.b, true, true);  // [d_in, d_out]
    Tensor merged = add(w, scale(delta, adapter.scaling()));
    adapter.consumed = true;
    return merged;
}

void save_adapters(const std::string& path, const std::vector<LoraAdapter>& adapters) {
    std::vector<std::pair<std::string, Tensor>> entries;
    for (const LoraAdapter& ad : adapters) {
        entries.emplace_back(ad.layer_name + ".lora.A", ad.a);
        entries.emplace_back(ad.layer_name + ".lora.B", ad.b);
        entries.emplace_back(ad.layer_name + ".lora.alpha", Tensor::scalar(ad.alpha));
    }
    save_checkpoint(path, entries);
}

std::vector<LoraAdapter> load_adapters(const std::string& path) {
    std::map<std::string, Tensor> entries = load_checkpoint(path);
    std::set<std::string> layers;
    for (const auto& [name, t] : entries) {
        const std::size_t pos = name.rfind(".lora.");
        if (pos == std::string::npos)
            throw std::runtime_error("adapters: unexpected entry " + name + " in " + path);
        layers.insert(name.substr(0, pos));
    }
    std::vector<LoraAdapter> out;
    for (const std::string& layer : layers) {
        const auto a_it = entries.find(layer + ".lora.A");
        const auto b_it = entries.find(layer + ".lora.B");
        const auto alpha_it = entries.find(layer + ".lora.alpha");
        if (a_it == entries.end() || b_it == entries.end() || alpha_it == entries.end())
            throw std::runtime_error("adapters: incomplete A/B/alpha triple for layer " + layer);
        LoraAdapter ad;
        ad.layer_name = layer;
        ad.a = a_it->second;
        ad.b = b_it->second;
        ad.a.set_requires_grad(true);
        ad.b.set_requires_grad(true);
        ad.rank = (int)ad.a.dim(0);
        ad.alpha = alpha_it->second.item();
        if (ad.b.dim(1) != ad.rank)
            throw std::runtime_error("adapters: rank mismatch between A and B for " + layer);
        out.push_back(std::move(ad));
    }
    return out;
}

}  // namespace forge
