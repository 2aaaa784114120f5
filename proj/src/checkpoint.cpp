#include "forge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace forge {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write((const char*)&v, sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v{};
    f.read((char*)&v, sizeof(T));
    if (!f) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

constexpr char kMagic[4] = {'W', 'S', 'F', 'G'};

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for write");
    f.write(kMagic, 4);
    write_pod<uint32_t>(f, 1);
    write_pod<uint32_t>(f, (uint32_t)tensors.size());
    for (const auto& [name, t] : tensors) {
        write_pod<uint32_t>(f, (uint32_t)name.size());
        f.write(name.data(), (std::streamsize)name.size());
        write_pod<uint32_t>(f, (uint32_t)t.rank());
        for (int i = 0; i < t.rank(); ++i) write_pod<uint64_t>(f, (uint64_t)t.dim(i));
        std::vector<float> payload((std::size_t)t.numel());
        for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = (float)t.data()[i];
        f.write((const char*)payload.data(), (std::streamsize)(payload.size() * sizeof(float)));
    }
    if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const uint32_t version = read_pod<uint32_t>(f);
    if (version != 1)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    const uint32_t count = read_pod<uint32_t>(f);
    std::map<std::string, Tensor> out;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_pod<uint32_t>(f);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        const uint32_t rank = read_pod<uint32_t>(f);
        Shape shape((std::size_t)rank);
        for (uint32_t r = 0; r < rank; ++r) shape[r] = (int64_t)read_pod<uint64_t>(f);
        std::vector<float> payload((std::size_t)shape_numel(shape));
        f.read((char*)payload.data(), (std::streamsize)(payload.size() * sizeof(float)));
        if (!f) throw std::runtime_error("checkpoint: truncated payload in " + path);
        std::vector<double> data(payload.size());
        for (std::size_t j = 0; j < payload.size(); ++j) data[j] = (double)payload[j];
        out.emplace(name, Tensor::from_data(std::move(shape), std::move(data)));
    }
    return out;
}

}  // namespace forge
