#include "forge/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace forge {

void write_ppm(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_ppm: cannot open " + path);
    f << "P6\n" << img.w << " " << img.h << "\n255\n";
    std::vector<unsigned char> bytes(img.px.size());
    for (std::size_t i = 0; i < img.px.size(); ++i) {
        double v = img.px[i];
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        bytes[i] = (unsigned char)std::lround(v * 255.0);
    }
    f.write((const char*)bytes.data(), (std::streamsize)bytes.size());
}

Image read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_ppm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P6") throw std::runtime_error("read_ppm: not a P6 file: " + path);
    int w = 0, h = 0, maxval = 0;
    f >> w >> h >> maxval;
    if (w <= 0 || h <= 0 || maxval != 255)
        throw std::runtime_error("read_ppm: unsupported header in " + path);
    f.get();  // single whitespace after header
    Image img(h, w);
    std::vector<unsigned char> bytes((std::size_t)h * w * 3);
    f.read((char*)bytes.data(), (std::streamsize)bytes.size());
    if (!f) throw std::runtime_error("read_ppm: truncated file " + path);
    for (std::size_t i = 0; i < bytes.size(); ++i) img.px[i] = bytes[i] / 255.0;
    return img;
}

}  // namespace forge
