#pragma once

#include <string>
#include <vector>

namespace forge {

// Dense H x W x 3 image, doubles in [0, 1], row-major (y, x, channel).
struct Image {
    int h = 0, w = 0;
    std::vector<double> px;

    Image() = default;
    Image(int height, int width) : h(height), w(width), px((std::size_t)height * width * 3, 0.0) {}

    double& at(int y, int x, int c) { return px[((std::size_t)y * w + x) * 3 + c]; }
    double at(int y, int x, int c) const { return px[((std::size_t)y * w + x) * 3 + c]; }

    bool operator==(const Image& o) const { return h == o.h && w == o.w && px == o.px; }
};

// Binary PPM (P6, maxval 255). Values are rounded to the nearest byte on
// write and mapped back as byte/255 on read.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

}  // namespace forge
