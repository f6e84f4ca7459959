#include "retistab/image.hpp"

namespace retistab {

GrayImage to_grayscale(const Frame& f) {
    GrayImage g;
    g.width = f.width;
    g.height = f.height;
    g.px.resize(static_cast<std::size_t>(f.width) * f.height);
    const std::uint8_t* src = f.rgb.data();
    for (std::size_t i = 0; i < g.px.size(); ++i, src += 3) {
        g.px[i] = luma(src[0], src[1], src[2]);
    }
    return g;
}

GrayImage channel(const Frame& f, ColorChannel which) {
    GrayImage g;
    g.width = f.width;
    g.height = f.height;
    g.px.resize(static_cast<std::size_t>(f.width) * f.height);
    const std::uint8_t* src = f.rgb.data() + static_cast<int>(which);
    for (std::size_t i = 0; i < g.px.size(); ++i, src += 3) {
        g.px[i] = *src;
    }
    return g;
}

double mean_luma(const Frame& f) {
    if (f.rgb.empty()) return 0.0;
    std::uint64_t sum = 0;
    const std::uint8_t* src = f.rgb.data();
    const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
    for (std::size_t i = 0; i < n; ++i, src += 3) {
        sum += luma(src[0], src[1], src[2]);
    }
    return static_cast<double>(sum) / static_cast<double>(n);
}

}  // namespace retistab
