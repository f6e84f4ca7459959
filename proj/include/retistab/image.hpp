#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace retistab {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> px;  // row-major, width*height

    std::uint8_t at(int x, int y) const {
        return px[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return px[static_cast<std::size_t>(y) * width + x];
    }
    const std::uint8_t* row(int y) const {
        return px.data() + static_cast<std::size_t>(y) * width;
    }
};

// One RGB video frame, 8 bits per channel, row-major RGB triples.
struct Frame {
    int index = 0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // width*height*3

    const std::uint8_t* pixel(int x, int y) const {
        return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    std::uint8_t* pixel(int x, int y) {
        return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
};

// Immutable after load; safe to share read-only across threads.
struct VideoSequence {
    std::vector<Frame> frames;
    double fps = 0.0;
    std::string source_id;

    std::size_t size() const { return frames.size(); }
    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
};

enum class ColorChannel { R = 0, G = 1, B = 2 };

// BT.601 luma, round-to-nearest.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

GrayImage to_grayscale(const Frame& f);
GrayImage channel(const Frame& f, ColorChannel which);
double mean_luma(const Frame& f);

}  // namespace retistab
