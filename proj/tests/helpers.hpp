#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "retistab/image.hpp"

namespace testutil {

inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint8_t noise8(std::uint64_t seed, int x, int y) {
    return static_cast<std::uint8_t>(
        mix(seed ^ (static_cast<std::uint64_t>(x) << 32) ^
            static_cast<std::uint64_t>(static_cast<std::uint32_t>(y))) &
        0xff);
}

// Textured dark background with a uniform bright disc; disc texture is keyed
// to disc-relative coordinates so translating the disc translates its pixels.
inline retistab::Frame disc_frame(int w, int h, int cx, int cy, int r,
                                  int index = 0, std::uint64_t seed = 7,
                                  int disc_value = 220) {
    retistab::Frame f;
    f.index = index;
    f.width = w;
    f.height = h;
    f.rgb.resize(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t* p = f.pixel(x, y);
            const long long dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy <= static_cast<long long>(r) * r) {
                p[0] = p[1] = p[2] = static_cast<std::uint8_t>(disc_value);
            } else {
                const std::uint8_t v =
                    static_cast<std::uint8_t>(28 + (noise8(seed, x, y) % 24));
                p[0] = v;
                p[1] = v;
                p[2] = v;
            }
        }
    }
    return f;
}

inline retistab::GrayImage textured(int w, int h, std::uint64_t seed) {
    retistab::GrayImage g;
    g.width = w;
    g.height = h;
    g.px.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) g.at(x, y) = noise8(seed, x, y);
    }
    return g;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    static std::uint64_t counter = 0;
    const auto stamp = static_cast<std::uint64_t>(
        std::chrono::steady_clock::now().time_since_epoch().count());
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() /
        ("retistab_test_" + name + "_" + std::to_string(mix(stamp + ++counter) % 1000000));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

// Byte-level comparison of two directory trees (relative names + contents).
inline bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::vector<std::filesystem::path> ra, rb;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) ra.push_back(std::filesystem::relative(e.path(), a));
    }
    for (const auto& e : std::filesystem::recursive_directory_iterator(b)) {
        if (e.is_regular_file()) rb.push_back(std::filesystem::relative(e.path(), b));
    }
    std::sort(ra.begin(), ra.end());
    std::sort(rb.begin(), rb.end());
    if (ra != rb) return false;
    for (const auto& rel : ra) {
        if (read_bytes(a / rel) != read_bytes(b / rel)) return false;
    }
    return true;
}

}  // namespace testutil
