#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "retistab/image.hpp"

#include "json.hpp"

namespace retistab {

// Deterministic synthetic fundus-video description. Everything derives from
// the spec fields and the seed; two generations of the same spec are
// bit-identical.
struct SynthSpec {
    std::string name = "custom";
    int width = 1800;
    int height = 1800;
    double fps = 30.0;
    int n_frames = 150;

    struct Disc {
        double cx = 900.0;
        double cy = 900.0;
        double radius = 80.0;
        double brightness = 1.0;
    } disc;

    enum class JitterKind { none, sinusoid, random_walk, spike };
    struct Jitter {
        JitterKind kind = JitterKind::none;
        double amplitude = 0.0;
        int period = 30;
        std::vector<int> spike_frames;
    } jitter;

    struct Blur {
        std::set<int> frames;
        double sigma = 2.0;
    } blur;

    std::set<int> blink_frames;

    struct Specular {
        std::set<int> frames;
        double radius = 22.0;
        double cx = 0.0;  // image coordinates (camera-fixed)
        double cy = 0.0;
    } specular;

    double illumination_drift = 0.0;  // fractional brightness swing
    std::uint64_t seed = 1;
};

struct GroundTruth {
    std::vector<std::array<double, 2>> centers;  // per-frame disc center
    std::vector<std::uint8_t> blink;
    std::vector<std::uint8_t> blurred;
    std::vector<std::uint8_t> specular;
};

struct SynthResult {
    VideoSequence video;
    GroundTruth truth;
};

/// Per-frame scene translation implied by the jitter model.
std::vector<std::array<double, 2>> jitter_offsets(const SynthSpec& spec);

/// Renders frames on demand: the retina map is rasterized once, then each
/// frame samples it under the per-frame jitter offset.
class SynthRenderer {
public:
    explicit SynthRenderer(const SynthSpec& spec);
    Frame render(int t) const;
    const GroundTruth& truth() const { return truth_; }
    const SynthSpec& spec() const { return spec_; }

private:
    SynthSpec spec_;
    GroundTruth truth_;
    std::vector<std::array<double, 2>> offsets_;
    int margin_ = 0;
    int map_w_ = 0;
    int map_h_ = 0;
    std::vector<std::uint8_t> map_;  // RGB
};

SynthResult generate(const SynthSpec& spec, int threads = 1);

/// Fixed named suite covering clean, jittered, spiked, blinking, blurred and
/// specular cases, all 1800x1800 @ 30 fps, 150 frames.
std::vector<SynthSpec> standard_benchmarks();
SynthSpec benchmark_by_name(const std::string& name);

void write_truth_csv(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_truth_csv(const std::filesystem::path& path);

nlohmann::json spec_to_json(const SynthSpec& spec);
SynthSpec spec_from_json(const nlohmann::json& j);

}  // namespace retistab
