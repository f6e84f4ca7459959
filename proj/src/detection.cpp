#include "retistab/detection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include "retistab/errors.hpp"
#include "retistab/parallel.hpp"

#include "json.hpp"

namespace retistab {

std::size_t DetectionTimeline::detected_count() const {
    return static_cast<std::size_t>(
        std::count_if(boxes.begin(), boxes.end(),
                      [](const auto& b) { return b.has_value(); }));
}

std::optional<BoundingBox> detect_classical(const Frame& frame,
                                            const DetectorParams& params) {
    const std::size_t n = static_cast<std::size_t>(frame.width) * frame.height;
    if (n == 0) return std::nullopt;

    std::vector<std::uint8_t> gray(n);
    std::array<std::uint32_t, 256> hist{};
    std::uint64_t luma_sum = 0;
    const std::uint8_t* src = frame.rgb.data();
    for (std::size_t i = 0; i < n; ++i, src += 3) {
        const std::uint8_t g = luma(src[0], src[1], src[2]);
        gray[i] = g;
        ++hist[g];
        luma_sum += g;
    }
    if (static_cast<double>(luma_sum) / n < params.min_mean_luma) {
        return std::nullopt;  // blink / black-frame guard
    }

    // Quantile threshold; bright set is strictly above it, so a uniform frame
    // yields no detection.
    const double target = params.intensity_quantile * static_cast<double>(n);
    std::uint64_t cum = 0;
    int threshold = 255;
    for (int v = 0; v < 256; ++v) {
        cum += hist[v];
        if (static_cast<double>(cum) >= target) {
            threshold = v;
            break;
        }
    }

    // Largest 8-connected component of the bright set.
    const int w = frame.width, h = frame.height;
    std::vector<std::uint8_t> visited(n, 0);
    std::vector<std::int32_t> stack;
    std::size_t best_area = 0;
    std::uint64_t best_luma_sum = 0;
    int best_minx = 0, best_miny = 0, best_maxx = 0, best_maxy = 0;
    std::uint64_t best_sumx = 0, best_sumy = 0;

    for (std::size_t start = 0; start < n; ++start) {
        if (visited[start] || gray[start] <= threshold) continue;
        std::size_t area = 0;
        std::uint64_t comp_luma = 0, sumx = 0, sumy = 0;
        int minx = w, miny = h, maxx = -1, maxy = -1;
        stack.clear();
        stack.push_back(static_cast<std::int32_t>(start));
        visited[start] = 1;
        while (!stack.empty()) {
            const std::int32_t idx = stack.back();
            stack.pop_back();
            const int x = idx % w, y = idx / w;
            ++area;
            comp_luma += gray[idx];
            sumx += static_cast<std::uint64_t>(x);
            sumy += static_cast<std::uint64_t>(y);
            minx = std::min(minx, x);
            maxx = std::max(maxx, x);
            miny = std::min(miny, y);
            maxy = std::max(maxy, y);
            for (int dy = -1; dy <= 1; ++dy) {
                const int ny = y + dy;
                if (ny < 0 || ny >= h) continue;
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx;
                    if (nx < 0 || nx >= w) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (!visited[ni] && gray[ni] > threshold) {
                        visited[ni] = 1;
                        stack.push_back(static_cast<std::int32_t>(ni));
                    }
                }
            }
        }
        if (area > best_area) {
            best_area = area;
            best_luma_sum = comp_luma;
            best_sumx = sumx;
            best_sumy = sumy;
            best_minx = minx;
            best_miny = miny;
            best_maxx = maxx;
            best_maxy = maxy;
        }
    }

    if (best_area == 0 ||
        static_cast<double>(best_area) < params.min_area_frac * static_cast<double>(n)) {
        return std::nullopt;
    }
    // Place the box around the component centroid rather than its extremal
    // pixels: the centroid averages the whole bright mass, so the reported
    // center is far less sensitive to noise flicker on the rim.
    BoundingBox box;
    box.w = best_maxx - best_minx + 1;
    box.h = best_maxy - best_miny + 1;
    const double centx = static_cast<double>(best_sumx) / static_cast<double>(best_area);
    const double centy = static_cast<double>(best_sumy) / static_cast<double>(best_area);
    box.x = std::clamp(static_cast<int>(std::lround(centx - (box.w - 1) / 2.0)),
                       0, w - box.w);
    box.y = std::clamp(static_cast<int>(std::lround(centy - (box.h - 1) / 2.0)),
                       0, h - box.h);
    box.score = static_cast<double>(best_luma_sum) / best_area / 255.0;
    return box;
}

DetectionTimeline import_detections(const std::filesystem::path& path, int n_frames,
                                    int frame_width, int frame_height,
                                    double min_score) {
    nlohmann::json records;
    try {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open detections file: " + path.string());
        in >> records;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed detections JSON in " + path.string() + ": " +
                         e.what());
    }
    if (!records.is_array()) {
        throw ParseError("detections file must hold a JSON array: " + path.string());
    }

    DetectionTimeline timeline;
    timeline.boxes.assign(static_cast<std::size_t>(n_frames), std::nullopt);
    for (const auto& rec : records) {
        int frame_index;
        BoundingBox box;
        try {
            frame_index = rec.at("frame_index").get<int>();
            box.x = static_cast<int>(std::lround(rec.at("x").get<double>()));
            box.y = static_cast<int>(std::lround(rec.at("y").get<double>()));
            box.w = static_cast<int>(std::lround(rec.at("w").get<double>()));
            box.h = static_cast<int>(std::lround(rec.at("h").get<double>()));
            box.score = rec.value("score", 1.0);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("bad detection record in " + path.string() + ": " +
                             e.what());
        }
        if (frame_index < 0 || frame_index >= n_frames) {
            throw IndexRangeError("detection frame_index " + std::to_string(frame_index) +
                                  " outside [0," + std::to_string(n_frames) + ")");
        }
        if (box.w <= 0 || box.h <= 0) {
            throw ValidationError("detection box with non-positive size at frame " +
                                  std::to_string(frame_index));
        }
        box.score = std::clamp(box.score, 0.0, 1.0);
        if (box.score < min_score) continue;

        // Clamp to frame bounds; fully outside boxes degenerate to nothing.
        const int x2 = std::min(box.x + box.w, frame_width);
        const int y2 = std::min(box.y + box.h, frame_height);
        box.x = std::max(box.x, 0);
        box.y = std::max(box.y, 0);
        box.w = x2 - box.x;
        box.h = y2 - box.y;
        if (box.w <= 0 || box.h <= 0) continue;

        auto& slot = timeline.boxes[static_cast<std::size_t>(frame_index)];
        if (!slot || box.score > slot->score) slot = box;
    }
    return timeline;
}

DetectionTimeline run_detector(const VideoSequence& seq, DetectorMode mode,
                               const DetectorParams& params,
                               const std::optional<std::filesystem::path>& detections,
                               int threads) {
    if (mode == DetectorMode::file) {
        if (!detections) {
            throw ValidationError("file detector mode needs a detections path");
        }
        return import_detections(*detections, static_cast<int>(seq.size()),
                                 seq.width(), seq.height(), params.min_score);
    }
    DetectionTimeline timeline;
    timeline.boxes.assign(seq.size(), std::nullopt);
    parallel_for(seq.size(), threads, [&](std::size_t i) {
        timeline.boxes[i] = detect_classical(seq.frames[i], params);
    });
    return timeline;
}

int estimate_odr_diameter(const DetectionTimeline& timeline) {
    std::vector<double> sides;
    for (const auto& b : timeline.boxes) {
        if (b) sides.push_back((b->w + b->h) / 2.0);
    }
    if (sides.empty()) {
        throw NoOdrError("cannot estimate ODR diameter: timeline has no detections");
    }
    std::sort(sides.begin(), sides.end());
    const std::size_t m = sides.size();
    const double median = (m % 2 == 1)
        ? sides[m / 2]
        : 0.5 * (sides[m / 2 - 1] + sides[m / 2]);
    return static_cast<int>(std::lround(median));
}

void export_detections(const DetectionTimeline& timeline,
                       const std::filesystem::path& path) {
    nlohmann::json records = nlohmann::json::array();
    for (int i = 0; i < timeline.n_frames(); ++i) {
        const auto& b = timeline.boxes[static_cast<std::size_t>(i)];
        if (!b) continue;
        records.push_back({{"frame_index", i},
                           {"x", b->x},
                           {"y", b->y},
                           {"w", b->w},
                           {"h", b->h},
                           {"score", b->score}});
    }
    std::ofstream out(path);
    out << records.dump(2) << "\n";
    if (!out) throw WriteError("cannot write detections to " + path.string());
}

}  // namespace retistab
