#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "retistab/image.hpp"

namespace retistab {

struct BoundingBox {
    int x = 0;  // top-left
    int y = 0;
    int w = 0;
    int h = 0;
    double score = 0.0;  // in [0,1]

    // Center in pixel-index coordinates: the box spans pixels
    // [x, x+w-1] x [y, y+h-1], so its middle pixel is at x + (w-1)/2.
    double cx() const { return x + (w - 1) / 2.0; }
    double cy() const { return y + (h - 1) / 2.0; }
};

// Per-frame ODR detections; at most one box per frame (highest score kept).
struct DetectionTimeline {
    std::vector<std::optional<BoundingBox>> boxes;

    int n_frames() const { return static_cast<int>(boxes.size()); }
    std::size_t detected_count() const;
};

struct DetectorParams {
    double intensity_quantile = 0.99;
    double min_area_frac = 0.002;
    double min_mean_luma = 20.0;  // blink / black-frame guard
    double min_score = 0.0;       // applied to imported detections
};

/// Classical bright-disc detector: thresholds grayscale at the intensity
/// quantile and keeps the largest connected bright component. Absence is a
/// "no detection" return, not an error.
std::optional<BoundingBox> detect_classical(const Frame& frame,
                                            const DetectorParams& params = {});

/// Reads a detections JSON file (array of {frame_index,x,y,w,h,score}) as
/// produced out-of-band by a neural detector. Boxes are clamped to the frame
/// bounds; per frame the best-score box wins.
DetectionTimeline import_detections(const std::filesystem::path& path, int n_frames,
                                    int frame_width, int frame_height,
                                    double min_score = 0.0);

enum class DetectorMode { classical, file };

DetectionTimeline run_detector(const VideoSequence& seq, DetectorMode mode,
                               const DetectorParams& params,
                               const std::optional<std::filesystem::path>& detections,
                               int threads = 1);

/// round(median of (w+h)/2 over detected frames). Throws NoOdrError when the
/// timeline has no detections.
int estimate_odr_diameter(const DetectionTimeline& timeline);

/// Serializes a timeline in the detections JSON schema (for the `detect`
/// subcommand).
void export_detections(const DetectionTimeline& timeline,
                       const std::filesystem::path& path);

}  // namespace retistab
