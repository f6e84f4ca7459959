#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <vector>

#include "retistab/detection.hpp"

namespace retistab {

// ODR center path with per-frame displacement magnitude and its rolling
// variance. Gaps (undetected frames) propagate; nothing is interpolated.
struct Trajectory {
    std::vector<std::optional<std::array<double, 2>>> points;    // (cx, cy)
    std::vector<std::optional<double>> gradient;                 // ||p_t - p_{t-1}||
    std::vector<std::optional<double>> variance_series;          // rolling var of gradient

    int n_frames() const { return static_cast<int>(points.size()); }
};

// Contiguous run of detected, jitter-free frames (inclusive bounds).
struct ClipSegment {
    int start_frame = 0;
    int end_frame = 0;
    double length_seconds = 0.0;

    int length() const { return end_frame - start_frame + 1; }
};

Trajectory build_trajectory(const DetectionTimeline& timeline, int window);

/// A frame t is removed iff gradient[t] > grad_thresh; both endpoints of a
/// super-threshold jump (t-1 and t) go into the removal set.
std::set<int> filter_jitters(const Trajectory& traj, double grad_thresh);

std::vector<ClipSegment> segment_clips(const DetectionTimeline& timeline,
                                       const std::set<int>& removed, double fps,
                                       double min_seconds);

/// Emits trajectory.csv: frame, detected, cx, cy, gradient, rolling_variance,
/// removed. Undefined values are left empty.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const DetectionTimeline& timeline,
                          const std::set<int>& removed);

}  // namespace retistab
