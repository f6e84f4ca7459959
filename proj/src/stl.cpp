#include "retistab/stl.hpp"

#include <cmath>
#include <fstream>

#include "retistab/errors.hpp"

namespace retistab {

Trajectory build_trajectory(const DetectionTimeline& timeline, int window) {
    if (window < 2) throw ValidationError("trajectory window must be >= 2");

    const int n = timeline.n_frames();
    Trajectory traj;
    traj.points.assign(static_cast<std::size_t>(n), std::nullopt);
    traj.gradient.assign(static_cast<std::size_t>(n), std::nullopt);
    traj.variance_series.assign(static_cast<std::size_t>(n), std::nullopt);

    for (int t = 0; t < n; ++t) {
        const auto& b = timeline.boxes[static_cast<std::size_t>(t)];
        if (b) traj.points[static_cast<std::size_t>(t)] = {{b->cx(), b->cy()}};
    }
    for (int t = 1; t < n; ++t) {
        const auto& p = traj.points[static_cast<std::size_t>(t)];
        const auto& q = traj.points[static_cast<std::size_t>(t - 1)];
        if (p && q) {
            traj.gradient[static_cast<std::size_t>(t)] =
                std::hypot((*p)[0] - (*q)[0], (*p)[1] - (*q)[1]);
        }
    }
    // Rolling population variance of the displacement magnitude over the
    // trailing window; defined wherever at least one gradient sample exists.
    for (int t = 0; t < n; ++t) {
        double sum = 0.0;
        int count = 0;
        for (int s = std::max(0, t - window + 1); s <= t; ++s) {
            if (traj.gradient[static_cast<std::size_t>(s)]) {
                sum += *traj.gradient[static_cast<std::size_t>(s)];
                ++count;
            }
        }
        if (count == 0) continue;
        const double mean = sum / count;
        double dev = 0.0;
        for (int s = std::max(0, t - window + 1); s <= t; ++s) {
            if (traj.gradient[static_cast<std::size_t>(s)]) {
                const double d = *traj.gradient[static_cast<std::size_t>(s)] - mean;
                dev += d * d;
            }
        }
        traj.variance_series[static_cast<std::size_t>(t)] = dev / count;
    }
    return traj;
}

std::set<int> filter_jitters(const Trajectory& traj, double grad_thresh) {
    if (grad_thresh <= 0.0) throw ValidationError("grad_thresh must be > 0");
    std::set<int> removed;
    for (int t = 0; t < traj.n_frames(); ++t) {
        const auto& g = traj.gradient[static_cast<std::size_t>(t)];
        if (g && *g > grad_thresh) {
            removed.insert(t - 1);
            removed.insert(t);
        }
    }
    return removed;
}

std::vector<ClipSegment> segment_clips(const DetectionTimeline& timeline,
                                       const std::set<int>& removed, double fps,
                                       double min_seconds) {
    if (fps <= 0.0) throw ValidationError("fps must be > 0");
    if (min_seconds <= 0.0) throw ValidationError("min_seconds must be > 0");

    const int min_len =
        static_cast<int>(std::ceil(min_seconds * fps - 1e-9));
    const int n = timeline.n_frames();

    std::vector<ClipSegment> clips;
    int run_start = -1;
    for (int t = 0; t <= n; ++t) {
        const bool kept = t < n && timeline.boxes[static_cast<std::size_t>(t)] &&
                          removed.find(t) == removed.end();
        if (kept && run_start < 0) run_start = t;
        if (!kept && run_start >= 0) {
            const int run_end = t - 1;
            if (run_end - run_start + 1 >= min_len) {
                clips.push_back({run_start, run_end,
                                 (run_end - run_start + 1) / fps});
            }
            run_start = -1;
        }
    }
    return clips;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const DetectionTimeline& timeline,
                          const std::set<int>& removed) {
    std::ofstream out(path);
    out << "frame,detected,cx,cy,gradient,rolling_variance,removed\n";
    out.precision(10);
    for (int t = 0; t < traj.n_frames(); ++t) {
        const std::size_t i = static_cast<std::size_t>(t);
        out << t << ',' << (timeline.boxes[i] ? 1 : 0) << ',';
        if (traj.points[i]) out << (*traj.points[i])[0] << ',' << (*traj.points[i])[1];
        else out << ',';
        out << ',';
        if (traj.gradient[i]) out << *traj.gradient[i];
        out << ',';
        if (traj.variance_series[i]) out << *traj.variance_series[i];
        out << ',' << (removed.count(t) ? 1 : 0) << '\n';
    }
    if (!out) throw WriteError("cannot write trajectory CSV to " + path.string());
}

}  // namespace retistab
