#pragma once

#include <array>
#include <vector>

#include "retistab/image.hpp"

namespace retistab {

struct FlowParams {
    int block_size = 16;
    int search_radius = 24;
};

// Per-block integer displacement field between two consecutive frames.
struct FlowField {
    int grid_w = 0;
    int grid_h = 0;
    int block_size = 0;
    int search_radius = 0;
    std::vector<std::array<int, 2>> vectors;  // (u, v), row-major blocks

    std::size_t n_blocks() const { return vectors.size(); }
};

struct FlowStats {
    double var_u = 0.0;
    double var_v = 0.0;
    double var_mag = 0.0;
    double mean_u = 0.0;
    double mean_v = 0.0;
};

/// Exhaustive SAD block matching. For each non-overlapping block of `prev`
/// the displacement within the search window minimizing the sum of absolute
/// differences against `next`; ties broken by smallest ||(u,v)||, then
/// smallest v, then smallest u.
FlowField compute_flow(const GrayImage& prev, const GrayImage& next,
                       int block_size, int search_radius);

/// Population variance over blocks of u, v and ||(u,v)||, two-pass in
/// row-major block order so the result is schedule-independent.
FlowStats flow_variance(const FlowField& field);

/// compute_flow + flow_variance over each consecutive pair in
/// [first, last] (inclusive frame indices).
std::vector<FlowStats> clip_flow_profile(const VideoSequence& seq, int first,
                                         int last, const FlowParams& params,
                                         int threads = 1);

}  // namespace retistab
