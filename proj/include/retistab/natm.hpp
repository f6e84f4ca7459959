#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "retistab/flow.hpp"
#include "retistab/stl.hpp"

namespace retistab {

// Square ODR-sized reference patch, anchored at its top-left corner in the
// source frame.
struct Template {
    std::vector<std::uint8_t> patch;  // side*side RGB
    int side = 0;
    int source_frame = 0;
    int anchor_x = 0;
    int anchor_y = 0;

    const std::uint8_t* pixel(int x, int y) const {
        return patch.data() + 3 * (static_cast<std::size_t>(y) * side + x);
    }
};

// Boolean exclusion map over a patch or frame region (true = excluded).
struct SpecularMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // 0/1
    int threshold = 0;
    int filter_kernel = 0;

    bool at(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x] != 0;
    }
};

struct MaskPolicy {
    bool enabled = true;
    int threshold = 220;   // on both B and G channels
    int kernel = 5;        // mean-filter side, odd
};

struct MatchResult {
    int frame_index = 0;
    int x = 0;  // top-left of best match
    int y = 0;
    double score = 0.0;           // mean masked per-pixel RGB abs difference
    double valid_fraction = 1.0;  // fraction of unmasked pixels
    bool flagged = false;         // unreliable match, position fell back
};

/// Window-length interval inside the clip minimizing the sum of trajectory
/// gradients; ties resolve to the earliest interval. A clip shorter than the
/// window shrinks the window to the clip length.
std::pair<int, int> select_smooth_window(const Trajectory& traj,
                                         const ClipSegment& clip, int window);

/// Frame in [first, last] whose incoming frame pair has the lowest flow
/// variance (var_mag); the first frame is scored with its outgoing pair.
/// Ties resolve to the earliest frame.
int select_template_frame(const VideoSequence& seq, int first, int last,
                          const FlowParams& params);

Template extract_template(const VideoSequence& seq, int frame_index,
                          const DetectionTimeline& timeline, int diameter);

/// Raw bit = (B > threshold AND G > threshold), mean-filtered with the kernel
/// and re-thresholded at 0.5.
SpecularMask build_specular_mask(const std::uint8_t* rgb, int width, int height,
                                 int threshold, int filter_kernel);
SpecularMask build_specular_mask(const Frame& frame, const MaskPolicy& policy);
SpecularMask build_specular_mask(const Template& tmpl, const MaskPolicy& policy);

/// Best masked mean-absolute-RGB-difference match in a square window of the
/// given radius around (center_x, center_y) (the ODR center to search about).
/// Candidates with valid_fraction < 0.25 are ineligible; when none qualifies
/// the result is flagged and the position falls back to the search center.
MatchResult masked_match(const Frame& frame, const Template& tmpl,
                         const MaskPolicy& policy, int center_x, int center_y,
                         int radius);

enum class PadPolicy { replicate };
enum class SearchMode { chained, per_frame_box };

struct StabilizeParams {
    int crop_size = 640;
    PadPolicy pad = PadPolicy::replicate;
    MaskPolicy mask;
    int search_radius = -1;  // -1 = template side (the ODR diameter)
    SearchMode search = SearchMode::chained;
};

struct StabilizedClip {
    VideoSequence video;
    std::vector<MatchResult> matches;  // indexed by original frame
};

/// Matches the template in every clip frame and emits the ODR-centered crop.
StabilizedClip stabilize_clip(const VideoSequence& seq, const ClipSegment& clip,
                              const Template& tmpl, const DetectionTimeline& timeline,
                              const StabilizeParams& params);

void write_matches_csv(const std::filesystem::path& path,
                       const std::vector<MatchResult>& matches);

}  // namespace retistab
