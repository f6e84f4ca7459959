#include "retistab/natm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "retistab/errors.hpp"

namespace retistab {
namespace {

struct Offset {
    int dx;
    int dy;
};

std::vector<Offset> sorted_offsets(int radius) {
    std::vector<Offset> out;
    out.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1));
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) out.push_back({dx, dy});
    }
    // Smallest displacement first, then row-major.
    std::sort(out.begin(), out.end(), [](const Offset& a, const Offset& b) {
        const int na = a.dx * a.dx + a.dy * a.dy;
        const int nb = b.dx * b.dx + b.dy * b.dy;
        if (na != nb) return na < nb;
        if (a.dy != b.dy) return a.dy < b.dy;
        return a.dx < b.dx;
    });
    return out;
}

struct CandidateScore {
    double score = 0.0;
    std::uint64_t count = 0;
    bool aborted = false;
};

CandidateScore score_candidate(const Frame& frame, const Template& tmpl,
                               const SpecularMask* tmask, const SpecularMask* fmask,
                               int px, int py, double abort_sum) {
    const int side = tmpl.side;
    std::uint64_t sum = 0;
    std::uint64_t count = 0;
    for (int row = 0; row < side; ++row) {
        const std::uint8_t* a = tmpl.pixel(0, row);
        const std::uint8_t* b = frame.pixel(px, py + row);
        if (!tmask) {
            std::uint32_t rsum = 0;
            const int n = side * 3;
            for (int i = 0; i < n; ++i) {
                rsum += static_cast<std::uint32_t>(a[i] > b[i] ? a[i] - b[i]
                                                               : b[i] - a[i]);
            }
            sum += rsum;
            count += static_cast<std::uint64_t>(side);
        } else {
            const std::uint8_t* tm =
                tmask->bits.data() + static_cast<std::size_t>(row) * side;
            const std::uint8_t* fm = fmask->bits.data() +
                                     static_cast<std::size_t>(py + row) * fmask->width +
                                     px;
            for (int i = 0; i < side; ++i) {
                if (tm[i] | fm[i]) continue;
                const std::uint8_t* ta = a + 3 * i;
                const std::uint8_t* tb = b + 3 * i;
                sum += static_cast<std::uint32_t>(
                    (ta[0] > tb[0] ? ta[0] - tb[0] : tb[0] - ta[0]) +
                    (ta[1] > tb[1] ? ta[1] - tb[1] : tb[1] - ta[1]) +
                    (ta[2] > tb[2] ? ta[2] - tb[2] : tb[2] - ta[2]));
                ++count;
            }
        }
        // The final score can only grow from here (count <= side*side), so a
        // partial sum past the bound rules the candidate out exactly.
        if (static_cast<double>(sum) >= abort_sum) {
            return {0.0, 0, true};
        }
    }
    CandidateScore cs;
    cs.count = count;
    cs.score = count == 0 ? std::numeric_limits<double>::infinity()
                          : static_cast<double>(sum) / (3.0 * static_cast<double>(count));
    return cs;
}

}  // namespace

std::pair<int, int> select_smooth_window(const Trajectory& traj,
                                         const ClipSegment& clip, int window) {
    const int w = std::min(window, clip.length());
    if (w < 1) throw ValidationError("window must be >= 1");

    double best_sum = std::numeric_limits<double>::infinity();
    int best_start = clip.start_frame;
    for (int a = clip.start_frame; a + w - 1 <= clip.end_frame; ++a) {
        double sum = 0.0;
        for (int t = a; t < a + w; ++t) {
            const auto& g = traj.gradient[static_cast<std::size_t>(t)];
            if (g) sum += *g;
        }
        if (sum < best_sum) {
            best_sum = sum;
            best_start = a;
        }
    }
    return {best_start, best_start + w - 1};
}

int select_template_frame(const VideoSequence& seq, int first, int last,
                          const FlowParams& params) {
    if (first == last) return first;
    std::vector<GrayImage> gray(static_cast<std::size_t>(last - first + 1));
    for (std::size_t i = 0; i < gray.size(); ++i) {
        gray[i] = to_grayscale(seq.frames[static_cast<std::size_t>(first) + i]);
    }
    std::vector<double> value(gray.size());
    for (std::size_t i = 1; i < gray.size(); ++i) {
        const FlowField f = compute_flow(gray[i - 1], gray[i], params.block_size,
                                         params.search_radius);
        value[i] = flow_variance(f).var_mag;
    }
    // The first frame has no incoming pair; it is scored with its outgoing
    // one so it stays selectable.
    value[0] = value[1];

    std::size_t best = 0;
    for (std::size_t i = 1; i < value.size(); ++i) {
        if (value[i] < value[best]) best = i;
    }
    return first + static_cast<int>(best);
}

Template extract_template(const VideoSequence& seq, int frame_index,
                          const DetectionTimeline& timeline, int diameter) {
    if (diameter <= 0) throw ValidationError("template diameter must be > 0");
    const Frame& frame = seq.frames[static_cast<std::size_t>(frame_index)];
    if (diameter > std::min(frame.width, frame.height)) {
        throw TemplateTooLargeError("template side " + std::to_string(diameter) +
                                    " exceeds frame dimensions");
    }
    const auto& box = timeline.boxes[static_cast<std::size_t>(frame_index)];
    if (!box) {
        throw ValidationError("template frame " + std::to_string(frame_index) +
                              " has no detection");
    }
    Template tmpl;
    tmpl.side = diameter;
    tmpl.source_frame = frame_index;
    tmpl.anchor_x = std::clamp(static_cast<int>(std::lround(box->cx())) - diameter / 2,
                               0, frame.width - diameter);
    tmpl.anchor_y = std::clamp(static_cast<int>(std::lround(box->cy())) - diameter / 2,
                               0, frame.height - diameter);
    tmpl.patch.resize(static_cast<std::size_t>(diameter) * diameter * 3);
    for (int row = 0; row < diameter; ++row) {
        std::copy_n(frame.pixel(tmpl.anchor_x, tmpl.anchor_y + row),
                    static_cast<std::size_t>(diameter) * 3,
                    tmpl.patch.data() + static_cast<std::size_t>(row) * diameter * 3);
    }
    return tmpl;
}

SpecularMask build_specular_mask(const std::uint8_t* rgb, int width, int height,
                                 int threshold, int filter_kernel) {
    if (threshold < 0 || threshold > 255) {
        throw ValidationError("specular threshold must be in [0,255]");
    }
    if (filter_kernel < 1 || filter_kernel % 2 == 0) {
        throw ValidationError("specular filter kernel must be odd and >= 1");
    }

    SpecularMask mask;
    mask.width = width;
    mask.height = height;
    mask.threshold = threshold;
    mask.filter_kernel = filter_kernel;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    mask.bits.assign(n, 0);

    std::vector<std::uint8_t> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        raw[i] = (rgb[3 * i + 2] > threshold && rgb[3 * i + 1] > threshold) ? 1 : 0;
    }
    if (filter_kernel == 1) {
        mask.bits = std::move(raw);
        return mask;
    }

    // Mean filter (zero padded) then re-threshold at 0.5 via integer counts.
    std::vector<std::uint32_t> integral(static_cast<std::size_t>(width + 1) * (height + 1), 0);
    for (int y = 0; y < height; ++y) {
        std::uint32_t row = 0;
        for (int x = 0; x < width; ++x) {
            row += raw[static_cast<std::size_t>(y) * width + x];
            integral[static_cast<std::size_t>(y + 1) * (width + 1) + x + 1] =
                integral[static_cast<std::size_t>(y) * (width + 1) + x + 1] + row;
        }
    }
    const int r = filter_kernel / 2;
    const std::uint32_t half = static_cast<std::uint32_t>(filter_kernel) * filter_kernel;
    const std::size_t stride = static_cast<std::size_t>(width + 1);
    for (int y = 0; y < height; ++y) {
        const int y0 = std::max(0, y - r), y1 = std::min(height, y + r + 1);
        for (int x = 0; x < width; ++x) {
            const int x0 = std::max(0, x - r), x1 = std::min(width, x + r + 1);
            const std::uint32_t sum = integral[static_cast<std::size_t>(y1) * stride + x1] -
                                      integral[static_cast<std::size_t>(y0) * stride + x1] -
                                      integral[static_cast<std::size_t>(y1) * stride + x0] +
                                      integral[static_cast<std::size_t>(y0) * stride + x0];
            mask.bits[static_cast<std::size_t>(y) * width + x] = (2 * sum >= half) ? 1 : 0;
        }
    }
    return mask;
}

SpecularMask build_specular_mask(const Frame& frame, const MaskPolicy& policy) {
    return build_specular_mask(frame.rgb.data(), frame.width, frame.height,
                               policy.threshold, policy.kernel);
}

SpecularMask build_specular_mask(const Template& tmpl, const MaskPolicy& policy) {
    return build_specular_mask(tmpl.patch.data(), tmpl.side, tmpl.side,
                               policy.threshold, policy.kernel);
}

MatchResult masked_match(const Frame& frame, const Template& tmpl,
                         const MaskPolicy& policy, int center_x, int center_y,
                         int radius) {
    const int side = tmpl.side;
    if (side > frame.width || side > frame.height) {
        throw SizeError("template larger than frame");
    }
    if (radius < 0) throw ValidationError("search radius must be >= 0");

    SpecularMask tmask, fmask;
    const bool masked = policy.enabled;
    if (masked) {
        tmask = build_specular_mask(tmpl, policy);
        fmask = build_specular_mask(frame, policy);
    }

    const int base_x = center_x - side / 2;
    const int base_y = center_y - side / 2;
    const int clamped_x = std::clamp(base_x, 0, frame.width - side);
    const int clamped_y = std::clamp(base_y, 0, frame.height - side);
    const std::uint64_t side_sq =
        static_cast<std::uint64_t>(side) * static_cast<std::uint64_t>(side);

    MatchResult best;
    best.frame_index = frame.index;
    best.x = clamped_x;
    best.y = clamped_y;
    best.score = std::numeric_limits<double>::infinity();
    best.valid_fraction = 0.0;
    bool found = false;

    double abort_sum = std::numeric_limits<double>::infinity();
    bool any_candidate = false;
    for (const Offset& off : sorted_offsets(radius)) {
        const int px = base_x + off.dx;
        const int py = base_y + off.dy;
        if (px < 0 || py < 0 || px + side > frame.width || py + side > frame.height) {
            continue;
        }
        any_candidate = true;
        const CandidateScore cs =
            score_candidate(frame, tmpl, masked ? &tmask : nullptr,
                            masked ? &fmask : nullptr, px, py, abort_sum);
        if (cs.aborted) continue;
        if (4 * cs.count < side_sq) continue;  // unreliable candidate
        if (cs.score < best.score) {
            best.score = cs.score;
            best.x = px;
            best.y = py;
            best.valid_fraction =
                static_cast<double>(cs.count) / static_cast<double>(side_sq);
            found = true;
            abort_sum = best.score * 3.0 * static_cast<double>(side_sq);
        }
    }

    if (!found) {
        // No candidate had enough unmasked overlap; fall back to the search
        // center and flag the frame.
        const CandidateScore cs = score_candidate(
            frame, tmpl, masked ? &tmask : nullptr, masked ? &fmask : nullptr,
            clamped_x, clamped_y, std::numeric_limits<double>::infinity());
        best.x = clamped_x;
        best.y = clamped_y;
        best.score = cs.count == 0 ? 0.0 : cs.score;
        best.valid_fraction =
            static_cast<double>(cs.count) / static_cast<double>(side_sq);
        best.flagged = true;
        (void)any_candidate;
    }
    return best;
}

StabilizedClip stabilize_clip(const VideoSequence& seq, const ClipSegment& clip,
                              const Template& tmpl, const DetectionTimeline& timeline,
                              const StabilizeParams& params) {
    if (params.crop_size <= 0) throw ValidationError("crop_size must be > 0");

    const int side = tmpl.side;
    const int radius = params.search_radius < 0 ? side : params.search_radius;
    const int crop = params.crop_size;

    StabilizedClip out;
    out.video.fps = seq.fps;
    out.video.source_id = seq.source_id;
    out.matches.reserve(static_cast<std::size_t>(clip.length()));

    int chain_cx = 0, chain_cy = 0;
    {
        const auto& first_box = timeline.boxes[static_cast<std::size_t>(clip.start_frame)];
        if (!first_box) throw ValidationError("clip start frame has no detection");
        chain_cx = static_cast<int>(std::lround(first_box->cx()));
        chain_cy = static_cast<int>(std::lround(first_box->cy()));
    }

    for (int t = clip.start_frame; t <= clip.end_frame; ++t) {
        const Frame& frame = seq.frames[static_cast<std::size_t>(t)];
        int cx = chain_cx, cy = chain_cy;
        if (params.search == SearchMode::per_frame_box) {
            const auto& box = timeline.boxes[static_cast<std::size_t>(t)];
            if (box) {
                cx = static_cast<int>(std::lround(box->cx()));
                cy = static_cast<int>(std::lround(box->cy()));
            }
        }
        MatchResult res = masked_match(frame, tmpl, params.mask, cx, cy, radius);
        res.frame_index = t;

        const int match_cx = res.x + side / 2;
        const int match_cy = res.y + side / 2;
        if (params.search == SearchMode::chained && !res.flagged) {
            chain_cx = match_cx;
            chain_cy = match_cy;
        }

        Frame stabilized;
        stabilized.index = t - clip.start_frame;
        stabilized.width = crop;
        stabilized.height = crop;
        stabilized.rgb.resize(static_cast<std::size_t>(crop) * crop * 3);
        const int tlx = match_cx - crop / 2;
        const int tly = match_cy - crop / 2;
        for (int y = 0; y < crop; ++y) {
            const int sy = std::clamp(tly + y, 0, frame.height - 1);
            std::uint8_t* dst = stabilized.rgb.data() + static_cast<std::size_t>(y) * crop * 3;
            if (tlx >= 0 && tlx + crop <= frame.width) {
                std::copy_n(frame.pixel(tlx, sy), static_cast<std::size_t>(crop) * 3, dst);
            } else {
                for (int x = 0; x < crop; ++x) {
                    const int sx = std::clamp(tlx + x, 0, frame.width - 1);
                    const std::uint8_t* src = frame.pixel(sx, sy);
                    dst[3 * x] = src[0];
                    dst[3 * x + 1] = src[1];
                    dst[3 * x + 2] = src[2];
                }
            }
        }
        out.video.frames.push_back(std::move(stabilized));
        out.matches.push_back(res);
    }
    return out;
}

void write_matches_csv(const std::filesystem::path& path,
                       const std::vector<MatchResult>& matches) {
    std::ofstream out(path);
    out << "frame,x,y,score,valid_fraction,flagged\n";
    out.precision(10);
    for (const MatchResult& m : matches) {
        out << m.frame_index << ',' << m.x << ',' << m.y << ',' << m.score << ','
            << m.valid_fraction << ',' << (m.flagged ? 1 : 0) << '\n';
    }
    if (!out) throw WriteError("cannot write matches CSV to " + path.string());
}

}  // namespace retistab
