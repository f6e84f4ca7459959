#include "retistab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "retistab/errors.hpp"
#include "retistab/parallel.hpp"

namespace retistab {
namespace {

// Summed-area table with a zero top row / left column.
struct Integral {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> sum;  // (width+1)*(height+1)

    explicit Integral(const GrayImage& img)
        : width(img.width), height(img.height),
          sum(static_cast<std::size_t>(width + 1) * (height + 1), 0) {
        for (int y = 0; y < height; ++y) {
            std::uint32_t row = 0;
            const std::uint8_t* src = img.row(y);
            std::uint32_t* cur = sum.data() + static_cast<std::size_t>(y + 1) * (width + 1);
            const std::uint32_t* up = sum.data() + static_cast<std::size_t>(y) * (width + 1);
            for (int x = 0; x < width; ++x) {
                row += src[x];
                cur[x + 1] = up[x + 1] + row;
            }
        }
    }

    // Sum over [x0,x1) x [y0,y1).
    std::uint32_t rect(int x0, int y0, int x1, int y1) const {
        const std::size_t stride = static_cast<std::size_t>(width + 1);
        return sum[static_cast<std::size_t>(y1) * stride + x1] -
               sum[static_cast<std::size_t>(y0) * stride + x1] -
               sum[static_cast<std::size_t>(y1) * stride + x0] +
               sum[static_cast<std::size_t>(y0) * stride + x0];
    }
};

inline std::uint32_t abs_diff_u32(std::uint32_t a, std::uint32_t b) {
    return a > b ? a - b : b - a;
}

struct Candidate {
    int u;
    int v;
};

std::vector<Candidate> sorted_candidates(int radius) {
    std::vector<Candidate> out;
    out.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1));
    for (int v = -radius; v <= radius; ++v) {
        for (int u = -radius; u <= radius; ++u) out.push_back({u, v});
    }
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        const int na = a.u * a.u + a.v * a.v;
        const int nb = b.u * b.u + b.v * b.v;
        if (na != nb) return na < nb;
        if (a.v != b.v) return a.v < b.v;
        return a.u < b.u;
    });
    return out;
}

// Partition boundaries used by the sum lower bounds; |sum(prev cell) -
// sum(next cell)| summed over any partition never exceeds the SAD, so a
// bound at or above the best-so-far rules a candidate out exactly.
struct Splits {
    int b2[3];
    int b4[5];
    explicit Splits(int bs) {
        b2[0] = 0; b2[1] = bs / 2; b2[2] = bs;
        b4[0] = 0; b4[1] = bs / 4; b4[2] = bs / 2; b4[3] = 3 * bs / 4; b4[4] = bs;
    }
};

}  // namespace

FlowField compute_flow(const GrayImage& prev, const GrayImage& next,
                       int block_size, int search_radius) {
    if (prev.width != next.width || prev.height != next.height) {
        throw SizeError("flow inputs differ in size");
    }
    if (block_size < 4) throw ValidationError("block_size must be >= 4");
    if (search_radius < 1) throw ValidationError("search_radius must be >= 1");
    if (prev.width < block_size || prev.height < block_size) {
        throw SizeError("image smaller than one flow block");
    }

    FlowField field;
    field.block_size = block_size;
    field.search_radius = search_radius;
    field.grid_w = prev.width / block_size;
    field.grid_h = prev.height / block_size;
    field.vectors.assign(static_cast<std::size_t>(field.grid_w) * field.grid_h,
                         {{0, 0}});

    const Integral iprev(prev), inext(next);
    const std::vector<Candidate> candidates = sorted_candidates(search_radius);
    const Splits sp(block_size);
    const int bs = block_size;
    const int w = prev.width, h = prev.height;

    for (int by = 0; by < field.grid_h; ++by) {
        for (int bx = 0; bx < field.grid_w; ++bx) {
            const int x0 = bx * bs, y0 = by * bs;

            std::uint32_t p1;
            std::uint32_t p4[4];
            std::uint32_t p16[16];
            p1 = iprev.rect(x0, y0, x0 + bs, y0 + bs);
            for (int j = 0; j < 2; ++j)
                for (int i = 0; i < 2; ++i)
                    p4[j * 2 + i] = iprev.rect(x0 + sp.b2[i], y0 + sp.b2[j],
                                               x0 + sp.b2[i + 1], y0 + sp.b2[j + 1]);
            for (int j = 0; j < 4; ++j)
                for (int i = 0; i < 4; ++i)
                    p16[j * 4 + i] = iprev.rect(x0 + sp.b4[i], y0 + sp.b4[j],
                                                x0 + sp.b4[i + 1], y0 + sp.b4[j + 1]);

            std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
            int best_u = 0, best_v = 0;

            for (const Candidate& c : candidates) {
                const int cx = x0 + c.u, cy = y0 + c.v;
                if (cx < 0 || cy < 0 || cx + bs > w || cy + bs > h) continue;

                if (abs_diff_u32(p1, inext.rect(cx, cy, cx + bs, cy + bs)) >= best)
                    continue;
                std::uint32_t lb = 0;
                for (int j = 0; j < 2 && lb < best; ++j)
                    for (int i = 0; i < 2; ++i)
                        lb += abs_diff_u32(p4[j * 2 + i],
                                           inext.rect(cx + sp.b2[i], cy + sp.b2[j],
                                                      cx + sp.b2[i + 1], cy + sp.b2[j + 1]));
                if (lb >= best) continue;
                lb = 0;
                for (int j = 0; j < 4 && lb < best; ++j)
                    for (int i = 0; i < 4; ++i)
                        lb += abs_diff_u32(p16[j * 4 + i],
                                           inext.rect(cx + sp.b4[i], cy + sp.b4[j],
                                                      cx + sp.b4[i + 1], cy + sp.b4[j + 1]));
                if (lb >= best) continue;

                std::uint32_t sad = 0;
                for (int row = 0; row < bs; ++row) {
                    const std::uint8_t* a = prev.row(y0 + row) + x0;
                    const std::uint8_t* b = next.row(cy + row) + cx;
                    std::uint32_t rsum = 0;
                    for (int i = 0; i < bs; ++i) {
                        rsum += static_cast<std::uint32_t>(
                            a[i] > b[i] ? a[i] - b[i] : b[i] - a[i]);
                    }
                    sad += rsum;
                    if (sad >= best) break;
                }
                // Candidates come ordered by the tie rule, so only a strict
                // improvement may replace the incumbent.
                if (sad < best) {
                    best = sad;
                    best_u = c.u;
                    best_v = c.v;
                    if (best == 0) break;
                }
            }
            field.vectors[static_cast<std::size_t>(by) * field.grid_w + bx] =
                {{best_u, best_v}};
        }
    }
    return field;
}

FlowStats flow_variance(const FlowField& field) {
    const std::size_t n = field.n_blocks();
    if (n == 0) throw ValidationError("flow field has no blocks");

    double su = 0.0, sv = 0.0, sm = 0.0;
    for (const auto& vec : field.vectors) {
        su += vec[0];
        sv += vec[1];
        sm += std::hypot(static_cast<double>(vec[0]), static_cast<double>(vec[1]));
    }
    const double mu = su / n, mv = sv / n, mm = sm / n;
    double du = 0.0, dv = 0.0, dm = 0.0;
    for (const auto& vec : field.vectors) {
        const double eu = vec[0] - mu;
        const double ev = vec[1] - mv;
        const double em =
            std::hypot(static_cast<double>(vec[0]), static_cast<double>(vec[1])) - mm;
        du += eu * eu;
        dv += ev * ev;
        dm += em * em;
    }
    FlowStats stats;
    stats.var_u = du / n;
    stats.var_v = dv / n;
    stats.var_mag = dm / n;
    stats.mean_u = mu;
    stats.mean_v = mv;
    return stats;
}

std::vector<FlowStats> clip_flow_profile(const VideoSequence& seq, int first,
                                         int last, const FlowParams& params,
                                         int threads) {
    if (first < 0 || last >= static_cast<int>(seq.size()) || last - first + 1 < 2) {
        throw SizeError("flow profile range needs at least 2 frames inside the sequence");
    }
    std::vector<GrayImage> gray(static_cast<std::size_t>(last - first + 1));
    parallel_for(gray.size(), threads, [&](std::size_t i) {
        gray[i] = to_grayscale(seq.frames[static_cast<std::size_t>(first) + i]);
    });
    std::vector<FlowStats> profile(static_cast<std::size_t>(last - first));
    parallel_for(profile.size(), threads, [&](std::size_t i) {
        const FlowField f = compute_flow(gray[i], gray[i + 1], params.block_size,
                                         params.search_radius);
        profile[i] = flow_variance(f);
    });
    return profile;
}

}  // namespace retistab
