#include "retistab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "retistab/errors.hpp"
#include "retistab/parallel.hpp"

namespace retistab {
namespace {

constexpr double kPi = 3.14159265358979323846;

inline std::uint64_t hash64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline double hash_unit(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    const std::uint64_t h = hash64(a ^ hash64(b ^ hash64(c)));
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

inline double lattice(int ix, int iy, std::uint64_t seed) {
    return hash_unit(static_cast<std::uint32_t>(ix),
                     static_cast<std::uint32_t>(iy), seed);
}

double value_noise(double x, double y, std::uint64_t seed) {
    const int ix = static_cast<int>(std::floor(x));
    const int iy = static_cast<int>(std::floor(y));
    const double fx = x - ix, fy = y - iy;
    const double ux = fx * fx * (3.0 - 2.0 * fx);
    const double uy = fy * fy * (3.0 - 2.0 * fy);
    const double a = lattice(ix, iy, seed);
    const double b = lattice(ix + 1, iy, seed);
    const double c = lattice(ix, iy + 1, seed);
    const double d = lattice(ix + 1, iy + 1, seed);
    return (a * (1 - ux) + b * ux) * (1 - uy) + (c * (1 - ux) + d * ux) * uy;
}

double fbm3(double x, double y, std::uint64_t seed) {
    return 0.5 * value_noise(x / 48.0, y / 48.0, seed) +
           0.3 * value_noise(x / 12.0, y / 12.0, seed + 101) +
           0.2 * value_noise(x / 6.0, y / 6.0, seed + 202);
}

double fbm2(double x, double y, std::uint64_t seed) {
    return 0.6 * value_noise(x / 30.0, y / 30.0, seed) +
           0.4 * value_noise(x / 7.0, y / 7.0, seed + 303);
}

inline std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v + 0.5));
}

// Deterministic standard normal (Box-Muller over hashed uniforms).
double hash_normal(std::uint64_t seed, std::uint64_t t, std::uint64_t lane) {
    const double u1 = std::max(hash_unit(seed, t, lane * 2), 1e-12);
    const double u2 = hash_unit(seed, t, lane * 2 + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

void validate(const SynthSpec& s) {
    if (s.width <= 0 || s.height <= 0 || s.n_frames <= 0 || s.fps <= 0.0) {
        throw SynthSpecError("width, height, n_frames and fps must be positive");
    }
    if (s.jitter.amplitude < 0.0) throw SynthSpecError("jitter amplitude must be >= 0");
    if (s.disc.radius <= 0.0 || s.disc.radius >= std::min(s.width, s.height) / 2.0) {
        throw SynthSpecError("disc radius must be in (0, min(width,height)/2)");
    }
    auto check_frames = [&](const std::set<int>& frames, const char* what) {
        for (int f : frames) {
            if (f < 0 || f >= s.n_frames) {
                throw SynthSpecError(std::string(what) + " frame " + std::to_string(f) +
                                     " outside [0, n_frames)");
            }
        }
    };
    check_frames(s.blur.frames, "blur");
    check_frames(s.blink_frames, "blink");
    check_frames(s.specular.frames, "specular");
    for (int f : s.jitter.spike_frames) {
        if (f < 0 || f >= s.n_frames) {
            throw SynthSpecError("spike frame outside [0, n_frames)");
        }
    }
}

void gaussian_blur_rgb(Frame& f, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<std::uint32_t> kernel(static_cast<std::size_t>(2 * radius + 1));
    {
        std::vector<double> kd(kernel.size());
        double sum = 0.0;
        for (int i = -radius; i <= radius; ++i) {
            kd[static_cast<std::size_t>(i + radius)] =
                std::exp(-0.5 * (i * i) / (sigma * sigma));
            sum += kd[static_cast<std::size_t>(i + radius)];
        }
        std::uint32_t isum = 0;
        for (std::size_t i = 0; i < kd.size(); ++i) {
            kernel[i] = static_cast<std::uint32_t>(std::lround(kd[i] / sum * 65536.0));
            isum += kernel[i];
        }
        kernel[static_cast<std::size_t>(radius)] += 65536 - isum;
    }

    const int w = f.width, h = f.height;
    std::vector<std::uint8_t> tmp(f.rgb.size());
    // horizontal, replicate edges
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = f.rgb.data() + static_cast<std::size_t>(y) * w * 3;
        std::uint8_t* dst = tmp.data() + static_cast<std::size_t>(y) * w * 3;
        for (int x = 0; x < w; ++x) {
            std::uint32_t acc[3] = {32768, 32768, 32768};
            for (int k = -radius; k <= radius; ++k) {
                const int xx = std::clamp(x + k, 0, w - 1);
                const std::uint32_t kw = kernel[static_cast<std::size_t>(k + radius)];
                acc[0] += kw * src[3 * xx];
                acc[1] += kw * src[3 * xx + 1];
                acc[2] += kw * src[3 * xx + 2];
            }
            dst[3 * x] = static_cast<std::uint8_t>(acc[0] >> 16);
            dst[3 * x + 1] = static_cast<std::uint8_t>(acc[1] >> 16);
            dst[3 * x + 2] = static_cast<std::uint8_t>(acc[2] >> 16);
        }
    }
    // vertical
    for (int y = 0; y < h; ++y) {
        std::uint8_t* dst = f.rgb.data() + static_cast<std::size_t>(y) * w * 3;
        for (int x = 0; x < w; ++x) {
            std::uint32_t acc[3] = {32768, 32768, 32768};
            for (int k = -radius; k <= radius; ++k) {
                const int yy = std::clamp(y + k, 0, h - 1);
                const std::uint8_t* src =
                    tmp.data() + (static_cast<std::size_t>(yy) * w + x) * 3;
                const std::uint32_t kw = kernel[static_cast<std::size_t>(k + radius)];
                acc[0] += kw * src[0];
                acc[1] += kw * src[1];
                acc[2] += kw * src[2];
            }
            dst[3 * x] = static_cast<std::uint8_t>(acc[0] >> 16);
            dst[3 * x + 1] = static_cast<std::uint8_t>(acc[1] >> 16);
            dst[3 * x + 2] = static_cast<std::uint8_t>(acc[2] >> 16);
        }
    }
}

}  // namespace

std::vector<std::array<double, 2>> jitter_offsets(const SynthSpec& spec) {
    std::vector<std::array<double, 2>> offsets(
        static_cast<std::size_t>(spec.n_frames), {{0.0, 0.0}});
    switch (spec.jitter.kind) {
        case SynthSpec::JitterKind::none:
            break;
        case SynthSpec::JitterKind::sinusoid: {
            const double a = spec.jitter.amplitude;
            const int period = std::max(1, spec.jitter.period);
            for (int t = 0; t < spec.n_frames; ++t) {
                offsets[static_cast<std::size_t>(t)] = {
                    {a * std::sin(2.0 * kPi * t / period),
                     0.6 * a * std::sin(2.0 * kPi * t / period)}};
            }
            break;
        }
        case SynthSpec::JitterKind::random_walk: {
            double x = 0.0, y = 0.0;
            for (int t = 0; t < spec.n_frames; ++t) {
                offsets[static_cast<std::size_t>(t)] = {{x, y}};
                x = 0.98 * x + spec.jitter.amplitude *
                                   hash_normal(spec.seed, static_cast<std::uint64_t>(t), 0);
                y = 0.98 * y + spec.jitter.amplitude *
                                   hash_normal(spec.seed, static_cast<std::uint64_t>(t), 1);
            }
            break;
        }
        case SynthSpec::JitterKind::spike: {
            // Each spike frame adds a lasting step of `amplitude` along x.
            for (int t = 0; t < spec.n_frames; ++t) {
                double dx = 0.0;
                for (int s : spec.jitter.spike_frames) {
                    if (t >= s) dx += spec.jitter.amplitude;
                }
                offsets[static_cast<std::size_t>(t)] = {{dx, 0.0}};
            }
            break;
        }
    }
    return offsets;
}

SynthRenderer::SynthRenderer(const SynthSpec& spec) : spec_(spec) {
    validate(spec_);
    offsets_ = jitter_offsets(spec_);

    double max_off = 0.0;
    for (const auto& o : offsets_) {
        max_off = std::max({max_off, std::abs(o[0]), std::abs(o[1])});
    }
    margin_ = std::max(32, static_cast<int>(std::ceil(max_off)) + 16);
    map_w_ = spec_.width + 2 * margin_;
    map_h_ = spec_.height + 2 * margin_;
    map_.resize(static_cast<std::size_t>(map_w_) * map_h_ * 3);

    truth_.centers.resize(static_cast<std::size_t>(spec_.n_frames));
    truth_.blink.assign(static_cast<std::size_t>(spec_.n_frames), 0);
    truth_.blurred.assign(static_cast<std::size_t>(spec_.n_frames), 0);
    truth_.specular.assign(static_cast<std::size_t>(spec_.n_frames), 0);
    for (int t = 0; t < spec_.n_frames; ++t) {
        const std::size_t i = static_cast<std::size_t>(t);
        truth_.centers[i] = {{spec_.disc.cx + offsets_[i][0],
                              spec_.disc.cy + offsets_[i][1]}};
        truth_.blink[i] = spec_.blink_frames.count(t) ? 1 : 0;
        truth_.blurred[i] = spec_.blur.frames.count(t) ? 1 : 0;
        truth_.specular[i] = spec_.specular.frames.count(t) ? 1 : 0;
    }

    // Base retina texture.
    for (int y = 0; y < map_h_; ++y) {
        std::uint8_t* row = map_.data() + static_cast<std::size_t>(y) * map_w_ * 3;
        for (int x = 0; x < map_w_; ++x) {
            const double n = fbm3(x, y, spec_.seed);
            const double m = fbm2(x, y, spec_.seed + 7919);
            row[3 * x + 0] = clamp_u8(118.0 + 80.0 * (n - 0.5));
            row[3 * x + 1] = clamp_u8(55.0 + 44.0 * (n - 0.5) + 16.0 * (m - 0.5));
            row[3 * x + 2] = clamp_u8(30.0 + 26.0 * (m - 0.5));
        }
    }

    // Vessels: wavy curves converging toward the disc, stopping at its edge so
    // the bright disc stays a single connected component.
    const double dcx = spec_.disc.cx + margin_, dcy = spec_.disc.cy + margin_;
    const double s_max = 0.42 * std::min(spec_.width, spec_.height);
    for (int k = 0; k < 6; ++k) {
        const double theta = 2.0 * kPi * k / 6.0 + 0.35;
        for (double s = spec_.disc.radius + 4.0; s < s_max; s += 1.0) {
            const double phi = theta + 0.55 * std::sin(0.008 * s + 1.7 * k);
            const double px = dcx + s * std::cos(phi);
            const double py = dcy + s * std::sin(phi);
            const double wk = std::max(1.5, 5.5 - 4.0 * s / s_max);
            const int r = static_cast<int>(std::ceil(wk));
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    if (dx * dx + dy * dy > wk * wk) continue;
                    const int mx = static_cast<int>(px) + dx;
                    const int my = static_cast<int>(py) + dy;
                    if (mx < 0 || my < 0 || mx >= map_w_ || my >= map_h_) continue;
                    std::uint8_t* p =
                        map_.data() + (static_cast<std::size_t>(my) * map_w_ + mx) * 3;
                    p[0] = static_cast<std::uint8_t>((p[0] * 2 + 98 * 6) / 8);
                    p[1] = static_cast<std::uint8_t>((p[1] * 2 + 32 * 6) / 8);
                    p[2] = static_cast<std::uint8_t>((p[2] * 2 + 26 * 6) / 8);
                }
            }
        }
    }

    // Bright disc with a smooth ~1.5 px edge.
    const double rr = spec_.disc.radius;
    const double bright = spec_.disc.brightness;
    const int x0 = std::max(0, static_cast<int>(dcx - rr - 3));
    const int x1 = std::min(map_w_ - 1, static_cast<int>(dcx + rr + 3));
    const int y0 = std::max(0, static_cast<int>(dcy - rr - 3));
    const int y1 = std::min(map_h_ - 1, static_cast<int>(dcy + rr + 3));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x - dcx, y - dcy);
            const double c = std::clamp((rr - d) / 1.5 + 0.5, 0.0, 1.0);
            if (c <= 0.0) continue;
            const double tex = 12.0 * (hash_unit(static_cast<std::uint32_t>(x),
                                                 static_cast<std::uint32_t>(y),
                                                 spec_.seed + 31) -
                                       0.5);
            std::uint8_t* p = map_.data() + (static_cast<std::size_t>(y) * map_w_ + x) * 3;
            p[0] = clamp_u8(p[0] * (1 - c) + (236.0 * bright + tex) * c);
            p[1] = clamp_u8(p[1] * (1 - c) + (204.0 * bright + tex) * c);
            p[2] = clamp_u8(p[2] * (1 - c) + (148.0 * bright + tex) * c);
        }
    }
}

Frame SynthRenderer::render(int t) const {
    const int w = spec_.width, h = spec_.height;
    Frame f;
    f.index = t;
    f.width = w;
    f.height = h;
    f.rgb.resize(static_cast<std::size_t>(w) * h * 3);

    if (truth_.blink[static_cast<std::size_t>(t)]) {
        for (std::size_t i = 0; i < f.rgb.size(); i += 3) {
            f.rgb[i] = 2;
            f.rgb[i + 1] = 2;
            f.rgb[i + 2] = 2;
        }
        return f;
    }

    const auto& off = offsets_[static_cast<std::size_t>(t)];
    const double sx0 = margin_ - off[0];
    const double sy0 = margin_ - off[1];
    const int bx = static_cast<int>(std::floor(sx0));
    const int by = static_cast<int>(std::floor(sy0));
    const double fx = sx0 - bx, fy = sy0 - by;
    const std::uint32_t w11 = static_cast<std::uint32_t>(fx * fy * 256.0 + 0.5);
    const std::uint32_t w10 = static_cast<std::uint32_t>(fx * (1 - fy) * 256.0 + 0.5);
    const std::uint32_t w01 = static_cast<std::uint32_t>((1 - fx) * fy * 256.0 + 0.5);
    const std::uint32_t w00 = 256 - w01 - w10 - w11;

    const double cx = w / 2.0, cy = h / 2.0;
    const double fov = 0.47 * std::min(w, h);
    const double fov2 = fov * fov;
    const double inner = fov - 60.0;
    const double inner2 = inner * inner;
    const double lum = 1.0 + spec_.illumination_drift *
                                 std::sin(2.0 * kPi * t / spec_.n_frames);

    for (int y = 0; y < h; ++y) {
        std::uint8_t* dst = f.rgb.data() + static_cast<std::size_t>(y) * w * 3;
        const std::size_t m0 = (static_cast<std::size_t>(y + by) * map_w_ + bx) * 3;
        const std::uint8_t* r0 = map_.data() + m0;
        const std::uint8_t* r1 = r0 + static_cast<std::size_t>(map_w_) * 3;
        const double dy = y - cy;
        for (int x = 0; x < w; ++x) {
            const double dx = x - cx;
            const double r2 = dx * dx + dy * dy;
            if (r2 >= fov2) {
                dst[3 * x] = 3;
                dst[3 * x + 1] = 2;
                dst[3 * x + 2] = 2;
                continue;
            }
            double gain = lum;
            if (r2 > inner2) {
                gain *= 0.25 + 0.75 * (fov - std::sqrt(r2)) / 60.0;
            }
            for (int c = 0; c < 3; ++c) {
                const std::uint32_t s =
                    (w00 * r0[3 * x + c] + w10 * r0[3 * (x + 1) + c] +
                     w01 * r1[3 * x + c] + w11 * r1[3 * (x + 1) + c] + 128) >> 8;
                dst[3 * x + c] = clamp_u8(s * gain);
            }
        }
    }

    if (truth_.specular[static_cast<std::size_t>(t)]) {
        const double rs = spec_.specular.radius;
        const int sx1 = std::max(0, static_cast<int>(spec_.specular.cx - rs - 2));
        const int sx2 = std::min(w - 1, static_cast<int>(spec_.specular.cx + rs + 2));
        const int sy1 = std::max(0, static_cast<int>(spec_.specular.cy - rs - 2));
        const int sy2 = std::min(h - 1, static_cast<int>(spec_.specular.cy + rs + 2));
        for (int y = sy1; y <= sy2; ++y) {
            for (int x = sx1; x <= sx2; ++x) {
                const double d = std::hypot(x - spec_.specular.cx, y - spec_.specular.cy);
                const double c = std::clamp((rs - d) / 1.5 + 0.5, 0.0, 1.0);
                if (c <= 0.0) continue;
                std::uint8_t* p = f.pixel(x, y);
                p[0] = clamp_u8(p[0] * (1 - c) + 255.0 * c);
                p[1] = clamp_u8(p[1] * (1 - c) + 255.0 * c);
                p[2] = clamp_u8(p[2] * (1 - c) + 255.0 * c);
            }
        }
    }

    if (truth_.blurred[static_cast<std::size_t>(t)]) {
        gaussian_blur_rgb(f, spec_.blur.sigma);
    }

    // Sensor noise rides on top of the optics, so blur cannot smooth it
    // away. It scales with signal (shot noise), so near-black pixels stay
    // quiet and saturated pixels keep their full-well value.
    constexpr int kNoiseAmp = 3;
    const std::uint64_t noise_base =
        hash64(spec_.seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(t) + 1);
    for (int y = 0; y < h; ++y) {
        std::uint8_t* row = f.rgb.data() + static_cast<std::size_t>(y) * w * 3;
        for (int x = 0; x < w; ++x) {
            const std::uint64_t hx = hash64(
                noise_base ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(y)) << 32 |
                              static_cast<std::uint32_t>(x)));
            const int n = static_cast<int>(hx % (2 * kNoiseAmp + 1)) - kNoiseAmp;
            for (int c = 0; c < 3; ++c) {
                std::uint8_t& p = row[3 * x + c];
                if (p < 8 || p >= 250) continue;
                const int v = p + n;
                p = static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
            }
        }
    }
    return f;
}

SynthResult generate(const SynthSpec& spec, int threads) {
    SynthRenderer renderer(spec);
    SynthResult result;
    result.truth = renderer.truth();
    result.video.fps = spec.fps;
    result.video.source_id = spec.name;
    result.video.frames.resize(static_cast<std::size_t>(spec.n_frames));
    parallel_for(result.video.frames.size(), threads, [&](std::size_t i) {
        result.video.frames[i] = renderer.render(static_cast<int>(i));
    });
    return result;
}

std::vector<SynthSpec> standard_benchmarks() {
    std::vector<SynthSpec> suite;

    SynthSpec base;  // 1800x1800 @ 30 fps, 150 frames

    {
        SynthSpec s = base;
        s.name = "clean-static";
        s.seed = 11;
        suite.push_back(s);
    }
    // Tremor amplitude and frequency trade off: small shakes are fast,
    // large drifts are slow. Scaling the period with the amplitude keeps
    // the peak frame-to-frame velocity (~5 px) equal across the family.
    for (double amp : {10.0, 20.0, 40.0}) {
        SynthSpec s = base;
        s.name = "sinusoid-jitter-" + std::to_string(static_cast<int>(amp));
        s.jitter.kind = SynthSpec::JitterKind::sinusoid;
        s.jitter.amplitude = amp;
        s.jitter.period = static_cast<int>(1.5 * amp);
        s.seed = 13 + static_cast<std::uint64_t>(amp);
        suite.push_back(s);
    }
    {
        SynthSpec s = base;
        s.name = "spike-jitter";
        s.disc.radius = 47;  // keeps the default jitter threshold below the jump
        s.jitter.kind = SynthSpec::JitterKind::spike;
        s.jitter.amplitude = 200;
        s.jitter.spike_frames = {75};
        s.seed = 23;
        suite.push_back(s);
    }
    {
        SynthSpec s = base;
        s.name = "blink-gap";
        for (int t = 70; t <= 79; ++t) s.blink_frames.insert(t);
        s.seed = 29;
        suite.push_back(s);
    }
    {
        SynthSpec s = base;
        s.name = "blur-window";
        // Motion blur strikes during the fast phase of the sweep: period 60
        // puts the turning points (still, sharp moments) at frames 15, 45,
        // 75, 105 and 135, all outside the blurred 60-69 stretch.
        for (int t = 60; t <= 69; ++t) s.blur.frames.insert(t);
        s.blur.sigma = 2.0;
        s.jitter.kind = SynthSpec::JitterKind::sinusoid;
        s.jitter.amplitude = 20;
        s.jitter.period = 60;
        s.seed = 31;
        suite.push_back(s);
    }
    {
        SynthSpec s = base;
        s.name = "specular-on-odr";
        // The glint must cover a real fraction of the disc: a small spot is
        // shouted down by the surrounding texture and never moves a match,
        // which would make the masked and unmasked runs indistinguishable.
        s.jitter.kind = SynthSpec::JitterKind::sinusoid;
        s.jitter.amplitude = 40;
        s.jitter.period = 30;
        for (int t = 0; t < s.n_frames; ++t) s.specular.frames.insert(t);
        s.specular.radius = 60;
        s.specular.cx = s.disc.cx + 15;
        s.specular.cy = s.disc.cy - 10;
        s.seed = 37;
        suite.push_back(s);
    }
    {
        SynthSpec s = base;
        s.name = "combined-worst-case";
        s.jitter.kind = SynthSpec::JitterKind::sinusoid;
        s.jitter.amplitude = 20;
        s.jitter.period = 30;
        for (int t = 70; t <= 74; ++t) s.blink_frames.insert(t);
        for (int t = 100; t <= 107; ++t) s.blur.frames.insert(t);
        s.blur.sigma = 2.0;
        for (int t = 0; t < s.n_frames; ++t) s.specular.frames.insert(t);
        s.specular.radius = 20;
        s.specular.cx = s.disc.cx + 15;
        s.specular.cy = s.disc.cy - 10;
        s.illumination_drift = 0.15;
        s.seed = 41;
        suite.push_back(s);
    }
    return suite;
}

SynthSpec benchmark_by_name(const std::string& name) {
    for (const SynthSpec& s : standard_benchmarks()) {
        if (s.name == name) return s;
    }
    throw SynthSpecError("unknown benchmark: " + name);
}

void write_truth_csv(const GroundTruth& truth, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << "frame,cx,cy,blink,blurred,specular\n";
    out.precision(10);
    for (std::size_t t = 0; t < truth.centers.size(); ++t) {
        out << t << ',' << truth.centers[t][0] << ',' << truth.centers[t][1] << ','
            << static_cast<int>(truth.blink[t]) << ','
            << static_cast<int>(truth.blurred[t]) << ','
            << static_cast<int>(truth.specular[t]) << '\n';
    }
    if (!out) throw WriteError("cannot write truth CSV to " + path.string());
}

GroundTruth load_truth_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open truth CSV: " + path.string());
    GroundTruth truth;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ls, tok, ',')) cols.push_back(tok);
        if (cols.size() != 6) throw ParseError("bad truth CSV row: " + line);
        truth.centers.push_back({{std::stod(cols[1]), std::stod(cols[2])}});
        truth.blink.push_back(static_cast<std::uint8_t>(std::stoi(cols[3])));
        truth.blurred.push_back(static_cast<std::uint8_t>(std::stoi(cols[4])));
        truth.specular.push_back(static_cast<std::uint8_t>(std::stoi(cols[5])));
    }
    return truth;
}

namespace {

std::set<int> frame_set(const nlohmann::json& j) {
    std::set<int> out;
    for (const auto& v : j) out.insert(v.get<int>());
    return out;
}

void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw SynthSpecError("unknown key '" + key + "' in " + where);
        }
    }
}

}  // namespace

nlohmann::json spec_to_json(const SynthSpec& s) {
    const char* kind = "none";
    switch (s.jitter.kind) {
        case SynthSpec::JitterKind::none: kind = "none"; break;
        case SynthSpec::JitterKind::sinusoid: kind = "sinusoid"; break;
        case SynthSpec::JitterKind::random_walk: kind = "random-walk"; break;
        case SynthSpec::JitterKind::spike: kind = "spike"; break;
    }
    return {
        {"name", s.name},
        {"width", s.width},
        {"height", s.height},
        {"fps", s.fps},
        {"n_frames", s.n_frames},
        {"disc", {{"cx", s.disc.cx}, {"cy", s.disc.cy}, {"radius", s.disc.radius},
                  {"brightness", s.disc.brightness}}},
        {"jitter", {{"kind", kind}, {"amplitude", s.jitter.amplitude},
                    {"period", s.jitter.period},
                    {"spike_frames", s.jitter.spike_frames}}},
        {"blur", {{"frames", std::vector<int>(s.blur.frames.begin(), s.blur.frames.end())},
                  {"sigma", s.blur.sigma}}},
        {"blink_frames", std::vector<int>(s.blink_frames.begin(), s.blink_frames.end())},
        {"specular", {{"frames", std::vector<int>(s.specular.frames.begin(),
                                                  s.specular.frames.end())},
                      {"radius", s.specular.radius}, {"cx", s.specular.cx},
                      {"cy", s.specular.cy}}},
        {"illumination_drift", s.illumination_drift},
        {"seed", s.seed},
    };
}

SynthSpec spec_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"name", "width", "height", "fps", "n_frames", "disc", "jitter",
                       "blur", "blink_frames", "specular", "illumination_drift",
                       "seed"},
                   "spec");
    SynthSpec s;
    s.name = j.value("name", s.name);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.fps = j.value("fps", s.fps);
    s.n_frames = j.value("n_frames", s.n_frames);
    if (j.contains("disc")) {
        const auto& d = j["disc"];
        reject_unknown(d, {"cx", "cy", "radius", "brightness"}, "disc");
        s.disc.cx = d.value("cx", s.disc.cx);
        s.disc.cy = d.value("cy", s.disc.cy);
        s.disc.radius = d.value("radius", s.disc.radius);
        s.disc.brightness = d.value("brightness", s.disc.brightness);
    }
    if (j.contains("jitter")) {
        const auto& jj = j["jitter"];
        reject_unknown(jj, {"kind", "amplitude", "period", "spike_frames"}, "jitter");
        const std::string kind = jj.value("kind", "none");
        if (kind == "none") s.jitter.kind = SynthSpec::JitterKind::none;
        else if (kind == "sinusoid") s.jitter.kind = SynthSpec::JitterKind::sinusoid;
        else if (kind == "random-walk") s.jitter.kind = SynthSpec::JitterKind::random_walk;
        else if (kind == "spike") s.jitter.kind = SynthSpec::JitterKind::spike;
        else throw SynthSpecError("unknown jitter kind: " + kind);
        s.jitter.amplitude = jj.value("amplitude", s.jitter.amplitude);
        s.jitter.period = jj.value("period", s.jitter.period);
        if (jj.contains("spike_frames")) {
            s.jitter.spike_frames = jj["spike_frames"].get<std::vector<int>>();
        }
    }
    if (j.contains("blur")) {
        const auto& b = j["blur"];
        reject_unknown(b, {"frames", "sigma"}, "blur");
        if (b.contains("frames")) s.blur.frames = frame_set(b["frames"]);
        s.blur.sigma = b.value("sigma", s.blur.sigma);
    }
    if (j.contains("blink_frames")) s.blink_frames = frame_set(j["blink_frames"]);
    if (j.contains("specular")) {
        const auto& sp = j["specular"];
        reject_unknown(sp, {"frames", "radius", "cx", "cy"}, "specular");
        if (sp.contains("frames")) s.specular.frames = frame_set(sp["frames"]);
        s.specular.radius = sp.value("radius", s.specular.radius);
        s.specular.cx = sp.value("cx", s.specular.cx);
        s.specular.cy = sp.value("cy", s.specular.cy);
    }
    s.illumination_drift = j.value("illumination_drift", s.illumination_drift);
    s.seed = j.value("seed", s.seed);
    return s;
}

}  // namespace retistab
