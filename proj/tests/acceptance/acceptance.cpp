// End-to-end acceptance suite. Each criterion prints one [PASS]/[FAIL] line;
// the process exits non-zero if any criterion fails. Tolerances are pinned
// here, next to the checks that use them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "retistab/detection.hpp"
#include "retistab/flow.hpp"
#include "retistab/metrics.hpp"
#include "retistab/natm.hpp"
#include "retistab/pipeline.hpp"
#include "retistab/stl.hpp"
#include "retistab/synth.hpp"
#include "retistab/video_io.hpp"

#include "../helpers.hpp"

using namespace retistab;
namespace fs = std::filesystem;

namespace {

// Flow parameters used for screening and scoring. The full-resolution jitter
// benchmarks move by at most ~10 px per frame, so a 12 px search radius
// captures every displacement while keeping the suite within its time budget.
const FlowParams kScoreFlow{16, 12};
const FlowParams kScreenFlow{16, 12};
constexpr int kMatchRadius = 24;  // chained search; per-frame steps are <= ~10 px
constexpr int kCrop = 640;

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what,
            const std::string& detail) {
    std::printf("[%s] %d. %s%s%s\n", pass ? "PASS" : "FAIL", criterion,
                what.c_str(), detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void report_error(int criterion, const std::string& what, const std::string& err) {
    report(criterion, false, what, "unexpected error: " + err);
}

struct Localized {
    DetectionTimeline timeline;
    Trajectory traj;
    std::set<int> removed;
    std::vector<ClipSegment> clips;
    int diameter = 0;
    double grad_thresh = 0.0;
};

// Mirrors the pipeline's localization stage with default parameters.
Localized localize(const VideoSequence& seq) {
    Localized out;
    out.timeline = run_detector(seq, DetectorMode::classical, DetectorParams{}, {});
    out.traj = build_trajectory(out.timeline, 15);
    out.diameter = estimate_odr_diameter(out.timeline);
    out.grad_thresh = 2.0 * out.diameter;
    out.removed = filter_jitters(out.traj, out.grad_thresh);
    out.clips = segment_clips(out.timeline, out.removed, seq.fps, 1.5);
    return out;
}

struct StabOutcome {
    Template tmpl;
    StabilizedClip stab;
    std::pair<int, int> window;
    int template_frame = 0;
};

StabOutcome stabilize(const VideoSequence& seq, const Localized& loc,
                      const ClipSegment& clip, bool masking,
                      const Template* fixed_tmpl = nullptr) {
    StabOutcome out;
    out.window = select_smooth_window(loc.traj, clip, 15);
    out.template_frame =
        select_template_frame(seq, out.window.first, out.window.second, kScreenFlow);
    out.tmpl = fixed_tmpl
                   ? *fixed_tmpl
                   : extract_template(seq, out.template_frame, loc.timeline, loc.diameter);
    StabilizeParams sp;
    sp.crop_size = kCrop;
    sp.search_radius = kMatchRadius;
    sp.mask.enabled = masking;
    out.stab = stabilize_clip(seq, clip, out.tmpl, loc.timeline, sp);
    return out;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RETISTAB_CLI_PATH) + " " + args;
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// ---------------------------------------------------------------------------

void criterion_1_and_9() {
    const std::string what1 = "stabilized clips are 640x640 crops of the 1800x1800 input";
    const std::string what9 = "identical config produces bit-identical trees for any thread count";
    const fs::path dir = testutil::temp_dir("acc_cli");
    try {
        const fs::path in = dir / "in";
        if (run_cli("synth --benchmark sinusoid-jitter-20 --out " + in.string() +
                    " --quiet") != 0) {
            throw std::runtime_error("synth subcommand failed");
        }
        const std::string common = " --flow-radius 12 --match-radius 24 --quiet";
        const fs::path outA = dir / "outA", outB = dir / "outB";
        if (run_cli("run --input " + in.string() + " --output " + outA.string() +
                    " --threads 1" + common) != 0) {
            throw std::runtime_error("run --threads 1 failed");
        }
        if (run_cli("run --input " + in.string() + " --output " + outB.string() +
                    " --threads 2" + common) != 0) {
            throw std::runtime_error("run --threads 2 failed");
        }

        const VideoSequence input = load_sequence(in);
        const VideoSequence clip = load_sequence(outA / "clip_0");
        const bool c1 = input.width() == 1800 && input.height() == 1800 &&
                        clip.width() == kCrop && clip.height() == kCrop &&
                        clip.size() > 0;
        report(1, c1, what1,
               "input " + std::to_string(input.width()) + "x" +
                   std::to_string(input.height()) + ", clip_0 " +
                   std::to_string(clip.width()) + "x" + std::to_string(clip.height()) +
                   " (" + std::to_string(clip.size()) + " frames)");

        const bool c9 = testutil::same_tree(outA, outB);
        report(9, c9, what9, c9 ? "all artifact bytes equal" : "trees differ");
    } catch (const std::exception& e) {
        report_error(1, what1, e.what());
        report_error(9, what9, e.what());
    }
    fs::remove_all(dir);
}

void criterion_2_and_3() {
    const std::string what2 =
        "sinusoid benchmarks: trajectory error p95 <= 2 px and mean <= 1 px";
    const std::string what3 =
        "stabilized mean var_mag <= original / 5 on every jitter benchmark";
    try {
        bool c2 = true, c3 = true;
        std::string d2, d3;
        for (const char* name :
             {"sinusoid-jitter-10", "sinusoid-jitter-20", "sinusoid-jitter-40"}) {
            const SynthResult gen = generate(benchmark_by_name(name));
            const Localized loc = localize(gen.video);
            if (loc.clips.empty()) throw std::runtime_error(std::string(name) + ": no clips");
            const ClipSegment& clip = loc.clips.front();
            const StabOutcome so = stabilize(gen.video, loc, clip, true);

            std::vector<std::array<double, 2>> truth;
            for (const MatchResult& m : so.stab.matches) {
                truth.push_back(gen.truth.centers[static_cast<std::size_t>(m.frame_index)]);
            }
            const TrajectoryError err =
                trajectory_error(truth, so.stab.matches, kCrop, so.tmpl.side);
            if (!(err.p95 <= 2.0 && err.mean <= 1.0)) c2 = false;
            d2 += std::string(name) + " mean=" + fmt(err.mean) + " p95=" + fmt(err.p95) + "; ";

            const ClipScore orig = score_range(gen.video, clip.start_frame,
                                               clip.end_frame, kScoreFlow, "orig");
            const ClipScore stab = score_sequence(so.stab.video, kScoreFlow, "stab");
            if (!(stab.mean_var_mag <= orig.mean_var_mag / 5.0)) c3 = false;
            d3 += std::string(name) + " " + fmt(orig.mean_var_mag) + "->" +
                  fmt(stab.mean_var_mag) + "; ";
        }
        report(2, c2, what2, d2);
        report(3, c3, what3, d3);
    } catch (const std::exception& e) {
        report_error(2, what2, e.what());
        report_error(3, what3, e.what());
    }
}

void criterion_4() {
    const std::string what =
        "spike benchmark: default threshold removes exactly the two frames at the jump";
    try {
        const SynthResult gen = generate(benchmark_by_name("spike-jitter"));
        const Localized loc = localize(gen.video);
        const bool removal_ok = loc.removed == std::set<int>{74, 75};
        const bool clips_ok =
            loc.clips.size() == 2 && loc.clips[0].start_frame == 0 &&
            loc.clips[0].end_frame == 73 && loc.clips[1].start_frame == 76 &&
            loc.clips[1].end_frame == 149;
        std::string removed_str;
        for (int f : loc.removed) removed_str += std::to_string(f) + " ";
        report(4, removal_ok && clips_ok, what,
               "removed {" + removed_str + "}, " + std::to_string(loc.clips.size()) +
                   " clips, threshold " + fmt(loc.grad_thresh));
    } catch (const std::exception& e) {
        report_error(4, what, e.what());
    }
}

void criterion_5() {
    const std::string what = "blink benchmark: exactly 2 clips and no blink frame in any clip";
    try {
        const SynthResult gen = generate(benchmark_by_name("blink-gap"));
        const Localized loc = localize(gen.video);
        bool clean = loc.clips.size() == 2;
        for (const ClipSegment& c : loc.clips) {
            for (int t = c.start_frame; t <= c.end_frame; ++t) {
                if (gen.truth.blink[static_cast<std::size_t>(t)]) clean = false;
            }
        }
        report(5, clean, what, std::to_string(loc.clips.size()) + " clips");
    } catch (const std::exception& e) {
        report_error(5, what, e.what());
    }
}

void criterion_6() {
    const std::string what =
        "blur benchmark: template frame outside the blur window in >= 95/100 trials";
    try {
        // Selection cost dominates the 100 trials, so screening uses a 6 px
        // search radius here; the benchmark's steps stay below 3 px.
        const FlowParams screen{16, 6};
        int outside = 0, trials = 0;
        for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
            SynthSpec spec = benchmark_by_name("blur-window");
            spec.seed = seed;
            const SynthResult gen = generate(spec);
            const Localized loc = localize(gen.video);
            if (loc.clips.empty()) {
                ++trials;
                continue;  // counts as a failed trial
            }
            const ClipSegment& clip = loc.clips.front();
            const auto window = select_smooth_window(loc.traj, clip, 15);
            const int tf =
                select_template_frame(gen.video, window.first, window.second, screen);
            ++trials;
            if (tf < 60 || tf > 69) ++outside;
        }
        report(6, outside >= 95, what,
               std::to_string(outside) + "/" + std::to_string(trials) + " outside");
    } catch (const std::exception& e) {
        report_error(6, what, e.what());
    }
}

void criterion_7() {
    const std::string what =
        "specular benchmark: masked matches track the specular-free run (<= 1 px); "
        "unmasked matches do not";
    try {
        const SynthSpec spec_b = benchmark_by_name("specular-on-odr");
        SynthSpec spec_a = spec_b;  // identical capture without the reflection
        spec_a.specular.frames.clear();
        const SynthResult gen_a = generate(spec_a);
        const SynthResult gen_b = generate(spec_b);

        // Geometry (trajectory, template frame, anchor) comes from the
        // specular-free twin so the three runs are comparable per frame.
        const Localized loc = localize(gen_a.video);
        if (loc.clips.empty()) throw std::runtime_error("no clips");
        const ClipSegment& clip = loc.clips.front();
        const StabOutcome ref = stabilize(gen_a.video, loc, clip, true);
        const Template tmpl_b = extract_template(gen_b.video, ref.template_frame,
                                                 loc.timeline, loc.diameter);
        const StabOutcome masked = stabilize(gen_b.video, loc, clip, true, &tmpl_b);
        const StabOutcome unmasked = stabilize(gen_b.video, loc, clip, false, &tmpl_b);

        int masked_max = 0, unmasked_max = 0;
        for (std::size_t i = 0; i < ref.stab.matches.size(); ++i) {
            const auto dist = [&](const MatchResult& m) {
                return std::max(std::abs(m.x - ref.stab.matches[i].x),
                                std::abs(m.y - ref.stab.matches[i].y));
            };
            masked_max = std::max(masked_max, dist(masked.stab.matches[i]));
            unmasked_max = std::max(unmasked_max, dist(unmasked.stab.matches[i]));
        }
        const bool pass = masked_max <= 1 && unmasked_max > 1;
        report(7, pass, what,
               "masked max diff " + std::to_string(masked_max) + " px, unmasked max diff " +
                   std::to_string(unmasked_max) + " px");
    } catch (const std::exception& e) {
        report_error(7, what, e.what());
    }
}

void criterion_8() {
    const std::string what =
        "flow kernel: exact shift recovery on >= 90% of interior blocks, identity == 0";
    try {
        // A real rendered retina frame supplies the texture; both images are
        // windows into it, so shifts are true translations.
        SynthSpec spec = benchmark_by_name("clean-static");
        const SynthRenderer renderer(spec);
        const GrayImage scene = to_grayscale(renderer.render(0));
        const int side = 512, radius = 24, bs = 16;
        const int ox = 600, oy = 600;  // deep inside the field of view
        const auto window = [&](int wx, int wy) {
            GrayImage g;
            g.width = side;
            g.height = side;
            g.px.resize(static_cast<std::size_t>(side) * side);
            for (int y = 0; y < side; ++y) {
                for (int x = 0; x < side; ++x) g.at(x, y) = scene.at(wx + x, wy + y);
            }
            return g;
        };
        const GrayImage base = window(ox, oy);

        const FlowField ident = compute_flow(base, base, bs, radius);
        bool identity_zero = true;
        for (const auto& v : ident.vectors) {
            if (v[0] != 0 || v[1] != 0) identity_zero = false;
        }

        bool recovery = true;
        std::string detail;
        const int shifts[][2] = {{24, 0}, {0, -24}, {-17, 9}, {13, 21}, {-24, -24}};
        for (const auto& s : shifts) {
            const GrayImage next = window(ox - s[0], oy - s[1]);
            const FlowField f = compute_flow(base, next, bs, radius);
            int interior = 0, exact = 0;
            for (int by = 0; by < f.grid_h; ++by) {
                for (int bx = 0; bx < f.grid_w; ++bx) {
                    const int x0 = bx * bs, y0 = by * bs;
                    if (x0 < radius || y0 < radius || x0 + bs + radius > side ||
                        y0 + bs + radius > side) {
                        continue;
                    }
                    ++interior;
                    const auto& v =
                        f.vectors[static_cast<std::size_t>(by) * f.grid_w + bx];
                    if (v[0] == s[0] && v[1] == s[1]) ++exact;
                }
            }
            if (exact * 10 < interior * 9) recovery = false;
            detail += "(" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "):" +
                      std::to_string(exact) + "/" + std::to_string(interior) + " ";
        }
        report(8, identity_zero && recovery, what,
               detail + (identity_zero ? "identity zero" : "identity NOT zero"));
    } catch (const std::exception& e) {
        report_error(8, what, e.what());
    }
}

}  // namespace

int main() {
    criterion_1_and_9();
    criterion_2_and_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    std::printf("%d/9 criteria passed\n", 9 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
