#include "retistab/pipeline.hpp"

#include <cmath>
#include <iostream>

#include "retistab/errors.hpp"
#include "retistab/metrics.hpp"
#include "retistab/video_io.hpp"

namespace retistab {
namespace {

void log_stage(const PipelineConfig& cfg, const std::string& line) {
    if (!cfg.quiet) std::cout << line << "\n";
}

}  // namespace

void validate_config(const PipelineConfig& cfg) {
    if (cfg.crop_size <= 0) throw UsageError("crop-size must be > 0");
    if (cfg.window < 2) throw UsageError("window must be >= 2");
    if (cfg.min_clip_seconds <= 0.0) throw UsageError("min-clip-seconds must be > 0");
    if (cfg.grad_thresh < 0.0) throw UsageError("grad-thresh must be >= 0 (0 = auto)");
    if (cfg.template_margin <= 0.0) throw UsageError("template-margin must be > 0");
    if (cfg.flow.block_size < 4) throw UsageError("flow-block must be >= 4");
    if (cfg.flow.search_radius < 1) throw UsageError("flow-radius must be >= 1");
    if (cfg.mask.threshold < 0 || cfg.mask.threshold > 255) {
        throw UsageError("specular-threshold must be in [0,255]");
    }
    if (cfg.mask.kernel < 1 || cfg.mask.kernel % 2 == 0) {
        throw UsageError("specular-kernel must be odd and >= 1");
    }
    if (cfg.threads < 1) throw UsageError("threads must be >= 1");
    const auto& q = cfg.detector_params.intensity_quantile;
    if (q <= 0.0 || q > 1.0) throw UsageError("intensity-quantile must be in (0,1]");
    if (cfg.detector_params.min_area_frac < 0.0 || cfg.detector_params.min_area_frac > 1.0) {
        throw UsageError("min-area-frac must be in [0,1]");
    }
    if (cfg.detector == DetectorMode::file && !cfg.detections) {
        throw UsageError("detector=file requires --detections");
    }
}

nlohmann::json config_to_json(const PipelineConfig& cfg) {
    return {
        // The output directory is not echoed: the report already lives in it,
        // and the artifact tree must not depend on where it was written.
        {"input", cfg.input.string()},
        {"detector", cfg.detector == DetectorMode::classical ? "classical" : "file"},
        {"detections", cfg.detections ? cfg.detections->string() : ""},
        {"intensity_quantile", cfg.detector_params.intensity_quantile},
        {"min_area_frac", cfg.detector_params.min_area_frac},
        {"min_mean_luma", cfg.detector_params.min_mean_luma},
        {"min_score", cfg.detector_params.min_score},
        {"grad_thresh", cfg.grad_thresh},
        {"min_clip_seconds", cfg.min_clip_seconds},
        {"window", cfg.window},
        {"crop_size", cfg.crop_size},
        {"template_margin", cfg.template_margin},
        {"specular_masking", cfg.mask.enabled},
        {"specular_threshold", cfg.mask.threshold},
        {"specular_kernel", cfg.mask.kernel},
        {"flow_block", cfg.flow.block_size},
        {"flow_radius", cfg.flow.search_radius},
        {"pad", "replicate"},
        {"search_mode", cfg.search == SearchMode::chained ? "chained" : "per-frame-box"},
        {"match_radius", cfg.match_radius},
        // threads is deliberately not echoed: it is an execution parameter
        // and the artifact tree must be byte-identical for any thread count.
    };
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig cfg) {
    static const std::vector<std::string> known = {
        "input", "output", "detector", "detections", "intensity_quantile",
        "min_area_frac", "min_mean_luma", "min_score", "grad_thresh",
        "min_clip_seconds", "window", "crop_size", "template_margin",
        "specular_masking", "specular_threshold", "specular_kernel", "flow_block",
        "flow_radius", "pad", "search_mode", "match_radius", "threads"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw UsageError("unknown config key: " + key);
        }
    }
    try {
        if (j.contains("input")) cfg.input = j["input"].get<std::string>();
        if (j.contains("output")) cfg.output = j["output"].get<std::string>();
        if (j.contains("detector")) {
            const std::string d = j["detector"].get<std::string>();
            if (d == "classical") cfg.detector = DetectorMode::classical;
            else if (d == "file") cfg.detector = DetectorMode::file;
            else throw UsageError("detector must be classical|file");
        }
        if (j.contains("detections")) {
            const std::string p = j["detections"].get<std::string>();
            if (!p.empty()) cfg.detections = p;
        }
        if (j.contains("intensity_quantile"))
            cfg.detector_params.intensity_quantile = j["intensity_quantile"].get<double>();
        if (j.contains("min_area_frac"))
            cfg.detector_params.min_area_frac = j["min_area_frac"].get<double>();
        if (j.contains("min_mean_luma"))
            cfg.detector_params.min_mean_luma = j["min_mean_luma"].get<double>();
        if (j.contains("min_score"))
            cfg.detector_params.min_score = j["min_score"].get<double>();
        if (j.contains("grad_thresh")) cfg.grad_thresh = j["grad_thresh"].get<double>();
        if (j.contains("min_clip_seconds"))
            cfg.min_clip_seconds = j["min_clip_seconds"].get<double>();
        if (j.contains("window")) cfg.window = j["window"].get<int>();
        if (j.contains("crop_size")) cfg.crop_size = j["crop_size"].get<int>();
        if (j.contains("template_margin"))
            cfg.template_margin = j["template_margin"].get<double>();
        if (j.contains("specular_masking"))
            cfg.mask.enabled = j["specular_masking"].get<bool>();
        if (j.contains("specular_threshold"))
            cfg.mask.threshold = j["specular_threshold"].get<int>();
        if (j.contains("specular_kernel"))
            cfg.mask.kernel = j["specular_kernel"].get<int>();
        if (j.contains("flow_block")) cfg.flow.block_size = j["flow_block"].get<int>();
        if (j.contains("flow_radius"))
            cfg.flow.search_radius = j["flow_radius"].get<int>();
        if (j.contains("pad")) {
            if (j["pad"].get<std::string>() != "replicate") {
                throw UsageError("pad policy must be replicate");
            }
        }
        if (j.contains("search_mode")) {
            const std::string s = j["search_mode"].get<std::string>();
            if (s == "chained") cfg.search = SearchMode::chained;
            else if (s == "per-frame-box") cfg.search = SearchMode::per_frame_box;
            else throw UsageError("search_mode must be chained|per-frame-box");
        }
        if (j.contains("match_radius")) cfg.match_radius = j["match_radius"].get<int>();
        if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad config value: ") + e.what());
    }
    return cfg;
}

void run_pipeline(const PipelineConfig& cfg, bool with_metrics) {
    validate_config(cfg);
    std::error_code ec;
    std::filesystem::create_directories(cfg.output, ec);
    if (ec) throw WriteError("cannot create " + cfg.output.string());

    const VideoSequence seq = load_sequence(cfg.input, cfg.threads);
    log_stage(cfg, "[load] " + std::to_string(seq.size()) + " frames " +
                       std::to_string(seq.width()) + "x" + std::to_string(seq.height()) +
                       " @ " + std::to_string(seq.fps) + " fps");

    const DetectionTimeline timeline = run_detector(
        seq, cfg.detector, cfg.detector_params, cfg.detections, cfg.threads);
    log_stage(cfg, "[detect] " + std::to_string(timeline.detected_count()) + "/" +
                       std::to_string(timeline.n_frames()) + " frames with visible ODR");

    const Trajectory traj = build_trajectory(timeline, cfg.window);

    StabilityReport report;
    report.config_echo = config_to_json(cfg);

    std::set<int> removed;
    std::vector<ClipSegment> clips;
    int diameter = 0;
    if (timeline.detected_count() == 0) {
        write_trajectory_csv(cfg.output / "trajectory.csv", traj, timeline, removed);
        report.note = "no ODR detected; no usable clips";
        log_stage(cfg, "[localize] no ODR detected");
        write_report(report, cfg.output);
        return;
    }

    diameter = estimate_odr_diameter(timeline);
    const double grad_thresh =
        cfg.grad_thresh > 0.0 ? cfg.grad_thresh : 2.0 * diameter;
    removed = filter_jitters(traj, grad_thresh);
    clips = segment_clips(timeline, removed, seq.fps, cfg.min_clip_seconds);
    write_trajectory_csv(cfg.output / "trajectory.csv", traj, timeline, removed);
    log_stage(cfg, "[localize] diameter=" + std::to_string(diameter) +
                       " grad_thresh=" + std::to_string(grad_thresh) + " removed=" +
                       std::to_string(removed.size()) + " clips=" +
                       std::to_string(clips.size()));

    if (clips.empty()) {
        report.note = "no usable clips";
        write_report(report, cfg.output);
        return;
    }

    const int side = std::max(
        1, static_cast<int>(std::lround(diameter * cfg.template_margin)));

    for (std::size_t k = 0; k < clips.size(); ++k) {
        const ClipSegment& clip = clips[k];
        const std::string clip_id = "clip_" + std::to_string(k);

        const auto [win_first, win_last] = select_smooth_window(traj, clip, cfg.window);
        const int template_frame =
            select_template_frame(seq, win_first, win_last, cfg.flow);
        const Template tmpl = extract_template(seq, template_frame, timeline, side);

        StabilizeParams sp;
        sp.crop_size = cfg.crop_size;
        sp.mask = cfg.mask;
        sp.search_radius = cfg.match_radius;
        sp.search = cfg.search;
        const StabilizedClip stab = stabilize_clip(seq, clip, tmpl, timeline, sp);

        save_sequence(stab.video, cfg.output / clip_id, cfg.threads);
        write_matches_csv(cfg.output / clip_id / "matches.csv", stab.matches);

        std::size_t flagged = 0;
        for (const MatchResult& m : stab.matches) {
            if (m.flagged) ++flagged;
        }
        log_stage(cfg, "[natm] " + clip_id + " frames " +
                           std::to_string(clip.start_frame) + ".." +
                           std::to_string(clip.end_frame) + " template=" +
                           std::to_string(template_frame) + " flagged=" +
                           std::to_string(flagged));

        if (with_metrics) {
            ClipReportEntry entry;
            entry.id = clip_id;
            entry.start_frame = clip.start_frame;
            entry.end_frame = clip.end_frame;
            entry.matches_ref = clip_id + "/matches.csv";
            entry.original = score_range(seq, clip.start_frame, clip.end_frame,
                                         cfg.flow, clip_id + "_original", cfg.threads);
            entry.stabilized = score_sequence(stab.video, cfg.flow,
                                              clip_id + "_stabilized", cfg.threads);
            log_stage(cfg, "[score] " + clip_id + " original var_mag=" +
                               std::to_string(entry.original.mean_var_mag) +
                               " stabilized var_mag=" +
                               std::to_string(entry.stabilized.mean_var_mag));
            report.per_clip.push_back(std::move(entry));
        }
    }

    if (with_metrics) write_report(report, cfg.output);
}

}  // namespace retistab
