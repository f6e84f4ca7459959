// retistab: fundus-video stabilization toolkit.
//
// Subcommands expose each stage of the pipeline (detect, localize, stabilize,
// score, synth) next to the end-to-end `run`. Errors go to stderr as one JSON
// object {"error": <kind>, "message": <text>} so batch scripts can triage
// failures mechanically. Exit codes: 0 success, 1 runtime failure, 2 usage.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "retistab/detection.hpp"
#include "retistab/errors.hpp"
#include "retistab/metrics.hpp"
#include "retistab/pipeline.hpp"
#include "retistab/stl.hpp"
#include "retistab/synth.hpp"
#include "retistab/video_io.hpp"

namespace {

using retistab::PipelineConfig;

void emit_error(const std::string& kind, const std::string& message) {
    nlohmann::json j = {{"error", kind}, {"message", message}};
    std::cerr << j.dump() << "\n";
}

// Shared pipeline flags. Flag values land in `cfg` directly; precedence
// (flags > config file > defaults) is handled by parsing the config file
// into the defaults before CLI11 applies the flags it saw.
struct PipelineArgs {
    PipelineConfig cfg;
    std::string config_path;
    std::string detector = "classical";
    std::string search_mode = "chained";
    std::string pad = "replicate";
    std::string detections;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input", cfg.input, "input sequence directory or .y4m file")
            ->required();
        cmd->add_option("--output", cfg.output, "output directory")->required();
        cmd->add_option("--config", config_path, "JSON config file (flags override)");
        cmd->add_option("--detector", detector, "classical|file")
            ->check(CLI::IsMember({"classical", "file"}));
        cmd->add_option("--detections", detections, "detections JSON (detector=file)");
        cmd->add_option("--min-score", cfg.detector_params.min_score,
                        "minimum score for imported detections");
        cmd->add_option("--intensity-quantile", cfg.detector_params.intensity_quantile,
                        "bright-pixel quantile for the classical detector");
        cmd->add_option("--min-area-frac", cfg.detector_params.min_area_frac,
                        "minimum disc area as a fraction of the frame");
        cmd->add_option("--min-mean-luma", cfg.detector_params.min_mean_luma,
                        "blink guard: skip frames darker than this mean luma");
        cmd->add_option("--grad-thresh", cfg.grad_thresh,
                        "jitter threshold in px/frame (0 = 2 x ODR diameter)");
        cmd->add_option("--min-clip-seconds", cfg.min_clip_seconds,
                        "minimum clip duration in seconds");
        cmd->add_option("--window", cfg.window, "sliding window length in frames");
        cmd->add_option("--crop-size", cfg.crop_size, "output crop side in px");
        cmd->add_option("--template-margin", cfg.template_margin,
                        "template side = round(diameter * margin)");
        cmd->add_flag("--no-mask", "disable specular masking");
        cmd->add_option("--specular-threshold", cfg.mask.threshold,
                        "B/G saturation threshold for the specular mask");
        cmd->add_option("--specular-kernel", cfg.mask.kernel,
                        "specular mask mean-filter kernel (odd)");
        cmd->add_option("--flow-block", cfg.flow.block_size, "flow block size in px");
        cmd->add_option("--flow-radius", cfg.flow.search_radius,
                        "flow search radius in px");
        cmd->add_option("--search-mode", search_mode, "chained|per-frame-box")
            ->check(CLI::IsMember({"chained", "per-frame-box"}));
        cmd->add_option("--match-radius", cfg.match_radius,
                        "template search radius in px (-1 = template side)");
        cmd->add_option("--pad", pad, "out-of-bounds crop fill policy")
            ->check(CLI::IsMember({"replicate"}));
        cmd->add_option("--threads", cfg.threads, "worker thread cap");
        cmd->add_flag("--quiet", cfg.quiet, "suppress stage log lines");
    }

    PipelineConfig resolve(const CLI::App* cmd) {
        PipelineConfig out = cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                throw retistab::UsageError("cannot read config file " + config_path);
            }
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw retistab::UsageError(std::string("bad config JSON: ") + e.what());
            }
            // File values apply over defaults, then explicit flags re-apply
            // on top.
            PipelineConfig defaults;
            defaults.input = out.input;
            defaults.output = out.output;
            PipelineConfig from_file = retistab::config_from_json(j, defaults);

            auto flagged = [&](const std::string& name) {
                return cmd->count(name) > 0;
            };
            if (!flagged("--detector")) {
                out.detector = from_file.detector;
                if (from_file.detections) detections = from_file.detections->string();
            }
            if (!flagged("--detections") && from_file.detections)
                detections = from_file.detections->string();
            if (!flagged("--min-score"))
                out.detector_params.min_score = from_file.detector_params.min_score;
            if (!flagged("--intensity-quantile"))
                out.detector_params.intensity_quantile =
                    from_file.detector_params.intensity_quantile;
            if (!flagged("--min-area-frac"))
                out.detector_params.min_area_frac =
                    from_file.detector_params.min_area_frac;
            if (!flagged("--min-mean-luma"))
                out.detector_params.min_mean_luma =
                    from_file.detector_params.min_mean_luma;
            if (!flagged("--grad-thresh")) out.grad_thresh = from_file.grad_thresh;
            if (!flagged("--min-clip-seconds"))
                out.min_clip_seconds = from_file.min_clip_seconds;
            if (!flagged("--window")) out.window = from_file.window;
            if (!flagged("--crop-size")) out.crop_size = from_file.crop_size;
            if (!flagged("--template-margin"))
                out.template_margin = from_file.template_margin;
            if (!flagged("--no-mask")) out.mask.enabled = from_file.mask.enabled;
            if (!flagged("--specular-threshold"))
                out.mask.threshold = from_file.mask.threshold;
            if (!flagged("--specular-kernel")) out.mask.kernel = from_file.mask.kernel;
            if (!flagged("--flow-block"))
                out.flow.block_size = from_file.flow.block_size;
            if (!flagged("--flow-radius"))
                out.flow.search_radius = from_file.flow.search_radius;
            if (!flagged("--search-mode")) out.search = from_file.search;
            if (!flagged("--match-radius")) out.match_radius = from_file.match_radius;
            if (!flagged("--threads")) out.threads = from_file.threads;
            if (flagged("--detector")) {
                out.detector = detector == "file" ? retistab::DetectorMode::file
                                                  : retistab::DetectorMode::classical;
            }
            if (flagged("--search-mode")) {
                out.search = search_mode == "per-frame-box"
                                 ? retistab::SearchMode::per_frame_box
                                 : retistab::SearchMode::chained;
            }
        } else {
            out.detector = detector == "file" ? retistab::DetectorMode::file
                                              : retistab::DetectorMode::classical;
            out.search = search_mode == "per-frame-box"
                             ? retistab::SearchMode::per_frame_box
                             : retistab::SearchMode::chained;
        }
        if (cmd->count("--no-mask") > 0) out.mask.enabled = false;
        if (!detections.empty()) out.detections = detections;
        return out;
    }
};

int cmd_detect(const PipelineArgs& args, const CLI::App* cmd) {
    PipelineArgs mut = args;
    const PipelineConfig cfg = mut.resolve(cmd);
    retistab::validate_config(cfg);
    const retistab::VideoSequence seq = retistab::load_sequence(cfg.input, cfg.threads);
    const retistab::DetectionTimeline timeline = retistab::run_detector(
        seq, cfg.detector, cfg.detector_params, cfg.detections, cfg.threads);
    std::filesystem::create_directories(cfg.output);
    retistab::export_detections(timeline, cfg.output / "detections.json");
    if (!cfg.quiet) {
        std::cout << "[detect] " << timeline.detected_count() << "/"
                  << timeline.n_frames() << " frames with visible ODR\n";
    }
    return 0;
}

int cmd_localize(const PipelineArgs& args, const CLI::App* cmd) {
    PipelineArgs mut = args;
    const PipelineConfig cfg = mut.resolve(cmd);
    retistab::validate_config(cfg);
    const retistab::VideoSequence seq = retistab::load_sequence(cfg.input, cfg.threads);
    const retistab::DetectionTimeline timeline = retistab::run_detector(
        seq, cfg.detector, cfg.detector_params, cfg.detections, cfg.threads);
    const retistab::Trajectory traj = retistab::build_trajectory(timeline, cfg.window);

    std::set<int> removed;
    std::vector<retistab::ClipSegment> clips;
    if (timeline.detected_count() > 0) {
        const int diameter = retistab::estimate_odr_diameter(timeline);
        const double thresh =
            cfg.grad_thresh > 0.0 ? cfg.grad_thresh : 2.0 * diameter;
        removed = retistab::filter_jitters(traj, thresh);
        clips = retistab::segment_clips(timeline, removed, seq.fps,
                                        cfg.min_clip_seconds);
    }
    std::filesystem::create_directories(cfg.output);
    retistab::write_trajectory_csv(cfg.output / "trajectory.csv", traj, timeline,
                                   removed);
    nlohmann::json jclips = nlohmann::json::array();
    for (const retistab::ClipSegment& c : clips) {
        jclips.push_back({{"start_frame", c.start_frame},
                          {"end_frame", c.end_frame},
                          {"length_seconds", c.length_seconds}});
    }
    std::ofstream out(cfg.output / "clips.json");
    out << jclips.dump(2) << "\n";
    if (!out) throw retistab::WriteError("cannot write clips.json");
    if (!cfg.quiet) {
        std::cout << "[localize] removed=" << removed.size()
                  << " clips=" << clips.size() << "\n";
    }
    return 0;
}

int cmd_score(const PipelineArgs& args, const CLI::App* cmd) {
    PipelineArgs mut = args;
    const PipelineConfig cfg = mut.resolve(cmd);
    retistab::validate_config(cfg);
    const retistab::VideoSequence seq = retistab::load_sequence(cfg.input, cfg.threads);
    const retistab::ClipScore score =
        retistab::score_sequence(seq, cfg.flow, "input", cfg.threads);
    retistab::StabilityReport report;
    report.config_echo = retistab::config_to_json(cfg);
    retistab::ClipReportEntry entry;
    entry.id = "input";
    entry.start_frame = 0;
    entry.end_frame = static_cast<int>(seq.size()) - 1;
    entry.original = score;
    entry.stabilized = score;
    entry.stabilized.id = "input";
    report.per_clip.push_back(entry);
    retistab::write_report(report, cfg.output);
    if (!cfg.quiet) {
        std::cout << "[score] mean var_mag=" << score.mean_var_mag << "\n";
    }
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& benchmark,
              const std::string& out_dir, int threads, bool quiet) {
    retistab::SynthSpec spec;
    if (!spec_path.empty() && !benchmark.empty()) {
        throw retistab::UsageError("--spec and --benchmark are mutually exclusive");
    }
    if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        if (!in) throw retistab::UsageError("cannot read spec file " + spec_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw retistab::UsageError(std::string("bad spec JSON: ") + e.what());
        }
        spec = retistab::spec_from_json(j);
    } else if (!benchmark.empty()) {
        spec = retistab::benchmark_by_name(benchmark);
    } else {
        throw retistab::UsageError("synth needs --spec or --benchmark");
    }
    const retistab::SynthResult result = retistab::generate(spec, threads);
    retistab::save_sequence(result.video, out_dir, threads);
    retistab::write_truth_csv(result.truth,
                              std::filesystem::path(out_dir) / "truth.csv");
    if (!quiet) {
        std::cout << "[synth] " << spec.name << ": " << result.video.size()
                  << " frames " << spec.width << "x" << spec.height << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fundus retina video stabilization toolkit"};
    app.require_subcommand(1);

    PipelineArgs run_args, stab_args, detect_args, localize_args, score_args;
    CLI::App* run = app.add_subcommand("run", "full pipeline with metrics");
    run_args.attach(run);
    CLI::App* stabilize =
        app.add_subcommand("stabilize", "pipeline without the scoring stage");
    stab_args.attach(stabilize);
    CLI::App* detect = app.add_subcommand("detect", "per-frame ODR detection only");
    detect_args.attach(detect);
    CLI::App* localize =
        app.add_subcommand("localize", "detection + trajectory + clip segmentation");
    localize_args.attach(localize);
    CLI::App* score = app.add_subcommand("score", "flow-variance score of a sequence");
    score_args.attach(score);

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
    std::string synth_spec, synth_benchmark, synth_out;
    int synth_threads = 1;
    bool synth_quiet = false;
    synth->add_option("--spec", synth_spec, "SynthSpec JSON file");
    synth->add_option("--benchmark", synth_benchmark, "standard benchmark name");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--threads", synth_threads, "worker thread cap");
    synth->add_flag("--quiet", synth_quiet, "suppress log lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what());
        return 2;
    }

    try {
        if (run->parsed()) {
            retistab::run_pipeline(run_args.resolve(run), true);
            return 0;
        }
        if (stabilize->parsed()) {
            retistab::run_pipeline(stab_args.resolve(stabilize), false);
            return 0;
        }
        if (detect->parsed()) return cmd_detect(detect_args, detect);
        if (localize->parsed()) return cmd_localize(localize_args, localize);
        if (score->parsed()) return cmd_score(score_args, score);
        if (synth->parsed()) {
            return cmd_synth(synth_spec, synth_benchmark, synth_out, synth_threads,
                             synth_quiet);
        }
    } catch (const retistab::UsageError& e) {
        emit_error(e.kind(), e.what());
        return 2;
    } catch (const retistab::Error& e) {
        emit_error(e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 1;
    }
    return 0;
}
