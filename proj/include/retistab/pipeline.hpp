#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "retistab/detection.hpp"
#include "retistab/flow.hpp"
#include "retistab/natm.hpp"

#include "json.hpp"

namespace retistab {

struct PipelineConfig {
    std::filesystem::path input;
    std::filesystem::path output;

    DetectorMode detector = DetectorMode::classical;
    std::optional<std::filesystem::path> detections;
    DetectorParams detector_params;

    double grad_thresh = 0.0;       // 0 = auto: 2 x estimated ODR diameter
    double min_clip_seconds = 1.5;
    int window = 15;                // sliding / rolling-variance window, frames

    int crop_size = 640;
    double template_margin = 1.0;   // template side = round(diameter * margin)
    MaskPolicy mask;
    FlowParams flow;
    PadPolicy pad = PadPolicy::replicate;
    SearchMode search = SearchMode::chained;
    int match_radius = -1;          // -1 = template side

    int threads = 1;
    bool quiet = false;
};

/// Validates ranges; throws UsageError on violation.
void validate_config(const PipelineConfig& cfg);

/// Full effective configuration, echoed into report.json so a run can be
/// replayed from the report alone.
nlohmann::json config_to_json(const PipelineConfig& cfg);

/// Applies a JSON config file over `base`; unknown keys are rejected with
/// UsageError.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base);

/// detection -> STL -> NATM [-> metrics]; writes trajectory.csv, per-clip
/// stabilized sequences + matches.csv and (when scoring) report.json under
/// cfg.output. Zero usable clips is a success with an explanatory note.
void run_pipeline(const PipelineConfig& cfg, bool with_metrics = true);

}  // namespace retistab
