#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "retistab/flow.hpp"
#include "retistab/natm.hpp"

#include "json.hpp"

namespace retistab {

// Flow-variance score of one footage range or clip.
struct ClipScore {
    std::string id;
    int frames = 0;
    double mean_var_u = 0.0;
    double mean_var_v = 0.0;
    double mean_var_mag = 0.0;
    std::string profile_ref;          // CSV filename written next to the report
    std::vector<FlowStats> profile;   // per frame pair
};

struct ClipReportEntry {
    std::string id;
    int start_frame = 0;
    int end_frame = 0;
    ClipScore original;
    ClipScore stabilized;
    std::string matches_ref;
};

struct StabilityReport {
    std::vector<ClipReportEntry> per_clip;
    std::string note;
    nlohmann::json config_echo;
};

ClipScore score_sequence(const VideoSequence& seq, const FlowParams& params,
                         const std::string& id, int threads = 1);
ClipScore score_range(const VideoSequence& seq, int first, int last,
                      const FlowParams& params, const std::string& id,
                      int threads = 1);

struct TrajectoryError {
    double mean = 0.0;
    double p95 = 0.0;
    double max = 0.0;
};

/// Per-frame distance of the true disc center from the crop center in the
/// stabilized output (synthetic ground truth only). `truth` holds the true
/// centers in input coordinates for exactly the matched frames.
TrajectoryError trajectory_error(const std::vector<std::array<double, 2>>& truth,
                                 const std::vector<MatchResult>& matches,
                                 int crop_size, int template_side);

/// Writes report.json plus one flow_profile_<id>.csv per scored range into
/// the report's directory.
void write_report(const StabilityReport& report, const std::filesystem::path& dir);

double mean_of(const std::vector<double>& v);

}  // namespace retistab
