#include "retistab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "retistab/errors.hpp"

namespace retistab {
namespace {

void write_profile_csv(const std::filesystem::path& path,
                       const std::vector<FlowStats>& profile) {
    std::ofstream out(path);
    out << "frame_pair,var_u,var_v,var_mag,mean_u,mean_v\n";
    out.precision(12);
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const FlowStats& s = profile[i];
        out << i << ',' << s.var_u << ',' << s.var_v << ',' << s.var_mag << ','
            << s.mean_u << ',' << s.mean_v << '\n';
    }
    if (!out) throw WriteError("cannot write flow profile to " + path.string());
}

nlohmann::json score_to_json(const ClipScore& s) {
    return {{"id", s.id},
            {"frames", s.frames},
            {"mean_var_u", s.mean_var_u},
            {"mean_var_v", s.mean_var_v},
            {"mean_var_mag", s.mean_var_mag},
            {"profile", s.profile_ref}};
}

}  // namespace

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

ClipScore score_range(const VideoSequence& seq, int first, int last,
                      const FlowParams& params, const std::string& id, int threads) {
    if (last - first + 1 < 2) {
        throw TooShortError("scoring needs at least 2 frames");
    }
    ClipScore score;
    score.id = id;
    score.frames = last - first + 1;
    score.profile = clip_flow_profile(seq, first, last, params, threads);
    std::vector<double> vu, vv, vm;
    vu.reserve(score.profile.size());
    for (const FlowStats& s : score.profile) {
        vu.push_back(s.var_u);
        vv.push_back(s.var_v);
        vm.push_back(s.var_mag);
    }
    score.mean_var_u = mean_of(vu);
    score.mean_var_v = mean_of(vv);
    score.mean_var_mag = mean_of(vm);
    score.profile_ref = "flow_profile_" + id + ".csv";
    return score;
}

ClipScore score_sequence(const VideoSequence& seq, const FlowParams& params,
                         const std::string& id, int threads) {
    if (seq.size() < 2) throw TooShortError("sequence has fewer than 2 frames");
    return score_range(seq, 0, static_cast<int>(seq.size()) - 1, params, id, threads);
}

TrajectoryError trajectory_error(const std::vector<std::array<double, 2>>& truth,
                                 const std::vector<MatchResult>& matches,
                                 int crop_size, int template_side) {
    if (truth.size() != matches.size()) {
        throw AlignmentError("ground truth and match list differ in length");
    }
    if (truth.empty()) throw AlignmentError("empty trajectory");

    // True center in output coordinates is (true - crop top-left); the crop
    // is centered on the matched ODR center, so the crop-size term cancels
    // and the error reduces to ||true - matched center||.
    (void)crop_size;
    std::vector<double> errors;
    errors.reserve(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double mcx = matches[i].x + template_side / 2;
        const double mcy = matches[i].y + template_side / 2;
        errors.push_back(std::hypot(truth[i][0] - mcx, truth[i][1] - mcy));
    }
    TrajectoryError out;
    out.mean = mean_of(errors);
    out.max = *std::max_element(errors.begin(), errors.end());
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(sorted.size())));
    out.p95 = sorted[std::min(sorted.size() - 1, rank == 0 ? 0 : rank - 1)];
    return out;
}

void write_report(const StabilityReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw WriteError("cannot create " + dir.string() + ": " + ec.message());

    nlohmann::json per_clip = nlohmann::json::array();
    std::vector<double> all_orig, all_stab, all_orig_sum, all_stab_sum;
    for (const ClipReportEntry& e : report.per_clip) {
        write_profile_csv(dir / e.original.profile_ref, e.original.profile);
        write_profile_csv(dir / e.stabilized.profile_ref, e.stabilized.profile);
        per_clip.push_back({{"id", e.id},
                            {"start_frame", e.start_frame},
                            {"end_frame", e.end_frame},
                            {"original", score_to_json(e.original)},
                            {"stabilized", score_to_json(e.stabilized)},
                            {"matches", e.matches_ref}});
        for (const FlowStats& s : e.original.profile) {
            all_orig.push_back(s.var_mag);
            all_orig_sum.push_back(s.var_u + s.var_v);
        }
        for (const FlowStats& s : e.stabilized.profile) {
            all_stab.push_back(s.var_mag);
            all_stab_sum.push_back(s.var_u + s.var_v);
        }
    }
    nlohmann::json j = {
        {"per_clip", per_clip},
        {"overall",
         {{"clips", report.per_clip.size()},
          {"original_mean_var_mag", mean_of(all_orig)},
          {"stabilized_mean_var_mag", mean_of(all_stab)},
          // var_u + var_v is the scalar "variance of optical flow" used for
          // cross-method comparisons.
          {"original_mean_var_sum", mean_of(all_orig_sum)},
          {"stabilized_mean_var_sum", mean_of(all_stab_sum)}}},
        {"config_echo", report.config_echo},
    };
    if (!report.note.empty()) j["note"] = report.note;

    std::ofstream out(dir / "report.json");
    out << j.dump(2) << "\n";
    if (!out) throw WriteError("cannot write report.json in " + dir.string());
}

}  // namespace retistab
