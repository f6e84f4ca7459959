#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "retistab/errors.hpp"
#include "retistab/metrics.hpp"
#include "retistab/synth.hpp"

#include "helpers.hpp"

using namespace retistab;
namespace fs = std::filesystem;

namespace {

VideoSequence identical_frames(int n) {
    VideoSequence seq;
    seq.fps = 30.0;
    const Frame base = testutil::disc_frame(96, 96, 48, 48, 16);
    for (int i = 0; i < n; ++i) {
        Frame f = base;
        f.index = i;
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

std::vector<MatchResult> matches_at(const std::vector<std::array<int, 2>>& pos) {
    std::vector<MatchResult> out;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        MatchResult m;
        m.frame_index = static_cast<int>(i);
        m.x = pos[i][0];
        m.y = pos[i][1];
        out.push_back(m);
    }
    return out;
}

}  // namespace

TEST_CASE("identical frames score zero everywhere") {
    FlowParams params;
    params.block_size = 16;
    params.search_radius = 4;
    const ClipScore score = score_sequence(identical_frames(4), params, "still");
    CHECK(score.frames == 4);
    CHECK(score.profile.size() == 3);
    CHECK(score.mean_var_u == doctest::Approx(0.0));
    CHECK(score.mean_var_v == doctest::Approx(0.0));
    CHECK(score.mean_var_mag == doctest::Approx(0.0));
}

TEST_CASE("scoring needs at least two frames") {
    FlowParams params;
    CHECK_THROWS_AS(score_sequence(identical_frames(1), params, "one"),
                    TooShortError);
}

TEST_CASE("trajectory error on exact and offset matches") {
    // template side 80: matched center = position + 40
    const std::vector<std::array<double, 2>> truth = {
        {{100.0, 100.0}}, {{104.0, 98.0}}, {{97.0, 103.0}}};
    const auto exact = matches_at({{60, 60}, {64, 58}, {57, 63}});
    const TrajectoryError zero = trajectory_error(truth, exact, 640, 80);
    CHECK(zero.mean == doctest::Approx(0.0));
    CHECK(zero.p95 == doctest::Approx(0.0));
    CHECK(zero.max == doctest::Approx(0.0));

    const auto shifted = matches_at({{63, 60}, {67, 58}, {60, 63}});
    const TrajectoryError off = trajectory_error(truth, shifted, 640, 80);
    CHECK(off.mean == doctest::Approx(3.0));
    CHECK(off.p95 == doctest::Approx(3.0));
    CHECK(off.max == doctest::Approx(3.0));
}

TEST_CASE("trajectory error validates alignment") {
    const std::vector<std::array<double, 2>> truth = {{{0.0, 0.0}}};
    CHECK_THROWS_AS(trajectory_error(truth, {}, 640, 80), AlignmentError);
    CHECK_THROWS_AS(trajectory_error({}, {}, 640, 80), AlignmentError);
}

TEST_CASE("p95 uses the nearest-rank rule") {
    std::vector<std::array<double, 2>> truth;
    std::vector<std::array<int, 2>> pos;
    for (int i = 0; i < 100; ++i) {
        truth.push_back({{40.0 + (i < 95 ? 0.0 : 10.0), 40.0}});
        pos.push_back({0, 0});  // matched center (40,40) for side 80
    }
    const TrajectoryError err = trajectory_error(truth, matches_at(pos), 640, 80);
    CHECK(err.p95 == doctest::Approx(0.0));
    CHECK(err.max == doctest::Approx(10.0));
}

TEST_CASE("empty report is valid JSON with an empty clip array") {
    StabilityReport report;
    report.config_echo = {{"threads", 1}};
    const fs::path dir = testutil::temp_dir("report_empty");
    write_report(report, dir);
    std::ifstream in(dir / "report.json");
    nlohmann::json j;
    in >> j;
    CHECK(j["per_clip"].is_array());
    CHECK(j["per_clip"].empty());
    CHECK(j["overall"]["clips"] == 0);
    fs::remove_all(dir);
}

TEST_CASE("report aggregates are recomputable from the profile CSVs") {
    SynthSpec spec;
    spec.width = 192;
    spec.height = 192;
    spec.n_frames = 6;
    spec.disc.cx = 96;
    spec.disc.cy = 96;
    spec.disc.radius = 30;
    spec.jitter.kind = SynthSpec::JitterKind::sinusoid;
    spec.jitter.amplitude = 4;
    spec.jitter.period = 6;
    spec.seed = 55;
    const SynthResult synth = generate(spec);

    FlowParams params;
    params.block_size = 16;
    params.search_radius = 8;
    ClipReportEntry entry;
    entry.id = "clip_0";
    entry.start_frame = 0;
    entry.end_frame = 5;
    entry.original = score_sequence(synth.video, params, "clip_0_original");
    entry.stabilized = score_sequence(synth.video, params, "clip_0_stabilized");
    entry.matches_ref = "clip_0/matches.csv";

    StabilityReport report;
    report.per_clip.push_back(entry);
    const fs::path dir = testutil::temp_dir("report_rt");
    write_report(report, dir);

    nlohmann::json j;
    {
        std::ifstream in(dir / "report.json");
        in >> j;
    }
    REQUIRE(j["per_clip"].size() == 1);
    const auto& orig = j["per_clip"][0]["original"];

    // recompute the mean from the CSV the report points to
    std::ifstream csv(dir / orig["profile"].get<std::string>());
    REQUIRE(csv.good());
    std::string line;
    std::getline(csv, line);
    CHECK(line == "frame_pair,var_u,var_v,var_mag,mean_u,mean_v");
    std::vector<double> var_mags;
    while (std::getline(csv, line)) {
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ls, tok, ',')) cols.push_back(tok);
        REQUIRE(cols.size() == 6);
        var_mags.push_back(std::stod(cols[3]));
    }
    CHECK(var_mags.size() == 5);
    CHECK(std::abs(mean_of(var_mags) - orig["mean_var_mag"].get<double>()) <= 1e-9);
    CHECK(std::abs(j["overall"]["original_mean_var_mag"].get<double>() -
                   mean_of(var_mags)) <= 1e-9);
    fs::remove_all(dir);
}
