#include "doctest.h"

#include <cmath>
#include <fstream>

#include "retistab/errors.hpp"
#include "retistab/stl.hpp"

#include "helpers.hpp"

using namespace retistab;

namespace {

// Timeline whose box centers follow the given points (nullopt = undetected).
DetectionTimeline timeline_from_centers(
    const std::vector<std::optional<std::array<double, 2>>>& centers) {
    DetectionTimeline t;
    for (const auto& c : centers) {
        if (!c) {
            t.boxes.push_back(std::nullopt);
            continue;
        }
        BoundingBox b;
        b.w = 100;
        b.h = 100;
        b.x = static_cast<int>((*c)[0]) - 50;
        b.y = static_cast<int>((*c)[1]) - 50;
        b.score = 1.0;
        t.boxes.push_back(b);
    }
    return t;
}

DetectionTimeline detected_runs(int n, const std::vector<std::array<int, 2>>& runs) {
    std::vector<std::optional<std::array<double, 2>>> centers(n, std::nullopt);
    for (const auto& r : runs) {
        for (int t = r[0]; t <= r[1]; ++t) centers[t] = {{500.0, 500.0}};
    }
    return timeline_from_centers(centers);
}

}  // namespace

TEST_CASE("empty timeline gives an all-gap trajectory") {
    DetectionTimeline t;
    t.boxes.assign(5, std::nullopt);
    const Trajectory traj = build_trajectory(t, 15);
    CHECK(traj.n_frames() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(!traj.points[i].has_value());
        CHECK(!traj.gradient[i].has_value());
        CHECK(!traj.variance_series[i].has_value());
    }
}

TEST_CASE("gradient is the per-frame displacement magnitude") {
    const Trajectory traj = build_trajectory(
        timeline_from_centers({{{100.0, 100.0}}, {{103.0, 104.0}}}), 15);
    CHECK(!traj.gradient[0].has_value());
    REQUIRE(traj.gradient[1].has_value());
    CHECK(*traj.gradient[1] == doctest::Approx(5.0));  // 3-4-5 triangle
}

TEST_CASE("constant trajectory has zero gradient and variance") {
    std::vector<std::optional<std::array<double, 2>>> centers(
        50, std::array<double, 2>{{400.0, 300.0}});
    const Trajectory traj = build_trajectory(timeline_from_centers(centers), 15);
    for (int t = 1; t < 50; ++t) {
        REQUIRE(traj.gradient[t].has_value());
        CHECK(*traj.gradient[t] == doctest::Approx(0.0));
        REQUIRE(traj.variance_series[t].has_value());
        CHECK(*traj.variance_series[t] == doctest::Approx(0.0));
    }
}

TEST_CASE("gradient is unaffected by detection gaps on either side") {
    const Trajectory traj = build_trajectory(
        timeline_from_centers(
            {{{100.0, 100.0}}, std::nullopt, {{200.0, 100.0}}, {{203.0, 104.0}}}),
        15);
    CHECK(!traj.gradient[1].has_value());
    CHECK(!traj.gradient[2].has_value());  // previous frame undetected
    REQUIRE(traj.gradient[3].has_value());
    CHECK(*traj.gradient[3] == doctest::Approx(5.0));
}

TEST_CASE("gradient is invariant under global translation") {
    std::vector<std::optional<std::array<double, 2>>> centers;
    for (int t = 0; t < 20; ++t) {
        centers.push_back({{300.0 + 3.0 * t, 200.0 + std::sin(t * 0.7) * 8.0}});
    }
    const Trajectory a = build_trajectory(timeline_from_centers(centers), 15);
    for (auto& c : centers) (*c)[0] += 57.0, (*c)[1] -= 23.0;
    const Trajectory b = build_trajectory(timeline_from_centers(centers), 15);
    for (int t = 1; t < 20; ++t) {
        REQUIRE(a.gradient[t].has_value());
        REQUIRE(b.gradient[t].has_value());
        CHECK(*a.gradient[t] == doctest::Approx(*b.gradient[t]).epsilon(1e-12));
    }
}

TEST_CASE("one huge jump removes both adjoining frames") {
    std::vector<std::optional<std::array<double, 2>>> centers(
        20, std::array<double, 2>{{500.0, 500.0}});
    for (int t = 10; t < 20; ++t) centers[t] = {{700.0, 500.0}};  // +200 at 9->10
    const Trajectory traj = build_trajectory(timeline_from_centers(centers), 15);
    const std::set<int> removed = filter_jitters(traj, 50.0);
    CHECK(removed == std::set<int>{9, 10});
}

TEST_CASE("smooth drift survives the jitter filter") {
    std::vector<std::optional<std::array<double, 2>>> centers;
    for (int t = 0; t < 30; ++t) centers.push_back({{100.0 + 2.0 * t, 100.0}});
    const Trajectory traj = build_trajectory(timeline_from_centers(centers), 15);
    CHECK(filter_jitters(traj, 50.0).empty());
}

TEST_CASE("constant trajectory yields an empty removal set") {
    std::vector<std::optional<std::array<double, 2>>> centers(
        30, std::array<double, 2>{{500.0, 500.0}});
    const Trajectory traj = build_trajectory(timeline_from_centers(centers), 15);
    CHECK(filter_jitters(traj, 10.0).empty());
}

TEST_CASE("raising the threshold never removes more frames") {
    std::vector<std::optional<std::array<double, 2>>> centers;
    std::uint64_t s = 99;
    double x = 500, y = 500;
    for (int t = 0; t < 120; ++t) {
        s = testutil::mix(s);
        x += static_cast<double>(s % 61) - 30.0;
        s = testutil::mix(s);
        y += static_cast<double>(s % 61) - 30.0;
        if (s % 11 == 0) centers.push_back(std::nullopt);
        else centers.push_back({{x, y}});
    }
    const Trajectory traj = build_trajectory(timeline_from_centers(centers), 15);
    std::set<int> prev = filter_jitters(traj, 1.0);
    for (double thresh : {5.0, 10.0, 20.0, 40.0, 80.0}) {
        const std::set<int> cur = filter_jitters(traj, thresh);
        CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
        prev = cur;
    }
}

TEST_CASE("segmentation keeps only runs of sufficient duration") {
    const DetectionTimeline all = detected_runs(100, {{{0, 99}}});
    const auto one = segment_clips(all, {}, 30.0, 1.0);
    REQUIRE(one.size() == 1);
    CHECK(one[0].start_frame == 0);
    CHECK(one[0].end_frame == 99);
    CHECK(one[0].length_seconds == doctest::Approx(100.0 / 30.0));

    const DetectionTimeline two = detected_runs(101, {{{0, 20}, {40, 100}}});
    const auto kept = segment_clips(two, {}, 30.0, 1.0);
    REQUIRE(kept.size() == 1);  // first run is 21 < 30 frames
    CHECK(kept[0].start_frame == 40);
    CHECK(kept[0].end_frame == 100);

    DetectionTimeline none;
    none.boxes.assign(50, std::nullopt);
    CHECK(segment_clips(none, {}, 30.0, 1.0).empty());
}

TEST_CASE("removed frames split runs") {
    const DetectionTimeline t = detected_runs(100, {{{0, 99}}});
    const auto clips = segment_clips(t, {40, 41}, 30.0, 1.0);
    REQUIRE(clips.size() == 2);
    CHECK(clips[0].start_frame == 0);
    CHECK(clips[0].end_frame == 39);
    CHECK(clips[1].start_frame == 42);
    CHECK(clips[1].end_frame == 99);
}

TEST_CASE("segments exactly cover the kept frames in long runs") {
    std::uint64_t s = 1234;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 80;
        std::vector<std::optional<std::array<double, 2>>> centers(n, std::nullopt);
        std::set<int> removed;
        for (int t = 0; t < n; ++t) {
            s = testutil::mix(s);
            if (s % 4 != 0) centers[t] = {{500.0, 500.0}};
            s = testutil::mix(s);
            if (s % 9 == 0) removed.insert(t);
        }
        const DetectionTimeline timeline = timeline_from_centers(centers);
        const double fps = 10.0, min_seconds = 0.5;  // min run 5 frames
        const auto clips = segment_clips(timeline, removed, fps, min_seconds);

        // disjoint, sorted, valid membership
        int prev_end = -1;
        std::set<int> covered;
        for (const ClipSegment& c : clips) {
            CHECK(c.start_frame > prev_end);
            CHECK(c.length() >= 5);
            prev_end = c.end_frame;
            for (int t = c.start_frame; t <= c.end_frame; ++t) {
                CHECK(timeline.boxes[t].has_value());
                CHECK(removed.count(t) == 0);
                covered.insert(t);
            }
        }
        // union equals kept frames lying in maximal runs of length >= 5
        int run_start = -1;
        for (int t = 0; t <= n; ++t) {
            const bool kept =
                t < n && timeline.boxes[t].has_value() && removed.count(t) == 0;
            if (kept && run_start < 0) run_start = t;
            if (!kept && run_start >= 0) {
                const bool eligible = (t - run_start) >= 5;
                for (int u = run_start; u < t; ++u) {
                    CHECK(covered.count(u) == (eligible ? 1u : 0u));
                }
                run_start = -1;
            }
        }
    }
}

TEST_CASE("trajectory CSV carries one row per frame") {
    std::vector<std::optional<std::array<double, 2>>> centers(
        5, std::array<double, 2>{{500.0, 500.0}});
    centers[2] = std::nullopt;
    const DetectionTimeline t = timeline_from_centers(centers);
    const Trajectory traj = build_trajectory(t, 15);
    const std::filesystem::path dir = testutil::temp_dir("traj_csv");
    write_trajectory_csv(dir / "trajectory.csv", traj, t, {4});

    std::ifstream in(dir / "trajectory.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "frame,detected,cx,cy,gradient,rolling_variance,removed");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
    std::filesystem::remove_all(dir);
}
