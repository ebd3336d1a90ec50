#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "vpair/corpus.hpp"
#include "vpair/errors.hpp"

using namespace vpair;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string manifest_line(const std::string& id, double duration) {
    json j = {{"video_id", id}, {"media_uri", id + ".mp4"}, {"duration_s", duration}};
    return j.dump();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("vpair_corpus_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("load_manifest keeps records in order") {
    std::istringstream in(manifest_line("v1", 10) + "\n" + manifest_line("v2", 20) + "\n" +
                          manifest_line("v3", 30) + "\n");
    auto records = load_manifest(in);
    REQUIRE(records.size() == 3);
    CHECK(records[0].video_id == "v1");
    CHECK(records[1].video_id == "v2");
    CHECK(records[2].video_id == "v3");
    CHECK(records[1].duration_s == 20.0);
}

TEST_CASE("load_manifest on an empty stream") {
    std::istringstream in("");
    CHECK(load_manifest(in).empty());
}

TEST_CASE("load_manifest rejects duplicate ids naming the id") {
    std::istringstream in(manifest_line("v1", 10) + "\n" + manifest_line("v1", 11) + "\n");
    CHECK_THROWS_WITH_AS(load_manifest(in),
                         doctest::Contains("v1"), ConflictError);
}

TEST_CASE("load_manifest names the malformed line") {
    std::istringstream in(manifest_line("v1", 10) + "\n{not json\n");
    CHECK_THROWS_WITH_AS(load_manifest(in), doctest::Contains("line 2"), ParseError);
}

TEST_CASE("load_manifest rejects negative duration") {
    std::istringstream in(manifest_line("v1", -0.5));
    CHECK_THROWS_AS(load_manifest(in), ParseError);
}

TEST_CASE("filter_eval_overlap removes blocklisted ids in order") {
    std::vector<VideoRecord> records;
    for (int i = 1; i <= 5; ++i) {
        VideoRecord r;
        r.video_id = "v" + std::to_string(i);
        records.push_back(r);
    }
    Blocklist bl;
    bl.excluded_ids = {"v2", "v4"};
    auto result = filter_eval_overlap(records, bl);
    REQUIRE(result.kept.size() == 3);
    CHECK(result.removed == 2);
    CHECK(result.kept[0].video_id == "v1");
    CHECK(result.kept[1].video_id == "v3");
    CHECK(result.kept[2].video_id == "v5");

    SUBCASE("empty blocklist is the identity") {
        auto same = filter_eval_overlap(records, Blocklist{});
        CHECK(same.kept.size() == records.size());
        CHECK(same.removed == 0);
    }
    SUBCASE("a blocklist covering everything annihilates") {
        Blocklist all;
        for (const auto& r : records) all.excluded_ids.insert(r.video_id);
        auto none = filter_eval_overlap(records, all);
        CHECK(none.kept.empty());
        CHECK(none.removed == 5);
    }
    SUBCASE("filtering is idempotent") {
        auto once = filter_eval_overlap(records, bl);
        auto twice = filter_eval_overlap(once.kept, bl);
        CHECK(twice.removed == 0);
        REQUIRE(twice.kept.size() == once.kept.size());
        for (std::size_t i = 0; i < once.kept.size(); ++i) {
            CHECK(twice.kept[i].video_id == once.kept[i].video_id);
        }
    }
}

TEST_CASE("plan_frames: 10 s at 2 fps fits under the cap") {
    VideoRecord r;
    r.video_id = "v";
    r.duration_s = 10.0;
    auto plan = plan_frames(r, 2.0, 32);
    REQUIRE(plan.timestamps_ms.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(plan.timestamps_ms[i] == static_cast<std::int64_t>(i) * 500);
    }
}

TEST_CASE("plan_frames: 60 s at 2 fps strides 120 candidates down to 32") {
    VideoRecord r;
    r.video_id = "v";
    r.duration_s = 60.0;
    auto plan = plan_frames(r, 2.0, 32);
    REQUIRE(plan.timestamps_ms.size() == 32);
    CHECK(plan.timestamps_ms.front() == 0);

    // Brute-force uniform-index oracle: candidate i sits at i*500 ms and the
    // kept indices are floor(j * 120 / 32).
    for (std::size_t j = 0; j < 32; ++j) {
        std::size_t expect_idx = j * 120 / 32;
        CHECK(plan.timestamps_ms[j] == static_cast<std::int64_t>(expect_idx) * 500);
    }
}

TEST_CASE("plan_frames: degenerate short video keeps one frame at zero") {
    VideoRecord r;
    r.video_id = "v";
    r.duration_s = 0.2;
    auto plan = plan_frames(r, 2.0, 32);
    REQUIRE(plan.timestamps_ms.size() == 1);
    CHECK(plan.timestamps_ms[0] == 0);
}

TEST_CASE("plan_frames: unknown duration without a frame directory is unplannable") {
    VideoRecord r;
    r.video_id = "v";
    r.duration_s = 0.0;
    CHECK_THROWS_AS(plan_frames(r, 2.0, 32), PlanError);
    CHECK_THROWS_AS(plan_frames(r, -1.0, 32), PlanError);
    r.duration_s = 5.0;
    CHECK_THROWS_AS(plan_frames(r, 2.0, 0), PlanError);
}

TEST_CASE("plan_frames: zero duration with a frame directory enumerates it") {
    fs::path dir = fresh_dir("framedir");
    for (int i = 0; i < 5; ++i) {
        std::ofstream(dir / (std::to_string(i) + "_" + std::to_string(i * 250) + ".jpg")) << "x";
    }
    std::ofstream(dir / "notes.txt") << "ignored";
    VideoRecord r;
    r.video_id = "v";
    r.duration_s = 0.0;
    auto plan = plan_frames(r, 2.0, 32, dir);
    REQUIRE(plan.timestamps_ms.size() == 5);
    CHECK(plan.timestamps_ms == std::vector<std::int64_t>{0, 250, 500, 750, 1000});

    SUBCASE("cap applies to directory plans too") {
        auto capped = plan_frames(r, 2.0, 2, dir);
        REQUIRE(capped.timestamps_ms.size() == 2);
        CHECK(capped.timestamps_ms[0] == 0);
    }
}

TEST_CASE("plan_frames count and ordering properties") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> duration(0.05, 90.0);
    std::uniform_real_distribution<double> fps(0.2, 10.0);
    std::uniform_int_distribution<int> cap(1, 48);
    for (int trial = 0; trial < 500; ++trial) {
        VideoRecord r;
        r.video_id = "v";
        r.duration_s = duration(rng);
        double f = fps(rng);
        int m = cap(rng);
        auto plan = plan_frames(r, f, m);
        auto expected = std::min<std::int64_t>(
            m, std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(r.duration_s * f))));
        CHECK(static_cast<std::int64_t>(plan.timestamps_ms.size()) == expected);
        CHECK(plan.timestamps_ms.front() == 0);
        for (std::size_t i = 1; i < plan.timestamps_ms.size(); ++i) {
            CHECK(plan.timestamps_ms[i] > plan.timestamps_ms[i - 1]);
            CHECK(plan.timestamps_ms[i] <= static_cast<std::int64_t>(r.duration_s * 1000.0) + 1);
        }
    }
}

TEST_CASE("plan_frames is deterministic down to serialized bytes") {
    VideoRecord r;
    r.video_id = "v";
    r.duration_s = 37.73;
    json a = plan_frames(r, 2.0, 32);
    json b = plan_frames(r, 2.0, 32);
    CHECK(a.dump() == b.dump());
}

TEST_CASE("stride_indices matches its definition") {
    for (std::size_t n : {1u, 2u, 5u, 31u, 120u, 997u}) {
        for (std::size_t m : {1u, 2u, 3u, 32u, 120u}) {
            auto idx = stride_indices(n, m);
            if (n <= m) {
                REQUIRE(idx.size() == n);
                for (std::size_t i = 0; i < n; ++i) CHECK(idx[i] == i);
            } else {
                REQUIRE(idx.size() == m);
                CHECK(idx.front() == 0);
                for (std::size_t j = 0; j < m; ++j) {
                    CHECK(idx[j] == j * n / m);
                    if (j > 0) CHECK(idx[j] > idx[j - 1]);
                }
            }
        }
    }
}

TEST_CASE("frame file names round-trip") {
    CHECK(frame_file_name(0, 0) == "0_0.jpg");
    CHECK(frame_file_name(3, 1500) == "3_1500.jpg");
    auto parsed = parse_frame_file_name("3_1500.jpg");
    REQUIRE(parsed.has_value());
    CHECK(parsed->first == 3);
    CHECK(parsed->second == 1500);
    CHECK_FALSE(parse_frame_file_name("frame.jpg").has_value());
    CHECK_FALSE(parse_frame_file_name("3_1500.txt").has_value());
    CHECK_FALSE(parse_frame_file_name("a_b.jpg").has_value());
}

TEST_CASE("blocklist files deduplicate and ignore blanks") {
    fs::path dir = fresh_dir("blocklist");
    std::ofstream(dir / "bl.txt") << "v1\n\n  v2  \nv1\n";
    auto bl = load_blocklist_file(dir / "bl.txt");
    CHECK(bl.excluded_ids == std::set<std::string>{"v1", "v2"});
}

TEST_CASE("video record json round-trips optional fields") {
    VideoRecord r;
    r.video_id = "clip";
    r.media_uri = "clip.mp4";
    r.duration_s = 12.25;
    r.native_fps = 29.97;
    r.tags = {"indoor", "two people"};
    json j = r;
    auto back = j.get<VideoRecord>();
    CHECK(back.video_id == r.video_id);
    CHECK(back.media_uri == r.media_uri);
    CHECK(back.duration_s == r.duration_s);
    CHECK(back.native_fps == r.native_fps);
    CHECK(back.tags == r.tags);
}
