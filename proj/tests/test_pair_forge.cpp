#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include <json.hpp>

#include "vpair/pair_forge.hpp"

using namespace vpair;
using nlohmann::json;

namespace {

Caption make_caption(const std::string& video_id, AspectKind aspect) {
    Caption c;
    c.video_id = video_id;
    c.aspect = aspect;
    c.query_text = aspect == AspectKind::General ? "base query" : "base query plus aspect";
    c.caption_text = std::string(aspect_name(aspect)) + " caption of " + video_id;
    return c;
}

CaptionScore make_score(const std::string& video_id, AspectKind aspect, int score) {
    CaptionScore s;
    s.video_id = video_id;
    s.aspect = aspect;
    s.score = score;
    s.principles_version = "pv-x";
    return s;
}

CandidatePair make_candidate(const std::string& video_id, AspectKind aspect, int chosen,
                             int rejected) {
    CandidatePair c;
    c.video_id = video_id;
    c.aspect = aspect;
    c.chosen = make_caption(video_id, aspect);
    c.rejected = make_caption(video_id, AspectKind::General);
    c.score_chosen = chosen;
    c.score_rejected = rejected;
    return c;
}

}  // namespace

TEST_CASE("assemble_candidates joins complete videos") {
    std::vector<Caption> captions;
    std::vector<CaptionScore> scores;
    for (int i = 1; i <= 4; ++i) {
        std::string id = "v" + std::to_string(i);
        captions.push_back(make_caption(id, AspectKind::Temporal));
        captions.push_back(make_caption(id, AspectKind::General));
        scores.push_back(make_score(id, AspectKind::Temporal, 8));
        scores.push_back(make_score(id, AspectKind::General, 2));
    }
    AssembleResult result = assemble_candidates(captions, scores, AspectKind::Temporal);
    REQUIRE(result.candidates.size() == 4);
    CHECK(result.missing_side == 0);
    CHECK(result.candidates[0].video_id == "v1");
    CHECK(result.candidates[0].chosen.aspect == AspectKind::Temporal);
    CHECK(result.candidates[0].rejected.aspect == AspectKind::General);
    CHECK(result.candidates[0].gap() == 6);
}

TEST_CASE("assemble_candidates counts videos missing a scored side") {
    std::vector<Caption> captions = {
        make_caption("v1", AspectKind::Spatial), make_caption("v1", AspectKind::General),
        make_caption("v2", AspectKind::Spatial), make_caption("v2", AspectKind::General),
        make_caption("v3", AspectKind::Spatial)};  // v3 never got a General caption
    std::vector<CaptionScore> scores = {
        make_score("v1", AspectKind::Spatial, 9), make_score("v1", AspectKind::General, 3),
        make_score("v2", AspectKind::Spatial, 7),  // v2's General score is missing
        make_score("v3", AspectKind::Spatial, 8)};

    AssembleResult result = assemble_candidates(captions, scores, AspectKind::Spatial);
    REQUIRE(result.candidates.size() == 1);
    CHECK(result.candidates[0].video_id == "v1");
    CHECK(result.missing_side == 2);

    SUBCASE("empty stores produce an empty join") {
        AssembleResult empty = assemble_candidates({}, {}, AspectKind::Spatial);
        CHECK(empty.candidates.empty());
        CHECK(empty.missing_side == 0);
    }
    SUBCASE("the general aspect is not a pairable side") {
        CHECK_THROWS_AS(assemble_candidates(captions, scores, AspectKind::General), Error);
    }
}

TEST_CASE("filter_pairs applies a strict threshold") {
    auto run_one = [](int chosen, int rejected, int delta) {
        auto result = filter_pairs({make_candidate("v", AspectKind::Spatial, chosen, rejected)},
                                   delta, "base query", "rv-1", "pv-1");
        return result.retained.size() == 1;
    };
    CHECK(run_one(9, 2, 5));        // gap 7 > 5
    CHECK_FALSE(run_one(7, 2, 5));  // gap 5 is not retained: "exceeds" is strict
    CHECK_FALSE(run_one(4, 8, 5));  // inverted pair

    SUBCASE("retained pairs carry the base query and provenance") {
        auto result = filter_pairs({make_candidate("v9", AspectKind::Temporal, 10, 1)}, 5,
                                   "base query", "rv-7", "pv-9");
        REQUIRE(result.retained.size() == 1);
        const PreferencePair& pair = result.retained[0];
        CHECK(pair.query_text == "base query");
        CHECK(pair.chosen_text == "temporal caption of v9");
        CHECK(pair.rejected_text == "general caption of v9");
        CHECK(pair.aspect == AspectKind::Temporal);
        CHECK(pair.score_chosen == 10);
        CHECK(pair.score_rejected == 1);
        CHECK(pair.delta_used == 5);
        CHECK(pair.registry_version == "rv-7");
        CHECK(pair.principles_version == "pv-9");
    }
    SUBCASE("negative delta is rejected") {
        CHECK_THROWS_AS(filter_pairs({}, -1, "q", "r", "p"), Error);
    }
}

TEST_CASE("filter agrees with the brute-force strict-inequality oracle on the full grid") {
    for (int delta = 0; delta <= 10; ++delta) {
        for (int chosen = 0; chosen <= 10; ++chosen) {
            for (int rejected = 0; rejected <= 10; ++rejected) {
                auto result =
                    filter_pairs({make_candidate("v", AspectKind::Spatial, chosen, rejected)},
                                 delta, "q", "r", "p");
                bool kept = result.retained.size() == 1;
                bool oracle = (chosen - rejected) > delta;  // independent re-check
                CHECK(kept == oracle);
                CHECK(result.dropped_by_threshold == (oracle ? 0 : 1));
                if (chosen - rejected == delta) CHECK_FALSE(kept);
            }
        }
    }
}

TEST_CASE("summarize_run conserves counts and bins gaps") {
    std::map<AspectKind, AssembleResult> assembled;
    std::map<AspectKind, PairFilterResult> filtered;

    AssembleResult temporal;
    temporal.candidates = {make_candidate("a", AspectKind::Temporal, 9, 2),
                           make_candidate("b", AspectKind::Temporal, 9, 2),
                           make_candidate("c", AspectKind::Temporal, 8, 2),
                           make_candidate("d", AspectKind::Temporal, 6, 2)};
    temporal.missing_side = 1;
    assembled[AspectKind::Temporal] = temporal;
    filtered[AspectKind::Temporal] =
        filter_pairs(temporal.candidates, 5, "q", "rv", "pv");

    assembled[AspectKind::Spatial] = AssembleResult{};
    filtered[AspectKind::Spatial] = PairFilterResult{};

    RunStats stats = summarize_run(assembled, filtered, 5);
    const AspectStats& t = stats.aspects.at("temporal");
    CHECK(t.candidates == 5);  // 4 joined + 1 missing side
    CHECK(t.retained == 3);    // gaps 7, 7, 6
    CHECK(t.dropped_by_threshold == 1);
    CHECK(t.dropped_by_judge_failure == 1);
    CHECK(t.candidates == t.retained + t.dropped_by_threshold + t.dropped_by_judge_failure);
    CHECK(t.gap_histogram.at(6) == 1);
    CHECK(t.gap_histogram.at(7) == 2);
    CHECK(t.gap_histogram.at(4) == 1);  // the dropped candidate's gap is still observed

    const AspectStats& s = stats.aspects.at("spatial");
    CHECK(s.candidates == 0);
    CHECK(s.retained == 0);
    CHECK(s.gap_histogram.empty());

    SUBCASE("stats round-trip through json") {
        json j = stats;
        RunStats back = j.get<RunStats>();
        CHECK(back.delta == stats.delta);
        CHECK(back.aspects.at("temporal").gap_histogram == t.gap_histogram);
        CHECK(back.aspects.at("spatial").candidates == 0);
    }
}

TEST_CASE("retained output is deterministic and sorted") {
    std::vector<CandidatePair> candidates = {make_candidate("z", AspectKind::Temporal, 9, 1),
                                             make_candidate("a", AspectKind::Temporal, 9, 1),
                                             make_candidate("m", AspectKind::Temporal, 9, 1)};
    auto first = filter_pairs(candidates, 5, "q", "rv", "pv");
    auto second = filter_pairs(candidates, 5, "q", "rv", "pv");
    REQUIRE(first.retained.size() == 3);
    CHECK(first.retained[0].video_id == "a");
    CHECK(first.retained[1].video_id == "m");
    CHECK(first.retained[2].video_id == "z");
    json j1 = json::array(), j2 = json::array();
    for (const auto& p : first.retained) j1.push_back(p);
    for (const auto& p : second.retained) j2.push_back(p);
    CHECK(j1.dump() == j2.dump());
}

TEST_CASE("preference pairs round-trip through json and refuse general aspect") {
    PreferencePair p;
    p.video_id = "v1";
    p.query_text = "q";
    p.chosen_text = "chosen\nwith newline";
    p.rejected_text = "rejected \"quoted\"";
    p.aspect = AspectKind::Spatial;
    p.score_chosen = 9;
    p.score_rejected = 1;
    p.delta_used = 5;
    p.registry_version = "rv";
    p.principles_version = "pv";
    json j = p;
    PreferencePair back = j.get<PreferencePair>();
    CHECK(back.video_id == p.video_id);
    CHECK(back.chosen_text == p.chosen_text);
    CHECK(back.rejected_text == p.rejected_text);
    CHECK(back.aspect == p.aspect);

    j["aspect"] = "general";
    CHECK_THROWS_AS(j.get<PreferencePair>(), ParseError);
}
