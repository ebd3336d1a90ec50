#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpair/infer_client.hpp"
#include "vpair/judge.hpp"
#include "vpair/prompts.hpp"

namespace vpair {

// The exported training tuple. query_text is always the plain base query:
// the chosen caption was generated under the aspect-augmented query, but the
// pair trains the model to produce that caption from the base query alone.
struct PreferencePair {
    std::string video_id;
    std::string query_text;
    std::string chosen_text;    // caption from the aspect-augmented query
    std::string rejected_text;  // caption from the base query
    AspectKind aspect = AspectKind::Temporal;  // Temporal or Spatial, never General
    int score_chosen = 0;
    int score_rejected = 0;
    int delta_used = 0;
    std::string registry_version;
    std::string principles_version;
};

void to_json(nlohmann::json& j, const PreferencePair& p);
void from_json(const nlohmann::json& j, PreferencePair& p);

// A joined (aspect caption, general caption) row with both scores present.
struct CandidatePair {
    std::string video_id;
    AspectKind aspect = AspectKind::Temporal;
    Caption chosen;
    Caption rejected;
    int score_chosen = 0;
    int score_rejected = 0;

    int gap() const { return score_chosen - score_rejected; }
};

struct AssembleResult {
    std::vector<CandidatePair> candidates;  // sorted by video_id
    int missing_side = 0;  // videos lacking a scored caption on one side
};

// Joins the aspect-side and General-side stores per video. Videos missing a
// scored caption on either side are counted, not emitted.
AssembleResult assemble_candidates(const std::vector<Caption>& captions,
                                   const std::vector<CaptionScore>& scores, AspectKind aspect);

struct AspectStats {
    int candidates = 0;  // everything considered, including judge-failure drops
    int retained = 0;
    int dropped_by_threshold = 0;
    int dropped_by_judge_failure = 0;
    std::map<int, int> gap_histogram;  // unit bins over observed score gaps
};

struct RunStats {
    int delta = 0;
    std::map<std::string, AspectStats> aspects;  // keyed by aspect name
};

void to_json(nlohmann::json& j, const RunStats& s);
void from_json(const nlohmann::json& j, RunStats& s);

struct PairFilterResult {
    std::vector<PreferencePair> retained;  // sorted by (aspect, video_id)
    int dropped_by_threshold = 0;
};

// Retains candidates whose score gap strictly exceeds delta. Retained pairs
// carry the base query as query_text and the given version stamps.
PairFilterResult filter_pairs(const std::vector<CandidatePair>& candidates, int delta,
                              const std::string& base_query, const std::string& registry_version,
                              const std::string& principles_version);

// Folds per-aspect assembly and filter outputs into run statistics; the
// conservation candidates = retained + dropped_by_threshold +
// dropped_by_judge_failure holds per aspect by construction.
RunStats summarize_run(const std::map<AspectKind, AssembleResult>& assembled,
                       const std::map<AspectKind, PairFilterResult>& filtered, int delta);

}  // namespace vpair
