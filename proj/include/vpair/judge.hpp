#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vpair/corpus.hpp"
#include "vpair/infer_client.hpp"
#include "vpair/prompts.hpp"

namespace vpair {

struct ScoringPrinciples {
    std::string principles_text;
    int scale_min = 0;
    int scale_max = 10;
    // Derived from text and scale when left empty, like registry_version.
    std::string principles_version;
};

ScoringPrinciples default_scoring_principles();
std::string derive_principles_version(const ScoringPrinciples& principles);
ScoringPrinciples finalize(ScoringPrinciples principles);

struct CaptionScore {
    std::string video_id;
    AspectKind aspect = AspectKind::General;  // aspect of the caption's query
    int score = 0;
    std::string raw_judge_text;
    std::string judge_model;
    std::string principles_version;
};

void to_json(nlohmann::json& j, const CaptionScore& s);
void from_json(const nlohmann::json& j, CaptionScore& s);

// A caption the judge could not score; kept for audit.
struct AuditDrop {
    std::string video_id;
    AspectKind aspect = AspectKind::General;
    std::string reason;  // unparseable_score | score_out_of_range | endpoint_failure
    std::string detail;
};

void to_json(nlohmann::json& j, const AuditDrop& d);
void from_json(const nlohmann::json& j, AuditDrop& d);

// User text lists, in order: the principles, the query under evaluation, the
// candidate caption, and the final-line format instruction. Frames attach in
// plan order, identical to generation. The request key is derived from
// registry_version combined with principles.principles_version, so editing
// either re-keys the judge work; pass the plain registry version here.
ChatRequest build_judge_request(const ScoringPrinciples& principles, const VideoRecord& video,
                                const FrameSamplePlan& plan, const AspectQuery& query,
                                const Caption& caption,
                                const std::vector<std::string>& frame_data_urls,
                                std::string_view registry_version);

enum class ScoreParseStatus { ok, unparseable, out_of_range };

struct ScoreParseResult {
    ScoreParseStatus status = ScoreParseStatus::unparseable;
    int score = 0;
};

// Takes the integer from the last line matching `SCORE: <int>` (case
// insensitive, surrounding whitespace tolerated) and checks it against the
// scale. Pure function of (raw, principles).
ScoreParseResult parse_score(std::string_view raw, const ScoringPrinciples& principles);

// Exactly one of `score` / `drop` is set.
struct JudgeOutcome {
    std::optional<CaptionScore> score;
    std::optional<AuditDrop> drop;
};

// Single-caption scoring: one judge call, one re-judge on unparseable or
// out-of-range output, then an audit drop. Infer failures propagate as
// InferError.
JudgeOutcome score_caption(const EndpointConfig& cfg, const ScoringPrinciples& principles,
                           const VideoRecord& video, const FrameSamplePlan& plan,
                           const AspectQuery& query, const Caption& caption,
                           const std::vector<std::string>& frame_data_urls,
                           std::string_view registry_version);

}  // namespace vpair
