#include "vpair/judge.hpp"

#include <cctype>
#include <regex>

#include "vpair/util.hpp"

namespace vpair {

using nlohmann::json;

ScoringPrinciples default_scoring_principles() {
    ScoringPrinciples p;
    p.principles_text =
        "You are grading one video caption against the provided frames.\n"
        "Weigh, in order of importance:\n"
        "1. Factual grounding: every described object, action, and attribute must be "
        "visible in the frames.\n"
        "2. Coverage of the queried aspect: the caption should address what the query "
        "emphasizes, not a generic summary.\n"
        "3. Absence of hallucination: penalize invented entities, events, or details "
        "heavily.\n"
        "4. Alignment with the query intent: a caption that is fluent but answers a "
        "different question scores low.";
    p.scale_min = 0;
    p.scale_max = 10;
    p.principles_version = derive_principles_version(p);
    return p;
}

std::string derive_principles_version(const ScoringPrinciples& principles) {
    std::string blob = principles.principles_text;
    blob += '\x1f';
    blob += std::to_string(principles.scale_min);
    blob += '\x1f';
    blob += std::to_string(principles.scale_max);
    return "pv-" + short_hash(blob);
}

ScoringPrinciples finalize(ScoringPrinciples principles) {
    if (principles.principles_version.empty()) {
        principles.principles_version = derive_principles_version(principles);
    }
    return principles;
}

void to_json(json& j, const CaptionScore& s) {
    j = json{{"video_id", s.video_id},
             {"aspect", aspect_name(s.aspect)},
             {"score", s.score},
             {"raw_judge_text", s.raw_judge_text},
             {"judge_model", s.judge_model},
             {"principles_version", s.principles_version}};
}

void from_json(const json& j, CaptionScore& s) {
    s.video_id = j.at("video_id").get<std::string>();
    auto aspect = aspect_from_name(j.at("aspect").get<std::string>());
    if (!aspect) throw ParseError("score: unknown aspect \"" + j["aspect"].dump() + "\"");
    s.aspect = *aspect;
    s.score = j.at("score").get<int>();
    s.raw_judge_text = j.value("raw_judge_text", std::string());
    s.judge_model = j.value("judge_model", std::string());
    s.principles_version = j.value("principles_version", std::string());
}

void to_json(json& j, const AuditDrop& d) {
    j = json{{"video_id", d.video_id},
             {"aspect", aspect_name(d.aspect)},
             {"reason", d.reason},
             {"detail", d.detail}};
}

void from_json(const json& j, AuditDrop& d) {
    d.video_id = j.at("video_id").get<std::string>();
    auto aspect = aspect_from_name(j.at("aspect").get<std::string>());
    if (!aspect) throw ParseError("audit: unknown aspect \"" + j["aspect"].dump() + "\"");
    d.aspect = *aspect;
    d.reason = j.at("reason").get<std::string>();
    d.detail = j.value("detail", std::string());
}

ChatRequest build_judge_request(const ScoringPrinciples& principles, const VideoRecord& video,
                                const FrameSamplePlan& plan, const AspectQuery& query,
                                const Caption& caption,
                                const std::vector<std::string>& frame_data_urls,
                                std::string_view registry_version) {
    (void)plan;
    std::string version = std::string(registry_version) + "|" + principles.principles_version;

    ChatRequest request;
    request.request_key = make_request_key("judge", video.video_id, query.aspect, version);
    request.user_text = principles.principles_text;
    request.user_text += "\n\nQuery under evaluation:\n";
    request.user_text += query.composed_text;
    request.user_text += "\n\nCandidate caption:\n";
    request.user_text += caption.caption_text;
    request.user_text += "\n\nAfter your analysis, end your reply with one final line of exactly "
                         "this form:\nSCORE: <integer from " +
                         std::to_string(principles.scale_min) + " to " +
                         std::to_string(principles.scale_max) + ">";
    request.image_data_urls = frame_data_urls;
    return request;
}

ScoreParseResult parse_score(std::string_view raw, const ScoringPrinciples& principles) {
    static const std::regex score_line(R"(^\s*score\s*:\s*([+-]?[0-9]+)\s*$)",
                                       std::regex::icase);
    ScoreParseResult result;
    bool found = false;
    long long value = 0;
    for (const auto& line : split_lines(raw)) {
        std::smatch m;
        if (std::regex_match(line, m, score_line)) {
            try {
                value = std::stoll(m[1].str());
            } catch (const std::out_of_range&) {
                value = principles.scale_max + 1LL;  // force the range branch
            }
            found = true;  // last match wins
        }
    }
    if (!found) {
        result.status = ScoreParseStatus::unparseable;
        return result;
    }
    if (value < principles.scale_min || value > principles.scale_max) {
        result.status = ScoreParseStatus::out_of_range;
        return result;
    }
    result.status = ScoreParseStatus::ok;
    result.score = static_cast<int>(value);
    return result;
}

namespace {

AuditDrop drop_for(const Caption& caption, ScoreParseStatus status, const std::string& raw) {
    AuditDrop drop;
    drop.video_id = caption.video_id;
    drop.aspect = caption.aspect;
    drop.reason = status == ScoreParseStatus::out_of_range ? "score_out_of_range"
                                                           : "unparseable_score";
    drop.detail = "judge said: " + (raw.size() > 160 ? raw.substr(0, 160) + "..." : raw);
    return drop;
}

}  // namespace

JudgeOutcome score_caption(const EndpointConfig& cfg, const ScoringPrinciples& principles,
                           const VideoRecord& video, const FrameSamplePlan& plan,
                           const AspectQuery& query, const Caption& caption,
                           const std::vector<std::string>& frame_data_urls,
                           std::string_view registry_version) {
    ChatRequest request = build_judge_request(principles, video, plan, query, caption,
                                              frame_data_urls, registry_version);
    JudgeOutcome outcome;
    std::string last_raw;
    for (int round = 0; round < 2; ++round) {
        ChatRequest attempt = request;
        if (round == 1) attempt.request_key += ":r1";

        ChatOutcome res = send_chat(cfg, attempt);
        if (!res.ok) {
            throw InferError(res.failure,
                             "judge call failed for \"" + video.video_id + "\" (" +
                                 std::string(aspect_name(query.aspect)) +
                                 "): " + res.error_detail,
                             res.http_status, res.attempts);
        }
        last_raw = res.content;
        ScoreParseResult parsed = parse_score(res.content, principles);
        if (parsed.status == ScoreParseStatus::ok) {
            CaptionScore score;
            score.video_id = caption.video_id;
            score.aspect = caption.aspect;
            score.score = parsed.score;
            score.raw_judge_text = res.content;
            score.judge_model = cfg.model_name;
            score.principles_version = principles.principles_version;
            outcome.score = std::move(score);
            return outcome;
        }
        if (round == 1) {
            outcome.drop = drop_for(caption, parsed.status, last_raw);
        }
    }
    return outcome;
}

}  // namespace vpair
