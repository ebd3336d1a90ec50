#include "vpair/pair_forge.hpp"

#include <algorithm>
#include <set>

#include "vpair/errors.hpp"

namespace vpair {

using nlohmann::json;

void to_json(json& j, const PreferencePair& p) {
    j = json{{"video_id", p.video_id},
             {"query_text", p.query_text},
             {"chosen_text", p.chosen_text},
             {"rejected_text", p.rejected_text},
             {"aspect", aspect_name(p.aspect)},
             {"score_chosen", p.score_chosen},
             {"score_rejected", p.score_rejected},
             {"delta_used", p.delta_used},
             {"registry_version", p.registry_version},
             {"principles_version", p.principles_version}};
}

void from_json(const json& j, PreferencePair& p) {
    p.video_id = j.at("video_id").get<std::string>();
    p.query_text = j.at("query_text").get<std::string>();
    p.chosen_text = j.at("chosen_text").get<std::string>();
    p.rejected_text = j.at("rejected_text").get<std::string>();
    auto aspect = aspect_from_name(j.at("aspect").get<std::string>());
    if (!aspect || *aspect == AspectKind::General) {
        throw ParseError("preference pair: aspect must be temporal or spatial");
    }
    p.aspect = *aspect;
    p.score_chosen = j.at("score_chosen").get<int>();
    p.score_rejected = j.at("score_rejected").get<int>();
    p.delta_used = j.at("delta_used").get<int>();
    p.registry_version = j.at("registry_version").get<std::string>();
    p.principles_version = j.at("principles_version").get<std::string>();
}

AssembleResult assemble_candidates(const std::vector<Caption>& captions,
                                   const std::vector<CaptionScore>& scores, AspectKind aspect) {
    if (aspect == AspectKind::General) {
        throw Error("assemble_candidates: aspect must be temporal or spatial");
    }

    std::map<std::string, const Caption*> aspect_caps, general_caps;
    for (const auto& c : captions) {
        if (c.aspect == aspect) aspect_caps[c.video_id] = &c;
        if (c.aspect == AspectKind::General) general_caps[c.video_id] = &c;
    }
    std::map<std::string, const CaptionScore*> aspect_scores, general_scores;
    for (const auto& s : scores) {
        if (s.aspect == aspect) aspect_scores[s.video_id] = &s;
        if (s.aspect == AspectKind::General) general_scores[s.video_id] = &s;
    }

    // Every video that produced a caption on either side is considered.
    std::set<std::string> universe;
    for (const auto& [id, _] : aspect_caps) universe.insert(id);
    for (const auto& [id, _] : general_caps) universe.insert(id);

    AssembleResult result;
    for (const auto& video_id : universe) {
        auto cap_it = aspect_caps.find(video_id);
        auto gen_it = general_caps.find(video_id);
        auto cap_score_it = aspect_scores.find(video_id);
        auto gen_score_it = general_scores.find(video_id);
        bool complete = cap_it != aspect_caps.end() && gen_it != general_caps.end() &&
                        cap_score_it != aspect_scores.end() &&
                        gen_score_it != general_scores.end();
        if (!complete) {
            ++result.missing_side;
            continue;
        }
        CandidatePair cand;
        cand.video_id = video_id;
        cand.aspect = aspect;
        cand.chosen = *cap_it->second;
        cand.rejected = *gen_it->second;
        cand.score_chosen = cap_score_it->second->score;
        cand.score_rejected = gen_score_it->second->score;
        result.candidates.push_back(std::move(cand));
    }
    return result;  // universe is a std::set, so candidates are id-sorted
}

PairFilterResult filter_pairs(const std::vector<CandidatePair>& candidates, int delta,
                              const std::string& base_query, const std::string& registry_version,
                              const std::string& principles_version) {
    if (delta < 0) {
        throw Error("filter_pairs: delta must be >= 0");
    }
    PairFilterResult result;
    for (const auto& cand : candidates) {
        if (!(cand.gap() > delta)) {  // "exceeds" is strict: gap == delta drops
            ++result.dropped_by_threshold;
            continue;
        }
        PreferencePair pair;
        pair.video_id = cand.video_id;
        pair.query_text = base_query;
        pair.chosen_text = cand.chosen.caption_text;
        pair.rejected_text = cand.rejected.caption_text;
        pair.aspect = cand.aspect;
        pair.score_chosen = cand.score_chosen;
        pair.score_rejected = cand.score_rejected;
        pair.delta_used = delta;
        pair.registry_version = registry_version;
        pair.principles_version = principles_version;
        result.retained.push_back(std::move(pair));
    }
    std::stable_sort(result.retained.begin(), result.retained.end(),
              [](const PreferencePair& a, const PreferencePair& b) {
                  if (a.aspect != b.aspect) return aspect_name(a.aspect) < aspect_name(b.aspect);
                  return a.video_id < b.video_id;
              });
    return result;
}

RunStats summarize_run(const std::map<AspectKind, AssembleResult>& assembled,
                       const std::map<AspectKind, PairFilterResult>& filtered, int delta) {
    RunStats stats;
    stats.delta = delta;
    for (AspectKind aspect : kPairedAspects) {
        AspectStats a;
        auto asm_it = assembled.find(aspect);
        auto fil_it = filtered.find(aspect);
        if (asm_it != assembled.end()) {
            a.dropped_by_judge_failure = asm_it->second.missing_side;
            a.candidates = static_cast<int>(asm_it->second.candidates.size()) +
                           asm_it->second.missing_side;
            for (const auto& cand : asm_it->second.candidates) {
                a.gap_histogram[cand.gap()] += 1;
            }
        }
        if (fil_it != filtered.end()) {
            a.retained = static_cast<int>(fil_it->second.retained.size());
            a.dropped_by_threshold = fil_it->second.dropped_by_threshold;
        }
        stats.aspects[std::string(aspect_name(aspect))] = std::move(a);
    }
    return stats;
}

void to_json(json& j, const RunStats& s) {
    json aspects = json::object();
    for (const auto& [name, a] : s.aspects) {
        json hist = json::array();
        for (const auto& [gap, count] : a.gap_histogram) {
            hist.push_back(json::array({gap, count}));
        }
        aspects[name] = json{{"candidates", a.candidates},
                             {"retained", a.retained},
                             {"dropped_by_threshold", a.dropped_by_threshold},
                             {"dropped_by_judge_failure", a.dropped_by_judge_failure},
                             {"gap_histogram", hist}};
    }
    j = json{{"delta", s.delta}, {"aspects", aspects}};
}

void from_json(const json& j, RunStats& s) {
    s.delta = j.at("delta").get<int>();
    s.aspects.clear();
    for (const auto& [name, aj] : j.at("aspects").items()) {
        AspectStats a;
        a.candidates = aj.at("candidates").get<int>();
        a.retained = aj.at("retained").get<int>();
        a.dropped_by_threshold = aj.at("dropped_by_threshold").get<int>();
        a.dropped_by_judge_failure = aj.at("dropped_by_judge_failure").get<int>();
        for (const auto& bin : aj.at("gap_histogram")) {
            a.gap_histogram[bin.at(0).get<int>()] = bin.at(1).get<int>();
        }
        s.aspects[name] = std::move(a);
    }
}

}  // namespace vpair
