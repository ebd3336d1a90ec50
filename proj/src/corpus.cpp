#include "vpair/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "vpair/errors.hpp"
#include "vpair/util.hpp"

namespace vpair {

using nlohmann::json;

void to_json(json& j, const VideoRecord& r) {
    j = json{{"video_id", r.video_id},
             {"media_uri", r.media_uri},
             {"duration_s", r.duration_s}};
    if (r.native_fps) j["native_fps"] = *r.native_fps;
    if (!r.tags.empty()) j["tags"] = r.tags;
}

void from_json(const json& j, VideoRecord& r) {
    r.video_id = j.at("video_id").get<std::string>();
    r.media_uri = j.at("media_uri").get<std::string>();
    r.duration_s = j.at("duration_s").get<double>();
    r.native_fps.reset();
    if (j.contains("native_fps") && !j["native_fps"].is_null()) {
        r.native_fps = j["native_fps"].get<double>();
    }
    r.tags.clear();
    if (j.contains("tags")) r.tags = j["tags"].get<std::vector<std::string>>();
}

void to_json(json& j, const FrameSamplePlan& p) {
    json ts = json::array();
    for (std::int64_t ms : p.timestamps_ms) {
        ts.push_back(static_cast<double>(ms) / 1000.0);
    }
    j = json{{"video_id", p.video_id},
             {"timestamps_s", ts},
             {"target_fps", p.target_fps},
             {"max_frames", p.max_frames}};
}

void from_json(const json& j, FrameSamplePlan& p) {
    p.video_id = j.at("video_id").get<std::string>();
    p.timestamps_ms.clear();
    for (const auto& t : j.at("timestamps_s")) {
        p.timestamps_ms.push_back(std::llround(t.get<double>() * 1000.0));
    }
    p.target_fps = j.at("target_fps").get<double>();
    p.max_frames = j.at("max_frames").get<int>();
}

std::vector<VideoRecord> load_manifest(std::istream& source) {
    std::vector<VideoRecord> records;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        VideoRecord rec;
        try {
            rec = j.get<VideoRecord>();
        } catch (const json::exception& e) {
            throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        if (rec.video_id.empty()) {
            throw ParseError("manifest line " + std::to_string(line_no) + ": empty video_id");
        }
        if (rec.duration_s < 0.0 || !std::isfinite(rec.duration_s)) {
            throw ParseError("manifest line " + std::to_string(line_no) +
                             ": duration_s must be finite and >= 0");
        }
        if (!seen.insert(rec.video_id).second) {
            throw ConflictError("duplicate video_id \"" + rec.video_id + "\" (manifest line " +
                                std::to_string(line_no) + ")");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<VideoRecord> load_manifest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open manifest: " + path.string());
    }
    return load_manifest(in);
}

Blocklist load_blocklist_file(const std::filesystem::path& path) {
    Blocklist bl;
    for (const auto& raw : split_lines(read_text_file(path))) {
        std::string id = trim(raw);
        if (!id.empty()) bl.excluded_ids.insert(id);
    }
    return bl;
}

OverlapFilterResult filter_eval_overlap(const std::vector<VideoRecord>& records,
                                        const Blocklist& blocklist) {
    OverlapFilterResult result;
    result.kept.reserve(records.size());
    for (const auto& rec : records) {
        if (blocklist.excluded_ids.count(rec.video_id)) {
            ++result.removed;
        } else {
            result.kept.push_back(rec);
        }
    }
    return result;
}

std::vector<std::size_t> stride_indices(std::size_t candidates, std::size_t keep) {
    std::vector<std::size_t> idx;
    if (candidates == 0 || keep == 0) return idx;
    if (candidates <= keep) {
        idx.resize(candidates);
        for (std::size_t i = 0; i < candidates; ++i) idx[i] = i;
        return idx;
    }
    idx.reserve(keep);
    for (std::size_t j = 0; j < keep; ++j) {
        idx.push_back(j * candidates / keep);
    }
    return idx;
}

namespace {

std::vector<std::int64_t> arithmetic_candidates_ms(double duration_s, double target_fps) {
    auto count = static_cast<std::int64_t>(std::floor(duration_s * target_fps));
    if (count < 1) count = 1;
    std::vector<std::int64_t> ms;
    ms.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        ms.push_back(std::llround(1000.0 * static_cast<double>(i) / target_fps));
    }
    return ms;
}

}  // namespace

FrameSamplePlan plan_frames(const VideoRecord& record, double target_fps, int max_frames,
                            const std::optional<std::filesystem::path>& frame_dir) {
    if (!(target_fps > 0.0) || !std::isfinite(target_fps)) {
        throw PlanError("target_fps must be > 0 (video \"" + record.video_id + "\")");
    }
    if (target_fps > 1000.0) {
        throw PlanError("target_fps above 1000 breaks millisecond timestamps (video \"" +
                        record.video_id + "\")");
    }
    if (max_frames < 1) {
        throw PlanError("max_frames must be >= 1 (video \"" + record.video_id + "\")");
    }

    std::vector<std::int64_t> candidates;
    if (record.duration_s > 0.0) {
        candidates = arithmetic_candidates_ms(record.duration_s, target_fps);
    } else if (frame_dir) {
        candidates = scan_frame_dir_ms(*frame_dir);
        if (candidates.empty()) {
            throw PlanError("video \"" + record.video_id + "\" has no frames in " +
                            frame_dir->string());
        }
    } else {
        throw PlanError("video \"" + record.video_id +
                        "\" has unknown duration and no frame directory; cannot plan");
    }

    FrameSamplePlan plan;
    plan.video_id = record.video_id;
    plan.target_fps = target_fps;
    plan.max_frames = max_frames;
    for (std::size_t i : stride_indices(candidates.size(), static_cast<std::size_t>(max_frames))) {
        plan.timestamps_ms.push_back(candidates[i]);
    }
    return plan;
}

std::string frame_file_name(std::size_t index, std::int64_t ms) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu_%lld.jpg", index, static_cast<long long>(ms));
    return std::string(buf);
}

std::optional<std::pair<std::size_t, std::int64_t>> parse_frame_file_name(std::string_view name) {
    auto dot = name.rfind('.');
    if (dot == std::string_view::npos) return std::nullopt;
    std::string_view ext = name.substr(dot);
    if (ext != ".jpg" && ext != ".jpeg" && ext != ".png") return std::nullopt;
    std::string_view stem = name.substr(0, dot);
    auto sep = stem.find('_');
    if (sep == std::string_view::npos || sep == 0 || sep + 1 >= stem.size()) return std::nullopt;
    std::string_view idx = stem.substr(0, sep);
    std::string_view ms = stem.substr(sep + 1);
    auto all_digits = [](std::string_view s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
            return std::isdigit(c);
        });
    };
    if (!all_digits(idx) || !all_digits(ms)) return std::nullopt;
    try {
        return std::make_pair(static_cast<std::size_t>(std::stoull(std::string(idx))),
                              static_cast<std::int64_t>(std::stoll(std::string(ms))));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::vector<std::int64_t> scan_frame_dir_ms(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::vector<std::int64_t> ms;
    if (!fs::is_directory(dir)) return ms;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (auto parsed = parse_frame_file_name(entry.path().filename().string())) {
            ms.push_back(parsed->second);
        }
    }
    std::sort(ms.begin(), ms.end());
    ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
    return ms;
}

}  // namespace vpair
