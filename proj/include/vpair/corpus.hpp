#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace vpair {

struct VideoRecord {
    std::string video_id;
    std::string media_uri;  // video file, or a directory of pre-extracted frames
    double duration_s = 0.0;
    std::optional<double> native_fps;
    std::vector<std::string> tags;
};

// Sampling plan for one video. Timestamps are integer milliseconds so that
// serialized artifacts and frame file names stay exact.
struct FrameSamplePlan {
    std::string video_id;
    std::vector<std::int64_t> timestamps_ms;
    double target_fps = 2.0;
    int max_frames = 32;
};

struct Blocklist {
    std::set<std::string> excluded_ids;
};

void to_json(nlohmann::json& j, const VideoRecord& r);
void from_json(const nlohmann::json& j, VideoRecord& r);
void to_json(nlohmann::json& j, const FrameSamplePlan& p);
void from_json(const nlohmann::json& j, FrameSamplePlan& p);

// One JSON object per line. Order preserved; duplicate video_id rejected.
std::vector<VideoRecord> load_manifest(std::istream& source);
std::vector<VideoRecord> load_manifest_file(const std::filesystem::path& path);

// Plain text, one video_id per line; blank lines ignored.
Blocklist load_blocklist_file(const std::filesystem::path& path);

struct OverlapFilterResult {
    std::vector<VideoRecord> kept;
    int removed = 0;
};

OverlapFilterResult filter_eval_overlap(const std::vector<VideoRecord>& records,
                                        const Blocklist& blocklist);

// Indices kept when downsampling `candidates` entries to `keep`: element j
// maps to floor(j * candidates / keep). Keeps index 0, strictly increasing.
std::vector<std::size_t> stride_indices(std::size_t candidates, std::size_t keep);

// Candidate timestamps at 1/target_fps starting at 0; candidate count is
// max(1, floor(duration_s * target_fps)), capped to max_frames by uniform
// index striding. A zero-duration record needs `frame_dir` to enumerate
// pre-extracted frames instead.
FrameSamplePlan plan_frames(const VideoRecord& record, double target_fps, int max_frames,
                            const std::optional<std::filesystem::path>& frame_dir = std::nullopt);

// Frame directories hold images named <index>_<ms>.jpg, index matching the
// plan position and ms the timestamp in milliseconds.
std::string frame_file_name(std::size_t index, std::int64_t ms);
std::optional<std::pair<std::size_t, std::int64_t>> parse_frame_file_name(std::string_view name);

// Sorted, deduplicated timestamps recovered from a pre-extracted frame dir.
std::vector<std::int64_t> scan_frame_dir_ms(const std::filesystem::path& dir);

}  // namespace vpair
