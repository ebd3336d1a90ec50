#include "vpair/frames.hpp"

#include <cstdio>
#include <cstdlib>

#include "vpair/errors.hpp"
#include "vpair/util.hpp"

namespace vpair {

namespace fs = std::filesystem;

fs::path frame_dir_for(const FrameSource& source, const VideoRecord& record) {
    if (!record.media_uri.empty() && fs::is_directory(record.media_uri)) {
        return fs::path(record.media_uri);
    }
    return source.frames_root / record.video_id;
}

namespace {

bool all_frames_present(const fs::path& dir, const FrameSamplePlan& plan) {
    for (const auto& p : plan_frame_paths(dir, plan)) {
        if (!fs::exists(p)) return false;
    }
    return true;
}

std::string expand_placeholders(std::string tmpl, const VideoRecord& record, const fs::path& dir,
                                const FrameSamplePlan& plan) {
    auto replace_all = [](std::string& s, std::string_view from, const std::string& to) {
        std::size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    char fps[32];
    std::snprintf(fps, sizeof(fps), "%g", plan.target_fps);
    replace_all(tmpl, "{media}", record.media_uri);
    replace_all(tmpl, "{outdir}", dir.string());
    replace_all(tmpl, "{fps}", fps);
    replace_all(tmpl, "{max_frames}", std::to_string(plan.max_frames));
    return tmpl;
}

}  // namespace

fs::path ensure_frames(const FrameSource& source, const VideoRecord& record,
                       const FrameSamplePlan& plan) {
    fs::path dir = frame_dir_for(source, record);
    if (all_frames_present(dir, plan)) {
        return dir;
    }
    if (source.extractor_cmd.empty()) {
        throw Error("frames missing for video \"" + record.video_id + "\" under " + dir.string() +
                    " and no frame extractor is configured");
    }
    fs::create_directories(dir);
    std::string cmd = expand_placeholders(source.extractor_cmd, record, dir, plan);
    int rc = std::system(cmd.c_str());
    if (rc != 0) {
        throw Error("frame extractor failed (exit " + std::to_string(rc) + ") for video \"" +
                    record.video_id + "\": " + cmd);
    }
    if (!all_frames_present(dir, plan)) {
        throw Error("frame extractor ran but frames are still missing for video \"" +
                    record.video_id + "\" under " + dir.string());
    }
    return dir;
}

std::vector<fs::path> plan_frame_paths(const fs::path& dir, const FrameSamplePlan& plan) {
    std::vector<fs::path> out;
    out.reserve(plan.timestamps_ms.size());
    for (std::size_t i = 0; i < plan.timestamps_ms.size(); ++i) {
        out.push_back(dir / frame_file_name(i, plan.timestamps_ms[i]));
    }
    return out;
}

std::vector<std::string> relative_frame_paths(const FrameSamplePlan& plan) {
    std::vector<std::string> out;
    out.reserve(plan.timestamps_ms.size());
    for (std::size_t i = 0; i < plan.timestamps_ms.size(); ++i) {
        out.push_back(plan.video_id + "/" + frame_file_name(i, plan.timestamps_ms[i]));
    }
    return out;
}

std::vector<std::string> load_frame_data_urls(const fs::path& dir, const FrameSamplePlan& plan) {
    std::vector<std::string> urls;
    urls.reserve(plan.timestamps_ms.size());
    for (const auto& path : plan_frame_paths(dir, plan)) {
        if (!fs::exists(path)) {
            throw Error("frame file missing: " + path.string());
        }
        std::string mime = path.extension() == ".png" ? "image/png" : "image/jpeg";
        urls.push_back("data:" + mime + ";base64," + base64_encode(read_binary_file(path)));
    }
    return urls;
}

}  // namespace vpair
