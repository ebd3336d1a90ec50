#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vpair/corpus.hpp"

namespace vpair {

// Where frame images come from. The pipeline never decodes video itself:
// either media_uri already points at a frame directory, frames sit under
// frames_root/<video_id>/, or an external extractor command produces them.
struct FrameSource {
    std::filesystem::path frames_root;
    // Subprocess template with {media}, {outdir}, {fps} and {max_frames}
    // placeholders; empty disables extraction.
    std::string extractor_cmd;
};

// Directory that holds (or should hold) this record's frames, without
// checking that the frame files exist yet.
std::filesystem::path frame_dir_for(const FrameSource& source, const VideoRecord& record);

// Ensures the plan's frame files exist, invoking the extractor if configured
// and needed. Returns the frame directory; throws Error when frames cannot
// be made available.
std::filesystem::path ensure_frames(const FrameSource& source, const VideoRecord& record,
                                    const FrameSamplePlan& plan);

// Paths of the plan's frames inside `dir`, in plan order.
std::vector<std::filesystem::path> plan_frame_paths(const std::filesystem::path& dir,
                                                    const FrameSamplePlan& plan);

// Dataset-relative references "<video_id>/<index>_<ms>.jpg", in plan order.
std::vector<std::string> relative_frame_paths(const FrameSamplePlan& plan);

// Frames as base64 data URLs in plan order; throws naming the first missing file.
std::vector<std::string> load_frame_data_urls(const std::filesystem::path& dir,
                                              const FrameSamplePlan& plan);

}  // namespace vpair
